#pragma once

// The four tool commands as library calls, plus the result file formats.
// The CLI in tools/ only parses arguments and maps errors to exit codes.
//
// Exit codes: 0 success, 2 input or configuration error, 3 tracking failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fadslam/config.hpp"
#include "fadslam/error.hpp"
#include "fadslam/metrics.hpp"
#include "fadslam/pipeline.hpp"
#include "fadslam/sequence_io.hpp"
#include "fadslam/sim_world.hpp"

namespace fadslam {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestFile = "manifest.txt";

enum ExitCode : int { kExitOk = 0, kExitInputError = 2, kExitTrackingFailure = 3 };

inline int exit_code_for(Errc code) { return code == Errc::TrackingLost ? kExitTrackingFailure : kExitInputError; }

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, text);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- result formats ---------------------------------------------------------

namespace detail {

inline std::string printf_string(const char* fmt_str, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt_str, v);
  return buf;
}

}  // namespace detail

inline std::string frames_csv(const RunResult& r) {
  std::string out =
      "frame,timestamp,mode,q,keyframe,lost,pts_retained,pts_mask,pts_epipolar,lines_extracted,lines_retained,"
      "lines_mask,lines_epipolar,line_assoc,pts_used,lines_used,line_ops,tx,ty,tz,qx,qy,qz,qw\n";
  char buf[512];
  for (const FrameResult& f : r.frames) {
    const Pose t_wc = f.pose.inverse();
    const Eigen::Quaterniond q = t_wc.quaternion();
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.9f,%s,%.9f,%d,%d,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%llu,%.12f,%.12f,%.12f,%.12f,%.12f,"
                  "%.12f,%.12f\n",
                  f.frame, f.timestamp, to_string(f.mode), f.q, f.keyframe ? 1 : 0, f.lost ? 1 : 0,
                  f.point_counts.retained, f.point_counts.mask, f.point_counts.epipolar, f.lines_extracted,
                  f.line_counts.retained, f.line_counts.mask, f.line_counts.epipolar, f.line_associations,
                  f.points_used, f.lines_used, static_cast<unsigned long long>(f.line_ops), t_wc.translation.x(),
                  t_wc.translation.y(), t_wc.translation.z(), q.x(), q.y(), q.z(), q.w());
    out += buf;
  }
  return out;
}

inline std::string metrics_csv(const MetricReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "ate_rmse,ate_sd,rpe_t_rmse,rpe_t_sd,n_pairs,n_rpe\n%.9f,%.9f,%.9f,%.9f,%zu,%zu\n",
                m.ate_rmse, m.ate_sd, m.rpe_t_rmse, m.rpe_t_sd, m.n_pairs, m.n_rpe);
  return buf;
}

inline std::string metrics_table(const MetricReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-12s %14s %14s\n"
                "%-12s %14.9f %14.9f\n"
                "%-12s %14.9f %14.9f\n"
                "pairs %zu, relative pairs %zu\n",
                "metric", "rmse", "sd", "ATE", m.ate_rmse, m.ate_sd, "T.RPE", m.rpe_t_rmse, m.rpe_t_sd, m.n_pairs,
                m.n_rpe);
  return buf;
}

inline std::string run_summary_csv(const RunResult& r) {
  std::size_t point_frames = 0;
  for (const FrameResult& f : r.frames) point_frames += f.mode == SceneMode::Point ? 1 : 0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "frames,lost_frames,point_mode_frames,keyframes,map_points,map_lines,line_ops,global_line_residuals\n"
                "%zu,%zu,%zu,%zu,%zu,%zu,%llu,%llu\n",
                r.frames.size(), r.lost_frames, point_frames, r.map.keyframes.size(), r.map.points.size(),
                r.map.lines.size(), static_cast<unsigned long long>(r.total_line_ops),
                static_cast<unsigned long long>(r.global_line_residuals));
  return buf;
}

/// Filter outcomes per frame: retained / mask-removed / epipolar-removed.
inline std::string run_log(const RunResult& r) {
  std::string out;
  char buf[256];
  for (const FrameResult& f : r.frames) {
    std::snprintf(buf, sizeof(buf), "frame %zu mode %s Q %.6f points %zu/%zu/%zu lines %zu/%zu/%zu%s%s\n", f.frame,
                  to_string(f.mode), f.q, f.point_counts.retained, f.point_counts.mask, f.point_counts.epipolar,
                  f.line_counts.retained, f.line_counts.mask, f.line_counts.epipolar, f.keyframe ? " keyframe" : "",
                  f.lost ? " LOST" : "");
    out += buf;
  }
  return out;
}

inline std::string trace_log(const OptimizerTrace& t) {
  std::string out = "# label iteration cost lambda update_norm accepted\n";
  char buf[256];
  for (const TraceRow& row : t.rows) {
    std::snprintf(buf, sizeof(buf), " %d %.12e %.3e %.6e %d\n", row.iteration, row.cost, row.lambda, row.update_norm,
                  row.accepted ? 1 : 0);
    out += row.label;
    out += buf;
  }
  return out;
}

/// Map dump: keyframes (T_wc), points, and lines with their observation counts.
///   K <index> <frame> <mode> tx ty tz qx qy qz qw
///   P <id> x y z <n_obs>
///   L <id> sx sy sz ex ey ez <n_obs>
inline std::string map_dump(const WorldMap& map) {
  std::string out = "# fadslam map v1\n";
  char buf[512];
  for (std::size_t k = 0; k < map.keyframes.size(); ++k) {
    const Keyframe& kf = map.keyframes[k];
    const Pose t_wc = kf.pose.inverse();
    const Eigen::Quaterniond q = t_wc.quaternion();
    std::snprintf(buf, sizeof(buf), "K %zu %zu %s %.12f %.12f %.12f %.12f %.12f %.12f %.12f\n", k, kf.frame,
                  to_string(kf.mode), t_wc.translation.x(), t_wc.translation.y(), t_wc.translation.z(), q.x(), q.y(),
                  q.z(), q.w());
    out += buf;
  }
  for (const auto& [id, p] : map.points) {
    std::snprintf(buf, sizeof(buf), "P %zu %.12f %.12f %.12f %zu\n", id, p.position.x(), p.position.y(),
                  p.position.z(), p.observations.size());
    out += buf;
  }
  for (const MapLine& l : map.lines) {
    std::snprintf(buf, sizeof(buf), "L %zu %.12f %.12f %.12f %.12f %.12f %.12f %zu\n", l.id, l.line.start.x(),
                  l.line.start.y(), l.line.start.z(), l.line.end.x(), l.line.end.y(), l.line.end.z(),
                  l.observations.size());
    out += buf;
  }
  return out;
}

/// A manifest is a loadable config: metadata lines are comments.
inline std::string manifest_text(const std::string& command, const std::vector<std::pair<std::string, std::string>>& meta,
                                 const std::string& config_snapshot) {
  std::string out = "# fadslam manifest\n# command: " + command + "\n# tool_version: " + std::string(kToolVersion) + "\n";
  for (const auto& [k, v] : meta) out += "# " + k + ": " + v + "\n";
  out += config_snapshot;
  return out;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string seconds_text(double s) { return printf_string("%.3f", s); }

}  // namespace detail

// ---- commands ------------------------------------------------------------------

inline Sequence simulate_command(const Settings& settings, const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!settings.has("seed")) throw config_error("seed", "required by simulate");
  settings.world.validate();
  const Sequence seq = render_sequence(generate_world(settings.world));
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / kFramesFile, format_frames(seq));
  write_file_atomic(out_dir / kGroundTruthFile, format_trajectory(seq.ground_truth));
  write_file_atomic(out_dir / kManifestFile,
                    manifest_text("simulate",
                                  {{"seed", std::to_string(settings.world.seed)},
                                   {"outputs", std::string(kFramesFile) + " " + kGroundTruthFile},
                                   {"wall_clock_seconds", detail::seconds_text(detail::seconds_since(t0))}},
                                  format_config(settings, {"simulation"})));
  return seq;
}

struct CalibrationReport {
  AwarenessConfig awareness;
  std::string text;  // per-frame Q under the calibrated c_base
};

inline CalibrationReport calibrate_command(const std::vector<std::filesystem::path>& sequence_dirs,
                                           const Settings& settings) {
  std::vector<GridStats> stats;
  std::vector<std::string> labels;
  for (const auto& dir : sequence_dirs) {
    const Sequence seq = read_sequence(dir);
    const auto s = collect_grid_stats(seq, settings.pipeline);
    for (std::size_t i = 0; i < s.size(); ++i) labels.push_back(dir.string() + " " + std::to_string(seq.frames[i].index));
    stats.insert(stats.end(), s.begin(), s.end());
  }
  CalibrationReport r;
  r.awareness = calibrate(stats);
  char buf[128];
  r.text = "# sequence frame mean_cell_count Q\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.6f %.9f\n", stats[i].mean_count(), feature_quality(stats[i], r.awareness.c_base));
    r.text += labels[i] + buf;
  }
  std::snprintf(buf, sizeof(buf), "# c_base %.9f th %.9f frames %zu\n", r.awareness.c_base, r.awareness.th, stats.size());
  r.text += buf;
  return r;
}

inline std::string calibration_config_text(const AwarenessConfig& a) {
  Settings s;
  s.pipeline.awareness = a;
  std::string out = "# feature-quality calibration\n";
  for (const char* key : {"c_base", "th", "grid_rows", "grid_cols"}) out += std::string(key) + " = " + find_key(key)->get(s) + "\n";
  return out;
}

struct RunFlags {
  bool no_removal = false;
  bool always_lines = false;
  bool never_lines = false;
};

inline PipelineConfig apply_flags(PipelineConfig config, const RunFlags& flags) {
  if (flags.always_lines && flags.never_lines)
    throw Error(Errc::InvalidConfig, "--always-lines and --never-lines are mutually exclusive");
  if (flags.no_removal) config.removal = false;
  if (flags.always_lines) config.mode_policy = ModePolicy::AlwaysLines;
  if (flags.never_lines) config.mode_policy = ModePolicy::NeverLines;
  return config;
}

/// Runs the pipeline and writes every result file. Throws TrackingLost after
/// writing when more than half the frames were lost without relocalization.
inline RunResult run_command(const std::filesystem::path& sequence_dir, const Settings& settings, const RunFlags& flags,
                             const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Settings effective = settings;
  effective.pipeline = apply_flags(settings.pipeline, flags);
  effective.pipeline.validate();
  const Sequence seq = read_sequence(sequence_dir);
  RunResult r = run_sequence(seq, effective.pipeline);

  std::string seed = "unknown";
  const auto seq_manifest = sequence_dir / kManifestFile;
  if (std::filesystem::exists(seq_manifest)) {
    const Settings sim = read_config(seq_manifest.string());
    if (sim.has("seed")) seed = std::to_string(sim.world.seed);
  }

  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "trajectory.txt", format_trajectory(r.trajectory));
  write_file_atomic(out_dir / "frames.csv", frames_csv(r));
  if (r.metrics_error) {
    std::filesystem::remove(out_dir / "metrics.csv");
    write_file_atomic(out_dir / "metrics.txt", std::string(r.metrics_error->what()) + "\n");
  } else {
    write_file_atomic(out_dir / "metrics.csv", metrics_csv(r.metrics));
    write_file_atomic(out_dir / "metrics.txt", metrics_table(r.metrics));
  }
  write_file_atomic(out_dir / "summary.csv", run_summary_csv(r));
  write_file_atomic(out_dir / "run.log", run_log(r));
  write_file_atomic(out_dir / "optimizer_trace.log", trace_log(r.trace));
  write_file_atomic(out_dir / "map.txt", map_dump(r.map));
  write_file_atomic(out_dir / kManifestFile,
                    manifest_text("run",
                                  {{"sequence", sequence_dir.string()},
                                   {"seed", seed},
                                   {"outputs", "trajectory.txt frames.csv metrics.csv metrics.txt summary.csv run.log "
                                               "optimizer_trace.log map.txt"},
                                   {"wall_clock_seconds", detail::seconds_text(detail::seconds_since(t0))}},
                                  format_config(effective, {"pipeline"})));

  if (!effective.pipeline.oracle_relocalize && 2 * r.lost_frames > r.frames.size())
    throw Error(Errc::TrackingLost, std::to_string(r.lost_frames) + " of " + std::to_string(r.frames.size()) +
                                        " frames lost");
  if (r.metrics_error) throw *r.metrics_error;
  return r;
}

inline MetricReport eval_command(const std::string& est_path, const std::string& gt_path, bool align,
                                 std::size_t rpe_delta) {
  const Trajectory est = read_trajectory(est_path);
  const Trajectory gt = read_trajectory(gt_path);
  return evaluate_trajectory(est, gt, align, rpe_delta);
}

}  // namespace fadslam
