#pragma once

// Frame-by-frame tracker.
//
// Per frame, in order:
//   1. point removal (masks, then epipolar check against the previous frame);
//   2. feature quality of the surviving points and the mode decision;
//   3. Point-Line only: line descriptors, line removal, association with map lines;
//   4. robust pose estimation;
//   5. keyframe insertion every `keyframe_stride` frames;
//   6. local bundle adjustment over the keyframe window, lines included only
//      when the keyframe itself is in Point-Line mode.
// A sequence run ends with a point-only global refinement.
//
// Point data association uses the simulator's landmark ids; line association
// goes through descriptor matching and projection search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fadslam/awareness.hpp"
#include "fadslam/bundle_adjust.hpp"
#include "fadslam/dynamic_filter.hpp"
#include "fadslam/error.hpp"
#include "fadslam/geometry.hpp"
#include "fadslam/instrumentation.hpp"
#include "fadslam/lines.hpp"
#include "fadslam/metrics.hpp"
#include "fadslam/pose_opt.hpp"
#include "fadslam/sim_world.hpp"

namespace fadslam {

enum class ModePolicy { Auto, AlwaysLines, NeverLines };

inline const char* to_string(ModePolicy p) {
  switch (p) {
    case ModePolicy::Auto: return "auto";
    case ModePolicy::AlwaysLines: return "always";
    case ModePolicy::NeverLines: return "never";
  }
  return "auto";
}

inline ModePolicy parse_mode_policy(const std::string& s) {
  if (s == "auto") return ModePolicy::Auto;
  if (s == "always") return ModePolicy::AlwaysLines;
  if (s == "never") return ModePolicy::NeverLines;
  throw Error(Errc::InvalidConfig, "unknown mode policy '" + s + "'");
}

struct PipelineConfig {
  AwarenessConfig awareness{};
  double d_th = kDefaultEpipolarThresholdPx;
  LineMatchParams line_match{};
  double huber_point_delta = std::sqrt(kChi2Point);
  double huber_line_delta = std::sqrt(kChi2Line);
  double line_weight = 1.0;
  int max_iters = 20;
  double tol = 1e-8;
  int global_max_iters = 20;
  std::size_t window_size = 5;
  std::size_t keyframe_stride = 5;
  bool removal = true;
  ModePolicy mode_policy = ModePolicy::Auto;
  bool oracle_relocalize = false;
  bool init_from_ground_truth = true;

  void validate() const {
    awareness.validate();
    if (!(d_th > 0.0)) throw Error(Errc::InvalidConfig, "d_th must be > 0");
    if (!(line_match.max_dist > 0.0)) throw Error(Errc::InvalidConfig, "line_max_dist must be > 0");
    if (!(line_match.ratio > 0.0 && line_match.ratio <= 1.0)) throw Error(Errc::InvalidConfig, "line_ratio must be in (0, 1]");
    if (!(line_match.window_px > 0.0)) throw Error(Errc::InvalidConfig, "line_window must be > 0");
    if (!(huber_point_delta > 0.0) || !(huber_line_delta > 0.0))
      throw Error(Errc::InvalidConfig, "huber deltas must be > 0");
    if (!(line_weight >= 0.0)) throw Error(Errc::InvalidConfig, "line_weight must be >= 0");
    if (max_iters < 1 || global_max_iters < 1) throw Error(Errc::InvalidConfig, "iteration limits must be >= 1");
    if (!(tol > 0.0)) throw Error(Errc::InvalidConfig, "tol must be > 0");
    if (window_size < 2) throw Error(Errc::InvalidConfig, "window_size must be >= 2");
    if (keyframe_stride < 1) throw Error(Errc::InvalidConfig, "keyframe_stride must be >= 1");
  }

  PoseEstimateOptions pose_options() const {
    PoseEstimateOptions o;
    o.point_kernel = {KernelKind::Huber, huber_point_delta};
    o.line_kernel = {KernelKind::Huber, huber_line_delta};
    o.line_weight = line_weight;
    o.lm.max_iters = max_iters;
    o.lm.tol = tol;
    return o;
  }

  BaOptions ba_options(int iters) const {
    BaOptions o;
    o.point_kernel = {KernelKind::Huber, huber_point_delta};
    o.line_kernel = {KernelKind::Huber, huber_line_delta};
    o.line_weight = line_weight;
    o.lm.max_iters = iters;
    o.lm.tol = tol;
    return o;
  }
};

struct Keyframe {
  std::size_t frame = 0;
  Pose pose;  // T_cw
  SceneMode mode = SceneMode::Point;
};

struct MapPoint {
  std::size_t id = 0;
  Vec3 position = Vec3::Zero();
  std::vector<std::pair<std::size_t, Vec2>> observations;  // keyframe index, pixel
};

struct MapLineObservation {
  std::size_t keyframe = 0;
  Line2D line;  // oriented like the map line's start -> end
};

struct MapLine {
  std::size_t id = 0;
  Line3D line;
  LineDescriptor descriptor;
  std::vector<MapLineObservation> observations;
};

struct WorldMap {
  std::map<std::size_t, MapPoint> points;
  std::vector<MapLine> lines;
  std::vector<Keyframe> keyframes;
};

struct FilterCounts {
  std::size_t retained = 0;
  std::size_t mask = 0;
  std::size_t epipolar = 0;
};

struct FrameResult {
  std::size_t frame = 0;
  double timestamp = 0.0;
  Pose pose;  // T_cw
  SceneMode mode = SceneMode::Point;
  double q = 0.0;
  GridStats grid;
  FilterCounts point_counts;
  FilterCounts line_counts;
  std::size_t lines_extracted = 0;
  std::size_t line_associations = 0;
  std::size_t points_used = 0;
  std::size_t lines_used = 0;
  std::size_t point_inliers = 0;
  double final_cost = 0.0;
  bool converged = false;
  bool lost = false;
  bool keyframe = false;
  bool epipolar_active = false;
  std::uint64_t line_ops = 0;
  std::size_t mask_epipolar_overlap = 0;  // features both mask-removed and epipolar-tested
};

struct RunResult {
  Trajectory trajectory;  // T_wc
  std::vector<FrameResult> frames;
  MetricReport metrics;
  std::optional<Error> metrics_error;  // set when a run with lost frames cannot be evaluated
  std::size_t lost_frames = 0;
  std::uint64_t global_line_residuals = 0;
  std::uint64_t total_line_ops = 0;
  OptimizerTrace trace;
  WorldMap map;
};

class Tracker {
 public:
  Tracker(const CameraIntrinsics& camera, PipelineConfig config) : camera_(camera), config_(std::move(config)) {
    camera_.validate();
    config_.validate();
  }

  const WorldMap& map() const { return map_; }
  WorldMap& map() { return map_; }
  OptimizerTrace& trace() { return trace_; }

  FrameResult process_frame(const SimFrame& frame) {
    const std::uint64_t line_ops_before = work_counters().line_ops;
    FrameResult result;
    result.frame = frame.index;
    result.timestamp = frame.timestamp;

    const bool first = !last_pose_.has_value();
    const Pose prior = first ? (config_.init_from_ground_truth ? frame.true_pose : Pose::identity()) : *last_pose_;

    // (1) point removal
    std::vector<Vec2> pixels;
    std::vector<std::optional<Vec2>> previous;
    pixels.reserve(frame.points.size());
    for (const SimPointObs& p : frame.points) {
      pixels.push_back(p.pixel);
      const auto it = previous_pixels_.find(p.id);
      previous.push_back(it == previous_pixels_.end() ? std::nullopt : std::optional<Vec2>(it->second));
    }

    std::optional<Mat3> fundamental;
    std::optional<Pose> preliminary;
    FilterOutcome point_outcome;
    if (config_.removal) {
      if (!first) {
        const FilterOutcome masked = mask_filter_points(pixels, frame.masks);
        preliminary = preliminary_pose(frame, masked.retained, prior);
        if (preliminary) {
          try {
            fundamental = fundamental_from_poses(camera_, prior, *preliminary);
          } catch (const Error&) {
            fundamental.reset();
          }
        }
      }
      point_outcome = run_removal({pixels, previous, {}, {}}, frame.masks, fundamental, config_.d_th).points;
    } else {
      for (std::size_t i = 0; i < pixels.size(); ++i) point_outcome.retained.push_back(i);
    }
    result.epipolar_active = fundamental.has_value();
    result.point_counts = {point_outcome.retained.size(), point_outcome.removed_by_mask.size(),
                           point_outcome.removed_by_epipolar.size()};
    result.mask_epipolar_overlap = overlap(point_outcome.removed_by_mask, point_outcome.epipolar_tested);

    // (2) feature awareness
    std::vector<Vec2> retained_pixels;
    for (std::size_t idx : point_outcome.retained) retained_pixels.push_back(pixels[idx]);
    result.grid = grid_partition(camera_.width, camera_.height, retained_pixels, config_.awareness.grid_rows,
                                 config_.awareness.grid_cols);
    result.q = feature_quality(result.grid, config_.awareness.c_base);
    switch (config_.mode_policy) {
      case ModePolicy::Auto: result.mode = decide_mode(result.q, config_.awareness.th); break;
      case ModePolicy::AlwaysLines: result.mode = SceneMode::PointLine; break;
      case ModePolicy::NeverLines: result.mode = SceneMode::Point; break;
    }

    // (3) lines
    std::vector<FrameLine> frame_lines;
    std::vector<LineObservation> line_obs;
    std::vector<std::optional<std::size_t>> line_assoc;
    if (result.mode == SceneMode::PointLine) {
      frame_lines = extract_lines(frame);
      result.lines_extracted = frame_lines.size();
      const FilterOutcome line_outcome = remove_lines(frame_lines, frame.masks, fundamental);
      result.line_counts = {line_outcome.retained.size(), line_outcome.removed_by_mask.size(),
                            line_outcome.removed_by_epipolar.size()};
      result.mask_epipolar_overlap += overlap(line_outcome.removed_by_mask, line_outcome.epipolar_tested);
      for (std::size_t idx : line_outcome.retained) frame_lines[idx].retained = true;
      line_assoc = associate_lines(frame_lines, preliminary.value_or(prior), line_obs);
      result.line_associations = line_obs.size();
    }

    // (4) pose
    std::vector<PointObservation> point_obs;
    std::vector<std::size_t> point_obs_ids;
    for (std::size_t idx : point_outcome.retained) {
      const auto it = map_.points.find(frame.points[idx].id);
      if (it == map_.points.end()) continue;
      point_obs.push_back({frame.points[idx].pixel, it->second.position});
      point_obs_ids.push_back(idx);
    }
    result.points_used = point_obs.size();
    result.lines_used = line_obs.size();

    Pose pose = prior;
    if (first) {
      result.converged = true;
    } else {
      try {
        trace_.label = "frame " + std::to_string(frame.index) + " pose";
        const PoseEstimate est = estimate_pose(camera_, point_obs, line_obs, prior, config_.pose_options(), &trace_);
        pose = est.pose;
        result.final_cost = est.final_cost;
        result.converged = est.converged;
        result.point_inliers = static_cast<std::size_t>(std::count(est.point_inliers.begin(), est.point_inliers.end(), true));
      } catch (const Error& e) {
        if (e.code() != Errc::InsufficientObservations) throw;
        result.lost = true;
        if (config_.oracle_relocalize) pose = frame.true_pose;
      }
    }

    // (5, 6) keyframe, local BA, new landmarks
    if (!result.lost && frame.index % config_.keyframe_stride == 0) {
      result.keyframe = true;
      pose = insert_keyframe(frame, pose, result.mode, point_outcome.retained, frame_lines, line_assoc);
    }

    result.pose = pose;
    last_pose_ = pose;
    reference_keyframe_.push_back(map_.keyframes.empty() ? 0 : map_.keyframes.size() - 1);

    previous_pixels_.clear();
    for (const SimPointObs& p : frame.points) previous_pixels_[p.id] = p.pixel;
    previous_lines_.clear();
    if (result.mode == SceneMode::PointLine)
      for (const FrameLine& l : frame_lines) previous_lines_.push_back({l.line, l.descriptor});

    result.line_ops = work_counters().line_ops - line_ops_before;
    return result;
  }

  /// Index of the newest keyframe when each processed frame finished.
  const std::vector<std::size_t>& reference_keyframes() const { return reference_keyframe_; }

 private:
  struct FrameLine {
    std::size_t source = 0;  // index into SimFrame::lines
    Line2D line;
    LineDescriptor descriptor;
    bool retained = false;
  };

  static std::size_t overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t n = 0;
    for (std::size_t x : a)
      if (std::find(b.begin(), b.end(), x) != b.end()) ++n;
    return n;
  }

  std::optional<Pose> preliminary_pose(const SimFrame& frame, const std::vector<std::size_t>& candidates,
                                       const Pose& prior) {
    std::vector<PointObservation> obs;
    for (std::size_t idx : candidates) {
      const auto it = map_.points.find(frame.points[idx].id);
      if (it != map_.points.end()) obs.push_back({frame.points[idx].pixel, it->second.position});
    }
    try {
      return estimate_pose_points(camera_, obs, prior, config_.pose_options()).pose;
    } catch (const Error& e) {
      if (e.code() != Errc::InsufficientObservations) throw;
      return std::nullopt;
    }
  }

  std::vector<FrameLine> extract_lines(const SimFrame& frame) const {
    std::vector<FrameLine> out;
    for (std::size_t i = 0; i < frame.lines.size(); ++i) {
      const SimLineObs& l = frame.lines[i];
      try {
        const Line2D seg = sample_line(l.line.start, l.line.end);
        out.push_back({i, seg, make_descriptor(seg, l.response), false});
      } catch (const Error&) {
        continue;
      }
    }
    return out;
  }

  FilterOutcome remove_lines(const std::vector<FrameLine>& lines, const DynamicMask& mask,
                             const std::optional<Mat3>& fundamental) const {
    FilterOutcome out;
    if (!config_.removal) {
      for (std::size_t i = 0; i < lines.size(); ++i) out.retained.push_back(i);
      return out;
    }
    std::vector<Line2D> segs;
    std::vector<LineDescriptor> descs;
    for (const FrameLine& l : lines) {
      segs.push_back(l.line);
      descs.push_back(l.descriptor);
    }
    std::vector<std::optional<Line2D>> prev(lines.size());
    if (fundamental && !previous_lines_.empty()) {
      std::vector<LineDescriptor> prev_descs;
      for (const auto& p : previous_lines_) prev_descs.push_back(p.descriptor);
      for (const LineMatch& m :
           match_lines(descs, prev_descs, config_.line_match.max_dist, config_.line_match.ratio, config_.line_match.weights))
        prev[m.index_i] = orient_like(previous_lines_[m.index_j].line, segs[m.index_i]);
    }
    return run_removal({{}, {}, segs, prev}, mask, fundamental, config_.d_th).lines;
  }

  /// Fills `obs` and returns, per frame line, the associated map line index.
  std::vector<std::optional<std::size_t>> associate_lines(const std::vector<FrameLine>& lines, const Pose& t_cw,
                                                          std::vector<LineObservation>& obs) const {
    std::vector<std::optional<std::size_t>> assoc(lines.size());
    std::vector<MapLineView> map_views;
    for (const MapLine& ml : map_.lines) map_views.push_back({ml.line, ml.descriptor});
    std::vector<FrameLineView> frame_views;
    std::vector<std::size_t> frame_index;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!lines[i].retained) continue;
      frame_views.push_back({lines[i].line, lines[i].descriptor});
      frame_index.push_back(i);
    }
    if (map_views.empty() || frame_views.empty()) return assoc;
    for (const LineMatch& m : search_projection_match(map_views, frame_views, camera_, t_cw, config_.line_match)) {
      const MapLine& ml = map_.lines[m.index_i];
      const std::size_t fi = frame_index[m.index_j];
      assoc[fi] = m.index_i;
      const Line2D projected = project_line(camera_, t_cw, ml.line);
      const Line2D oriented = orient_like(lines[fi].line, projected);
      obs.push_back({oriented.start, oriented.end, ml.line.start, ml.line.end});
    }
    return assoc;
  }

  Pose insert_keyframe(const SimFrame& frame, const Pose& pose, SceneMode mode,
                       const std::vector<std::size_t>& retained_points, const std::vector<FrameLine>& lines,
                       const std::vector<std::optional<std::size_t>>& line_assoc) {
    const std::size_t kf = map_.keyframes.size();
    map_.keyframes.push_back({frame.index, pose, mode});

    for (std::size_t idx : retained_points) {
      const auto it = map_.points.find(frame.points[idx].id);
      if (it != map_.points.end()) it->second.observations.emplace_back(kf, frame.points[idx].pixel);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!line_assoc.empty() && line_assoc[i]) {
        MapLine& ml = map_.lines[*line_assoc[i]];
        const Line2D projected = project_line(camera_, pose, ml.line);
        ml.observations.push_back({kf, orient_like(lines[i].line, projected)});
      }
    }

    if (map_.keyframes.size() >= 2) local_bundle_adjust_window(mode == SceneMode::PointLine);
    const Pose refined = map_.keyframes[kf].pose;

    // New landmarks from the refined pose.
    const Pose t_wc = refined.inverse();
    for (std::size_t idx : retained_points) {
      const SimPointObs& p = frame.points[idx];
      if (map_.points.count(p.id) || !(p.depth > 0.0)) continue;
      MapPoint mp;
      mp.id = p.id;
      mp.position = t_wc * backproject(camera_, p.pixel, p.depth);
      mp.observations.emplace_back(kf, p.pixel);
      map_.points.emplace(p.id, std::move(mp));
    }
    if (mode == SceneMode::PointLine) {
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!lines[i].retained || (!line_assoc.empty() && line_assoc[i])) continue;
        const SimLineObs& src = frame.lines[lines[i].source];
        if (!(src.start_depth > 0.0) || !(src.end_depth > 0.0)) continue;
        MapLine ml;
        ml.id = map_.lines.size();
        ml.line = {t_wc * backproject(camera_, src.line.start, src.start_depth),
                   t_wc * backproject(camera_, src.line.end, src.end_depth)};
        ml.descriptor = lines[i].descriptor;
        ml.observations.push_back({kf, lines[i].line});
        map_.lines.push_back(std::move(ml));
      }
    }
    return refined;
  }

  void local_bundle_adjust_window(bool with_lines) {
    const std::size_t n_kf = map_.keyframes.size();
    const std::size_t first = n_kf > config_.window_size ? n_kf - config_.window_size : 0;

    WindowProblem problem;
    problem.camera = camera_;
    std::vector<std::size_t> kf_slot(n_kf, SIZE_MAX);
    for (std::size_t k = first; k < n_kf; ++k) {
      kf_slot[k] = problem.keyframes.size();
      problem.keyframes.push_back({k, map_.keyframes[k].pose, false});
    }
    problem.anchor = 0;

    std::vector<std::size_t> point_ids;
    for (const auto& [id, mp] : map_.points) {
      std::size_t slot = SIZE_MAX;
      for (const auto& [k, px] : mp.observations) {
        if (kf_slot[k] == SIZE_MAX) continue;
        if (slot == SIZE_MAX) {
          slot = problem.points.size();
          problem.points.push_back({id, mp.position, false});
          point_ids.push_back(id);
        }
        problem.point_obs.push_back({kf_slot[k], slot, px});
      }
    }
    std::vector<std::size_t> line_index;
    if (with_lines) {
      for (std::size_t li = 0; li < map_.lines.size(); ++li) {
        const MapLine& ml = map_.lines[li];
        std::size_t slot = SIZE_MAX;
        for (const MapLineObservation& o : ml.observations) {
          if (kf_slot[o.keyframe] == SIZE_MAX) continue;
          if (slot == SIZE_MAX) {
            slot = problem.lines.size();
            problem.lines.push_back({li, ml.line.start, ml.line.end, false});
            line_index.push_back(li);
          }
          problem.line_obs.push_back({kf_slot[o.keyframe], slot, o.line.start, o.line.end});
        }
      }
    }

    trace_.label = "keyframe " + std::to_string(n_kf - 1) + " local_ba";
    const BaResult r = local_bundle_adjust(problem, config_.ba_options(config_.max_iters), &trace_);
    for (const BaKeyframe& k : r.problem.keyframes) map_.keyframes[k.id].pose = k.pose;
    for (std::size_t s = 0; s < r.problem.points.size(); ++s) map_.points[point_ids[s]].position = r.problem.points[s].position;
    for (std::size_t s = 0; s < r.problem.lines.size(); ++s) {
      map_.lines[line_index[s]].line = {r.problem.lines[s].start, r.problem.lines[s].end};
    }
  }

  struct PreviousLine {
    Line2D line;
    LineDescriptor descriptor;
  };

  CameraIntrinsics camera_;
  PipelineConfig config_;
  WorldMap map_;
  OptimizerTrace trace_;
  std::optional<Pose> last_pose_;
  std::unordered_map<std::size_t, Vec2> previous_pixels_;
  std::vector<PreviousLine> previous_lines_;
  std::vector<std::size_t> reference_keyframe_;
};

/// Point-only refinement of every keyframe; returns the number of line
/// residuals evaluated inside (zero by construction).
inline std::uint64_t refine_map_globally(WorldMap& map, const CameraIntrinsics& camera, const PipelineConfig& config,
                                         OptimizerTrace* trace) {
  if (map.keyframes.size() < 2) return 0;
  WindowProblem problem;
  problem.camera = camera;
  for (std::size_t k = 0; k < map.keyframes.size(); ++k) problem.keyframes.push_back({k, map.keyframes[k].pose, false});
  std::vector<std::size_t> point_ids;
  for (const auto& [id, mp] : map.points) {
    problem.points.push_back({id, mp.position, false});
    point_ids.push_back(id);
    for (const auto& [k, px] : mp.observations) problem.point_obs.push_back({k, problem.points.size() - 1, px});
  }
  // Lines go in so the contract is observable: global_refine must ignore them.
  for (std::size_t li = 0; li < map.lines.size(); ++li) {
    problem.lines.push_back({li, map.lines[li].line.start, map.lines[li].line.end, false});
    for (const MapLineObservation& o : map.lines[li].observations)
      problem.line_obs.push_back({o.keyframe, li, o.line.start, o.line.end});
  }
  if (trace) trace->label = "global_refine";
  const BaResult r = global_refine(problem, config.ba_options(config.global_max_iters), trace);
  for (std::size_t k = 0; k < map.keyframes.size(); ++k) map.keyframes[k].pose = r.problem.keyframes[k].pose;
  for (std::size_t s = 0; s < point_ids.size(); ++s) map.points[point_ids[s]].position = r.problem.points[s].position;
  return r.line_residual_evals;
}

inline RunResult run_sequence(const Sequence& seq, const PipelineConfig& config) {
  if (seq.frames.size() < 2) throw Error(Errc::InvalidConfig, "a run needs at least two frames");
  Tracker tracker(seq.camera, config);
  RunResult out;
  const std::uint64_t ops_before = work_counters().line_ops;
  for (const SimFrame& f : seq.frames) {
    out.frames.push_back(tracker.process_frame(f));
    if (out.frames.back().lost) ++out.lost_frames;
  }

  WorldMap& map = tracker.map();
  std::vector<Pose> before(map.keyframes.size());
  for (std::size_t k = 0; k < map.keyframes.size(); ++k) before[k] = map.keyframes[k].pose;
  out.global_line_residuals = refine_map_globally(map, seq.camera, config, &tracker.trace());

  // Carry every frame along with the correction of its reference keyframe.
  const auto& refs = tracker.reference_keyframes();
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    FrameResult& fr = out.frames[i];
    if (!map.keyframes.empty()) {
      const std::size_t k = refs[i];
      fr.pose = fr.pose * before[k].inverse() * map.keyframes[k].pose;
      if (fr.keyframe) fr.pose = map.keyframes[k].pose;
    }
    out.trajectory.entries.push_back({fr.timestamp, fr.pose.inverse()});
  }
  out.total_line_ops = work_counters().line_ops - ops_before;
  try {
    out.metrics = evaluate_trajectory(out.trajectory, seq.ground_truth, true, 1);
  } catch (const Error& e) {
    // Predicted poses of lost frames can leave too little motion to align.
    if (out.lost_frames == 0) throw;
    out.metrics_error = e;
  }
  out.trace = std::move(tracker.trace());
  out.map = std::move(map);
  return out;
}

/// Grid statistics of the surviving points of every frame, tracked in Point
/// mode, as input to calibrate().
inline std::vector<GridStats> collect_grid_stats(const Sequence& seq, PipelineConfig config) {
  config.mode_policy = ModePolicy::NeverLines;
  Tracker tracker(seq.camera, config);
  std::vector<GridStats> stats;
  for (const SimFrame& f : seq.frames) stats.push_back(tracker.process_frame(f).grid);
  return stats;
}

}  // namespace fadslam
