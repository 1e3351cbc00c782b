#pragma once

// On-disk sequence layout:
//
//   <dir>/groundtruth.txt   trajectory text format (T_wc)
//   <dir>/frames.txt        one record per line:
//     camera <fx> <fy> <cx> <cy> <width> <height>
//     <frame> T <timestamp>
//     <frame> M <umin> <vmin> <umax> <vmax>
//     <frame> P <id> <u> <v> <depth> <label>
//     <frame> L <id> <su> <sv> <eu> <ev> <sdepth> <edepth> <response> <label>
//   label is 0 (static) or 1 (dynamic). Numbers are printed with %.17g so a
//   reload reproduces the in-memory frames exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fadslam/error.hpp"
#include "fadslam/metrics.hpp"
#include "fadslam/sim_world.hpp"

namespace fadslam {

inline constexpr const char* kFramesFile = "frames.txt";
inline constexpr const char* kGroundTruthFile = "groundtruth.txt";

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string format_frames(const Sequence& seq) {
  using detail::g17;
  std::ostringstream out;
  const CameraIntrinsics& k = seq.camera;
  out << "# fadslam sequence v1\n";
  out << "camera " << g17(k.fx) << ' ' << g17(k.fy) << ' ' << g17(k.cx) << ' ' << g17(k.cy) << ' ' << k.width << ' '
      << k.height << '\n';
  for (const SimFrame& f : seq.frames) {
    out << f.index << " T " << g17(f.timestamp) << '\n';
    for (const Rect& r : f.masks.regions)
      out << f.index << " M " << g17(r.umin) << ' ' << g17(r.vmin) << ' ' << g17(r.umax) << ' ' << g17(r.vmax) << '\n';
    for (const SimPointObs& p : f.points)
      out << f.index << " P " << p.id << ' ' << g17(p.pixel.x()) << ' ' << g17(p.pixel.y()) << ' ' << g17(p.depth)
          << ' ' << (p.dynamic ? 1 : 0) << '\n';
    for (const SimLineObs& l : f.lines)
      out << f.index << " L " << l.id << ' ' << g17(l.line.start.x()) << ' ' << g17(l.line.start.y()) << ' '
          << g17(l.line.end.x()) << ' ' << g17(l.line.end.y()) << ' ' << g17(l.start_depth) << ' '
          << g17(l.end_depth) << ' ' << g17(l.response) << ' ' << (l.dynamic ? 1 : 0) << '\n';
  }
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline void write_sequence(const Sequence& seq, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / kFramesFile, format_frames(seq));
  write_trajectory(seq.ground_truth, (dir / kGroundTruthFile).string());
}

inline std::vector<SimFrame> parse_frames(std::istream& in, CameraIntrinsics& camera, const std::string& source) {
  std::vector<SimFrame> frames;
  bool have_camera = false;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    if (head == "camera") {
      if (!(ss >> camera.fx >> camera.fy >> camera.cx >> camera.cy >> camera.width >> camera.height))
        fail("bad camera record");
      have_camera = true;
      continue;
    }
    std::size_t index = 0;
    try {
      std::size_t used = 0;
      index = std::stoul(head, &used);
      if (used != head.size()) fail("bad frame index");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail("bad frame index '" + head + "'");
    }
    std::string type;
    if (!(ss >> type)) fail("missing record type");
    if (type == "T") {
      if (!frames.empty() && index <= frames.back().index) fail("frame indices must increase");
      SimFrame f;
      f.index = index;
      if (!(ss >> f.timestamp)) fail("bad timestamp");
      frames.push_back(std::move(f));
      continue;
    }
    if (frames.empty() || frames.back().index != index) fail("record before its frame header");
    SimFrame& f = frames.back();
    int label = 0;
    if (type == "M") {
      Rect r;
      if (!(ss >> r.umin >> r.vmin >> r.umax >> r.vmax)) fail("bad mask record");
      f.masks.regions.push_back(r);
    } else if (type == "P") {
      SimPointObs p;
      double u = 0, v = 0;
      if (!(ss >> p.id >> u >> v >> p.depth >> label)) fail("bad point record");
      p.pixel = {u, v};
      p.dynamic = label != 0;
      f.points.push_back(p);
    } else if (type == "L") {
      SimLineObs l;
      double su = 0, sv = 0, eu = 0, ev = 0;
      if (!(ss >> l.id >> su >> sv >> eu >> ev >> l.start_depth >> l.end_depth >> l.response >> label))
        fail("bad line record");
      l.line = {{su, sv}, {eu, ev}};
      l.dynamic = label != 0;
      f.lines.push_back(l);
    } else {
      fail("unknown record type '" + type + "'");
    }
    std::string extra;
    if (ss >> extra) fail("trailing field '" + extra + "'");
  }
  if (!have_camera) throw Error(Errc::ParseError, source + ": missing camera record");
  return frames;
}

/// Loads a sequence written by write_sequence. Frame poses come from the
/// ground truth, matched by position.
inline Sequence read_sequence(const std::filesystem::path& dir) {
  Sequence seq;
  const auto frames_path = dir / kFramesFile;
  std::ifstream in(frames_path);
  if (!in) throw Error(Errc::IoError, "cannot open " + frames_path.string());
  seq.frames = parse_frames(in, seq.camera, frames_path.string());
  seq.camera.validate();
  seq.ground_truth = read_trajectory((dir / kGroundTruthFile).string());
  if (seq.ground_truth.size() != seq.frames.size())
    throw Error(Errc::ParseError, "ground truth has " + std::to_string(seq.ground_truth.size()) + " poses for " +
                                      std::to_string(seq.frames.size()) + " frames");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) seq.frames[i].true_pose = seq.ground_truth.entries[i].pose.inverse();
  return seq;
}

}  // namespace fadslam
