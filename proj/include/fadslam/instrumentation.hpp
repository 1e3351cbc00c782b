#pragma once

#include <cstdint>

namespace fadslam {

/// Per-thread work counters. Line-related code bumps `line_ops` once per
/// elementary line operation so callers can prove a code path did no line work.
struct WorkCounters {
  std::uint64_t line_ops = 0;
  std::uint64_t line_residuals = 0;
  std::uint64_t point_residuals = 0;
};

inline WorkCounters& work_counters() {
  thread_local WorkCounters counters;
  return counters;
}

}  // namespace fadslam
