#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "rmx/skeleton.hpp"

namespace rmx {

/// Mean relative drift at which a clip counts as collapsed.
inline constexpr double kCollapseThreshold = 0.10;

struct DriftReport {
  std::vector<double> mean_rel_err;  // per frame, averaged over the 16 bones
  std::vector<double> max_rel_err;   // per frame
  std::size_t horizon = 0;
  double mean = 0.0;  // of mean_rel_err
  double max = 0.0;   // of max_rel_err
  double threshold = kCollapseThreshold;
  std::optional<std::size_t> first_exceedance;  // first frame with mean > threshold
};

/// Relative bone-length error |len - ref| / ref per frame. Throws
/// ValidationError for an empty clip.
DriftReport bone_drift(const MotionClip& clip, const SkeletonTopology& topo,
                       double threshold = kCollapseThreshold);

struct SmoothnessReport {
  std::vector<double> displacement;  // frame t >= 1: mean_j |p_t - p_{t-1}|
  std::vector<double> jerk;          // frame t >= 2: mean_j |p_t - 2p_{t-1} + p_{t-2}|
  double mean_displacement = 0.0;
  double max_displacement = 0.0;
  double mean_jerk = 0.0;
  double max_jerk = 0.0;
  bool partial = false;  // fewer than 3 frames
};

SmoothnessReport smoothness(const MotionClip& clip);

/// Per-frame mean joint displacement magnitude, frame 0 reported as 0.
std::vector<double> displacement_magnitudes(const MotionClip& clip);

/// Pearson correlation of `a[t]` with `b[t + lag]` for lag in
/// [-max_lag, max_lag]; entry i corresponds to lag i - max_lag. Lags with
/// fewer than 3 overlapping frames or zero variance yield 0.
std::vector<double> cross_correlation(const std::vector<double>& a, const std::vector<double>& b,
                                      std::size_t max_lag);

void write_drift_csv(const DriftReport& report, const std::filesystem::path& path);
void write_smoothness_csv(const SmoothnessReport& report, const std::filesystem::path& path);

}  // namespace rmx
