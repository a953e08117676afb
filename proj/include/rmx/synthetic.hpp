#pragma once

#include <cstdint>
#include <vector>

#include "rmx/skeleton.hpp"

namespace rmx {

struct SyntheticConfig {
  std::size_t n_pairs = 8;
  std::size_t n_frames = 200;
  std::uint64_t seed = 1;
  double amplitude = 0.35;  // bone-direction perturbation
  double min_hz = 0.2;
  double max_hz = 1.0;
};

/// Subject motion built from sinusoidally swinging bone directions at
/// reference lengths with the pelvis at (0, 1, 0), frames first_index ..
/// first_index + n_frames - 1.
MotionClip synthetic_subject(const SkeletonTopology& topo, std::size_t n_frames,
                             std::uint64_t seed, std::int64_t first_index = 0,
                             const SyntheticConfig& cfg = {});

/// Pair whose counterpart at frame t is the mirror of the subject at t - 1.
PairedClip synthetic_pair(const SkeletonTopology& topo, std::size_t n_frames, std::uint64_t seed,
                          const SyntheticConfig& cfg = {});

/// The analytic counterpart: mirror_frame(subject[t - 1]) relabelled to
/// frame t, for each frame of `subject` except the first.
std::vector<PoseFrame> delayed_mirror(const MotionClip& subject);

/// cfg.n_pairs pairs, pair i seeded from cfg.seed and i.
std::vector<PairedClip> synthetic_corpus(const SkeletonTopology& topo, const SyntheticConfig& cfg);

}  // namespace rmx
