#include "rmx/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "rmx/error.hpp"
#include "rmx/nn/ops.hpp"
#include "rmx/preprocess.hpp"

namespace rmx {
namespace {

// Rest-pose direction of the bone ending at each joint (y up, subject
// facing +z, right side at -x).
const std::array<Vec3, kNumJoints> kRestDirections = {{
    {0, 0, 0},      // pelvis
    {-1, 0, 0},     // right hip
    {0, -1, 0},     // right knee
    {0, -1, 0},     // right ankle
    {1, 0, 0},      // left hip
    {0, -1, 0},     // left knee
    {0, -1, 0},     // left ankle
    {0, 1, 0},      // trunk
    {0, 1, 0},      // neck
    {0, 0.5, 1},    // nose
    {0, 1, -0.3},   // head top
    {1, 0, 0},      // left shoulder
    {0.3, -1, 0.2}, // left elbow
    {0, -0.4, 1},   // left wrist
    {-1, 0, 0},     // right shoulder
    {-0.3, -1, 0.2},// right elbow
    {0, -0.4, 1},   // right wrist
}};

Vec3 normalized(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

struct Wave {
  std::array<double, 3> omega, phase;
};

}  // namespace

MotionClip synthetic_subject(const SkeletonTopology& topo, std::size_t n_frames,
                             std::uint64_t seed, std::int64_t first_index,
                             const SyntheticConfig& cfg) {
  if (!(cfg.min_hz > 0.0 && cfg.max_hz >= cfg.min_hz)) throw ConfigError("bad frequency band");
  nn::Rng rng(seed);
  const double fps = Fps{}.value();
  std::array<Wave, kNumJoints> waves{};
  for (auto& w : waves) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double hz = cfg.min_hz + (cfg.max_hz - cfg.min_hz) * nn::uniform01(rng);
      w.omega[c] = 2.0 * std::numbers::pi * hz / fps;
      w.phase[c] = 2.0 * std::numbers::pi * nn::uniform01(rng);
    }
  }
  std::vector<PoseFrame> frames;
  frames.reserve(n_frames);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::int64_t t = first_index + static_cast<std::int64_t>(k);
    PoseFrame f;
    f.person_id = 0;
    f.frame_index = t;
    f.joints[topo.root()] = {0.0, 1.0, 0.0};
    for (std::size_t j : topo.root_to_leaf_order()) {
      if (j == topo.root()) continue;
      Vec3 dir = normalized(kRestDirections[j]);
      for (std::size_t c = 0; c < 3; ++c) {
        dir[c] += cfg.amplitude * std::sin(waves[j].omega[c] * static_cast<double>(t) +
                                           waves[j].phase[c]);
      }
      dir = normalized(dir);
      const Vec3& p = f.joints[static_cast<std::size_t>(topo.parent(j))];
      const double len = topo.reference_length(j);
      f.joints[j] = {p[0] + len * dir[0], p[1] + len * dir[1], p[2] + len * dir[2]};
    }
    frames.push_back(f);
  }
  return MotionClip(std::move(frames));
}

std::vector<PoseFrame> delayed_mirror(const MotionClip& subject) {
  std::vector<PoseFrame> out;
  for (std::size_t t = 1; t < subject.size(); ++t) {
    PoseFrame m = mirror_frame(subject[t - 1]);
    m.frame_index = subject[t].frame_index;
    out.push_back(m);
  }
  return out;
}

PairedClip synthetic_pair(const SkeletonTopology& topo, std::size_t n_frames, std::uint64_t seed,
                          const SyntheticConfig& cfg) {
  if (n_frames == 0) throw ValidationError("synthetic pair needs at least one frame");
  // One extra leading frame so frame 0's counterpart has a predecessor:
  // subject[t] = longer[t + 1], counterpart[t] = mirror(longer[t]).
  const MotionClip longer = synthetic_subject(topo, n_frames + 1, seed, 0, cfg);
  std::vector<PoseFrame> subj, cp;
  for (std::size_t t = 0; t < n_frames; ++t) {
    PoseFrame s = longer[t + 1];
    s.frame_index = static_cast<std::int64_t>(t);
    subj.push_back(s);
    cp.push_back(mirror_frame(longer[t]));
  }
  return PairedClip(MotionClip(std::move(subj)), MotionClip(std::move(cp)));
}

std::vector<PairedClip> synthetic_corpus(const SkeletonTopology& topo, const SyntheticConfig& cfg) {
  std::vector<PairedClip> out;
  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    out.push_back(synthetic_pair(topo, cfg.n_frames, cfg.seed * 1000003ULL + i, cfg));
  }
  return out;
}

}  // namespace rmx
