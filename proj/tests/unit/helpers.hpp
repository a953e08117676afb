#pragma once

#include <cmath>
#include <random>

#include "rmx/models/config.hpp"
#include "rmx/nn/ops.hpp"
#include "rmx/preprocess.hpp"
#include "rmx/skeleton.hpp"

namespace rmx::test {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v{n(rng), n(rng), n(rng)};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-3) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

/// A frame with arbitrary joint positions: bones get random directions and
/// lengths in [0.5, 1.5] x reference, the root lands anywhere in a 4 m box.
inline PoseFrame random_frame(std::mt19937_64& rng, const SkeletonTopology& topo,
                              int person = 0, std::int64_t index = 0) {
  std::uniform_real_distribution<double> box(-2.0, 2.0), scale(0.5, 1.5);
  PoseFrame f;
  f.person_id = person;
  f.frame_index = index;
  f.joints[topo.root()] = {box(rng), box(rng), box(rng)};
  for (std::size_t j : topo.root_to_leaf_order()) {
    if (j == topo.root()) continue;
    const Vec3 d = random_unit(rng);
    const Vec3& p = f.joints[static_cast<std::size_t>(topo.parent(j))];
    const double len = topo.reference_length(j) * scale(rng);
    f.joints[j] = {p[0] + len * d[0], p[1] + len * d[1], p[2] + len * d[2]};
  }
  return f;
}

/// Random frame already at reference lengths with the pelvis at (0, 1, 0).
inline PoseFrame random_clean_frame(std::mt19937_64& rng, const SkeletonTopology& topo,
                                    int person = 0, std::int64_t index = 0) {
  return normalize_frame(retarget_frame(random_frame(rng, topo, person, index), topo));
}

inline ModelConfig tiny_config(Architecture arch, bool person_id = false) {
  ModelConfig c;
  c.arch = arch;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ffn = 32;
  c.dropout = 0.0;
  c.n_routers = 4;
  c.use_person_id = person_id;
  return c;
}

/// Sample with arbitrary feature values in [-1, 1].
inline TrainingSample random_sample(std::mt19937_64& rng, std::size_t ctx_len = 30,
                                    std::size_t past_len = 10) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  TrainingSample s;
  s.ctx_len = ctx_len;
  s.past_len = past_len;
  s.x_ctx.resize(ctx_len * kFeaturesPerPerson);
  s.y_ctx.resize(ctx_len * kFeaturesPerPerson);
  s.past.resize(past_len * 2 * kFeaturesPerPerson);
  s.target.resize(kFeaturesPerPerson);
  for (auto* v : {&s.x_ctx, &s.y_ctx, &s.past, &s.target}) {
    for (float& x : *v) x = u(rng);
  }
  return s;
}

template <typename T>
nn::Tensor<T> random_tensor(nn::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  nn::Tensor<T> t(std::move(shape));
  for (T& v : t.storage()) v = static_cast<T>(u(rng));
  return t;
}

}  // namespace rmx::test
