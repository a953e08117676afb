#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmx/nn/layers.hpp"

namespace rmx::nn {

enum class OptimizerAlgorithm { kAdam, kSgd };

std::string to_string(OptimizerAlgorithm algo);
OptimizerAlgorithm optimizer_from_string(const std::string& name);

struct OptimizerConfig {
  double learning_rate = 1e-4;
  OptimizerAlgorithm algorithm = OptimizerAlgorithm::kAdam;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clipping threshold; off when unset.
  std::optional<double> clip_norm;

  void validate() const;
};

/// First and second moment estimates for one parameter tensor.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

/// One Adam update with bias correction; `step` counts from 1.
template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, AdamMoments& moments,
                 std::size_t step, const OptimizerConfig& cfg);

/// p -= lr * g.
template <typename T>
void sgd_update(std::span<T> params, std::span<const T> grads,
                const OptimizerConfig& cfg);

/// Applies the configured update to every parameter of a store. Parameters
/// without a gradient are treated as having a zero gradient.
template <typename T>
class Optimizer {
 public:
  Optimizer(ParameterStore<T>& store, OptimizerConfig cfg);

  /// Throws DivergenceError (index = step about to be taken) when any
  /// gradient is non-finite; parameters are left untouched in that case.
  void step();
  std::size_t steps_taken() const { return steps_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  ParameterStore<T>* store_;
  OptimizerConfig cfg_;
  std::vector<AdamMoments> moments_;
  std::size_t steps_ = 0;
};

}  // namespace rmx::nn
