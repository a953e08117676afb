#include "rmx/nn/optim.hpp"

#include <cmath>

#include "rmx/error.hpp"

namespace rmx::nn {

std::string to_string(OptimizerAlgorithm algo) {
  return algo == OptimizerAlgorithm::kAdam ? "adam" : "sgd";
}

OptimizerAlgorithm optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerAlgorithm::kAdam;
  if (name == "sgd") return OptimizerAlgorithm::kSgd;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be > 0");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip norm must be > 0");
}

template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, AdamMoments& mo,
                 std::size_t step, const OptimizerConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("adam: params/grads size mismatch");
  if (mo.m.size() != params.size()) {
    mo.m.assign(params.size(), 0.0);
    mo.v.assign(params.size(), 0.0);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    mo.m[i] = cfg.beta1 * mo.m[i] + (1.0 - cfg.beta1) * g;
    mo.v[i] = cfg.beta2 * mo.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = mo.m[i] / bc1;
    const double vhat = mo.v[i] / bc2;
    params[i] = static_cast<T>(params[i] - cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps));
  }
}

template <typename T>
void sgd_update(std::span<T> params, std::span<const T> grads,
                const OptimizerConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("sgd: params/grads size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = static_cast<T>(params[i] - cfg.learning_rate * grads[i]);
  }
}

template <typename T>
Optimizer<T>::Optimizer(ParameterStore<T>& store, OptimizerConfig cfg)
    : store_(&store), cfg_(cfg), moments_(store.entries().size()) {
  cfg_.validate();
}

template <typename T>
void Optimizer<T>::step() {
  const auto& entries = store_->entries();
  double sq_norm = 0.0;
  for (const auto& [name, p] : entries) {
    if (!p->has_grad()) continue;
    for (T g : p->grad.values()) {
      if (!std::isfinite(g)) {
        throw DivergenceError("non-finite gradient in parameter '" + name + "'",
                              static_cast<std::int64_t>(steps_));
      }
      sq_norm += static_cast<double>(g) * g;
    }
  }
  double clip_scale = 1.0;
  if (cfg_.clip_norm) {
    const double norm = std::sqrt(sq_norm);
    if (norm > *cfg_.clip_norm) clip_scale = *cfg_.clip_norm / norm;
  }

  ++steps_;
  std::vector<T> scratch;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Node<T>& p = *entries[i].second;
    scratch.assign(p.value.size(), T(0));
    if (p.has_grad()) {
      for (std::size_t j = 0; j < scratch.size(); ++j) {
        scratch[j] = static_cast<T>(p.grad[j] * clip_scale);
      }
    }
    if (cfg_.algorithm == OptimizerAlgorithm::kAdam) {
      adam_update<T>(p.value.values(), scratch, moments_[i], steps_, cfg_);
    } else {
      sgd_update<T>(p.value.values(), scratch, cfg_);
    }
  }
}

template void adam_update(std::span<float>, std::span<const float>, AdamMoments&,
                          std::size_t, const OptimizerConfig&);
template void adam_update(std::span<double>, std::span<const double>, AdamMoments&,
                          std::size_t, const OptimizerConfig&);
template void sgd_update(std::span<float>, std::span<const float>,
                         const OptimizerConfig&);
template void sgd_update(std::span<double>, std::span<const double>,
                         const OptimizerConfig&);
template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace rmx::nn
