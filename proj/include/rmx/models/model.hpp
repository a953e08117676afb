#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rmx/models/config.hpp"
#include "rmx/nn/layers.hpp"
#include "rmx/preprocess.hpp"

namespace rmx {

inline constexpr const char* kPersonIdParam = "person_id.embedding";
inline constexpr const char* kHeadWeight = "head.weight";
inline constexpr const char* kHeadBias = "head.bias";

/// Batched model input: subject context, counterpart context and the
/// two-person past window.
template <typename T>
struct ModelInput {
  std::size_t batch = 0;
  nn::Tensor<T> x_ctx;  // [B, ctx_len, 51]
  nn::Tensor<T> y_ctx;  // [B, ctx_len, 51]
  nn::Tensor<T> past;   // [B, past_len, 102]

  static ModelInput from_samples(std::span<const TrainingSample* const> samples);
  static ModelInput from_sample(const TrainingSample& sample);
  /// Throws ShapeError unless the tensors match the config's sequence shapes.
  void validate(const ModelConfig& cfg) const;
};

/// Targets of the samples stacked to [B, 51].
template <typename T>
nn::Tensor<T> stack_targets(std::span<const TrainingSample* const> samples);

/// Common interface of the three architectures: contexts and past window in,
/// [B, 51] predicted counterpart frame out.
template <typename T>
class MotionModel {
 public:
  explicit MotionModel(ModelConfig cfg);
  virtual ~MotionModel() = default;
  MotionModel(const MotionModel&) = delete;
  MotionModel& operator=(const MotionModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore<T>& parameters() { return params_; }
  const nn::ParameterStore<T>& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  /// Throws ShapeError on bad input and DivergenceError (index -1) when the
  /// output is not finite.
  nn::Var<T> forward(const ModelInput<T>& input, const nn::ForwardContext& ctx) const;

 protected:
  virtual nn::Var<T> forward_impl(const ModelInput<T>& input,
                                  const nn::ForwardContext& ctx) const = 0;

  ModelConfig cfg_;
  nn::ParameterStore<T> params_;
};

/// Adds person `owner[r]`'s learnable vector to every token of row r, with
/// tokens viewed as [G, owner.size(), inner, d]. Throws ConfigError when an
/// owner is not a known person.
template <typename T>
nn::Var<T> apply_person_id(const nn::Var<T>& tokens, const nn::Var<T>& table,
                           const std::vector<std::size_t>& owner, std::size_t inner);

/// Person owning each of the 102 variates: 0 for the first 51, 1 after.
std::vector<std::size_t> variate_owners(const ModelConfig& cfg);

/// Builds the configured architecture with parameters initialized from
/// `seed`.
template <typename T>
std::unique_ptr<MotionModel<T>> make_model(const ModelConfig& cfg, std::uint64_t seed);

/// Copies every parameter value from `src` into `dst`; both must come from
/// equal configs.
template <typename T>
void copy_parameters(const MotionModel<T>& src, MotionModel<T>& dst);

}  // namespace rmx
