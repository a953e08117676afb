#include "rmx/models/model.hpp"

#include <algorithm>

#include "rmx/error.hpp"
#include "rmx/models/cross_segment.hpp"
#include "rmx/models/inverted_transformer.hpp"
#include "rmx/models/simple_transformer.hpp"

namespace rmx {

template <typename T>
ModelInput<T> ModelInput<T>::from_samples(std::span<const TrainingSample* const> samples) {
  if (samples.empty()) throw ShapeError("empty batch");
  const std::size_t ctx = samples.front()->ctx_len;
  const std::size_t past = samples.front()->past_len;
  const std::size_t F = kFeaturesPerPerson;
  ModelInput in;
  in.batch = samples.size();
  in.x_ctx = nn::Tensor<T>({in.batch, ctx, F});
  in.y_ctx = nn::Tensor<T>({in.batch, ctx, F});
  in.past = nn::Tensor<T>({in.batch, past, 2 * F});
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const TrainingSample& s = *samples[b];
    if (s.ctx_len != ctx || s.past_len != past || s.x_ctx.size() != ctx * F ||
        s.y_ctx.size() != ctx * F || s.past.size() != past * 2 * F) {
      throw ShapeError("batch mixes sample shapes");
    }
    std::copy(s.x_ctx.begin(), s.x_ctx.end(), in.x_ctx.data() + b * ctx * F);
    std::copy(s.y_ctx.begin(), s.y_ctx.end(), in.y_ctx.data() + b * ctx * F);
    std::copy(s.past.begin(), s.past.end(), in.past.data() + b * past * 2 * F);
  }
  return in;
}

template <typename T>
ModelInput<T> ModelInput<T>::from_sample(const TrainingSample& sample) {
  const TrainingSample* one[] = {&sample};
  return from_samples(one);
}

template <typename T>
void ModelInput<T>::validate(const ModelConfig& cfg) const {
  const nn::Shape want_ctx{batch, cfg.ctx_len, cfg.feats_per_person};
  const nn::Shape want_past{batch, cfg.past_len, cfg.n_variates()};
  if (batch == 0 || x_ctx.shape() != want_ctx || y_ctx.shape() != want_ctx ||
      past.shape() != want_past) {
    throw ShapeError("model input: x " + nn::shape_str(x_ctx.shape()) + ", y " +
                     nn::shape_str(y_ctx.shape()) + ", past " +
                     nn::shape_str(past.shape()) + "; expected " +
                     nn::shape_str(want_ctx) + " and " + nn::shape_str(want_past));
  }
}

template <typename T>
nn::Tensor<T> stack_targets(std::span<const TrainingSample* const> samples) {
  nn::Tensor<T> out({samples.size(), kFeaturesPerPerson});
  for (std::size_t b = 0; b < samples.size(); ++b) {
    if (samples[b]->target.size() != kFeaturesPerPerson) {
      throw ShapeError("sample target must have 51 values");
    }
    std::copy(samples[b]->target.begin(), samples[b]->target.end(),
              out.data() + b * kFeaturesPerPerson);
  }
  return out;
}

template <typename T>
MotionModel<T>::MotionModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

template <typename T>
nn::Var<T> MotionModel<T>::forward(const ModelInput<T>& input,
                                   const nn::ForwardContext& ctx) const {
  input.validate(cfg_);
  nn::Var<T> out = forward_impl(input, ctx);
  if (!out->value.all_finite()) {
    throw DivergenceError("non-finite model output", -1);
  }
  return out;
}

template <typename T>
nn::Var<T> apply_person_id(const nn::Var<T>& tokens, const nn::Var<T>& table,
                           const std::vector<std::size_t>& owner, std::size_t inner) {
  const std::size_t persons = table->value.dim(0);
  for (std::size_t o : owner) {
    if (o >= persons) {
      throw ConfigError("token owner " + std::to_string(o) + " is not one of " +
                        std::to_string(persons) + " persons");
    }
  }
  return nn::add_rows_indexed(tokens, table, owner, inner);
}

std::vector<std::size_t> variate_owners(const ModelConfig& cfg) {
  std::vector<std::size_t> owner(cfg.n_variates());
  for (std::size_t v = 0; v < owner.size(); ++v) owner[v] = v / cfg.feats_per_person;
  return owner;
}

template <typename T>
std::unique_ptr<MotionModel<T>> make_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  switch (cfg.arch) {
    case Architecture::kSimple:
      return std::make_unique<SimpleTransformer<T>>(cfg, seed);
    case Architecture::kInverted:
      return std::make_unique<InvertedTransformer<T>>(cfg, seed);
    case Architecture::kCrossSegment:
      return std::make_unique<CrossSegmentTransformer<T>>(cfg, seed);
  }
  throw ConfigError("unknown architecture");
}

template <typename T>
void copy_parameters(const MotionModel<T>& src, MotionModel<T>& dst) {
  if (!(src.config() == dst.config())) throw ConfigError("copy_parameters: configs differ");
  const auto& a = src.parameters().entries();
  const auto& b = dst.parameters().entries();
  for (std::size_t i = 0; i < a.size(); ++i) b[i].second->value = a[i].second->value;
}

template struct ModelInput<float>;
template struct ModelInput<double>;
template nn::Tensor<float> stack_targets(std::span<const TrainingSample* const>);
template nn::Tensor<double> stack_targets(std::span<const TrainingSample* const>);
template class MotionModel<float>;
template class MotionModel<double>;
template nn::Var<float> apply_person_id(const nn::Var<float>&, const nn::Var<float>&,
                                        const std::vector<std::size_t>&, std::size_t);
template nn::Var<double> apply_person_id(const nn::Var<double>&, const nn::Var<double>&,
                                         const std::vector<std::size_t>&, std::size_t);
template std::unique_ptr<MotionModel<float>> make_model(const ModelConfig&, std::uint64_t);
template std::unique_ptr<MotionModel<double>> make_model(const ModelConfig&, std::uint64_t);
template void copy_parameters(const MotionModel<float>&, MotionModel<float>&);
template void copy_parameters(const MotionModel<double>&, MotionModel<double>&);

}  // namespace rmx
