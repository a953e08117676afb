#include "rmx/models/inverted_transformer.hpp"

#include "rmx/error.hpp"

namespace rmx {

template <typename T>
InvertedTransformer<T>::InvertedTransformer(const ModelConfig& cfg, std::uint64_t seed)
    : MotionModel<T>(cfg) {
  if (cfg.arch != Architecture::kInverted) throw ConfigError("not an inverted-transformer config");
  auto& store = this->params_;
  nn::Rng rng(seed);
  const std::size_t d = cfg.d_model;
  embed_ = nn::Linear<T>(store, "embed", cfg.ctx_len, d, rng);
  if (cfg.use_person_id) person_id_ = store.glorot(kPersonIdParam, {cfg.n_persons, d}, rng);
  for (std::size_t i = 0; i < cfg.n_encoder_layers; ++i) {
    encoder_.emplace_back(store, "encoder.layer" + std::to_string(i), d, cfg.n_heads,
                          cfg.d_ffn, cfg.dropout, rng);
  }
  norm_ = nn::LayerNorm<T>(store, "encoder.norm", d);
  head_ = nn::Linear<T>(store, "head", d, 1, rng);
}

template <typename T>
nn::Tensor<T> InvertedTransformer<T>::variate_tokens(const ModelInput<T>& input) {
  const std::size_t B = input.batch;
  const std::size_t L = input.x_ctx.dim(1);
  const std::size_t F = input.x_ctx.dim(2);
  nn::Tensor<T> tokens({B, 2 * F, L});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      const T* x = input.x_ctx.data() + (b * L + t) * F;
      const T* y = input.y_ctx.data() + (b * L + t) * F;
      for (std::size_t f = 0; f < F; ++f) {
        tokens.data()[(b * 2 * F + f) * L + t] = x[f];
        tokens.data()[(b * 2 * F + F + f) * L + t] = y[f];
      }
    }
  }
  return tokens;
}

template <typename T>
nn::Var<T> InvertedTransformer<T>::forward_tokens(const nn::Tensor<T>& tokens,
                                                  const std::vector<std::size_t>& owner,
                                                  const nn::ForwardContext& ctx) const {
  const auto& cfg = this->cfg_;
  if (tokens.rank() != 3 || tokens.dim(2) != cfg.ctx_len || tokens.dim(1) != owner.size()) {
    throw ShapeError("variate tokens " + nn::shape_str(tokens.shape()) +
                     " do not match owners/context length");
  }
  const std::size_t B = tokens.dim(0);
  const std::size_t D = tokens.dim(1);
  nn::Var<T> x = embed_(nn::constant(tokens));
  if (person_id_) x = apply_person_id(x, person_id_, owner, 1);
  x = nn::dropout(x, cfg.dropout, ctx.dropout_rng());
  for (const auto& layer : encoder_) x = layer(x, ctx);
  return nn::reshape(head_(norm_(x)), {B, D});
}

template <typename T>
nn::Var<T> InvertedTransformer<T>::forward_impl(const ModelInput<T>& input,
                                                const nn::ForwardContext& ctx) const {
  const auto& cfg = this->cfg_;
  const std::size_t F = cfg.feats_per_person;
  auto all = forward_tokens(variate_tokens(input), variate_owners(cfg), ctx);
  std::vector<std::size_t> counterpart(F);
  for (std::size_t f = 0; f < F; ++f) counterpart[f] = F + f;
  return nn::gather_columns(all, cfg.n_variates(), counterpart);
}

template class InvertedTransformer<float>;
template class InvertedTransformer<double>;

}  // namespace rmx
