#include "rmx/models/simple_transformer.hpp"

#include "rmx/error.hpp"

namespace rmx {

template <typename T>
SimpleTransformer<T>::SimpleTransformer(const ModelConfig& cfg, std::uint64_t seed)
    : MotionModel<T>(cfg) {
  if (cfg.arch != Architecture::kSimple) throw ConfigError("not a simple-transformer config");
  auto& store = this->params_;
  nn::Rng rng(seed);
  const std::size_t d = cfg.d_model;
  const std::size_t feats = cfg.n_variates();

  if (cfg.use_person_id) {
    person_id_ = store.glorot(kPersonIdParam, {cfg.n_persons, cfg.feats_per_person}, rng);
  }
  enc_in_ = nn::Linear<T>(store, "encoder.input", feats, d, rng);
  for (std::size_t i = 0; i < cfg.n_encoder_layers; ++i) {
    encoder_.emplace_back(store, "encoder.layer" + std::to_string(i), d, cfg.n_heads,
                          cfg.d_ffn, cfg.dropout, rng);
  }
  enc_norm_ = nn::LayerNorm<T>(store, "encoder.norm", d);
  dec_in_ = nn::Linear<T>(store, "decoder.input", feats, d, rng);
  for (std::size_t i = 0; i < cfg.n_decoder_layers; ++i) {
    decoder_.emplace_back(store, "decoder.layer" + std::to_string(i), d, cfg.n_heads,
                          cfg.d_ffn, cfg.dropout, rng);
  }
  dec_norm_ = nn::LayerNorm<T>(store, "decoder.norm", d);
  head_ = nn::Linear<T>(store, "head", d, cfg.feats_per_person, rng);

  pe_ctx_ = nn::sinusoidal_positional_encoding<T>(cfg.ctx_len, d);
  pe_past_ = nn::sinusoidal_positional_encoding<T>(cfg.past_len, d);
}

template <typename T>
nn::Var<T> SimpleTransformer<T>::embed_frames(const nn::Tensor<T>& frames,
                                              const nn::Linear<T>& proj,
                                              const nn::Tensor<T>& positions,
                                              const nn::ForwardContext& ctx) const {
  nn::Var<T> x = nn::constant(frames);
  if (person_id_) {
    // frames [B, L, 102] viewed as [B*L, 2 persons, 1, 51].
    x = apply_person_id(x, person_id_, {0, 1}, 1);
  }
  x = nn::add_broadcast(proj(x), nn::constant(positions));
  return nn::dropout(x, this->cfg_.dropout, ctx.dropout_rng());
}

template <typename T>
nn::Var<T> SimpleTransformer<T>::encode(const ModelInput<T>& input,
                                        const nn::ForwardContext& ctx) const {
  const auto& cfg = this->cfg_;
  const std::size_t F = cfg.feats_per_person;
  // Concatenate subject and counterpart along the feature axis.
  nn::Tensor<T> frames({input.batch, cfg.ctx_len, 2 * F});
  for (std::size_t r = 0; r < input.batch * cfg.ctx_len; ++r) {
    std::copy_n(input.x_ctx.data() + r * F, F, frames.data() + r * 2 * F);
    std::copy_n(input.y_ctx.data() + r * F, F, frames.data() + r * 2 * F + F);
  }
  nn::Var<T> x = embed_frames(frames, enc_in_, pe_ctx_, ctx);
  for (const auto& layer : encoder_) x = layer(x, ctx);
  return enc_norm_(x);
}

template <typename T>
nn::Var<T> SimpleTransformer<T>::decode(const ModelInput<T>& input,
                                        const nn::Var<T>& memory,
                                        const nn::ForwardContext& ctx) const {
  nn::Var<T> x = embed_frames(input.past, dec_in_, pe_past_, ctx);
  for (const auto& layer : decoder_) x = layer(x, memory, ctx);
  return dec_norm_(x);
}

template <typename T>
nn::Var<T> SimpleTransformer<T>::forward_impl(const ModelInput<T>& input,
                                              const nn::ForwardContext& ctx) const {
  const std::size_t d = this->cfg_.d_model;
  const std::size_t L = this->cfg_.past_len;
  auto states = decode(input, encode(input, ctx), ctx);
  std::vector<std::size_t> last(d);
  for (std::size_t c = 0; c < d; ++c) last[c] = (L - 1) * d + c;
  return head_(nn::gather_columns(states, L * d, last));
}

template class SimpleTransformer<float>;
template class SimpleTransformer<double>;

}  // namespace rmx
