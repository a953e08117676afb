#include "rmx/models/cross_segment.hpp"

#include "rmx/error.hpp"

namespace rmx {

template <typename T>
TsaLayer<T>::TsaLayer(nn::ParameterStore<T>& store, const std::string& name,
                      const ModelConfig& cfg, std::size_t n_segments, nn::Rng& rng)
    : dropout_p_(cfg.dropout) {
  const std::size_t d = cfg.d_model;
  time_ = nn::EncoderLayer<T>(store, name + ".time", d, cfg.n_heads, cfg.d_ffn, cfg.dropout, rng);
  routers_ = store.glorot(name + ".routers", {n_segments, cfg.n_routers, d}, rng);
  norm_dim_ = nn::LayerNorm<T>(store, name + ".norm_dim", d);
  sender_ = nn::MultiHeadAttention<T>(store, name + ".sender", d, cfg.n_heads, rng);
  receiver_ = nn::MultiHeadAttention<T>(store, name + ".receiver", d, cfg.n_heads, rng);
  norm_ffn_ = nn::LayerNorm<T>(store, name + ".norm_ffn", d);
  ffn_ = nn::FeedForward<T>(store, name + ".ffn", d, cfg.d_ffn, cfg.dropout, rng);
}

template <typename T>
nn::Var<T> TsaLayer<T>::operator()(const nn::Var<T>& x, const nn::ForwardContext& ctx,
                                   TsaTrace<T>* trace) const {
  const nn::Shape& s = x->value.shape();
  if (s.size() != 4 || s[2] != routers_->value.dim(0) || s[3] != routers_->value.dim(2)) {
    throw ShapeError("tsa input " + nn::shape_str(s));
  }
  const std::size_t G = s[0], D = s[1], S = s[2], d = s[3];
  const std::size_t F = routers_->value.dim(1);

  // Cross-time stage: each variate attends over its own segments.
  nn::Var<T> h = nn::reshape(x, {G * D, S, d});
  h = time_(h, ctx, false, trace ? &trace->time_weights : nullptr);

  // Cross-dimension stage, one router set per segment position.
  h = nn::swap_middle_axes(nn::reshape(h, {G, D, S, d}));
  h = nn::reshape(h, {G * S, D, d});
  nn::Var<T> routers = nn::reshape(nn::tile_leading(routers_, G), {G * S, F, d});
  nn::Var<T> normed = norm_dim_(h);
  nn::Var<T> buffer = sender_(routers, normed, false, trace ? &trace->sender_weights : nullptr);
  nn::Var<T> received =
      receiver_(normed, buffer, false, trace ? &trace->receiver_weights : nullptr);
  h = nn::add(h, nn::dropout(received, dropout_p_, ctx.dropout_rng()));
  h = nn::add(h, nn::dropout(ffn_(norm_ffn_(h), ctx), dropout_p_, ctx.dropout_rng()));
  return nn::swap_middle_axes(nn::reshape(h, {G, S, D, d}));
}

template <typename T>
CrossSegmentTransformer<T>::CrossSegmentTransformer(const ModelConfig& cfg, std::uint64_t seed)
    : MotionModel<T>(cfg) {
  if (cfg.arch != Architecture::kCrossSegment) throw ConfigError("not a cross-segment config");
  auto& store = this->params_;
  nn::Rng rng(seed);
  const std::size_t d = cfg.d_model;
  const std::size_t D = cfg.n_variates();
  const std::size_t S = cfg.n_segments();

  dsw_ = nn::Linear<T>(store, "dsw", cfg.seg_len, d, rng);
  enc_pos_ = store.glorot("encoder.position", {D, S, d}, rng);
  if (cfg.use_person_id) person_id_ = store.glorot(kPersonIdParam, {cfg.n_persons, d}, rng);
  for (std::size_t i = 0; i < cfg.n_encoder_layers; ++i) {
    encoder_.emplace_back(store, "encoder.layer" + std::to_string(i), cfg, S, rng);
  }
  enc_norm_ = nn::LayerNorm<T>(store, "encoder.norm", d);

  dec_queries_ = store.glorot("decoder.queries", {D, cfg.out_seg(), d}, rng);
  for (std::size_t i = 0; i < cfg.n_decoder_layers; ++i) {
    const std::string name = "decoder.layer" + std::to_string(i);
    DecoderBlock block;
    block.self_stage = TsaLayer<T>(store, name + ".self", cfg, cfg.out_seg(), rng);
    block.norm_cross = nn::LayerNorm<T>(store, name + ".norm_cross", d);
    block.cross = nn::MultiHeadAttention<T>(store, name + ".cross", d, cfg.n_heads, rng);
    block.norm_ffn = nn::LayerNorm<T>(store, name + ".norm_ffn", d);
    block.ffn = nn::FeedForward<T>(store, name + ".ffn", d, cfg.d_ffn, cfg.dropout, rng);
    block.norm_out = nn::LayerNorm<T>(store, name + ".norm_out", d);
    decoder_.push_back(std::move(block));
  }
  head_ = nn::Linear<T>(store, "head", d, cfg.seg_len, rng);
}

template <typename T>
nn::Tensor<T> CrossSegmentTransformer<T>::segment_tokens(const ModelInput<T>& input,
                                                         std::size_t seg_len) {
  const std::size_t B = input.batch;
  const std::size_t L = input.x_ctx.dim(1);
  const std::size_t F = input.x_ctx.dim(2);
  if (seg_len == 0 || L % seg_len != 0) {
    throw ShapeError("context length " + std::to_string(L) + " is not a multiple of seg_len " +
                     std::to_string(seg_len));
  }
  // Variate-major [B, D, L] is exactly [B, D, S, seg_len] in memory.
  nn::Tensor<T> out({B, 2 * F, L / seg_len, seg_len});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      const T* x = input.x_ctx.data() + (b * L + t) * F;
      const T* y = input.y_ctx.data() + (b * L + t) * F;
      for (std::size_t f = 0; f < F; ++f) {
        out.data()[(b * 2 * F + f) * L + t] = x[f];
        out.data()[(b * 2 * F + F + f) * L + t] = y[f];
      }
    }
  }
  return out;
}

template <typename T>
nn::Var<T> CrossSegmentTransformer<T>::encode(const ModelInput<T>& input,
                                              const nn::ForwardContext& ctx,
                                              std::vector<TsaTrace<T>>* traces) const {
  const auto& cfg = this->cfg_;
  nn::Var<T> x = dsw_(nn::constant(segment_tokens(input, cfg.seg_len)));
  x = nn::add_broadcast(x, enc_pos_);
  if (person_id_) x = apply_person_id(x, person_id_, variate_owners(cfg), cfg.n_segments());
  x = nn::dropout(x, cfg.dropout, ctx.dropout_rng());
  if (traces) traces->assign(encoder_.size(), {});
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    x = encoder_[i](x, ctx, traces ? &(*traces)[i] : nullptr);
  }
  return enc_norm_(x);
}

template <typename T>
nn::Var<T> CrossSegmentTransformer<T>::decode(const nn::Var<T>& memory, std::size_t batch,
                                              const nn::ForwardContext& ctx) const {
  const std::size_t D = dec_queries_->value.dim(0);
  const std::size_t O = dec_queries_->value.dim(1);
  const std::size_t d = dec_queries_->value.dim(2);
  const std::size_t S = memory->value.dim(2);
  const double p = this->cfg_.dropout;
  nn::Var<T> mem = nn::reshape(memory, {batch * D, S, d});
  nn::Var<T> x = nn::tile_leading(dec_queries_, batch);
  for (const auto& block : decoder_) {
    x = block.self_stage(x, ctx);
    // Each variate's queries read that variate's encoded segments.
    nn::Var<T> h = nn::reshape(x, {batch * D, O, d});
    h = nn::add(h, nn::dropout(block.cross(block.norm_cross(h), mem, false), p,
                               ctx.dropout_rng()));
    h = nn::add(h, nn::dropout(block.ffn(block.norm_ffn(h), ctx), p, ctx.dropout_rng()));
    x = nn::reshape(block.norm_out(h), {batch, D, O, d});
  }
  return x;
}

template <typename T>
nn::Var<T> CrossSegmentTransformer<T>::forward_impl(const ModelInput<T>& input,
                                                    const nn::ForwardContext& ctx) const {
  const auto& cfg = this->cfg_;
  const std::size_t D = cfg.n_variates();
  const std::size_t F = cfg.feats_per_person;
  const std::size_t per_variate = cfg.out_seg() * cfg.seg_len;
  nn::Var<T> frames = head_(decode(encode(input, ctx), input.batch, ctx));
  // First predicted frame of every counterpart variate.
  std::vector<std::size_t> idx(F);
  for (std::size_t f = 0; f < F; ++f) idx[f] = (F + f) * per_variate;
  return nn::gather_columns(frames, D * per_variate, idx);
}

template class TsaLayer<float>;
template class TsaLayer<double>;
template struct TsaTrace<float>;
template struct TsaTrace<double>;
template class CrossSegmentTransformer<float>;
template class CrossSegmentTransformer<double>;

}  // namespace rmx
