#pragma once

#include <vector>

#include "rmx/models/model.hpp"

namespace rmx {

/// Attention weights captured by one TsaLayer call.
template <typename T>
struct TsaTrace {
  nn::Tensor<T> time_weights;      // [G*D, h, S, S]
  nn::Tensor<T> sender_weights;    // [G*S, h, F, D]: routers gather from variates
  nn::Tensor<T> receiver_weights;  // [G*S, h, D, F]: variates read the routers
};

/// Two-stage attention over tokens [G, D, S, d]: self-attention across the
/// S segments of each variate, then per segment position F learnable routers
/// collect from the D variates and redistribute back to them.
template <typename T>
class TsaLayer {
 public:
  TsaLayer() = default;
  TsaLayer(nn::ParameterStore<T>& store, const std::string& name, const ModelConfig& cfg,
           std::size_t n_segments, nn::Rng& rng);

  nn::Var<T> operator()(const nn::Var<T>& x, const nn::ForwardContext& ctx,
                        TsaTrace<T>* trace = nullptr) const;

 private:
  nn::EncoderLayer<T> time_;
  nn::Var<T> routers_;  // [S, F, d]
  nn::LayerNorm<T> norm_dim_, norm_ffn_;
  nn::MultiHeadAttention<T> sender_, receiver_;
  nn::FeedForward<T> ffn_;
  double dropout_p_ = 0.0;
};

/// Segment-token model: every variate's context is cut into seg_len-frame
/// segments, each embedded as one token; TSA encoder layers mix them, and a
/// decoder of learnable per-variate queries attends to the encoded segments.
/// The first of the seg_len decoded frames of the counterpart's variates is
/// the prediction.
template <typename T>
class CrossSegmentTransformer : public MotionModel<T> {
 public:
  CrossSegmentTransformer(const ModelConfig& cfg, std::uint64_t seed);

  /// [B, D, S, seg_len] segment values, subject variates first.
  static nn::Tensor<T> segment_tokens(const ModelInput<T>& input, std::size_t seg_len);

  /// Encoded segment tokens [B, D, S, d_model]. `traces` (optional) gets
  /// one entry per encoder layer.
  nn::Var<T> encode(const ModelInput<T>& input, const nn::ForwardContext& ctx,
                    std::vector<TsaTrace<T>>* traces = nullptr) const;
  /// Decoded tokens [B, D, out_seg, d_model].
  nn::Var<T> decode(const nn::Var<T>& memory, std::size_t batch,
                    const nn::ForwardContext& ctx) const;
  /// Shape of the learnable decoder queries, [D, out_seg, d_model].
  nn::Shape decoder_query_shape() const { return dec_queries_->value.shape(); }

 protected:
  nn::Var<T> forward_impl(const ModelInput<T>& input,
                          const nn::ForwardContext& ctx) const override;

 private:
  struct DecoderBlock {
    TsaLayer<T> self_stage;
    nn::LayerNorm<T> norm_cross, norm_ffn, norm_out;
    nn::MultiHeadAttention<T> cross;
    nn::FeedForward<T> ffn;
  };

  nn::Linear<T> dsw_;
  nn::Var<T> enc_pos_;    // [D, S, d]
  nn::Var<T> person_id_;  // [2, d] or null
  std::vector<TsaLayer<T>> encoder_;
  nn::LayerNorm<T> enc_norm_;
  nn::Var<T> dec_queries_;  // [D, out_seg, d]
  std::vector<DecoderBlock> decoder_;
  nn::Linear<T> head_;
};

}  // namespace rmx
