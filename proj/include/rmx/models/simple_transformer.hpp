#pragma once

#include <vector>

#include "rmx/models/model.hpp"

namespace rmx {

/// Encoder over time steps of both persons' concatenated poses (102
/// features per step), decoder over the past window with causal
/// self-attention and cross-attention to the encoder; the final decoder
/// position is projected to the counterpart's next frame.
template <typename T>
class SimpleTransformer : public MotionModel<T> {
 public:
  SimpleTransformer(const ModelConfig& cfg, std::uint64_t seed);

  /// [B, ctx_len, d_model] encoder memory.
  nn::Var<T> encode(const ModelInput<T>& input, const nn::ForwardContext& ctx) const;
  /// [B, past_len, d_model] final-normalized decoder states.
  nn::Var<T> decode(const ModelInput<T>& input, const nn::Var<T>& memory,
                    const nn::ForwardContext& ctx) const;

 protected:
  nn::Var<T> forward_impl(const ModelInput<T>& input,
                          const nn::ForwardContext& ctx) const override;

 private:
  // Person vectors live in feature space: one 51-vector per person added to
  // that person's slice of every frame.
  nn::Var<T> embed_frames(const nn::Tensor<T>& frames, const nn::Linear<T>& proj,
                          const nn::Tensor<T>& positions, const nn::ForwardContext& ctx) const;

  nn::Linear<T> enc_in_, dec_in_;
  std::vector<nn::EncoderLayer<T>> encoder_;
  nn::LayerNorm<T> enc_norm_;
  std::vector<nn::DecoderLayer<T>> decoder_;
  nn::LayerNorm<T> dec_norm_;
  nn::Linear<T> head_;
  nn::Var<T> person_id_;  // [2, 51] or null
  nn::Tensor<T> pe_ctx_, pe_past_;
};

}  // namespace rmx
