#pragma once

#include <vector>

#include "rmx/models/model.hpp"

namespace rmx {

/// Each of the 102 variate series (51 per person) becomes one token; a
/// shared linear map embeds the 30-frame series, self-attention runs across
/// variates, and a shared head maps every token to one value. Outputs of the
/// counterpart's 51 variates form the prediction.
template <typename T>
class InvertedTransformer : public MotionModel<T> {
 public:
  InvertedTransformer(const ModelConfig& cfg, std::uint64_t seed);

  /// [B, 102, ctx_len] variate-major tokens: subject variates first.
  static nn::Tensor<T> variate_tokens(const ModelInput<T>& input);

  /// Runs the model on explicit tokens [B, D, ctx_len] with token `r` owned
  /// by person owner[r]; returns one value per token, [B, D].
  nn::Var<T> forward_tokens(const nn::Tensor<T>& tokens,
                            const std::vector<std::size_t>& owner,
                            const nn::ForwardContext& ctx) const;

 protected:
  nn::Var<T> forward_impl(const ModelInput<T>& input,
                          const nn::ForwardContext& ctx) const override;

 private:
  nn::Linear<T> embed_;
  nn::Var<T> person_id_;  // [2, d_model] or null
  std::vector<nn::EncoderLayer<T>> encoder_;
  nn::LayerNorm<T> norm_;
  nn::Linear<T> head_;
};

}  // namespace rmx
