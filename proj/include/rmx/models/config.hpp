#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

namespace rmx {

enum class Architecture { kSimple, kInverted, kCrossSegment };

/// "simple" | "inverted" | "crossseg".
std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct ModelConfig {
  Architecture arch = Architecture::kSimple;
  std::size_t n_encoder_layers = 2;
  std::size_t n_decoder_layers = 1;
  std::size_t d_model = 512;
  std::size_t n_heads = 8;
  std::size_t d_ffn = 2048;
  double dropout = 0.1;
  std::string activation = "gelu";
  bool use_person_id = false;
  std::size_t seg_len = 5;     // CrossSegment only
  std::size_t n_routers = 30;  // CrossSegment only
  std::size_t ctx_len = 30;
  std::size_t past_len = 10;
  std::size_t n_persons = 2;
  std::size_t feats_per_person = 51;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  std::size_t n_variates() const { return n_persons * feats_per_person; }
  std::size_t n_segments() const { return ctx_len / seg_len; }
  /// Decoder segments needed to cover a one-frame prediction.
  std::size_t out_seg() const { return (1 + seg_len - 1) / seg_len; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace rmx
