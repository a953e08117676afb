#include "rmx/models/config.hpp"

#include <cmath>

#include "rmx/error.hpp"
#include "rmx/skeleton.hpp"

namespace rmx {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kSimple:
      return "simple";
    case Architecture::kInverted:
      return "inverted";
    case Architecture::kCrossSegment:
      return "crossseg";
  }
  return "unknown";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "simple") return Architecture::kSimple;
  if (name == "inverted") return Architecture::kInverted;
  if (name == "crossseg") return Architecture::kCrossSegment;
  throw ConfigError("unknown architecture '" + name + "'");
}

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model must be a positive multiple of n_heads");
  }
  if (d_ffn == 0) throw ConfigError("d_ffn must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (activation != "gelu") throw ConfigError("only gelu activation is supported");
  if (n_encoder_layers == 0) throw ConfigError("need at least one encoder layer");
  if (arch != Architecture::kInverted && n_decoder_layers == 0) {
    throw ConfigError("need at least one decoder layer");
  }
  if (n_persons != kNumPersons || feats_per_person != kFeaturesPerPerson) {
    throw ConfigError("models take 2 persons x 17 joints x 3 coordinates");
  }
  if (ctx_len == 0 || past_len == 0 || past_len > ctx_len) {
    throw ConfigError("need 0 < past_len <= ctx_len");
  }
  if (arch == Architecture::kCrossSegment) {
    if (seg_len == 0 || ctx_len % seg_len != 0) {
      throw ConfigError("ctx_len " + std::to_string(ctx_len) +
                        " must be divisible by seg_len " + std::to_string(seg_len));
    }
    if (n_routers == 0) throw ConfigError("need at least one router");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"arch", to_string(c.arch)},
                     {"n_encoder_layers", c.n_encoder_layers},
                     {"n_decoder_layers", c.n_decoder_layers},
                     {"d_model", c.d_model},
                     {"n_heads", c.n_heads},
                     {"d_ffn", c.d_ffn},
                     {"dropout", c.dropout},
                     {"activation", c.activation},
                     {"use_person_id", c.use_person_id},
                     {"seg_len", c.seg_len},
                     {"n_routers", c.n_routers},
                     {"ctx_len", c.ctx_len},
                     {"past_len", c.past_len},
                     {"n_persons", c.n_persons},
                     {"feats_per_person", c.feats_per_person}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  try {
    c.arch = architecture_from_string(j.at("arch").get<std::string>());
    j.at("n_encoder_layers").get_to(c.n_encoder_layers);
    j.at("n_decoder_layers").get_to(c.n_decoder_layers);
    j.at("d_model").get_to(c.d_model);
    j.at("n_heads").get_to(c.n_heads);
    j.at("d_ffn").get_to(c.d_ffn);
    j.at("dropout").get_to(c.dropout);
    j.at("activation").get_to(c.activation);
    j.at("use_person_id").get_to(c.use_person_id);
    j.at("seg_len").get_to(c.seg_len);
    j.at("n_routers").get_to(c.n_routers);
    j.at("ctx_len").get_to(c.ctx_len);
    j.at("past_len").get_to(c.past_len);
    j.at("n_persons").get_to(c.n_persons);
    j.at("feats_per_person").get_to(c.feats_per_person);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

}  // namespace rmx
