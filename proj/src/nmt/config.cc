#include "decsde/nmt/config.h"

#include <set>

#include "decsde/common/error.h"

namespace decsde::nmt {

TieMode parse_tie_mode(std::string_view name) {
  if (name == "two_way") return TieMode::kTwoWay;
  if (name == "three_way") return TieMode::kThreeWay;
  if (name == "none") return TieMode::kNone;
  throw ConfigError("unknown tie mode '" + std::string(name) + "'");
}

std::string tie_mode_name(TieMode mode) {
  switch (mode) {
    case TieMode::kTwoWay:
      return "two_way";
    case TieMode::kThreeWay:
      return "three_way";
    case TieMode::kNone:
      return "none";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (enc_layers < 1 || dec_layers < 1) fail("enc_layers and dec_layers must be >= 1");
  if (dim < 1 || heads < 1 || dim % heads != 0)
    fail("dim " + std::to_string(dim) + " must be divisible by heads " + std::to_string(heads));
  if (ffn_dim < 1) fail("ffn_dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (max_len < 3) fail("max_len must be >= 3");
  if (latent_size < 1) fail("latent_size must be >= 1");
  if (languages.empty()) fail("at least one target language is required");
  std::set<std::string> seen;
  for (const auto& l : languages) {
    if (!seen.insert(l.code).second) fail("target language '" + l.code + "' listed twice");
    if (l.rank < 0 || l.rank >= dim)
      fail("rank u for '" + l.code + "' must satisfy 0 <= u < d (" + std::to_string(dim) + ")");
  }
}

TieMode ModelConfig::effective_tie_mode() const {
  return embed_mode == embedding::EmbedMode::kDecSDENoTying ? TieMode::kNone : tie_mode;
}

}  // namespace decsde::nmt
