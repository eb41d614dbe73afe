#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "decsde/embedding/decsde.h"
#include "decsde/embedding/embedding.h"

namespace decsde::nmt {

enum class TieMode {
  kTwoWay,    // decoder input embedding == output projection
  kThreeWay,  // ... and the encoder lookup (needs a joint vocabulary)
  kNone,      // separate [V x d] output projection
};

TieMode parse_tie_mode(std::string_view name);  // two_way | three_way | none
std::string tie_mode_name(TieMode mode);

struct ModelConfig {
  int64_t enc_layers = 2;
  int64_t dec_layers = 2;
  int64_t heads = 4;
  int64_t dim = 64;
  int64_t ffn_dim = 128;
  double dropout = 0.3;
  embedding::EmbedMode embed_mode = embedding::EmbedMode::kDecSDE;
  TieMode tie_mode = TieMode::kTwoWay;
  int64_t max_len = 64;
  // Target embedding.
  int64_t latent_size = 512;
  bool none_keeps_tanh = false;
  std::vector<embedding::LanguageRank> languages;  // target languages, rank u each

  // Throws ConfigError on inconsistent values.
  void validate() const;
  // The tie mode actually used: decsde_no_tying forces none.
  TieMode effective_tie_mode() const;
};

}  // namespace decsde::nmt
