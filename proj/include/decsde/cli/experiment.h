#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "decsde/common/kv_config.h"
#include "decsde/nmt/config.h"
#include "decsde/nmt/decode.h"
#include "decsde/trainer/trainer.h"

namespace decsde::cli {

struct CorpusFiles {
  std::string lang;
  std::filesystem::path src;
  std::filesystem::path tgt;
};

enum class Precision { kFloat, kDouble };

// Everything one experiment needs, read from a flat key = value file. Keys:
//   languages = hrl lrl                    target languages, flag order
//   train.<lang>.src / .tgt, dev.<lang>.*, test.<lang>.*
//   work_dir, src_vocab, src_merges, tgt_vocab, tgt_merges, ngrams
//   vocab_size, src_vocab_size, n_max, ngram_min_count
//   embed_mode, tie_mode, dim, ffn_dim, heads, enc_layers, dec_layers,
//   dropout, max_len, latent_size, none_keeps_tanh, u, u.<lang>
//   lr_peak, warmup_steps, max_epochs, max_steps, label_smoothing,
//   batch_tokens, seed, sampling_temperature, adam_beta1, adam_beta2, adam_eps
//   beam, length_alpha, decode_max_len, precision (float | double)
//   include = other.cfg                    read first; this file's keys win
// Relative paths resolve against the directory of the file that sets them.
struct ExperimentConfig {
  KeyValueConfig raw;
  std::filesystem::path base_dir;

  std::vector<std::string> languages;
  std::vector<CorpusFiles> train, dev, test;

  std::filesystem::path work_dir;
  std::filesystem::path src_vocab, src_merges, tgt_vocab, tgt_merges, ngrams;

  int64_t vocab_size = 2000;
  int64_t src_vocab_size = 2000;
  int n_max = 4;
  int64_t ngram_min_count = 1;

  nmt::ModelConfig model;
  trainer::TrainConfig training;
  nmt::DecodeOptions decoding;
  Precision precision = Precision::kFloat;

  // Parses and validates; unknown keys are ConfigErrors, missing corpus files
  // DataErrors.
  static ExperimentConfig from(KeyValueConfig raw, const std::filesystem::path& base_dir);
  // overrides are applied on top of the file, in order.
  static ExperimentConfig load(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, std::string>>& overrides = {});

  const CorpusFiles* find(const std::vector<CorpusFiles>& set, const std::string& lang) const;
  std::filesystem::path checkpoint(const std::string& name) const { return work_dir / name; }
  bool uses_ngrams() const { return embedding::is_decsde(model.embed_mode); }
  bool word_level_target() const { return model.embed_mode == embedding::EmbedMode::kLookupWord; }
  // Normalized text of raw, stored in checkpoints.
  std::string to_string() const { return raw.to_string(); }
};

}  // namespace decsde::cli
