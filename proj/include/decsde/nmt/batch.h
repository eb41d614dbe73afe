#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decsde/embedding/embedding.h"

namespace decsde::nmt {

struct SentencePair {
  std::vector<int32_t> src;
  std::vector<int32_t> tgt;
};

// Padded single-language batch, row-major [batch x len] id matrices.
//   src     = <2lang> tokens </s> <pad>...
//   tgt_in  = <s> tokens <pad>...
//   tgt_out = tokens </s> <pad>...
struct Batch {
  int64_t size = 0;
  int64_t src_len = 0;
  int64_t tgt_len = 0;
  std::vector<int64_t> src;
  std::vector<int64_t> tgt_in;
  std::vector<int64_t> tgt_out;
  std::vector<uint8_t> src_valid;
  std::vector<uint8_t> tgt_valid;
  embedding::LanguageId lang;

  int64_t target_tokens() const;
};

// Sources longer than max_len - 2 and targets longer than max_len - 1 are
// truncated. src_flag is the source-vocabulary id of the language flag.
Batch make_batch(std::span<const SentencePair* const> pairs, const embedding::LanguageId& lang, int32_t src_flag,
                 int64_t max_len);
Batch make_batch(std::span<const SentencePair> pairs, const embedding::LanguageId& lang, int32_t src_flag,
                 int64_t max_len);

}  // namespace decsde::nmt
