#include "decsde/nmt/batch.h"

#include <algorithm>

#include "decsde/common/error.h"
#include "decsde/segmenter/vocab.h"

namespace decsde::nmt {

using segmenter::SubwordVocab;

int64_t Batch::target_tokens() const {
  return std::count(tgt_valid.begin(), tgt_valid.end(), uint8_t{1});
}

Batch make_batch(std::span<const SentencePair* const> pairs, const embedding::LanguageId& lang, int32_t src_flag,
                 int64_t max_len) {
  if (pairs.empty()) throw ContractError("make_batch: empty batch");
  Batch b;
  b.size = static_cast<int64_t>(pairs.size());
  b.lang = lang;
  const auto src_keep = static_cast<size_t>(max_len - 2);
  const auto tgt_keep = static_cast<size_t>(max_len - 1);
  for (const auto* p : pairs) {
    b.src_len = std::max<int64_t>(b.src_len, static_cast<int64_t>(std::min(p->src.size(), src_keep)) + 2);
    b.tgt_len = std::max<int64_t>(b.tgt_len, static_cast<int64_t>(std::min(p->tgt.size(), tgt_keep)) + 1);
  }
  b.src.assign(static_cast<size_t>(b.size * b.src_len), SubwordVocab::kPadId);
  b.src_valid.assign(b.src.size(), 0);
  b.tgt_in.assign(static_cast<size_t>(b.size * b.tgt_len), SubwordVocab::kPadId);
  b.tgt_out.assign(b.tgt_in.size(), SubwordVocab::kPadId);
  b.tgt_valid.assign(b.tgt_in.size(), 0);
  for (int64_t r = 0; r < b.size; ++r) {
    const auto& p = *pairs[static_cast<size_t>(r)];
    const size_t ns = std::min(p.src.size(), src_keep);
    const size_t nt = std::min(p.tgt.size(), tgt_keep);
    int64_t* src = b.src.data() + r * b.src_len;
    src[0] = src_flag;
    for (size_t i = 0; i < ns; ++i) src[i + 1] = p.src[i];
    src[ns + 1] = SubwordVocab::kEosId;
    std::fill_n(b.src_valid.begin() + r * b.src_len, ns + 2, uint8_t{1});

    int64_t* tin = b.tgt_in.data() + r * b.tgt_len;
    int64_t* tout = b.tgt_out.data() + r * b.tgt_len;
    tin[0] = SubwordVocab::kBosId;
    for (size_t i = 0; i < nt; ++i) {
      tin[i + 1] = p.tgt[i];
      tout[i] = p.tgt[i];
    }
    tout[nt] = SubwordVocab::kEosId;
    std::fill_n(b.tgt_valid.begin() + r * b.tgt_len, nt + 1, uint8_t{1});
  }
  return b;
}

Batch make_batch(std::span<const SentencePair> pairs, const embedding::LanguageId& lang, int32_t src_flag,
                 int64_t max_len) {
  std::vector<const SentencePair*> ptrs;
  for (const auto& p : pairs) ptrs.push_back(&p);
  return make_batch(std::span<const SentencePair* const>(ptrs), lang, src_flag, max_len);
}

}  // namespace decsde::nmt
