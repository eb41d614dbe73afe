#include "decsde/evalbench/rare_words.h"

#include <bit>
#include <map>

#include "decsde/common/error.h"
#include "decsde/common/utf8.h"

namespace decsde::evalbench {

namespace {

size_t bucket_of(int64_t freq) {
  if (freq <= 0) return 0;
  return static_cast<size_t>(std::bit_width(static_cast<uint64_t>(freq)));
}

std::map<std::string, int64_t> bag(const std::string& line) {
  std::map<std::string, int64_t> b;
  for (auto& w : utf8::split_words(line)) ++b[w];
  return b;
}

}  // namespace

WordFrequencies word_frequencies(std::span<const std::string> corpus) {
  WordFrequencies f;
  for (const auto& line : corpus)
    for (auto& w : utf8::split_words(line)) ++f[w];
  return f;
}

std::vector<F1Bucket> rare_word_f1(std::span<const std::string> hyps, std::span<const std::string> refs,
                                   const WordFrequencies& train_freq) {
  if (hyps.size() != refs.size()) throw DataError("rare_word_f1: hypothesis/reference count mismatch");
  std::vector<F1Bucket> buckets;
  auto at = [&](const std::string& w) -> F1Bucket& {
    auto it = train_freq.find(w);
    const size_t b = bucket_of(it == train_freq.end() ? 0 : it->second);
    while (buckets.size() <= b) {
      const size_t k = buckets.size();
      const int64_t lo = k == 0 ? 0 : int64_t{1} << (k - 1);
      buckets.push_back({lo, k == 0 ? 1 : lo * 2});
    }
    return buckets[b];
  };
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto h = bag(hyps[i]);
    const auto r = bag(refs[i]);
    for (const auto& [w, c] : h) at(w).hyp_words += c;
    for (const auto& [w, c] : r) {
      auto& b = at(w);
      b.ref_words += c;
      auto it = h.find(w);
      if (it != h.end()) b.matches += std::min(c, it->second);
    }
  }
  std::vector<F1Bucket> out;
  for (auto& b : buckets) {
    if (b.ref_words == 0 && b.hyp_words == 0) continue;
    b.precision = b.hyp_words ? static_cast<double>(b.matches) / static_cast<double>(b.hyp_words) : 0.0;
    b.recall = b.ref_words ? static_cast<double>(b.matches) / static_cast<double>(b.ref_words) : 0.0;
    b.f1 = b.precision + b.recall > 0 ? 2 * b.precision * b.recall / (b.precision + b.recall) : 0.0;
    out.push_back(b);
  }
  return out;
}

}  // namespace decsde::evalbench
