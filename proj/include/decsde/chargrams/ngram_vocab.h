#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "decsde/numkernel/sparse_matrix.h"
#include "decsde/segmenter/vocab.h"

namespace decsde::chargrams {

inline constexpr int kMaxNgramOrder = 8;

// Every contiguous run of 1..min(n_max, len) unicode scalars in token, with
// multiplicity. The boundary marker is an ordinary character here.
std::map<std::string, int64_t> extract_ngrams(std::string_view token, int n_max);

// Character n-gram inventory. Ids are dense and follow (count desc, gram asc).
class NGramVocab {
 public:
  NGramVocab() = default;
  NGramVocab(std::vector<std::pair<std::string, int64_t>> grams, int n_max, int64_t min_count);

  int64_t size() const { return static_cast<int64_t>(grams_.size()); }
  int n_max() const { return n_max_; }
  int64_t min_count() const { return min_count_; }
  const std::string& gram(int64_t id) const { return grams_.at(static_cast<size_t>(id)); }
  int64_t count(int64_t id) const { return counts_.at(static_cast<size_t>(id)); }
  // -1 when absent.
  int64_t find(std::string_view gram) const;

  // TSV rows "gram<TAB>id<TAB>count". On load, n_max is the longest gram and
  // min_count the smallest count in the file.
  void save(const std::filesystem::path& path) const;
  static NGramVocab load(const std::filesystem::path& path);

  friend bool operator==(const NGramVocab& a, const NGramVocab& b) {
    return a.grams_ == b.grams_ && a.counts_ == b.counts_ && a.n_max_ == b.n_max_;
  }

 private:
  std::vector<std::string> grams_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int64_t> ids_;
  int n_max_ = 0;
  int64_t min_count_ = 1;
};

// Union of extract_ngrams over the non-special tokens of v. A gram's count is
// its total occurrences across those tokens; grams below min_count are dropped.
NGramVocab build_ngram_vocab(const segmenter::SubwordVocab& v, int n_max, int64_t min_count = 1);

// Sparse bag-of-n-grams counts of one token, sorted by gram id. Grams outside
// the inventory are dropped.
struct BoNVector {
  std::vector<std::pair<int64_t, int64_t>> entries;  // (gram id, count)
  int64_t total() const;
  friend bool operator==(const BoNVector&, const BoNVector&) = default;
};

BoNVector bon_vector(std::string_view token, const NGramVocab& ngv);

// One row per vocabulary id; special-token rows are empty.
numkernel::SparseMatrix bon_matrix(const segmenter::SubwordVocab& v, const NGramVocab& ngv);

}  // namespace decsde::chargrams
