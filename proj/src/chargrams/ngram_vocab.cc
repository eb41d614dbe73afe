#include "decsde/chargrams/ngram_vocab.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "decsde/common/error.h"
#include "decsde/common/parse.h"
#include "decsde/common/utf8.h"

namespace decsde::chargrams {

std::map<std::string, int64_t> extract_ngrams(std::string_view token, int n_max) {
  if (n_max < 1) throw ContractError("n_max must be >= 1");
  std::map<std::string, int64_t> grams;
  const auto chars = utf8::split_chars(token);
  for (size_t i = 0; i < chars.size(); ++i) {
    std::string gram;
    for (size_t len = 1; len <= static_cast<size_t>(n_max) && i + len <= chars.size(); ++len) {
      gram += chars[i + len - 1];
      ++grams[gram];
    }
  }
  return grams;
}

NGramVocab::NGramVocab(std::vector<std::pair<std::string, int64_t>> grams, int n_max, int64_t min_count)
    : n_max_(n_max), min_count_(min_count) {
  std::sort(grams.begin(), grams.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (auto& [g, c] : grams) {
    if (g.empty()) throw ContractError("empty n-gram");
    if (!ids_.emplace(g, size()).second) throw ContractError("duplicate n-gram '" + g + "'");
    grams_.push_back(std::move(g));
    counts_.push_back(c);
  }
}

int64_t NGramVocab::find(std::string_view gram) const {
  auto it = ids_.find(std::string(gram));
  return it == ids_.end() ? -1 : it->second;
}

void NGramVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write n-gram vocabulary " + path.string());
  for (size_t i = 0; i < grams_.size(); ++i) out << grams_[i] << '\t' << i << '\t' << counts_[i] << '\n';
}

NGramVocab NGramVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read n-gram vocabulary " + path.string());
  std::vector<std::pair<std::string, int64_t>> grams;
  int n_max = 0;
  int64_t min_count = 0;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    std::istringstream fields(line);
    std::string gram, id_text, count_text;
    if (!std::getline(fields, gram, '\t') || !std::getline(fields, id_text, '\t') || !std::getline(fields, count_text))
      throw DataError(where + ": expected gram<TAB>id<TAB>count");
    if (parse_int64(id_text, where) != static_cast<int64_t>(grams.size()))
      throw DataError(where + ": ids must be dense and ordered");
    const int64_t count = parse_int64(count_text, where);
    if (count < 1) throw DataError(where + ": count must be positive");
    const auto len = static_cast<int>(utf8::length(gram));
    if (len < 1 || len > kMaxNgramOrder) throw DataError(where + ": gram length out of range");
    n_max = std::max(n_max, len);
    min_count = grams.empty() ? count : std::min(min_count, count);
    grams.emplace_back(std::move(gram), count);
  }
  if (grams.empty()) throw DataError(path.string() + ": empty n-gram vocabulary");
  NGramVocab v(grams, n_max, min_count);
  for (int64_t i = 0; i < v.size(); ++i) {
    if (v.gram(i) != grams[static_cast<size_t>(i)].first)
      throw DataError(path.string() + ": rows are not in (count desc, gram asc) order");
  }
  return v;
}

NGramVocab build_ngram_vocab(const segmenter::SubwordVocab& v, int n_max, int64_t min_count) {
  if (n_max < 1 || n_max > kMaxNgramOrder)
    throw ConfigError("n_max must be in [1, " + std::to_string(kMaxNgramOrder) + "], got " + std::to_string(n_max));
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, int64_t> totals;
  for (int32_t id = v.num_specials(); id < v.size(); ++id) {
    for (const auto& [g, c] : extract_ngrams(v.token(id), n_max)) totals[g] += c;
  }
  std::vector<std::pair<std::string, int64_t>> kept;
  for (auto& [g, c] : totals)
    if (c >= min_count) kept.emplace_back(g, c);
  return NGramVocab(std::move(kept), n_max, min_count);
}

int64_t BoNVector::total() const {
  int64_t t = 0;
  for (const auto& e : entries) t += e.second;
  return t;
}

BoNVector bon_vector(std::string_view token, const NGramVocab& ngv) {
  BoNVector bon;
  if (ngv.n_max() < 1) return bon;
  for (const auto& [g, c] : extract_ngrams(token, ngv.n_max())) {
    const int64_t id = ngv.find(g);
    if (id >= 0) bon.entries.emplace_back(id, c);
  }
  std::sort(bon.entries.begin(), bon.entries.end());
  return bon;
}

numkernel::SparseMatrix bon_matrix(const segmenter::SubwordVocab& v, const NGramVocab& ngv) {
  std::vector<numkernel::SparseEntry> entries;
  for (int32_t id = v.num_specials(); id < v.size(); ++id) {
    for (const auto& [g, c] : bon_vector(v.token(id), ngv).entries)
      entries.push_back({id, g, static_cast<double>(c)});
  }
  return numkernel::SparseMatrix::from_entries(v.size(), ngv.size(), std::move(entries));
}

}  // namespace decsde::chargrams
