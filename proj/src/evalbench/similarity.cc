#include "decsde/evalbench/similarity.h"

#include <cmath>
#include <map>

#include "decsde/common/error.h"
#include "decsde/common/utf8.h"

namespace decsde::evalbench {

int64_t edit_distance(std::string_view a, std::string_view b) {
  const auto x = utf8::split_chars(a);
  const auto y = utf8::split_chars(b);
  std::vector<int64_t> prev(y.size() + 1), cur(y.size() + 1);
  for (size_t j = 0; j <= y.size(); ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= x.size(); ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= y.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

std::vector<WordPair> extract_word_pairs(std::span<const std::string> hrl_words,
                                         std::span<const std::string> lrl_words, int64_t max_distance,
                                         int64_t cap_per_bucket) {
  if (max_distance < 1) throw ConfigError("max_distance must be >= 1");
  std::map<int64_t, int64_t> kept;
  std::vector<WordPair> pairs;
  for (const auto& l : lrl_words) {
    for (const auto& h : hrl_words) {
      const auto ld = static_cast<int64_t>(utf8::length(l));
      const auto hd = static_cast<int64_t>(utf8::length(h));
      if (std::abs(ld - hd) > max_distance) continue;
      const int64_t d = edit_distance(h, l);
      if (d < 1 || d > max_distance) continue;
      if (cap_per_bucket > 0 && kept[d] >= cap_per_bucket) continue;
      ++kept[d];
      pairs.push_back({h, l, d});
    }
  }
  return pairs;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / std::sqrt(na * nb);
}

template <typename T>
std::vector<double> reciprocal_ranks(const numkernel::Tensor<T>& queries, const numkernel::Tensor<T>& candidates,
                                     std::span<const int64_t> gold) {
  if (queries.cols() != candidates.cols()) throw DimensionError("reciprocal_ranks: embedding widths differ");
  if (static_cast<int64_t>(gold.size()) != queries.rows()) throw DimensionError("reciprocal_ranks: gold size");
  auto as_double = [](std::span<const T> r) { return std::vector<double>(r.begin(), r.end()); };
  std::vector<std::vector<double>> cand;
  for (int64_t c = 0; c < candidates.rows(); ++c) cand.push_back(as_double(candidates.row(c)));
  std::vector<double> rr;
  for (int64_t q = 0; q < queries.rows(); ++q) {
    const int64_t g = gold[static_cast<size_t>(q)];
    if (g < 0 || g >= candidates.rows()) throw IndexError("reciprocal_ranks: gold index out of range");
    const auto query = as_double(queries.row(q));
    const double target = cosine(query, cand[static_cast<size_t>(g)]);
    int64_t rank = 1;
    for (const auto& c : cand) rank += cosine(query, c) > target;
    rr.push_back(1.0 / static_cast<double>(rank));
  }
  return rr;
}

std::vector<MrrBucket> mrr_by_distance(std::span<const WordPair> pairs, std::span<const double> rr) {
  if (pairs.size() != rr.size()) throw DimensionError("mrr_by_distance: size mismatch");
  std::map<int64_t, std::pair<int64_t, double>> acc;
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto& [n, sum] = acc[pairs[i].distance];
    ++n;
    sum += rr[i];
  }
  std::vector<MrrBucket> out;
  for (const auto& [d, a] : acc) out.push_back({d, a.first, a.second / static_cast<double>(a.first)});
  return out;
}

std::vector<MrrGain> mrr_gain(std::span<const MrrBucket> model, std::span<const MrrBucket> baseline) {
  std::vector<MrrGain> out;
  for (const auto& m : model) {
    for (const auto& b : baseline) {
      if (b.distance == m.distance) out.push_back({m.distance, m.pairs, m.mrr, b.mrr, m.mrr - b.mrr});
    }
  }
  return out;
}

template std::vector<double> reciprocal_ranks(const numkernel::Tensor<float>&, const numkernel::Tensor<float>&,
                                              std::span<const int64_t>);
template std::vector<double> reciprocal_ranks(const numkernel::Tensor<double>&, const numkernel::Tensor<double>&,
                                              std::span<const int64_t>);

}  // namespace decsde::evalbench
