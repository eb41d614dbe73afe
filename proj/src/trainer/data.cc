#include "decsde/trainer/data.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "decsde/common/error.h"
#include "decsde/common/random.h"

namespace decsde::trainer {

namespace {

std::vector<std::vector<size_t>> chunk(const ParallelCorpus& c, std::vector<size_t> order, int64_t batch_tokens) {
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return c.pairs[a].tgt.size() < c.pairs[b].tgt.size();
  });
  std::vector<std::vector<size_t>> batches;
  std::vector<size_t> cur;
  int64_t longest = 0;
  for (size_t i : order) {
    const int64_t len = static_cast<int64_t>(c.pairs[i].tgt.size()) + 1;
    const int64_t next_longest = std::max(longest, len);
    if (!cur.empty() && next_longest * static_cast<int64_t>(cur.size() + 1) > batch_tokens) {
      batches.push_back(std::move(cur));
      cur.clear();
      longest = len;
    } else {
      longest = next_longest;
    }
    cur.push_back(i);
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

}  // namespace

std::vector<BatchRef> plan_epoch(std::span<const ParallelCorpus> corpora, int64_t batch_tokens, uint64_t seed,
                                 int64_t epoch, double temperature) {
  if (batch_tokens < 1) throw ConfigError("batch_tokens must be >= 1");
  if (!(temperature > 0)) throw ConfigError("sampling temperature must be positive");
  const uint64_t epoch_seed = mix_seed(seed, static_cast<uint64_t>(epoch));
  std::vector<std::vector<std::vector<size_t>>> per_corpus;
  size_t total = 0;
  for (size_t c = 0; c < corpora.size(); ++c) {
    Rng rng(mix_seed(epoch_seed, c));
    std::vector<size_t> order(corpora[c].pairs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order.begin(), order.end());
    auto batches = chunk(corpora[c], std::move(order), batch_tokens);
    rng.shuffle(batches.begin(), batches.end());
    total += batches.size();
    per_corpus.push_back(std::move(batches));
  }

  Rng pick(mix_seed(epoch_seed, 0x1f7e41eaULL));
  std::vector<BatchRef> plan;
  plan.reserve(total);
  std::vector<size_t> next(corpora.size(), 0);
  if (temperature == 1.0) {
    for (size_t left = total; left > 0; --left) {
      uint64_t u = pick.below(left);
      size_t c = 0;
      while (u >= per_corpus[c].size() - next[c]) {
        u -= per_corpus[c].size() - next[c];
        ++c;
      }
      plan.push_back({static_cast<int32_t>(c), per_corpus[c][next[c]++]});
    }
    return plan;
  }
  std::vector<double> weight(corpora.size(), 0.0);
  double sum = 0;
  for (size_t c = 0; c < corpora.size(); ++c) {
    if (!per_corpus[c].empty())
      weight[c] = std::pow(static_cast<double>(corpora[c].pairs.size()), 1.0 / temperature);
    sum += weight[c];
  }
  for (size_t i = 0; i < total; ++i) {
    double u = pick.uniform() * sum;
    size_t c = 0;
    while (c + 1 < corpora.size() && (weight[c] == 0 || u >= weight[c])) {
      u -= weight[c];
      ++c;
    }
    auto& list = per_corpus[c];
    plan.push_back({static_cast<int32_t>(c), list[next[c]++ % list.size()]});
  }
  return plan;
}

std::vector<BatchRef> plan_eval(std::span<const ParallelCorpus> corpora, int64_t batch_tokens) {
  if (batch_tokens < 1) throw ConfigError("batch_tokens must be >= 1");
  std::vector<BatchRef> plan;
  for (size_t c = 0; c < corpora.size(); ++c) {
    std::vector<size_t> order(corpora[c].pairs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (auto& rows : chunk(corpora[c], std::move(order), batch_tokens))
      plan.push_back({static_cast<int32_t>(c), std::move(rows)});
  }
  return plan;
}

}  // namespace decsde::trainer
