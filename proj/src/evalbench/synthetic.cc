#include "decsde/evalbench/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "decsde/common/error.h"
#include "decsde/common/random.h"
#include "decsde/common/utf8.h"
#include "decsde/evalbench/similarity.h"

namespace decsde::evalbench {

namespace {

struct Accent {
  char plain;
  const char* marked;
};

constexpr Accent kAccents[] = {{'a', "á"}, {'e', "é"}, {'i', "í"}, {'o', "ó"}, {'u', "ü"},
                               {'n', "ñ"}, {'c', "ç"}, {'s', "ş"}, {'g', "ğ"}};

const char* accent_of(char c) {
  for (const auto& a : kAccents)
    if (a.plain == c) return a.marked;
  return nullptr;
}

std::string make_word(Rng& rng, const std::string& onsets, const std::string& vowels, int64_t min_syl,
                      int64_t max_syl) {
  const int64_t syllables = min_syl + static_cast<int64_t>(rng.below(static_cast<uint64_t>(max_syl - min_syl + 1)));
  std::string w;
  for (int64_t s = 0; s < syllables; ++s) {
    w.push_back(onsets[rng.below(onsets.size())]);
    w.push_back(vowels[rng.below(vowels.size())]);
  }
  return w;
}

std::vector<std::string> make_lexicon(Rng& rng, int64_t n, const std::string& onsets, const std::string& vowels,
                                      int64_t min_syl, int64_t max_syl) {
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (static_cast<int64_t>(words.size()) < n) {
    auto w = make_word(rng, onsets, vowels, min_syl, max_syl);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Substitutes `edits` distinct positions with accented forms. The marked
// characters never occur in HRL words, so the edit distance equals `edits`.
std::string corrupt(Rng& rng, const std::string& word, int64_t edits) {
  std::vector<size_t> positions;
  for (size_t i = 0; i < word.size(); ++i)
    if (accent_of(word[i]) != nullptr) positions.push_back(i);
  if (static_cast<int64_t>(positions.size()) < edits) throw ContractError("word has too few substitutable letters");
  rng.shuffle(positions.begin(), positions.end());
  positions.resize(static_cast<size_t>(edits));
  std::sort(positions.begin(), positions.end());
  std::string out;
  size_t next = 0;
  for (size_t i = 0; i < word.size(); ++i) {
    if (next < positions.size() && positions[next] == i) {
      out += accent_of(word[i]);
      ++next;
    } else {
      out.push_back(word[i]);
    }
  }
  return out;
}

class ZipfSampler {
 public:
  ZipfSampler(int64_t n, double exponent) {
    double total = 0;
    for (int64_t r = 0; r < n; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
      cdf_.push_back(total);
    }
    for (auto& c : cdf_) c /= total;
  }
  size_t operator()(Rng& rng) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), rng.uniform());
    return std::min(static_cast<size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s.push_back(' ');
    s += w;
  }
  return s;
}

// Target order moves the first source word to the end.
ParallelText sample_text(Rng& rng, const SyntheticConfig& cfg, const ZipfSampler& zipf, int64_t n,
                         const std::vector<std::string>& src_lex, const std::vector<std::string>& tgt_lex) {
  ParallelText text;
  for (int64_t i = 0; i < n; ++i) {
    const int64_t len =
        cfg.min_words + static_cast<int64_t>(rng.below(static_cast<uint64_t>(cfg.max_words - cfg.min_words + 1)));
    std::vector<size_t> roots;
    for (int64_t k = 0; k < len; ++k) roots.push_back(zipf(rng));
    std::vector<std::string> s, t;
    for (size_t r : roots) s.push_back(src_lex[r]);
    for (size_t k = 1; k < roots.size(); ++k) t.push_back(tgt_lex[roots[k]]);
    t.push_back(tgt_lex[roots[0]]);
    text.src.push_back(join(s));
    text.tgt.push_back(join(t));
  }
  return text;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

void SyntheticConfig::validate() const {
  if (root_vocab_size < 2) throw ConfigError("root_vocab_size must be >= 2");
  if (corruption_rate < 0 || corruption_rate > 2) throw ConfigError("corruption_rate must be in [0, 2]");
  if (hrl_pairs < 1 || lrl_pairs < 1) throw ConfigError("corpus sizes must be positive");
  const double ratio = static_cast<double>(lrl_pairs) / static_cast<double>(hrl_pairs);
  if (ratio < 0.05 || ratio > 0.10) throw ConfigError("lrl_pairs must be 5-10% of hrl_pairs");
  if (dev_pairs < 0 || test_pairs < 0) throw ConfigError("dev/test sizes must be non-negative");
  if (min_words < 1 || max_words < min_words) throw ConfigError("need 1 <= min_words <= max_words");
  if (!(zipf_exponent >= 0)) throw ConfigError("zipf_exponent must be >= 0");
}

SyntheticPair make_synthetic_pair(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 0x5e7));
  SyntheticPair p;
  p.source_words = make_lexicon(rng, cfg.root_vocab_size, "bdfhklmprtvwyz", "aeiouy", 1, 3);
  // Two or three syllables guarantee two vowels, enough for two substitutions.
  p.hrl_words = make_lexicon(rng, cfg.root_vocab_size, "bcdgklmnprst", "aeiou", 2, 3);

  const auto n = static_cast<size_t>(cfg.root_vocab_size);
  const double base = std::floor(cfg.corruption_rate);
  const auto extra = static_cast<size_t>(std::llround((cfg.corruption_rate - base) * static_cast<double>(n)));
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  std::vector<int64_t> edits(n, static_cast<int64_t>(base));
  for (size_t k = 0; k < extra; ++k) ++edits[order[k]];
  for (size_t i = 0; i < n; ++i) p.lrl_words.push_back(corrupt(rng, p.hrl_words[i], edits[i]));

  const ZipfSampler zipf(cfg.root_vocab_size, cfg.zipf_exponent);
  p.hrl_train = sample_text(rng, cfg, zipf, cfg.hrl_pairs, p.source_words, p.hrl_words);
  p.hrl_dev = sample_text(rng, cfg, zipf, cfg.dev_pairs, p.source_words, p.hrl_words);
  p.lrl_train = sample_text(rng, cfg, zipf, cfg.lrl_pairs, p.source_words, p.lrl_words);
  p.lrl_dev = sample_text(rng, cfg, zipf, cfg.dev_pairs, p.source_words, p.lrl_words);
  p.lrl_test = sample_text(rng, cfg, zipf, cfg.test_pairs, p.source_words, p.lrl_words);
  return p;
}

double mean_lexicon_distance(const SyntheticPair& pair) {
  if (pair.hrl_words.empty()) return 0;
  double total = 0;
  for (size_t i = 0; i < pair.hrl_words.size(); ++i)
    total += static_cast<double>(edit_distance(pair.hrl_words[i], pair.lrl_words[i]));
  return total / static_cast<double>(pair.hrl_words.size());
}

void write_synthetic_pair(const SyntheticPair& pair, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto emit = [&](const std::string& stem, const ParallelText& t) {
    write_lines(dir / (stem + ".src"), t.src);
    write_lines(dir / (stem + ".tgt"), t.tgt);
  };
  emit("hrl.train", pair.hrl_train);
  emit("hrl.dev", pair.hrl_dev);
  emit("lrl.train", pair.lrl_train);
  emit("lrl.dev", pair.lrl_dev);
  emit("lrl.test", pair.lrl_test);
  std::ofstream lex(dir / "lexicon.tsv", std::ios::binary);
  if (!lex) throw DataError("cannot write " + (dir / "lexicon.tsv").string());
  for (size_t i = 0; i < pair.hrl_words.size(); ++i)
    lex << pair.source_words[i] << '\t' << pair.hrl_words[i] << '\t' << pair.lrl_words[i] << '\n';
}

}  // namespace decsde::evalbench
