#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "decsde/chargrams/ngram_vocab.h"
#include "decsde/common/error.h"
#include "decsde/common/random.h"
#include "decsde/common/utf8.h"

using namespace decsde;
using namespace decsde::chargrams;
using segmenter::SubwordVocab;

namespace {

const std::vector<std::string> kLangs = {"xx"};

// Brute force over byte offsets: a substring is a gram when both ends sit on
// code point boundaries (not a UTF-8 continuation byte).
std::map<std::string, int64_t> oracle_ngrams(const std::string& token, int n_max) {
  std::vector<size_t> starts;
  for (size_t i = 0; i < token.size(); ++i)
    if ((static_cast<unsigned char>(token[i]) & 0xC0) != 0x80) starts.push_back(i);
  starts.push_back(token.size());
  std::map<std::string, int64_t> out;
  for (size_t a = 0; a + 1 < starts.size(); ++a)
    for (size_t b = a + 1; b < starts.size() && b - a <= static_cast<size_t>(n_max); ++b)
      ++out[token.substr(starts[a], starts[b] - starts[a])];
  return out;
}

SubwordVocab vocab_of(const std::vector<std::string>& tokens) {
  SubwordVocab v(kLangs);
  for (const auto& t : tokens) v.add(t, 1);
  return v;
}

std::string random_token(Rng& rng) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", "é", "ñ", "\xe2\x96\x81"};
  std::string t;
  const int len = 1 + static_cast<int>(rng.below(7));
  for (int i = 0; i < len; ++i) t += alphabet[rng.below(alphabet.size())];
  return t;
}

int64_t total(const std::map<std::string, int64_t>& m) {
  int64_t t = 0;
  for (const auto& [g, c] : m) t += c;
  return t;
}

}  // namespace

TEST(ExtractNgrams, SmallCases) {
  EXPECT_EQ(extract_ngrams("ab", 2), (std::map<std::string, int64_t>{{"a", 1}, {"b", 1}, {"ab", 1}}));
  EXPECT_EQ(extract_ngrams("aaa", 1), (std::map<std::string, int64_t>{{"a", 3}}));
  EXPECT_TRUE(extract_ngrams("", 4).empty());
  EXPECT_THROW(extract_ngrams("a", 0), ContractError);
}

TEST(ExtractNgrams, MultibyteCharactersAreSingleSymbols) {
  const std::string token = "\xe2\x96\x81olá";
  auto grams = extract_ngrams(token, 3);
  EXPECT_EQ(grams, oracle_ngrams(token, 3));
  // 4 symbols: 4 unigrams + 3 bigrams + 2 trigrams
  EXPECT_EQ(total(grams), 9);
  EXPECT_EQ(grams.count("lá"), 1u);
  EXPECT_EQ(grams.count("\xe2\x96\x81o"), 1u);
}

TEST(ExtractNgrams, MatchesBruteForceOracle) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto t = random_token(rng);
    const int n = 1 + static_cast<int>(rng.below(kMaxNgramOrder));
    EXPECT_EQ(extract_ngrams(t, n), oracle_ngrams(t, n)) << t << " n=" << n;
  }
}

TEST(BuildNgramVocab, Examples) {
  auto ngv = build_ngram_vocab(vocab_of({"ab"}), 2, 1);
  ASSERT_EQ(ngv.size(), 3);
  std::set<std::string> got = {ngv.gram(0), ngv.gram(1), ngv.gram(2)};
  EXPECT_EQ(got, (std::set<std::string>{"a", "b", "ab"}));

  auto pruned = build_ngram_vocab(vocab_of({"ab", "ac"}), 2, 2);
  ASSERT_EQ(pruned.size(), 1);
  EXPECT_EQ(pruned.gram(0), "a");
}

TEST(BuildNgramVocab, SpecialTokensContributeNothing) {
  auto ngv = build_ngram_vocab(SubwordVocab(kLangs), 4, 1);
  EXPECT_EQ(ngv.size(), 0);
}

TEST(BuildNgramVocab, RejectsBadOrder) {
  EXPECT_THROW(build_ngram_vocab(vocab_of({"a"}), 0, 1), ConfigError);
  EXPECT_THROW(build_ngram_vocab(vocab_of({"a"}), 9, 1), ConfigError);
  EXPECT_THROW(build_ngram_vocab(vocab_of({"a"}), 2, 0), ConfigError);
}

TEST(BuildNgramVocab, MatchesSetUnionOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::set<std::string> tokens;
    while (tokens.size() < 30) tokens.insert(random_token(rng));
    const auto v = vocab_of({tokens.begin(), tokens.end()});
    const int n = 1 + static_cast<int>(rng.below(5));
    const int64_t min_count = 1 + static_cast<int64_t>(rng.below(3));
    std::map<std::string, int64_t> totals;
    for (const auto& t : tokens)
      for (const auto& [g, c] : oracle_ngrams(t, n)) totals[g] += c;

    const auto ngv = build_ngram_vocab(v, n, min_count);
    std::map<std::string, int64_t> got;
    for (int64_t id = 0; id < ngv.size(); ++id) {
      got[ngv.gram(id)] = ngv.count(id);
      EXPECT_EQ(ngv.find(ngv.gram(id)), id);
      const auto len = static_cast<int>(utf8::length(ngv.gram(id)));
      EXPECT_GE(len, 1);
      EXPECT_LE(len, n);
      if (id > 0) {
        EXPECT_TRUE(ngv.count(id - 1) > ngv.count(id) ||
                    (ngv.count(id - 1) == ngv.count(id) && ngv.gram(id - 1) < ngv.gram(id)));
      }
    }
    std::erase_if(totals, [&](const auto& kv) { return kv.second < min_count; });
    EXPECT_EQ(got, totals);
    EXPECT_EQ(build_ngram_vocab(v, n, min_count), ngv);
  }
}

TEST(BonVector, Examples) {
  NGramVocab ngv({{"a", 3}, {"b", 2}, {"ab", 1}}, 2, 1);
  ASSERT_EQ(ngv.find("a"), 0);
  ASSERT_EQ(ngv.find("ab"), 2);
  using E = std::vector<std::pair<int64_t, int64_t>>;
  EXPECT_EQ(bon_vector("ab", ngv).entries, (E{{0, 1}, {1, 1}, {2, 1}}));
  EXPECT_TRUE(bon_vector("cc", ngv).entries.empty());
  EXPECT_EQ(bon_vector("aab", ngv).entries, (E{{0, 2}, {1, 1}, {2, 1}}));
}

TEST(BonVector, CountBoundAndMatrixConsistency) {
  Rng rng(23);
  std::set<std::string> tokens;
  while (tokens.size() < 60) tokens.insert(random_token(rng));
  const auto v = vocab_of({tokens.begin(), tokens.end()});
  for (int64_t min_count : {1, 3}) {
    const auto ngv = build_ngram_vocab(v, 4, min_count);
    const auto m = bon_matrix(v, ngv);
    ASSERT_EQ(m.rows(), v.size());
    ASSERT_EQ(m.cols(), ngv.size());
    for (int32_t id = 0; id < v.size(); ++id) {
      if (v.is_special(id)) {
        EXPECT_TRUE(m.row_cols(id).empty());
        continue;
      }
      const auto bon = bon_vector(v.token(id), ngv);
      const auto cols = m.row_cols(id);
      const auto weights = m.row_weights(id);
      ASSERT_EQ(cols.size(), bon.entries.size());
      for (size_t k = 0; k < cols.size(); ++k) {
        EXPECT_EQ(cols[k], bon.entries[k].first);
        EXPECT_EQ(weights[k], static_cast<double>(bon.entries[k].second));
        EXPECT_GE(bon.entries[k].second, 1);
        if (k > 0) {
          EXPECT_LT(bon.entries[k - 1].first, bon.entries[k].first);
        }
      }
      const int64_t substrings = total(oracle_ngrams(v.token(id), 4));
      if (min_count == 1) {
        EXPECT_EQ(bon.total(), substrings);
      } else {
        EXPECT_LE(bon.total(), substrings);
      }
    }
  }
}

TEST(NgramFiles, SaveLoadRoundTrip) {
  const auto v = vocab_of({"\xe2\x96\x81olá", "\xe2\x96\x81ola", "abc"});
  const auto ngv = build_ngram_vocab(v, 3, 1);
  auto dir = std::filesystem::temp_directory_path() / "decsde_chargrams_test";
  std::filesystem::create_directories(dir);
  ngv.save(dir / "ngrams.tsv");
  const auto loaded = NGramVocab::load(dir / "ngrams.tsv");
  EXPECT_EQ(loaded, ngv);
  EXPECT_EQ(loaded.n_max(), 3);
  EXPECT_THROW(NGramVocab::load(dir / "missing.tsv"), DataError);
  {
    std::ofstream bad(dir / "bad.tsv");
    bad << "a\t0\tmany\n";
  }
  EXPECT_THROW(NGramVocab::load(dir / "bad.tsv"), DataError);
}
