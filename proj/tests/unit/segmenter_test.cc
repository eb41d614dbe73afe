#include <filesystem>
#include <map>
#include <unordered_map>

#include <gtest/gtest.h>

#include "decsde/common/error.h"
#include "decsde/common/random.h"
#include "decsde/common/utf8.h"
#include "decsde/segmenter/tokenizer.h"

using namespace decsde;
using namespace decsde::segmenter;

namespace {

const std::vector<std::string> kLangs = {"hrl", "lrl"};

// Naive BPE: re-segment the whole corpus with the merges so far and recount
// every adjacent pair from scratch.
std::pair<std::string, std::string> oracle_next_merge(const std::vector<std::string>& corpus,
                                                      const std::vector<MergeTable::Merge>& prefix,
                                                      int64_t* count_out) {
  std::map<std::pair<std::string, std::string>, int64_t> counts;
  for (const auto& line : corpus) {
    for (const auto& w : utf8::split_words(line)) {
      auto sym = word_symbols(w);
      for (const auto& [l, r] : prefix) {
        std::vector<std::string> next;
        for (size_t i = 0; i < sym.size(); ++i) {
          if (i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
            next.push_back(l + r);
            ++i;
          } else {
            next.push_back(sym[i]);
          }
        }
        sym = next;
      }
      for (size_t i = 0; i + 1 < sym.size(); ++i) counts[{sym[i], sym[i + 1]}]++;
    }
  }
  std::pair<std::string, std::string> best;
  int64_t best_count = 0;
  for (const auto& [p, c] : counts) {  // std::map iterates in (left, right) order
    if (c > best_count) {
      best = p;
      best_count = c;
    }
  }
  *count_out = best_count;
  return best;
}

std::vector<std::string> random_corpus(Rng& rng, int lines, const std::string& alphabet) {
  std::vector<std::string> corpus;
  for (int i = 0; i < lines; ++i) {
    std::string line;
    const int words = 1 + static_cast<int>(rng.below(6));
    for (int w = 0; w < words; ++w) {
      if (w) line += "  ";
      const int len = 1 + static_cast<int>(rng.below(5));
      for (int c = 0; c < len; ++c) line += alphabet[rng.below(alphabet.size())];
    }
    corpus.push_back(line);
  }
  return corpus;
}

}  // namespace

TEST(TrainBpe, RepeatedPairMergesFirst) {
  std::vector<std::string> corpus = {"aa aa"};
  auto model = train_bpe(corpus, 10, kLangs);
  ASSERT_GE(model.merges.size(), 1u);
  EXPECT_EQ(model.merges.merges()[0], (MergeTable::Merge{"a", "a"}));
}

TEST(TrainBpe, FrequentPairBeforeRarePairs) {
  std::vector<std::string> corpus = {"ab ab ab", "cd"};
  auto model = train_bpe(corpus, 20, kLangs);
  ASSERT_GE(model.merges.size(), 1u);
  EXPECT_EQ(model.merges.merges()[0], (MergeTable::Merge{"a", "b"}));
  for (const auto& [l, r] : model.merges.merges()) {
    EXPECT_EQ(l.find('c'), std::string::npos);
    EXPECT_EQ(r.find('d'), std::string::npos);
  }
}

TEST(TrainBpe, EveryMergeMatchesPairCountOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    auto corpus = random_corpus(rng, 12, "abc");
    auto model = train_bpe(corpus, 40, kLangs);
    std::vector<MergeTable::Merge> prefix;
    for (const auto& m : model.merges.merges()) {
      int64_t count = 0;
      EXPECT_EQ(m, oracle_next_merge(corpus, prefix, &count)) << "trial " << trial << " merge " << prefix.size();
      EXPECT_GE(count, 2);
      prefix.push_back(m);
    }
    // Stopped because the vocabulary is full or no pair repeats.
    int64_t count = 0;
    oracle_next_merge(corpus, prefix, &count);
    EXPECT_TRUE(model.vocab.size() >= 40 || count < 2);
  }
}

TEST(TrainBpe, MergedSymbolsAreInVocab) {
  Rng rng(2);
  auto corpus = random_corpus(rng, 30, "abcdé");
  auto model = train_bpe(corpus, 60, kLangs);
  for (const auto& [l, r] : model.merges.merges()) EXPECT_TRUE(model.vocab.contains(l + r));
}

TEST(TrainBpe, DeterministicAcrossRuns) {
  Rng rng(5);
  auto corpus = random_corpus(rng, 40, "abcdefg");
  auto a = train_bpe(corpus, 80, kLangs);
  auto b = train_bpe(corpus, 80, kLangs);
  EXPECT_EQ(a.merges, b.merges);
  EXPECT_EQ(a.vocab, b.vocab);
}

TEST(TrainBpe, RejectsEmptyCorpusAndTinyVocab) {
  std::vector<std::string> empty;
  EXPECT_THROW(train_bpe(empty, 100, kLangs), InputError);
  std::vector<std::string> corpus = {"abc"};
  // 6 specials + {▁, a, b, c}
  EXPECT_THROW(train_bpe(corpus, 10, kLangs), ConfigError);
  EXPECT_NO_THROW(train_bpe(corpus, 11, kLangs));
}

TEST(Encode, InVocabWordsAreSingleTokens) {
  std::vector<std::string> corpus = {"olá mundo", "olá mundo", "olá mundo"};
  auto tok = Tokenizer::bpe(train_bpe(corpus, 100, kLangs));
  auto ids = tok.encode("mundo olá");
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(tok.vocab().token(ids[0]), "\xe2\x96\x81mundo");
  EXPECT_EQ(tok.vocab().token(ids[1]), "\xe2\x96\x81olá");
}

TEST(Encode, EmptySentence) {
  std::vector<std::string> corpus = {"ab"};
  auto tok = Tokenizer::bpe(train_bpe(corpus, 20, kLangs));
  EXPECT_TRUE(tok.encode("").empty());
}

TEST(Encode, UnknownCharacterBecomesUnk) {
  std::vector<std::string> corpus = {"ab ab"};
  auto tok = Tokenizer::bpe(train_bpe(corpus, 20, kLangs));
  auto ids = tok.encode("az");
  EXPECT_EQ(ids.back(), SubwordVocab::kUnkId);
}

TEST(Encode, RoundTripAndIdRangeProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto corpus = random_corpus(rng, 50, "abcdeéñ");
    auto tok = Tokenizer::bpe(train_bpe(corpus, 30 + 10 * trial, kLangs));
    for (const auto& line : corpus) {
      auto ids = tok.encode(line);
      for (int32_t id : ids) {
        EXPECT_GE(id, 0);
        EXPECT_LT(id, tok.vocab().size());
      }
      EXPECT_EQ(tok.decode(ids), utf8::normalize_whitespace(line));
    }
  }
}

TEST(WordVocab, TopOne) {
  std::vector<std::vector<std::string>> corpora = {{"a a b"}};
  auto v = build_word_vocab(corpora, 1, kLangs);
  EXPECT_EQ(v.size(), v.num_specials() + 1);
  EXPECT_EQ(v.token(v.num_specials()), "a");
}

TEST(WordVocab, LargeTopKKeepsAllTokens) {
  std::vector<std::vector<std::string>> corpora = {{"a a b", "c"}, {"d b"}};
  auto v = build_word_vocab(corpora, 100, kLangs);
  EXPECT_EQ(v.size(), v.num_specials() + 4);
}

TEST(WordVocab, OrderingMatchesCountingOracle) {
  Rng rng(44);
  auto corpus = random_corpus(rng, 200, "abcd");
  std::vector<std::vector<std::string>> corpora = {corpus};
  std::unordered_map<std::string, int64_t> counts;
  for (const auto& line : corpus)
    for (const auto& w : utf8::split_words(line)) counts[w]++;
  auto v = build_word_vocab(corpora, 25, kLangs);
  for (int32_t id = v.num_specials() + 1; id < v.size(); ++id) {
    const auto& prev = v.token(id - 1);
    const auto& cur = v.token(id);
    EXPECT_EQ(v.count(id), counts[cur]);
    EXPECT_TRUE(counts[prev] > counts[cur] || (counts[prev] == counts[cur] && prev < cur));
  }
  // nothing left out ranks above the last kept word
  const auto& last = v.token(v.size() - 1);
  for (const auto& [w, c] : counts) {
    if (v.contains(w)) continue;
    EXPECT_TRUE(c < counts[last] || (c == counts[last] && w > last));
  }
  EXPECT_EQ(Tokenizer::word(v).encode("zzz")[0], SubwordVocab::kUnkId);
}

TEST(VocabFiles, SaveLoadRoundTrip) {
  Rng rng(9);
  auto corpus = random_corpus(rng, 30, "abcé");
  auto model = train_bpe(corpus, 40, kLangs);
  auto dir = std::filesystem::temp_directory_path() / "decsde_segmenter_test";
  std::filesystem::create_directories(dir);
  model.vocab.save(dir / "vocab.tsv");
  model.merges.save(dir / "merges.txt");
  EXPECT_EQ(SubwordVocab::load(dir / "vocab.tsv"), model.vocab);
  EXPECT_EQ(MergeTable::load(dir / "merges.txt"), model.merges);
  EXPECT_EQ(SubwordVocab::load(dir / "vocab.tsv").flag_id("lrl"), 5);
  EXPECT_THROW(SubwordVocab::load(dir / "missing.tsv"), DataError);
}

TEST(VocabFiles, SpecialsOccupyLowestIds) {
  SubwordVocab v(kLangs);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(3), "<unk>");
  EXPECT_EQ(v.token(4), "<2hrl>");
  EXPECT_EQ(v.flag_id("hrl"), 4);
  EXPECT_TRUE(v.is_flag(5));
  EXPECT_THROW(v.add("<pad>", 1), ContractError);
}
