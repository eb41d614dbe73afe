#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "decsde/chargrams/ngram_vocab.h"
#include "decsde/cli/experiment.h"
#include "decsde/evalbench/bleu.h"
#include "decsde/evalbench/similarity.h"
#include "decsde/evalbench/timing.h"
#include "decsde/nmt/decode.h"
#include "decsde/segmenter/tokenizer.h"
#include "decsde/trainer/checkpoint.h"

namespace decsde::cli {

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

// Source BPE over all training sources; target BPE (or a word vocabulary for
// lookup_word) over all training targets, jointly for every language.
void build_vocab(const ExperimentConfig& cfg);
void build_ngrams(const ExperimentConfig& cfg);

// Calls fn(std::type_identity<float or double>) according to cfg.precision.
template <typename Fn>
decltype(auto) with_precision(const ExperimentConfig& cfg, Fn&& fn) {
  if (cfg.precision == Precision::kDouble) return fn(std::type_identity<double>{});
  return fn(std::type_identity<float>{});
}

// Tokenizers, n-gram vocabulary and a freshly initialized model for one
// experiment. Initialization draws from the experiment seed.
template <typename T>
class Session {
 public:
  explicit Session(const ExperimentConfig& cfg);
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const ExperimentConfig& config() const { return cfg_; }
  const segmenter::Tokenizer& src_tokenizer() const { return src_tok_; }
  const segmenter::Tokenizer& tgt_tokenizer() const { return tgt_tok_; }
  nmt::Transformer<T>& model() { return *model_; }

  // Encodes parallel files; line counts must agree.
  std::vector<trainer::ParallelCorpus> load(const std::vector<CorpusFiles>& files) const;

  trainer::CheckpointInfo load_checkpoint(const std::filesystem::path& path, trainer::Trainer<T>* trainer = nullptr);
  void save_checkpoint(const std::filesystem::path& path, trainer::Trainer<T>* trainer);

  // Hash of the target embedding parameters; stamps precomputed table files.
  uint64_t embedding_fingerprint() const;
  void write_table(const std::string& lang, const std::filesystem::path& path);
  // StaleTableError when the file was computed from other parameter values.
  embedding::EmbeddingTable<T> read_table(const std::filesystem::path& path);

  std::vector<std::string> translate(const std::string& lang, const std::vector<std::string>& sources,
                                     const nmt::DecodeOptions& options,
                                     std::optional<embedding::EmbeddingTable<T>> table = std::nullopt);

 private:
  ExperimentConfig cfg_;
  segmenter::Tokenizer src_tok_;
  segmenter::Tokenizer tgt_tok_;
  std::optional<chargrams::NGramVocab> ngv_;
  Rng rng_;
  std::unique_ptr<nmt::Transformer<T>> model_;
};

struct TrainSummary {
  int64_t epochs = 0;
  int64_t steps = 0;
  double last_loss = 0;
  double best_dev_ppl = 0;
  double seconds = 0;
};

// Trains to max_epochs / max_steps. Writes work_dir/{last,best}.ckpt and
// work_dir/train_log.csv; resume continues from last.ckpt when present.
template <typename T>
TrainSummary train(const ExperimentConfig& cfg, bool resume, std::ostream* progress);

// best.ckpt if present, else last.ckpt.
std::filesystem::path default_checkpoint(const ExperimentConfig& cfg);

// Translates test.<lang> with the given checkpoint and scores it.
template <typename T>
evalbench::BleuReport evaluate_test(Session<T>& session, const std::string& lang, const nmt::DecodeOptions& options,
                                    std::vector<std::string>* hyps = nullptr);

// Frequent target words of lang that are a single token in the vocabulary,
// most frequent first.
std::vector<std::string> single_token_words(const ExperimentConfig& cfg, const segmenter::Tokenizer& tok,
                                            const std::string& lang, int64_t top_k);

// Cross-language retrieval: each pair's LRL word queries all hrl_words.
template <typename T>
std::vector<evalbench::MrrBucket> embedding_mrr(Session<T>& session, const std::string& hrl, const std::string& lrl,
                                                const std::vector<std::string>& hrl_words,
                                                const std::vector<evalbench::WordPair>& pairs);

struct BenchResult {
  std::string variant;
  evalbench::Timing train_epoch;
  evalbench::Timing decode;
  double precompute_sec = 0;
  int64_t decoded_tokens = 0;
};

// Times `runs` training epochs (after one warm-up epoch) from a fresh model,
// and `runs` decodes of test.<lang> (after one warm-up) with the checkpoint,
// if given, and a precomputed table.
template <typename T>
BenchResult bench_variant(const ExperimentConfig& cfg, const std::string& lang, int runs,
                          const std::optional<std::filesystem::path>& checkpoint, bool time_training = true);

}  // namespace decsde::cli
