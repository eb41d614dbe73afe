#pragma once

#include <span>
#include <vector>

#include "decsde/embedding/embedding.h"
#include "decsde/nmt/transformer.h"

namespace decsde::nmt {

struct DecodeOptions {
  int64_t beam = 5;
  int64_t max_len = 0;        // output tokens including the implicit EOS; 0 = model max_len
  double length_alpha = 1.0;  // score / len^alpha
};

// Inference for one target language. Embeddings come from a table computed
// once at construction; decoding rejects it if the model has been updated
// since. Each sentence is decoded on its own with cached self-attention keys.
template <typename T>
class Translator {
 public:
  Translator(Transformer<T>& model, const LanguageId& lang);
  // Uses a table computed elsewhere; it must come from this model's target
  // embedding and is checked for staleness on every sentence.
  Translator(Transformer<T>& model, embedding::EmbeddingTable<T> table);

  std::vector<int32_t> greedy(std::span<const int32_t> src, int64_t max_len = 0);
  std::vector<int32_t> beam(std::span<const int32_t> src, const DecodeOptions& options);
  std::vector<std::vector<int32_t>> translate(std::span<const std::vector<int32_t>> sources,
                                              const DecodeOptions& options);

  const embedding::EmbeddingTable<T>& table() const { return table_; }

  // Incremental decoding state for a set of hypotheses of one sentence.
  struct State {
    int64_t steps = 0;
    std::vector<Tensor<T>> cross_k, cross_v;                      // per layer [Ls x d]
    std::vector<std::vector<std::vector<T>>> self_k, self_v;      // [layer][hyp] -> steps * d
  };
  State start(std::span<const int32_t> src);
  // Feeds one token per hypothesis; returns [hyps x V] log-probabilities with
  // banned tokens at -inf.
  Tensor<T> step(State& state, std::span<const int32_t> last_tokens);
  // Keeps hypothesis parents[i] as the new hypothesis i.
  static void reorder(State& state, std::span<const int64_t> parents);

 private:
  Transformer<T>& model_;
  LanguageId lang_;
  embedding::EmbeddingTable<T> table_;
};

}  // namespace decsde::nmt
