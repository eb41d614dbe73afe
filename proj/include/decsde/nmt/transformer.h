#pragma once

#include <memory>
#include <vector>

#include "decsde/chargrams/ngram_vocab.h"
#include "decsde/embedding/decsde.h"
#include "decsde/nmt/batch.h"
#include "decsde/nmt/config.h"
#include "decsde/segmenter/vocab.h"

namespace decsde::nmt {

using embedding::LanguageId;
using numkernel::Parameter;
using numkernel::ParameterSet;
using numkernel::Tape;
using numkernel::Tensor;
using numkernel::Var;

template <typename T>
struct AttentionWeights {
  Parameter<T>* wq;  // [d x d], applied as x * W
  Parameter<T>* bq;
  Parameter<T>* wk;
  Parameter<T>* bk;
  Parameter<T>* wv;
  Parameter<T>* bv;
  Parameter<T>* wo;
  Parameter<T>* bo;
};

template <typename T>
struct FeedForwardWeights {
  Parameter<T>* w1;  // [d x ffn]
  Parameter<T>* b1;
  Parameter<T>* w2;  // [ffn x d]
  Parameter<T>* b2;
};

template <typename T>
struct LayerNormWeights {
  Parameter<T>* gamma;
  Parameter<T>* beta;
};

template <typename T>
struct EncoderLayer {
  LayerNormWeights<T> ln_attn, ln_ffn;
  AttentionWeights<T> self_attn;
  FeedForwardWeights<T> ffn;
};

template <typename T>
struct DecoderLayer {
  LayerNormWeights<T> ln_self, ln_cross, ln_ffn;
  AttentionWeights<T> self_attn, cross_attn;
  FeedForwardWeights<T> ffn;
};

// Pre-norm transformer encoder-decoder with a language-flagged source and a
// pluggable target embedding. Rows are packed [batch * len x d].
template <typename T>
class Transformer {
 public:
  // ngrams is required for the DecSDE embed modes. Three-way tying needs
  // src_vocab == tgt_vocab.
  Transformer(ModelConfig config, const segmenter::SubwordVocab& src_vocab, const segmenter::SubwordVocab& tgt_vocab,
              const chargrams::NGramVocab* ngrams, Rng& rng);
  Transformer(const Transformer&) = delete;
  Transformer& operator=(const Transformer&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  embedding::TargetEmbedding<T>& target_embedding() { return *tgt_embed_; }
  // Null unless the embed mode is a DecSDE variant.
  embedding::DecSDE<T>* decsde() { return decsde_; }
  const embedding::LanguageRegistry& languages() const { return languages_; }
  LanguageId language(std::string_view code) const { return languages_.get(code); }
  int64_t src_vocab_size() const { return src_vocab_size_; }
  int64_t tgt_vocab_size() const { return tgt_embed_->vocab_size(); }
  // Source-vocabulary flag id for a target language.
  int32_t src_flag(const LanguageId& lang) const;
  // Target ids that decoding may never emit (PAD, BOS, flags).
  const std::vector<uint8_t>& banned_targets() const { return banned_; }

  // Embedding tables as tape nodes. With three-way tying the source table is
  // the target table of lang.
  Var target_table(Tape<T>& tape, const LanguageId& lang);
  Var source_table(Tape<T>& tape, Var target_table);
  // Matrix the decoder output is multiplied with (transposed).
  Var output_weights(Tape<T>& tape, Var target_table);

  // Encoder output [B*Ls x d]. dropout_rng == nullptr disables dropout.
  // attn_probs, when given, receives one [B*H*Ls x Ls] tensor per layer.
  Var encode(Tape<T>& tape, const Batch& batch, Var src_table, Rng* dropout_rng,
             std::vector<Tensor<T>>* attn_probs = nullptr);
  // Logits [B*Lt x V] for teacher-forced targets.
  Var decode(Tape<T>& tape, const Batch& batch, Var enc, Var tgt_table, Rng* dropout_rng);
  // Label-smoothed loss averaged over target tokens.
  Var loss(Tape<T>& tape, const Batch& batch, T smoothing, Rng* dropout_rng, Tensor<T>* logits_out = nullptr);

  const std::vector<EncoderLayer<T>>& encoder_layers() const { return enc_; }
  const std::vector<DecoderLayer<T>>& decoder_layers() const { return dec_; }
  const LayerNormWeights<T>& encoder_norm() const { return enc_norm_; }
  const LayerNormWeights<T>& decoder_norm() const { return dec_norm_; }
  // Null when tied.
  Parameter<T>* output_projection() const { return out_proj_; }
  Parameter<T>* source_embedding() const { return src_embed_; }

  // Sinusoidal encodings [len x d] (cached).
  const Tensor<T>& positions(int64_t len);

 private:
  AttentionWeights<T> make_attention(const std::string& prefix, Rng& rng);
  FeedForwardWeights<T> make_ffn(const std::string& prefix, Rng& rng);
  LayerNormWeights<T> make_norm(const std::string& prefix);
  Var embed_inputs(Tape<T>& tape, Var table, std::span<const int64_t> ids, int64_t batch, int64_t len,
                   Rng* dropout_rng);
  Var attention_block(Tape<T>& tape, const AttentionWeights<T>& w, Var x_q, Var x_kv,
                      const numkernel::AttentionSpec& spec, Tensor<T>* probs);
  Var ffn_block(Tape<T>& tape, const FeedForwardWeights<T>& w, Var x);
  Var norm(Tape<T>& tape, const LayerNormWeights<T>& w, Var x);
  Var drop(Tape<T>& tape, Var x, Rng* rng);

  ModelConfig config_;
  ParameterSet<T> params_;
  embedding::LanguageRegistry languages_;
  std::vector<int32_t> src_flags_;
  std::vector<uint8_t> banned_;
  int64_t src_vocab_size_;
  std::unique_ptr<embedding::TargetEmbedding<T>> tgt_embed_;
  embedding::DecSDE<T>* decsde_ = nullptr;
  Parameter<T>* src_embed_ = nullptr;
  Parameter<T>* out_proj_ = nullptr;
  std::vector<EncoderLayer<T>> enc_;
  std::vector<DecoderLayer<T>> dec_;
  LayerNormWeights<T> enc_norm_, dec_norm_;
  Tensor<T> positions_;
};

// pe[p][2i] = sin(p / 10000^(2i/d)), pe[p][2i+1] = cos(same angle).
template <typename T>
Tensor<T> sinusoidal_positions(int64_t len, int64_t dim);

}  // namespace decsde::nmt
