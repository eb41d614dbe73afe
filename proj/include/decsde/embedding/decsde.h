#pragma once

#include <map>
#include <memory>

#include "decsde/chargrams/ngram_vocab.h"
#include "decsde/embedding/embedding.h"
#include "decsde/segmenter/vocab.h"

namespace decsde::embedding {

enum class TransformKind {
  kLowRank,  // tanh((I + U V) c)
  kFull,     // tanh(W_L c)
  kNone,     // c, or tanh(c) with none_keeps_tanh
};

struct LanguageRank {
  std::string code;
  int64_t rank = 0;  // u; 0 disables U/V for the language
};

struct DecSDEConfig {
  int64_t dim = 64;
  int64_t latent_size = 512;
  TransformKind transform = TransformKind::kLowRank;
  bool none_keeps_tanh = false;
  std::vector<LanguageRank> languages;
  std::string name = "tgt_embed";
};

// Soft decoupled target embedding:
//   c   = tanh(W_c BoN(w))                 char_aware
//   c_i = transform_lang(c)                lang_transform
//   s   = W_s softmax(W_s^T c_i)           latent_semantic
//   e   = c_i + s
// Special tokens use dedicated rows instead.
//
// W_c is stored [n x d] and W_s [s x d] (row per gram / latent entry).
template <typename T>
class DecSDE : public TargetEmbedding<T> {
 public:
  DecSDE(ParameterSet<T>& params, const segmenter::SubwordVocab& vocab, const chargrams::NGramVocab& ngrams,
         DecSDEConfig config, Rng& rng);

  int64_t vocab_size() const override { return vocab_size_; }
  int64_t dim() const override { return config_.dim; }
  std::vector<Parameter<T>*> parameters() const override;
  Var table(Tape<T>& tape, const LanguageId& lang) override;
  Var embed_batch(Tape<T>& tape, std::span<const int64_t> ids, const LanguageId& lang) override;

  // Pipeline stages, exposed for analysis and tests. bon rows select grams.
  Var char_aware(Tape<T>& tape, std::shared_ptr<const numkernel::SparseMatrix> bon);
  Var lang_transform(Tape<T>& tape, Var c, const LanguageId& lang);
  Var latent_semantic(Tape<T>& tape, Var c_i, Tensor<T>* weights_out = nullptr);

  // BoN rows for ids (special ids give empty rows).
  std::shared_ptr<const numkernel::SparseMatrix> bon_rows(std::span<const int64_t> ids) const;

  const DecSDEConfig& config() const { return config_; }
  const LanguageRegistry& languages() const { return languages_; }
  int64_t num_specials() const { return num_specials_; }
  int64_t num_ngrams() const { return w_c_->value.rows(); }

  Parameter<T>& w_c() const { return *w_c_; }
  Parameter<T>& w_s() const { return *w_s_; }
  Parameter<T>& special_rows() const { return *special_; }
  // Null when the language has no such matrix.
  Parameter<T>* u(const LanguageId& lang) const;
  Parameter<T>* v(const LanguageId& lang) const;
  Parameter<T>* full(const LanguageId& lang) const;

 private:
  Var spelled(Tape<T>& tape, std::shared_ptr<const numkernel::SparseMatrix> bon, const LanguageId& lang);

  struct Transform {
    Parameter<T>* u = nullptr;
    Parameter<T>* v = nullptr;
    Parameter<T>* full = nullptr;
  };

  DecSDEConfig config_;
  LanguageRegistry languages_;
  int64_t vocab_size_;
  int64_t num_specials_;
  numkernel::SparseMatrix bon_;                                  // V x n
  std::shared_ptr<const numkernel::SparseMatrix> spelled_bon_;  // non-special rows
  Parameter<T>* w_c_;
  Parameter<T>* w_s_;
  Parameter<T>* special_;
  std::vector<Transform> transforms_;
};

}  // namespace decsde::embedding
