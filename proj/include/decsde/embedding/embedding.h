#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decsde/numkernel/ops.h"
#include "decsde/numkernel/parameter.h"
#include "decsde/numkernel/tape.h"

namespace decsde::embedding {

using numkernel::Parameter;
using numkernel::ParameterSet;
using numkernel::Tape;
using numkernel::Tensor;
using numkernel::Var;

// Target-side embedding variants compared in the ablation grid.
enum class EmbedMode {
  kDecSDE,
  kDecSDENoTying,
  kDecSDEFullTransform,
  kDecSDENoTransform,
  kLookupPiece,
  kLookupWord,
};

// Config spellings: decsde, decsde_no_tying, decsde_full_transform,
// decsde_no_transform, lookup_piece, lookup_word.
EmbedMode parse_embed_mode(std::string_view name);
std::string embed_mode_name(EmbedMode mode);
bool is_decsde(EmbedMode mode);
// Whether the output projection shares the target embedding table.
bool ties_output(EmbedMode mode);

struct LanguageId {
  std::string code;
  int32_t index = -1;
  friend bool operator==(const LanguageId&, const LanguageId&) = default;
};

// Registered languages of one model, indexed in registration order.
class LanguageRegistry {
 public:
  LanguageId add(std::string code);
  // Throws ContractError for unknown codes.
  LanguageId get(std::string_view code) const;
  bool contains(std::string_view code) const;
  // Throws ContractError unless id names a registered language.
  void check(const LanguageId& id) const;
  int32_t size() const { return static_cast<int32_t>(codes_.size()); }
  const std::vector<std::string>& codes() const { return codes_; }

 private:
  std::vector<std::string> codes_;
};

template <typename T>
class TargetEmbedding;

// Frozen [V x d] embeddings for one language, stamped with the parameter
// versions they were computed from.
template <typename T>
struct EmbeddingTable {
  Tensor<T> matrix;
  LanguageId language;
  uint64_t params_version = 0;
  const TargetEmbedding<T>* source = nullptr;

  // The matrix, or StaleTableError when the source parameters have moved on.
  const Tensor<T>& checked() const;
  bool stale() const;
};

// A [V x d] target vocabulary embedding differentiable through a Tape.
template <typename T>
class TargetEmbedding {
 public:
  virtual ~TargetEmbedding() = default;

  virtual int64_t vocab_size() const = 0;
  virtual int64_t dim() const = 0;
  virtual std::vector<Parameter<T>*> parameters() const = 0;

  // Whole table; row t embeds token t for language lang.
  virtual Var table(Tape<T>& tape, const LanguageId& lang) = 0;
  // Rows for ids only. Row b equals table row ids[b].
  virtual Var embed_batch(Tape<T>& tape, std::span<const int64_t> ids, const LanguageId& lang) = 0;

  uint64_t params_version() const;
  // Computes the table without recording gradients.
  EmbeddingTable<T> precompute_table(const LanguageId& lang);
  Tensor<T> embed_token(int64_t id, const LanguageId& lang);
};

// Plain lookup table (LookUp baselines, source embeddings).
template <typename T>
class LookupEmbedding : public TargetEmbedding<T> {
 public:
  LookupEmbedding(ParameterSet<T>& params, const std::string& name, int64_t vocab_size, int64_t dim, Rng& rng);

  int64_t vocab_size() const override { return table_->value.rows(); }
  int64_t dim() const override { return table_->value.cols(); }
  std::vector<Parameter<T>*> parameters() const override { return {table_}; }
  Var table(Tape<T>& tape, const LanguageId&) override { return tape.param(*table_); }
  Var embed_batch(Tape<T>& tape, std::span<const int64_t> ids, const LanguageId&) override;

  Parameter<T>& weights() const { return *table_; }

 private:
  Parameter<T>* table_;
};

// Row id of a lookup table; IndexError when out of range.
template <typename T>
Tensor<T> lookup_embed(int64_t id, const Tensor<T>& table);

// hidden[B x d] * table[V x d]^T, no bias.
template <typename T>
Var tied_logits(Tape<T>& tape, Var hidden, Var table);
template <typename T>
Tensor<T> tied_logits(const Tensor<T>& hidden, const Tensor<T>& table);

}  // namespace decsde::embedding
