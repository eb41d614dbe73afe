#include "decsde/embedding/embedding.h"

#include <algorithm>
#include <cmath>

#include "decsde/common/error.h"

namespace decsde::embedding {

namespace {

struct ModeName {
  EmbedMode mode;
  const char* name;
};

constexpr ModeName kModeNames[] = {
    {EmbedMode::kDecSDE, "decsde"},
    {EmbedMode::kDecSDENoTying, "decsde_no_tying"},
    {EmbedMode::kDecSDEFullTransform, "decsde_full_transform"},
    {EmbedMode::kDecSDENoTransform, "decsde_no_transform"},
    {EmbedMode::kLookupPiece, "lookup_piece"},
    {EmbedMode::kLookupWord, "lookup_word"},
};

}  // namespace

EmbedMode parse_embed_mode(std::string_view name) {
  for (const auto& m : kModeNames)
    if (name == m.name) return m.mode;
  throw ConfigError("unknown embed mode '" + std::string(name) + "'");
}

std::string embed_mode_name(EmbedMode mode) {
  for (const auto& m : kModeNames)
    if (mode == m.mode) return m.name;
  return "?";
}

bool is_decsde(EmbedMode mode) { return mode != EmbedMode::kLookupPiece && mode != EmbedMode::kLookupWord; }

bool ties_output(EmbedMode mode) { return mode != EmbedMode::kDecSDENoTying; }

LanguageId LanguageRegistry::add(std::string code) {
  if (code.empty()) throw ConfigError("empty language code");
  if (contains(code)) throw ConfigError("language '" + code + "' registered twice");
  codes_.push_back(code);
  return {std::move(code), size() - 1};
}

LanguageId LanguageRegistry::get(std::string_view code) const {
  auto it = std::find(codes_.begin(), codes_.end(), code);
  if (it == codes_.end()) throw ContractError("language '" + std::string(code) + "' is not registered");
  return {*it, static_cast<int32_t>(it - codes_.begin())};
}

bool LanguageRegistry::contains(std::string_view code) const {
  return std::find(codes_.begin(), codes_.end(), code) != codes_.end();
}

void LanguageRegistry::check(const LanguageId& id) const {
  if (id.index < 0 || id.index >= size() || codes_[static_cast<size_t>(id.index)] != id.code)
    throw ContractError("language '" + id.code + "' (index " + std::to_string(id.index) + ") is not registered");
}

template <typename T>
bool EmbeddingTable<T>::stale() const {
  return source == nullptr || source->params_version() != params_version;
}

template <typename T>
const Tensor<T>& EmbeddingTable<T>::checked() const {
  if (stale()) {
    throw StaleTableError("embedding table for '" + language.code + "' was computed at parameter version " +
                          std::to_string(params_version) + "; parameters have changed since");
  }
  return matrix;
}

template <typename T>
uint64_t TargetEmbedding<T>::params_version() const {
  uint64_t v = 0;
  for (const auto* p : parameters()) v += p->version;
  return v;
}

template <typename T>
EmbeddingTable<T> TargetEmbedding<T>::precompute_table(const LanguageId& lang) {
  Tape<T> tape(false);
  Var t = table(tape, lang);
  return {tape.value(t), lang, params_version(), this};
}

template <typename T>
Tensor<T> TargetEmbedding<T>::embed_token(int64_t id, const LanguageId& lang) {
  Tape<T> tape(false);
  const int64_t ids[] = {id};
  Var e = embed_batch(tape, ids, lang);
  return tape.value(e).reshaped({dim()});
}

template <typename T>
LookupEmbedding<T>::LookupEmbedding(ParameterSet<T>& params, const std::string& name, int64_t vocab_size,
                                    int64_t dim, Rng& rng)
    : table_(&params.create_uniform(name, {vocab_size, dim}, 1.0 / std::sqrt(static_cast<double>(dim)), rng)) {}

template <typename T>
Var LookupEmbedding<T>::embed_batch(Tape<T>& tape, std::span<const int64_t> ids, const LanguageId&) {
  return numkernel::gather_rows(tape, tape.param(*table_), ids);
}

template <typename T>
Tensor<T> lookup_embed(int64_t id, const Tensor<T>& table) {
  if (table.shape().size() != 2) throw DimensionError("lookup_embed: table must be rank 2");
  if (id < 0 || id >= table.rows())
    throw IndexError("lookup_embed: id " + std::to_string(id) + " outside [0," + std::to_string(table.rows()) + ")");
  Tensor<T> out({table.cols()});
  std::copy_n(table.data() + id * table.cols(), table.cols(), out.data());
  return out;
}

template <typename T>
Var tied_logits(Tape<T>& tape, Var hidden, Var table) {
  return numkernel::matmul(tape, hidden, table, true);
}

template <typename T>
Tensor<T> tied_logits(const Tensor<T>& hidden, const Tensor<T>& table) {
  return numkernel::matmul(hidden, table, false, true);
}

#define DECSDE_INSTANTIATE(T)                                          \
  template struct EmbeddingTable<T>;                                   \
  template class TargetEmbedding<T>;                                   \
  template class LookupEmbedding<T>;                                   \
  template Tensor<T> lookup_embed(int64_t, const Tensor<T>&);          \
  template Var tied_logits(Tape<T>&, Var, Var);                        \
  template Tensor<T> tied_logits(const Tensor<T>&, const Tensor<T>&);

DECSDE_INSTANTIATE(float)
DECSDE_INSTANTIATE(double)
#undef DECSDE_INSTANTIATE

}  // namespace decsde::embedding
