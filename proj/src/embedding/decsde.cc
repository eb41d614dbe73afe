#include "decsde/embedding/decsde.h"

#include <cmath>
#include <unordered_map>

#include "decsde/common/error.h"

namespace decsde::embedding {

using numkernel::SparseMatrix;
namespace ops = numkernel;

template <typename T>
DecSDE<T>::DecSDE(ParameterSet<T>& params, const segmenter::SubwordVocab& vocab,
                  const chargrams::NGramVocab& ngrams, DecSDEConfig config, Rng& rng)
    : config_(std::move(config)), vocab_size_(vocab.size()), num_specials_(vocab.num_specials()) {
  const int64_t d = config_.dim;
  if (d < 1) throw ConfigError("embedding dim must be positive");
  if (config_.latent_size < 1) throw ConfigError("latent size must be positive");
  if (config_.languages.empty()) throw ConfigError("DecSDE needs at least one target language");
  if (ngrams.size() < 1) throw ConfigError("DecSDE needs a non-empty n-gram vocabulary");

  bon_ = chargrams::bon_matrix(vocab, ngrams);
  std::vector<int64_t> spelled_ids;
  for (int64_t id = num_specials_; id < vocab_size_; ++id) spelled_ids.push_back(id);
  spelled_bon_ = std::make_shared<const SparseMatrix>(bon_.select_rows(spelled_ids));

  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  const std::string& name = config_.name;
  w_c_ = &params.create_uniform(name + ".W_c", {ngrams.size(), d}, bound, rng);
  w_s_ = &params.create_uniform(name + ".W_s", {config_.latent_size, d}, bound, rng);
  special_ = &params.create_uniform(name + ".special", {num_specials_, d}, bound, rng);

  for (const auto& lr : config_.languages) {
    languages_.add(lr.code);
    Transform t;
    if (config_.transform == TransformKind::kLowRank) {
      if (lr.rank < 0 || lr.rank >= d)
        throw ConfigError("rank u for '" + lr.code + "' must satisfy 0 <= u < d, got " + std::to_string(lr.rank));
      if (lr.rank > 0) {
        // U = 0 so the transform starts as tanh(I c).
        t.u = &params.create_constant(name + ".U." + lr.code, {d, lr.rank}, T(0));
        t.v = &params.create_uniform(name + ".V." + lr.code, {lr.rank, d}, bound, rng);
      }
    } else if (config_.transform == TransformKind::kFull) {
      t.full = &params.create_constant(name + ".W_L." + lr.code, {d, d}, T(0));
      for (int64_t i = 0; i < d; ++i) t.full->value(i, i) = T(1);
    }
    transforms_.push_back(t);
  }
}

template <typename T>
std::vector<Parameter<T>*> DecSDE<T>::parameters() const {
  std::vector<Parameter<T>*> out = {w_c_, w_s_, special_};
  for (const auto& t : transforms_)
    for (auto* p : {t.u, t.v, t.full})
      if (p != nullptr) out.push_back(p);
  return out;
}

template <typename T>
Parameter<T>* DecSDE<T>::u(const LanguageId& lang) const {
  languages_.check(lang);
  return transforms_[static_cast<size_t>(lang.index)].u;
}

template <typename T>
Parameter<T>* DecSDE<T>::v(const LanguageId& lang) const {
  languages_.check(lang);
  return transforms_[static_cast<size_t>(lang.index)].v;
}

template <typename T>
Parameter<T>* DecSDE<T>::full(const LanguageId& lang) const {
  languages_.check(lang);
  return transforms_[static_cast<size_t>(lang.index)].full;
}

template <typename T>
std::shared_ptr<const SparseMatrix> DecSDE<T>::bon_rows(std::span<const int64_t> ids) const {
  for (int64_t id : ids)
    if (id < 0 || id >= vocab_size_)
      throw IndexError("token id " + std::to_string(id) + " outside [0," + std::to_string(vocab_size_) + ")");
  return std::make_shared<const SparseMatrix>(bon_.select_rows(ids));
}

template <typename T>
Var DecSDE<T>::char_aware(Tape<T>& tape, std::shared_ptr<const SparseMatrix> bon) {
  return ops::tanh(tape, ops::bag_sum(tape, std::move(bon), tape.param(*w_c_)));
}

template <typename T>
Var DecSDE<T>::lang_transform(Tape<T>& tape, Var c, const LanguageId& lang) {
  languages_.check(lang);
  const Transform& t = transforms_[static_cast<size_t>(lang.index)];
  switch (config_.transform) {
    case TransformKind::kLowRank: {
      if (t.u == nullptr) return ops::tanh(tape, c);
      // Row form of (I + U V) c: c + (c V^T) U^T.
      Var cv = ops::matmul(tape, c, tape.param(*t.v), true);
      Var uvc = ops::matmul(tape, cv, tape.param(*t.u), true);
      return ops::tanh(tape, ops::add(tape, c, uvc));
    }
    case TransformKind::kFull:
      return ops::tanh(tape, ops::matmul(tape, c, tape.param(*t.full), true));
    case TransformKind::kNone:
      return config_.none_keeps_tanh ? ops::tanh(tape, c) : c;
  }
  return c;
}

template <typename T>
Var DecSDE<T>::latent_semantic(Tape<T>& tape, Var c_i, Tensor<T>* weights_out) {
  Var ws = tape.param(*w_s_);
  Var weights = ops::softmax_rows(tape, ops::matmul(tape, c_i, ws, true));
  if (weights_out != nullptr) *weights_out = tape.value(weights);
  return ops::matmul(tape, weights, ws);
}

template <typename T>
Var DecSDE<T>::spelled(Tape<T>& tape, std::shared_ptr<const SparseMatrix> bon, const LanguageId& lang) {
  Var c = char_aware(tape, std::move(bon));
  Var c_i = lang_transform(tape, c, lang);
  return ops::add(tape, c_i, latent_semantic(tape, c_i));
}

template <typename T>
Var DecSDE<T>::table(Tape<T>& tape, const LanguageId& lang) {
  languages_.check(lang);
  Var special = tape.param(*special_);
  if (spelled_bon_->rows() == 0) return special;
  return ops::concat_rows(tape, special, spelled(tape, spelled_bon_, lang));
}

template <typename T>
Var DecSDE<T>::embed_batch(Tape<T>& tape, std::span<const int64_t> ids, const LanguageId& lang) {
  languages_.check(lang);
  // Spell each distinct regular id once, then gather from [special; spelled].
  std::vector<int64_t> distinct;
  std::unordered_map<int64_t, int64_t> local;
  std::vector<int64_t> rows(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    const int64_t id = ids[i];
    if (id < 0 || id >= vocab_size_)
      throw IndexError("token id " + std::to_string(id) + " outside [0," + std::to_string(vocab_size_) + ")");
    if (id < num_specials_) {
      rows[i] = id;
      continue;
    }
    auto [it, inserted] = local.emplace(id, static_cast<int64_t>(distinct.size()));
    if (inserted) distinct.push_back(id);
    rows[i] = num_specials_ + it->second;
  }
  Var source = tape.param(*special_);
  if (!distinct.empty()) source = ops::concat_rows(tape, source, spelled(tape, bon_rows(distinct), lang));
  return ops::gather_rows(tape, source, rows);
}

template class DecSDE<float>;
template class DecSDE<double>;

}  // namespace decsde::embedding
