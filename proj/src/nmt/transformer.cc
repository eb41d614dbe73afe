#include "decsde/nmt/transformer.h"

#include <cmath>

#include "decsde/common/error.h"

namespace decsde::nmt {

namespace ops = numkernel;
using embedding::EmbedMode;
using embedding::TransformKind;

template <typename T>
Tensor<T> sinusoidal_positions(int64_t len, int64_t dim) {
  Tensor<T> pe({len, dim});
  for (int64_t p = 0; p < len; ++p) {
    for (int64_t i = 0; i < dim; i += 2) {
      const double angle = static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      pe(p, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < dim) pe(p, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Transformer<T>::Transformer(ModelConfig config, const segmenter::SubwordVocab& src_vocab,
                            const segmenter::SubwordVocab& tgt_vocab, const chargrams::NGramVocab* ngrams, Rng& rng)
    : config_(std::move(config)), src_vocab_size_(src_vocab.size()) {
  config_.validate();
  const TieMode tie = config_.effective_tie_mode();
  if (tie == TieMode::kThreeWay && !(src_vocab == tgt_vocab))
    throw ConfigError("three_way tying needs one joint source/target vocabulary");

  for (const auto& l : config_.languages) {
    languages_.add(l.code);
    src_flags_.push_back(src_vocab.flag_id(l.code));
  }
  banned_.assign(static_cast<size_t>(tgt_vocab.size()), 0);
  banned_[segmenter::SubwordVocab::kPadId] = 1;
  banned_[segmenter::SubwordVocab::kBosId] = 1;
  for (int32_t id = 0; id < tgt_vocab.size(); ++id)
    if (tgt_vocab.is_flag(id)) banned_[static_cast<size_t>(id)] = 1;

  const int64_t d = config_.dim;
  if (embedding::is_decsde(config_.embed_mode)) {
    if (ngrams == nullptr) throw ConfigError("DecSDE embed modes need an n-gram vocabulary");
    embedding::DecSDEConfig dc;
    dc.dim = d;
    dc.latent_size = config_.latent_size;
    dc.none_keeps_tanh = config_.none_keeps_tanh;
    dc.languages = config_.languages;
    dc.transform = config_.embed_mode == EmbedMode::kDecSDEFullTransform ? TransformKind::kFull
                   : config_.embed_mode == EmbedMode::kDecSDENoTransform ? TransformKind::kNone
                                                                         : TransformKind::kLowRank;
    auto model = std::make_unique<embedding::DecSDE<T>>(params_, tgt_vocab, *ngrams, dc, rng);
    decsde_ = model.get();
    tgt_embed_ = std::move(model);
  } else {
    tgt_embed_ = std::make_unique<embedding::LookupEmbedding<T>>(params_, "tgt_embed.table", tgt_vocab.size(), d, rng);
  }
  const double embed_bound = 1.0 / std::sqrt(static_cast<double>(d));
  if (tie != TieMode::kThreeWay) src_embed_ = &params_.create_uniform("src_embed", {src_vocab_size_, d}, embed_bound, rng);

  for (int64_t l = 0; l < config_.enc_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    EncoderLayer<T> layer;
    layer.ln_attn = make_norm(p + "ln_attn");
    layer.self_attn = make_attention(p + "self_attn", rng);
    layer.ln_ffn = make_norm(p + "ln_ffn");
    layer.ffn = make_ffn(p + "ffn", rng);
    enc_.push_back(layer);
  }
  enc_norm_ = make_norm("enc.ln_out");
  for (int64_t l = 0; l < config_.dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    DecoderLayer<T> layer;
    layer.ln_self = make_norm(p + "ln_self");
    layer.self_attn = make_attention(p + "self_attn", rng);
    layer.ln_cross = make_norm(p + "ln_cross");
    layer.cross_attn = make_attention(p + "cross_attn", rng);
    layer.ln_ffn = make_norm(p + "ln_ffn");
    layer.ffn = make_ffn(p + "ffn", rng);
    dec_.push_back(layer);
  }
  dec_norm_ = make_norm("dec.ln_out");
  if (tie == TieMode::kNone) out_proj_ = &params_.create_uniform("out_proj", {tgt_vocab.size(), d}, embed_bound, rng);
  positions_ = sinusoidal_positions<T>(config_.max_len, d);
}

template <typename T>
AttentionWeights<T> Transformer<T>::make_attention(const std::string& prefix, Rng& rng) {
  const int64_t d = config_.dim;
  const double bound = std::sqrt(6.0 / static_cast<double>(2 * d));
  AttentionWeights<T> w;
  w.wq = &params_.create_uniform(prefix + ".wq", {d, d}, bound, rng);
  w.bq = &params_.create(prefix + ".bq", {d});
  w.wk = &params_.create_uniform(prefix + ".wk", {d, d}, bound, rng);
  w.bk = &params_.create(prefix + ".bk", {d});
  w.wv = &params_.create_uniform(prefix + ".wv", {d, d}, bound, rng);
  w.bv = &params_.create(prefix + ".bv", {d});
  w.wo = &params_.create_uniform(prefix + ".wo", {d, d}, bound, rng);
  w.bo = &params_.create(prefix + ".bo", {d});
  return w;
}

template <typename T>
FeedForwardWeights<T> Transformer<T>::make_ffn(const std::string& prefix, Rng& rng) {
  const int64_t d = config_.dim, f = config_.ffn_dim;
  const double bound = std::sqrt(6.0 / static_cast<double>(d + f));
  FeedForwardWeights<T> w;
  w.w1 = &params_.create_uniform(prefix + ".w1", {d, f}, bound, rng);
  w.b1 = &params_.create(prefix + ".b1", {f});
  w.w2 = &params_.create_uniform(prefix + ".w2", {f, d}, bound, rng);
  w.b2 = &params_.create(prefix + ".b2", {d});
  return w;
}

template <typename T>
LayerNormWeights<T> Transformer<T>::make_norm(const std::string& prefix) {
  return {&params_.create_constant(prefix + ".gamma", {config_.dim}, T(1)), &params_.create(prefix + ".beta", {config_.dim})};
}

template <typename T>
int32_t Transformer<T>::src_flag(const LanguageId& lang) const {
  languages_.check(lang);
  return src_flags_[static_cast<size_t>(lang.index)];
}

template <typename T>
const Tensor<T>& Transformer<T>::positions(int64_t len) {
  if (len > positions_.rows()) positions_ = sinusoidal_positions<T>(len, config_.dim);
  return positions_;
}

template <typename T>
Var Transformer<T>::target_table(Tape<T>& tape, const LanguageId& lang) {
  languages_.check(lang);
  return tgt_embed_->table(tape, lang);
}

template <typename T>
Var Transformer<T>::source_table(Tape<T>& tape, Var target_table) {
  return src_embed_ != nullptr ? tape.param(*src_embed_) : target_table;
}

template <typename T>
Var Transformer<T>::output_weights(Tape<T>& tape, Var target_table) {
  return out_proj_ != nullptr ? tape.param(*out_proj_) : target_table;
}

template <typename T>
Var Transformer<T>::drop(Tape<T>& tape, Var x, Rng* rng) {
  if (rng == nullptr || config_.dropout <= 0.0) return x;
  return ops::dropout(tape, x, config_.dropout, *rng);
}

template <typename T>
Var Transformer<T>::norm(Tape<T>& tape, const LayerNormWeights<T>& w, Var x) {
  return ops::layer_norm(tape, x, tape.param(*w.gamma), tape.param(*w.beta));
}

template <typename T>
Var Transformer<T>::embed_inputs(Tape<T>& tape, Var table, std::span<const int64_t> ids, int64_t batch, int64_t len,
                                 Rng* dropout_rng) {
  const int64_t d = config_.dim;
  const auto& pe = positions(len);
  Tensor<T> tiled({batch * len, d});
  for (int64_t b = 0; b < batch; ++b) std::copy_n(pe.data(), len * d, tiled.data() + b * len * d);
  Var x = ops::scale(tape, ops::gather_rows(tape, table, ids), static_cast<T>(std::sqrt(static_cast<double>(d))));
  return drop(tape, ops::add(tape, x, tape.constant(std::move(tiled))), dropout_rng);
}

template <typename T>
Var Transformer<T>::attention_block(Tape<T>& tape, const AttentionWeights<T>& w, Var x_q, Var x_kv,
                                    const numkernel::AttentionSpec& spec, Tensor<T>* probs) {
  auto proj = [&](Var x, Parameter<T>* wt, Parameter<T>* b) {
    return ops::add_bias(tape, ops::matmul(tape, x, tape.param(*wt)), tape.param(*b));
  };
  Var q = proj(x_q, w.wq, w.bq);
  Var k = proj(x_kv, w.wk, w.bk);
  Var v = proj(x_kv, w.wv, w.bv);
  return proj(ops::attention(tape, q, k, v, spec, probs), w.wo, w.bo);
}

template <typename T>
Var Transformer<T>::ffn_block(Tape<T>& tape, const FeedForwardWeights<T>& w, Var x) {
  Var h = ops::relu(tape, ops::add_bias(tape, ops::matmul(tape, x, tape.param(*w.w1)), tape.param(*w.b1)));
  return ops::add_bias(tape, ops::matmul(tape, h, tape.param(*w.w2)), tape.param(*w.b2));
}

template <typename T>
Var Transformer<T>::encode(Tape<T>& tape, const Batch& batch, Var src_table, Rng* dropout_rng,
                           std::vector<Tensor<T>>* attn_probs) {
  Var x = embed_inputs(tape, src_table, batch.src, batch.size, batch.src_len, dropout_rng);
  numkernel::AttentionSpec spec{batch.size, batch.src_len, batch.src_len, config_.heads, false, batch.src_valid};
  if (attn_probs != nullptr) attn_probs->assign(enc_.size(), Tensor<T>());
  for (size_t l = 0; l < enc_.size(); ++l) {
    const auto& layer = enc_[l];
    Var h = norm(tape, layer.ln_attn, x);
    Tensor<T>* probs = attn_probs != nullptr ? &(*attn_probs)[l] : nullptr;
    x = ops::add(tape, x, drop(tape, attention_block(tape, layer.self_attn, h, h, spec, probs), dropout_rng));
    h = norm(tape, layer.ln_ffn, x);
    x = ops::add(tape, x, drop(tape, ffn_block(tape, layer.ffn, h), dropout_rng));
  }
  return norm(tape, enc_norm_, x);
}

template <typename T>
Var Transformer<T>::decode(Tape<T>& tape, const Batch& batch, Var enc, Var tgt_table, Rng* dropout_rng) {
  Var y = embed_inputs(tape, tgt_table, batch.tgt_in, batch.size, batch.tgt_len, dropout_rng);
  numkernel::AttentionSpec self_spec{batch.size, batch.tgt_len, batch.tgt_len, config_.heads, true, batch.tgt_valid};
  numkernel::AttentionSpec cross_spec{batch.size, batch.tgt_len, batch.src_len, config_.heads, false, batch.src_valid};
  for (const auto& layer : dec_) {
    Var h = norm(tape, layer.ln_self, y);
    y = ops::add(tape, y, drop(tape, attention_block(tape, layer.self_attn, h, h, self_spec, nullptr), dropout_rng));
    h = norm(tape, layer.ln_cross, y);
    y = ops::add(tape, y, drop(tape, attention_block(tape, layer.cross_attn, h, enc, cross_spec, nullptr), dropout_rng));
    h = norm(tape, layer.ln_ffn, y);
    y = ops::add(tape, y, drop(tape, ffn_block(tape, layer.ffn, h), dropout_rng));
  }
  return ops::matmul(tape, norm(tape, dec_norm_, y), output_weights(tape, tgt_table), true);
}

template <typename T>
Var Transformer<T>::loss(Tape<T>& tape, const Batch& batch, T smoothing, Rng* dropout_rng, Tensor<T>* logits_out) {
  Var table = target_table(tape, batch.lang);
  Var enc = encode(tape, batch, source_table(tape, table), dropout_rng);
  Var logits = decode(tape, batch, enc, table, dropout_rng);
  if (logits_out != nullptr) *logits_out = tape.value(logits);
  return ops::cross_entropy(tape, logits, batch.tgt_out, smoothing, int64_t{segmenter::SubwordVocab::kPadId});
}

template class Transformer<float>;
template class Transformer<double>;
template Tensor<float> sinusoidal_positions(int64_t, int64_t);
template Tensor<double> sinusoidal_positions(int64_t, int64_t);

}  // namespace decsde::nmt
