#include "decsde/nmt/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "decsde/common/error.h"

namespace decsde::nmt {

namespace ops = numkernel;
using segmenter::SubwordVocab;

namespace {

template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Parameter<T>& w, const Parameter<T>& b) {
  Tensor<T> y = ops::matmul(x, w.value);
  const int64_t n = y.cols();
  for (int64_t r = 0; r < y.rows(); ++r)
    for (int64_t c = 0; c < n; ++c) y(r, c) += b.value[static_cast<size_t>(c)];
  return y;
}

// Same arithmetic as ops::layer_norm.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const LayerNormWeights<T>& w) {
  const int64_t m = x.rows(), n = x.cols();
  Tensor<T> out({m, n});
  const auto& g = w.gamma->value;
  const auto& b = w.beta->value;
  for (int64_t i = 0; i < m; ++i) {
    T mean = 0;
    for (int64_t j = 0; j < n; ++j) mean += x(i, j);
    mean /= static_cast<T>(n);
    T var = 0;
    for (int64_t j = 0; j < n; ++j) {
      const T c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<T>(n);
    const T is = T(1) / std::sqrt(var + T(1e-5));
    for (int64_t j = 0; j < n; ++j)
      out(i, j) = (x(i, j) - mean) * is * g[static_cast<size_t>(j)] + b[static_cast<size_t>(j)];
  }
  return out;
}

// One query row against len key/value rows, per head, as in ops::attention.
template <typename T>
void attend(const T* q, const T* keys, const T* values, int64_t len, int64_t d, int64_t heads, T* out,
            std::vector<T>& scores) {
  const int64_t dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  scores.resize(static_cast<size_t>(len));
  for (int64_t h = 0; h < heads; ++h) {
    T mx = -std::numeric_limits<T>::infinity();
    for (int64_t j = 0; j < len; ++j) {
      T s = 0;
      for (int64_t c = 0; c < dh; ++c) s += q[h * dh + c] * keys[j * d + h * dh + c];
      s *= scale;
      scores[static_cast<size_t>(j)] = s;
      mx = std::max(mx, s);
    }
    T total = 0;
    for (int64_t j = 0; j < len; ++j) total += (scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - mx));
    const T inv = T(1) / total;
    T* o = out + h * dh;
    for (int64_t j = 0; j < len; ++j) {
      const T p = scores[static_cast<size_t>(j)] * inv;
      if (p == T(0)) continue;
      for (int64_t c = 0; c < dh; ++c) o[c] += p * values[j * d + h * dh + c];
    }
  }
}

template <typename T>
void add_into(Tensor<T>& x, const Tensor<T>& y) {
  for (size_t i = 0; i < x.size(); ++i) x[i] += y[i];
}

}  // namespace

template <typename T>
Translator<T>::Translator(Transformer<T>& model, const LanguageId& lang)
    : model_(model), lang_(lang), table_(model.target_embedding().precompute_table(lang)) {}

template <typename T>
Translator<T>::Translator(Transformer<T>& model, embedding::EmbeddingTable<T> table)
    : model_(model), lang_(table.language), table_(std::move(table)) {
  if (table_.source != &model.target_embedding()) throw ContractError("table belongs to another model");
  if (table_.matrix.rank() != 2 || table_.matrix.rows() != model.tgt_vocab_size() ||
      table_.matrix.cols() != model.config().dim) {
    throw DimensionError("table shape does not match the model");
  }
  model.languages().check(lang_);
}

template <typename T>
typename Translator<T>::State Translator<T>::start(std::span<const int32_t> src) {
  const Tensor<T>& table = table_.checked();
  SentencePair pair{{src.begin(), src.end()}, {}};
  Batch batch = make_batch(std::span<const SentencePair>(&pair, 1), lang_, model_.src_flag(lang_), model_.config().max_len);
  Tape<T> tape(false);
  Var src_table = model_.source_embedding() != nullptr ? tape.param(*model_.source_embedding()) : tape.constant(table);
  const Tensor<T>& enc = tape.value(model_.encode(tape, batch, src_table, nullptr));
  State state;
  for (const auto& layer : model_.decoder_layers()) {
    state.cross_k.push_back(affine(enc, *layer.cross_attn.wk, *layer.cross_attn.bk));
    state.cross_v.push_back(affine(enc, *layer.cross_attn.wv, *layer.cross_attn.bv));
  }
  const size_t layers = model_.decoder_layers().size();
  state.self_k.assign(layers, std::vector<std::vector<T>>(1));
  state.self_v.assign(layers, std::vector<std::vector<T>>(1));
  return state;
}

template <typename T>
Tensor<T> Translator<T>::step(State& state, std::span<const int32_t> last_tokens) {
  const Tensor<T>& table = table_.checked();
  const auto& cfg = model_.config();
  const int64_t d = cfg.dim, n = static_cast<int64_t>(last_tokens.size());
  const int64_t t = state.steps;
  if (t >= cfg.max_len) throw ContractError("decoding past max_len");
  if (state.self_k.empty() || static_cast<int64_t>(state.self_k[0].size()) != n)
    throw ContractError("hypothesis count does not match decoder state");

  const auto& pe = model_.positions(t + 1);
  const T emb_scale = static_cast<T>(std::sqrt(static_cast<double>(d)));
  Tensor<T> x({n, d});
  for (int64_t i = 0; i < n; ++i) {
    const int64_t tok = last_tokens[static_cast<size_t>(i)];
    if (tok < 0 || tok >= table.rows()) throw IndexError("decoder input id out of range");
    for (int64_t c = 0; c < d; ++c) x(i, c) = table(tok, c) * emb_scale + pe(t, c);
  }
  std::vector<T> scores;
  const auto& layers = model_.decoder_layers();
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Tensor<T> h = layer_norm(x, layer.ln_self);
    Tensor<T> q = affine(h, *layer.self_attn.wq, *layer.self_attn.bq);
    Tensor<T> k = affine(h, *layer.self_attn.wk, *layer.self_attn.bk);
    Tensor<T> v = affine(h, *layer.self_attn.wv, *layer.self_attn.bv);
    Tensor<T> o({n, d});
    for (int64_t i = 0; i < n; ++i) {
      auto& kc = state.self_k[l][static_cast<size_t>(i)];
      auto& vc = state.self_v[l][static_cast<size_t>(i)];
      kc.insert(kc.end(), k.data() + i * d, k.data() + (i + 1) * d);
      vc.insert(vc.end(), v.data() + i * d, v.data() + (i + 1) * d);
      attend(q.data() + i * d, kc.data(), vc.data(), t + 1, d, cfg.heads, o.data() + i * d, scores);
    }
    add_into(x, affine(o, *layer.self_attn.wo, *layer.self_attn.bo));

    h = layer_norm(x, layer.ln_cross);
    q = affine(h, *layer.cross_attn.wq, *layer.cross_attn.bq);
    Tensor<T> co({n, d});
    const auto& ck = state.cross_k[l];
    for (int64_t i = 0; i < n; ++i)
      attend(q.data() + i * d, ck.data(), state.cross_v[l].data(), ck.rows(), d, cfg.heads, co.data() + i * d, scores);
    add_into(x, affine(co, *layer.cross_attn.wo, *layer.cross_attn.bo));

    h = layer_norm(x, layer.ln_ffn);
    Tensor<T> f = affine(h, *layer.ffn.w1, *layer.ffn.b1);
    for (auto& z : f.values()) z = std::max(z, T(0));
    add_into(x, affine(f, *layer.ffn.w2, *layer.ffn.b2));
  }
  ++state.steps;

  Tensor<T> h = layer_norm(x, model_.decoder_norm());
  const Tensor<T>& out_w = model_.output_projection() != nullptr ? model_.output_projection()->value : table;
  Tensor<T> logits = ops::matmul(h, out_w, false, true);
  Tensor<T> logp({n, logits.cols()});
  const auto& banned = model_.banned_targets();
  for (int64_t i = 0; i < n; ++i) {
    ops::log_softmax_row<T>(logits.row(i), logp.row(i));
    for (int64_t j = 0; j < logp.cols(); ++j)
      if (banned[static_cast<size_t>(j)]) logp(i, j) = -std::numeric_limits<T>::infinity();
  }
  return logp;
}

template <typename T>
void Translator<T>::reorder(State& state, std::span<const int64_t> parents) {
  for (auto* caches : {&state.self_k, &state.self_v}) {
    for (auto& per_hyp : *caches) {
      std::vector<std::vector<T>> next;
      next.reserve(parents.size());
      for (int64_t p : parents) next.push_back(per_hyp.at(static_cast<size_t>(p)));
      per_hyp = std::move(next);
    }
  }
}

template <typename T>
std::vector<int32_t> Translator<T>::greedy(std::span<const int32_t> src, int64_t max_len) {
  if (max_len <= 0) max_len = model_.config().max_len;
  State state = start(src);
  std::vector<int32_t> out;
  int32_t last = SubwordVocab::kBosId;
  // The last slot is reserved for the EOS that ends every output.
  for (int64_t t = 0; t + 1 < max_len; ++t) {
    const Tensor<T> logp = step(state, std::span<const int32_t>(&last, 1));
    int64_t best = 0;
    for (int64_t j = 1; j < logp.cols(); ++j)
      if (logp(0, j) > logp(0, best)) best = j;
    if (best == SubwordVocab::kEosId) break;
    last = static_cast<int32_t>(best);
    out.push_back(last);
  }
  return out;
}

template <typename T>
std::vector<int32_t> Translator<T>::beam(std::span<const int32_t> src, const DecodeOptions& options) {
  if (options.beam < 1) throw ConfigError("beam must be >= 1");
  const int64_t max_len = options.max_len > 0 ? options.max_len : model_.config().max_len;
  const auto width = static_cast<size_t>(options.beam);
  struct Hyp {
    std::vector<int32_t> tokens;
    double score;
  };
  struct Finished {
    std::vector<int32_t> tokens;
    double normalized;
  };
  struct Candidate {
    double total;
    T logp;
    int64_t parent;
    int64_t token;
  };
  auto normalized = [&](const Hyp& h, double score) {
    return score / std::pow(static_cast<double>(h.tokens.size() + 1), options.length_alpha);
  };

  State state = start(src);
  std::vector<Hyp> alive = {{{}, 0.0}};
  std::vector<Finished> finished;
  std::vector<Candidate> cands;
  for (int64_t t = 0; !alive.empty() && finished.size() < width; ++t) {
    std::vector<int32_t> last;
    for (const auto& h : alive) last.push_back(h.tokens.empty() ? SubwordVocab::kBosId : h.tokens.back());
    const Tensor<T> logp = step(state, last);
    if (t + 1 >= max_len) {
      for (size_t i = 0; i < alive.size(); ++i)
        finished.push_back(
            {alive[i].tokens, normalized(alive[i], alive[i].score + logp(static_cast<int64_t>(i), SubwordVocab::kEosId))});
      break;
    }
    cands.clear();
    for (size_t i = 0; i < alive.size(); ++i)
      for (int64_t j = 0; j < logp.cols(); ++j) {
        const T lp = logp(static_cast<int64_t>(i), j);
        if (lp == -std::numeric_limits<T>::infinity()) continue;
        cands.push_back({alive[i].score + static_cast<double>(lp), lp, static_cast<int64_t>(i), j});
      }
    const size_t keep = std::min(cands.size(), 2 * width);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.total != b.total) return a.total > b.total;
                        if (a.logp != b.logp) return a.logp > b.logp;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hyp> next;
    std::vector<int64_t> parents;
    for (size_t r = 0; r < keep && next.size() < width; ++r) {
      const auto& c = cands[r];
      const Hyp& parent = alive[static_cast<size_t>(c.parent)];
      if (c.token == SubwordVocab::kEosId) {
        if (r < width) finished.push_back({parent.tokens, normalized(parent, c.total)});
        continue;
      }
      Hyp h{parent.tokens, c.total};
      h.tokens.push_back(static_cast<int32_t>(c.token));
      next.push_back(std::move(h));
      parents.push_back(c.parent);
    }
    alive = std::move(next);
    if (!alive.empty()) reorder(state, parents);
  }
  if (finished.empty()) return {};
  size_t best = 0;
  for (size_t i = 1; i < finished.size(); ++i)
    if (finished[i].normalized > finished[best].normalized) best = i;
  return finished[best].tokens;
}

template <typename T>
std::vector<std::vector<int32_t>> Translator<T>::translate(std::span<const std::vector<int32_t>> sources,
                                                           const DecodeOptions& options) {
  std::vector<std::vector<int32_t>> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(beam(s, options));
  return out;
}

template class Translator<float>;
template class Translator<double>;

}  // namespace decsde::nmt
