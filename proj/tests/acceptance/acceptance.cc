// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "decsde/chargrams/ngram_vocab.h"
#include "decsde/cli/experiment.h"
#include "decsde/cli/pipeline.h"
#include "decsde/common/alloc.h"
#include "decsde/common/error.h"
#include "decsde/common/random.h"
#include "decsde/common/utf8.h"
#include "decsde/embedding/decsde.h"
#include "decsde/evalbench/bleu.h"
#include "decsde/evalbench/similarity.h"
#include "decsde/evalbench/synthetic.h"
#include "decsde/nmt/decode.h"
#include "decsde/nmt/transformer.h"
#include "decsde/numkernel/gradcheck.h"

namespace fs = std::filesystem;
using namespace decsde;
using embedding::DecSDE;
using embedding::DecSDEConfig;
using embedding::EmbedMode;
using embedding::LanguageId;
using embedding::TransformKind;
using nmt::ModelConfig;
using nmt::Transformer;
using numkernel::Parameter;
using numkernel::ParameterSet;
using numkernel::Tape;
using numkernel::Tensor;
using numkernel::Var;
using segmenter::SubwordVocab;
namespace ops = decsde::numkernel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

const std::string kMark = "\xe2\x96\x81";

std::string random_token(Rng& rng, int max_len) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "i", "k", "o", "r", "s",
                                                    "t", "u", "é", "ñ", "ü", "ş"};
  std::string t = rng.below(2) ? kMark : "";
  const int len = 1 + static_cast<int>(rng.below(max_len));
  for (int i = 0; i < len; ++i) t += alphabet[rng.below(alphabet.size())];
  return t;
}

// Vocabulary of exactly `size` ids (specials included) with distinct random tokens.
SubwordVocab random_vocab(Rng& rng, int64_t size, int max_len, const std::vector<std::string>& langs) {
  SubwordVocab v(langs);
  while (v.size() < size) {
    auto t = random_token(rng, max_len);
    if (!v.contains(t)) v.add(t, 1);
  }
  return v;
}

template <typename T>
void randomize(Parameter<T>& p, Rng& rng, double bound) {
  for (auto& x : p.value.values()) x = static_cast<T>(rng.uniform(-bound, bound));
}

// 1. Finite-difference gradient suite -----------------------------------------

Outcome gradient_suite() {
  const auto start = Clock::now();
  const std::vector<std::string> langs = {"aaa", "bbb"};
  const EmbedMode modes[] = {EmbedMode::kDecSDE, EmbedMode::kDecSDENoTying, EmbedMode::kDecSDEFullTransform,
                             EmbedMode::kDecSDENoTransform};
  double worst = 0;
  std::string worst_where;
  int64_t entries = 0;
  std::set<std::string> kinds_seen;
  const int configs = 24;
  for (int i = 0; i < configs; ++i) {
    Rng rng(mix_seed(2024, static_cast<uint64_t>(i)));
    ModelConfig c;
    c.embed_mode = modes[i % 4];
    c.dim = 2 * (1 + static_cast<int64_t>(rng.below(4)));  // 2..8
    c.heads = c.dim % 4 == 0 && rng.below(2) ? 2 : 1;
    c.ffn_dim = c.dim + 2;
    c.enc_layers = 1;
    c.dec_layers = 1;
    c.dropout = 0.0;
    c.max_len = 10;
    c.latent_size = 1 + static_cast<int64_t>(rng.below(6));  // 1..6
    const int64_t max_u = std::min<int64_t>(2, c.dim - 1);
    const int64_t u0 = 1 + static_cast<int64_t>(rng.below(max_u));  // U/V always present for aaa
    const int64_t u1 = static_cast<int64_t>(rng.below(max_u + 1));
    c.languages = {{"aaa", u0}, {"bbb", u1}};

    SubwordVocab src(langs);
    for (const char* w : {"x", "y", "z"}) src.add(w, 1);
    auto tgt = random_vocab(rng, src.num_specials() + 4 + static_cast<int64_t>(rng.below(3)), 4, langs);
    auto full = chargrams::build_ngram_vocab(tgt, 3);
    std::vector<std::pair<std::string, int64_t>> grams;
    for (int64_t g = 0; g < std::min<int64_t>(20, full.size()); ++g) grams.emplace_back(full.gram(g), full.count(g));
    chargrams::NGramVocab ngv(grams, 3, 1);

    Transformer<double> model(c, src, tgt, &ngv, rng);
    for (auto* p : model.params().all())
      for (auto& x : p->value.values()) x += rng.uniform(-0.3, 0.3);

    const auto lang = model.language(rng.below(2) ? "aaa" : "bbb");
    std::vector<nmt::SentencePair> pairs;
    for (int b = 0; b < 2; ++b) {
      nmt::SentencePair p;
      for (int k = 0; k < 1 + static_cast<int>(rng.below(3)); ++k)
        p.src.push_back(src.num_specials() + static_cast<int32_t>(rng.below(3)));
      for (int k = 0; k < 1 + static_cast<int>(rng.below(3)); ++k)
        p.tgt.push_back(tgt.num_specials() + static_cast<int32_t>(rng.below(tgt.size() - tgt.num_specials())));
      pairs.push_back(p);
    }
    const auto batch = nmt::make_batch(std::span<const nmt::SentencePair>(pairs), lang, model.src_flag(lang), c.max_len);
    auto loss = [&](Tape<double>& t) { return model.loss(t, batch, 0.1, nullptr); };
    const auto report = ops::finite_diff_check<double>(loss, model.params().all(), {});
    entries += report.entries_checked;
    if (report.max_rel_error > worst) {
      worst = report.max_rel_error;
      worst_where = "config " + std::to_string(i) + " " + report.worst_param;
    }
    for (const auto& [name, err] : report.per_param) kinds_seen.insert(name);
  }
  const double secs = seconds_since(start);
  std::string missing;
  for (const std::string k : {".W_c", ".W_s", ".special", ".U.", ".V.", ".W_L."}) {
    if (std::none_of(kinds_seen.begin(), kinds_seen.end(),
                     [&](const std::string& name) { return name.find(k) != std::string::npos; }))
      missing += " " + k;
  }
  const bool pass = worst < 1e-4 && secs < 60 && missing.empty();
  return {pass, std::to_string(configs) + " configs, " + std::to_string(entries) + " entries, max rel err " +
                    fmt(worst) + " (" + worst_where + "), " + fmt(secs, 3) + " s" +
                    (missing.empty() ? "" : ", unchecked:" + missing)};
}

// 2. Straight-line oracle -----------------------------------------------------

using Matrix = std::vector<std::vector<double>>;

Matrix dense(const Tensor<double>& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (int64_t r = 0; r < t.rows(); ++r)
    for (int64_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& x) {
  std::vector<double> y(m.size(), 0.0);
  for (size_t r = 0; r < m.size(); ++r)
    for (size_t c = 0; c < x.size(); ++c) y[r] += m[r][c] * x[c];
  return y;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m[0].size(), std::vector<double>(m.size()));
  for (size_t r = 0; r < m.size(); ++r)
    for (size_t c = 0; c < m[0].size(); ++c) t[c][r] = m[r][c];
  return t;
}

// e = c_i + W_s softmax(W_s^T c_i), c_i = tanh((I + U V) c), c = tanh(W_c BoN)
// with every matrix in column-vector orientation and BoN as a dense n-vector.
std::vector<double> straight_line_embed(const std::string& token, const chargrams::NGramVocab& ngv,
                                        const Matrix& w_c, const Matrix& w_s, const Matrix* u, const Matrix* v) {
  const size_t d = w_c.size(), n = w_c[0].size();
  const auto chars = utf8::split_chars(token);
  std::vector<double> bon(n, 0.0);
  for (size_t i = 0; i < chars.size(); ++i) {
    std::string gram;
    for (size_t len = 1; len <= static_cast<size_t>(ngv.n_max()) && i + len <= chars.size(); ++len) {
      gram += chars[i + len - 1];
      const int64_t id = ngv.find(gram);
      if (id >= 0) bon[static_cast<size_t>(id)] += 1.0;
    }
  }
  auto c = mat_vec(w_c, bon);
  for (auto& x : c) x = std::tanh(x);

  Matrix m(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) m[i][i] = 1.0;
  if (u != nullptr) {
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j)
        for (size_t a = 0; a < (*v).size(); ++a) m[i][j] += (*u)[i][a] * (*v)[a][j];
  }
  auto ci = mat_vec(m, c);
  for (auto& x : ci) x = std::tanh(x);

  auto logits = mat_vec(transpose(w_s), ci);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (auto& l : logits) z += (l = std::exp(l - mx));
  for (auto& l : logits) l /= z;
  auto s = mat_vec(w_s, logits);
  for (size_t k = 0; k < d; ++k) ci[k] += s[k];
  return ci;
}

Outcome dense_reference_oracle() {
  Rng rng(77);
  const std::vector<std::string> langs = {"hrl", "lrl"};
  auto vocab = random_vocab(rng, 1000 + 6, 7, langs);
  auto ngv = chargrams::build_ngram_vocab(vocab, 4);
  DecSDEConfig cfg;
  cfg.dim = 16;
  cfg.latent_size = 24;
  cfg.languages = {{"hrl", 3}, {"lrl", 5}};
  ParameterSet<double> params;
  DecSDE<double> model(params, vocab, ngv, cfg, rng);
  for (auto* p : params.all()) randomize(*p, rng, 0.5);

  // Column-vector forms: W_c [d x n], W_s [d x s], U [d x u], V [u x d].
  const Matrix w_c = transpose(dense(model.w_c().value)), w_s = transpose(dense(model.w_s().value));
  double worst = 0;
  int64_t tokens = 0;
  for (const auto& code : langs) {
    const auto lang = model.languages().get(code);
    const Matrix u = dense(model.u(lang)->value), v = dense(model.v(lang)->value);
    for (int64_t id = vocab.num_specials(); id < vocab.size(); ++id, ++tokens) {
      const auto got = model.embed_token(id, lang);
      const auto want = straight_line_embed(vocab.token(static_cast<int32_t>(id)), ngv, w_c, w_s, &u, &v);
      for (int64_t k = 0; k < cfg.dim; ++k) worst = std::max(worst, std::abs(got[k] - want[static_cast<size_t>(k)]));
    }
  }
  return {worst <= 1e-6 && tokens == 2000,
          std::to_string(tokens) + " (token, language) embeddings, max abs diff " + fmt(worst)};
}

// 3. Precompute equivalence and stale rejection ------------------------------

template <typename T>
double precompute_gap(Rng& rng, const SubwordVocab& vocab, const chargrams::NGramVocab& ngv, int64_t* rows) {
  DecSDEConfig cfg;
  cfg.dim = 64;
  cfg.latent_size = 256;
  cfg.languages = {{"hrl", 16}, {"lrl", 16}};
  ParameterSet<T> params;
  DecSDE<T> model(params, vocab, ngv, cfg, rng);
  for (auto* p : params.all()) randomize(*p, rng, 0.2);
  double worst = 0;
  for (const auto& code : {"hrl", "lrl"}) {
    const auto lang = model.languages().get(code);
    const auto table = model.precompute_table(lang);
    for (int64_t id = 0; id < vocab.size(); ++id, ++*rows) {
      const auto e = model.embed_token(id, lang);
      for (int64_t k = 0; k < cfg.dim; ++k)
        worst = std::max(worst, static_cast<double>(std::abs(table.matrix(id, k) - e[k])));
    }
  }
  return worst;
}

Outcome precompute_equivalence() {
  Rng rng(31);
  const std::vector<std::string> langs = {"hrl", "lrl"};
  const auto vocab = random_vocab(rng, 2000, 8, langs);
  const auto ngv = chargrams::build_ngram_vocab(vocab, 4);
  int64_t rows32 = 0, rows64 = 0;
  const double gap32 = precompute_gap<float>(rng, vocab, ngv, &rows32);
  const double gap64 = precompute_gap<double>(rng, vocab, ngv, &rows64);

  // A table computed before an update must be refused everywhere.
  ModelConfig c;
  c.dim = 8;
  c.ffn_dim = 8;
  c.heads = 2;
  c.enc_layers = c.dec_layers = 1;
  c.latent_size = 4;
  c.languages = {{"hrl", 2}, {"lrl", 2}};
  SubwordVocab src(langs);
  src.add("x", 1);
  Transformer<float> model(c, src, vocab, &ngv, rng);
  const auto lang = model.language("lrl");
  auto table = model.target_embedding().precompute_table(lang);
  const bool fresh_ok = !table.stale();
  model.decsde()->w_c().value(0, 0) += 0.5f;
  model.decsde()->w_c().touch();
  int refused = 0;
  try {
    table.checked();
  } catch (const StaleTableError&) {
    ++refused;
  }
  try {
    nmt::Translator<float> translator(model, table);
    const std::vector<int32_t> s = {6};
    translator.greedy(s, 3);
  } catch (const StaleTableError&) {
    ++refused;
  }
  const bool pass = vocab.size() == 2000 && gap32 <= 1e-6 && gap64 <= 1e-6 && fresh_ok && refused == 2;
  return {pass, std::to_string(rows32) + " rows: max diff float " + fmt(gap32) + ", double " + fmt(gap64) +
                    "; stale table refused " + std::to_string(refused) + "/2"};
}

// 4. Weight tying --------------------------------------------------------------

struct TinyWorld {
  TinyWorld(EmbedMode mode, uint64_t seed) : src(langs), tgt(langs), rng(seed) {
    for (const char* w : {"x", "y", "z", "w"}) src.add(w, 1);
    for (const char* w : {"▁ab", "ab", "ba", "▁c", "cab", "b", "▁dd"}) tgt.add(w, 1);
    ngv = chargrams::build_ngram_vocab(tgt, 3);
    config.dim = 8;
    config.ffn_dim = 12;
    config.heads = 2;
    config.enc_layers = config.dec_layers = 1;
    config.dropout = 0.0;
    config.max_len = 12;
    config.latent_size = 5;
    config.embed_mode = mode;
    config.languages = {{"hrl", 2}, {"lrl", 3}};
    model = std::make_unique<Transformer<double>>(config, src, tgt, &ngv, rng);
    for (auto* p : model->params().all())
      for (auto& x : p->value.values()) x += rng.uniform(-0.2, 0.2);
  }
  std::vector<std::string> langs = {"hrl", "lrl"};
  SubwordVocab src, tgt;
  chargrams::NGramVocab ngv;
  Rng rng;
  ModelConfig config;
  std::unique_ptr<Transformer<double>> model;
};

Outcome weight_tying() {
  TinyWorld tied(EmbedMode::kDecSDE, 3), untied(EmbedMode::kDecSDENoTying, 3);
  const int64_t v = tied.tgt.size(), d = tied.config.dim;
  const int64_t extra = untied.model->params().count() - tied.model->params().count();
  const bool counts_ok = tied.model->output_projection() == nullptr && untied.model->output_projection() != nullptr &&
                         extra == v * d;

  // Decoder inputs and logits for one batch, under the current parameters.
  auto probe = [](TinyWorld& w, Tensor<double>* inputs, Tensor<double>* logits) {
    const auto lang = w.model->language("lrl");
    std::vector<nmt::SentencePair> pairs = {{{6, 7}, {8, 10, 12}}};
    const auto batch = nmt::make_batch(std::span<const nmt::SentencePair>(pairs), lang, w.model->src_flag(lang), 12);
    Tape<double> tape(false);
    Var table = w.model->target_table(tape, lang);
    *inputs = tape.value(ops::gather_rows(tape, table, batch.tgt_in));
    w.model->loss(tape, batch, 0.0, nullptr, logits);
  };
  Tensor<double> in0, in1, lg0, lg1;
  probe(tied, &in0, &lg0);
  const int64_t gram = tied.ngv.find("a");
  tied.model->decsde()->w_c().value(gram, 0) += 0.3;
  tied.model->decsde()->w_c().touch();
  probe(tied, &in1, &lg1);
  const double d_in = ops::max_abs_diff(in0, in1), d_logit = ops::max_abs_diff(lg0, lg1);

  // Untied control: the projection alone moves logits but not inputs.
  Tensor<double> uin0, uin1, ulg0, ulg1;
  probe(untied, &uin0, &ulg0);
  untied.model->output_projection()->value(8, 0) += 0.3;
  untied.model->output_projection()->touch();
  probe(untied, &uin1, &ulg1);
  const bool control_ok = ops::max_abs_diff(uin0, uin1) == 0.0 && ops::max_abs_diff(ulg0, ulg1) > 0.0;

  const bool pass = counts_ok && d_in > 1e-9 && d_logit > 1e-9 && control_ok;
  return {pass, "params tied " + std::to_string(tied.model->params().count()) + " vs untied " +
                    std::to_string(untied.model->params().count()) + " (diff " + std::to_string(extra) + " = V*d " +
                    std::to_string(v * d) + "); shared W_c nudge moves inputs by " + fmt(d_in) + " and logits by " +
                    fmt(d_logit)};
}

// 5. Low-rank identity and ablation structure ---------------------------------

Outcome low_rank_identity() {
  Rng rng(5);
  const std::vector<std::string> langs = {"hrl", "lrl"};
  const auto vocab = random_vocab(rng, 60, 5, langs);
  const auto ngv = chargrams::build_ngram_vocab(vocab, 3);
  DecSDEConfig cfg;
  cfg.dim = 12;
  cfg.latent_size = 6;
  cfg.languages = {{"hrl", 0}, {"lrl", 4}};
  ParameterSet<double> params;
  DecSDE<double> model(params, vocab, ngv, cfg, rng);
  const auto hrl = model.languages().get("hrl"), lrl = model.languages().get("lrl");
  randomize(*model.v(lrl), rng, 1.0);  // U stays at its zero start
  const auto& u = model.u(lrl)->value.values();
  bool exact = model.u(hrl) == nullptr && std::all_of(u.begin(), u.end(), [](double x) { return x == 0.0; });
  Tensor<double> c({40, cfg.dim});
  for (auto& x : c.values()) x = rng.uniform(-3, 3);
  for (const auto& lang : {hrl, lrl}) {
    Tape<double> tape(false);
    const auto out = tape.value(model.lang_transform(tape, tape.constant(c), lang));
    for (size_t i = 0; i < c.size(); ++i) exact = exact && out[i] == std::tanh(c[i]);
  }

  // Structural variants: parameter counts follow the removed or added parts.
  std::map<EmbedMode, int64_t> counts;
  std::map<EmbedMode, std::set<std::string>> names;
  for (auto mode : {EmbedMode::kDecSDE, EmbedMode::kDecSDENoTying, EmbedMode::kDecSDEFullTransform,
                    EmbedMode::kDecSDENoTransform, EmbedMode::kLookupPiece}) {
    TinyWorld w(mode, 9);
    counts[mode] = w.model->params().count();
    for (auto* p : w.model->params().all()) names[mode].insert(p->name);
  }
  TinyWorld ref(EmbedMode::kDecSDE, 9);
  const int64_t d = ref.config.dim, v = ref.tgt.size(), n = ref.ngv.size(), s = ref.config.latent_size;
  const int64_t backbone = counts[EmbedMode::kLookupPiece] - v * d;
  const int64_t sde = n * d + s * d + ref.tgt.num_specials() * d;
  const int64_t low_rank = 2 * d * (2 + 3);
  const bool counts_ok = counts[EmbedMode::kDecSDE] == backbone + sde + low_rank &&
                         counts[EmbedMode::kDecSDENoTying] == backbone + sde + low_rank + v * d &&
                         counts[EmbedMode::kDecSDEFullTransform] == backbone + sde + 2 * d * d &&
                         counts[EmbedMode::kDecSDENoTransform] == backbone + sde;
  std::set<int64_t> distinct_counts;
  std::set<std::set<std::string>> distinct_names;
  for (auto mode : {EmbedMode::kDecSDE, EmbedMode::kDecSDENoTying, EmbedMode::kDecSDEFullTransform,
                    EmbedMode::kDecSDENoTransform}) {
    distinct_counts.insert(counts[mode]);
    distinct_names.insert(names[mode]);
  }
  const bool pass = exact && counts_ok && distinct_counts.size() == 4 && distinct_names.size() == 4;
  std::string detail = std::string("u=0 and U=0 give tanh(c) ") + (exact ? "exactly" : "NOT exactly") + "; counts";
  for (auto mode : {EmbedMode::kDecSDE, EmbedMode::kDecSDENoTying, EmbedMode::kDecSDEFullTransform,
                    EmbedMode::kDecSDENoTransform})
    detail += " " + embedding::embed_mode_name(mode) + "=" + std::to_string(counts[mode]);
  return {pass, detail + (counts_ok ? "" : " (formula mismatch)")};
}

// 6-8. Synthetic transfer experiment -------------------------------------------

class SyntheticRuns {
 public:
  explicit SyntheticRuns(fs::path root) : root_(std::move(root)) {}

  const fs::path& data_dir() {
    if (!data_ready_) {
      const auto start = Clock::now();
      evalbench::SyntheticConfig syn;
      evalbench::write_synthetic_pair(evalbench::make_synthetic_pair(syn), root_ / "data");
      data_ready_ = true;
      seconds_ += seconds_since(start);
    }
    data_dir_ = root_ / "data";
    return data_dir_;
  }

  cli::ExperimentConfig config(const std::string& mode, uint64_t seed,
                               std::vector<std::pair<std::string, std::string>> extra = {}) {
    const fs::path data = data_dir();
    std::vector<std::pair<std::string, std::string>> o = {
        {"embed_mode", mode}, {"seed", std::to_string(seed)}, {"work_dir", (root_ / (mode + "_s" + std::to_string(seed))).string()}};
    for (const char* split : {"train.hrl", "train.lrl", "dev.lrl", "test.lrl"}) {
      const std::string file = std::string(split).substr(std::string(split).find('.') + 1) + "." +
                               std::string(split).substr(0, std::string(split).find('.'));
      o.emplace_back(std::string(split) + ".src", (data / (file + ".src")).string());
      o.emplace_back(std::string(split) + ".tgt", (data / (file + ".tgt")).string());
    }
    for (auto& kv : extra) o.push_back(std::move(kv));
    return cli::ExperimentConfig::load(fs::path(DECSDE_EXPERIMENTS_DIR) / "synthetic" / "base.cfg", o);
  }

  struct Run {
    cli::ExperimentConfig cfg;
    double bleu = 0;
    double train_sec = 0;
    int64_t tgt_vocab = 0;
  };

  // Builds vocabularies, trains and scores the LRL test set once per process.
  const Run& run(const std::string& mode, uint64_t seed) {
    const auto key = mode + "/" + std::to_string(seed);
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    const auto start = Clock::now();
    auto cfg = config(mode, seed);
    fs::remove_all(cfg.work_dir);
    cli::build_vocab(cfg);
    if (cfg.uses_ngrams()) cli::build_ngrams(cfg);
    const auto summary = cli::train<float>(cfg, false, nullptr);
    cli::Session<float> session(cfg);
    session.load_checkpoint(cli::default_checkpoint(cfg));
    const auto report = cli::evaluate_test(session, "lrl", cfg.decoding);
    Run r{cfg, report.score, summary.seconds, session.tgt_tokenizer().vocab().size()};
    seconds_ += seconds_since(start);
    std::cout << "  " << mode << " seed " << seed << ": BLEU " << fmt(report.score) << ", " << summary.epochs
              << " epochs in " << fmt(summary.seconds, 3) << " s, dev ppl " << fmt(summary.best_dev_ppl) << "\n"
              << std::flush;
    return runs_.emplace(key, std::move(r)).first->second;
  }

  double seconds() const { return seconds_; }

 private:
  fs::path root_;
  fs::path data_dir_;
  bool data_ready_ = false;
  double seconds_ = 0;
  std::map<std::string, Run> runs_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome synthetic_transfer(SyntheticRuns& runs) {
  std::vector<double> sde, piece;
  for (uint64_t seed : {1, 2, 3}) {
    sde.push_back(runs.run("decsde", seed).bleu);
    piece.push_back(runs.run("lookup_piece", seed).bleu);
  }
  const double secs = runs.seconds();
  const double m_sde = median(sde), m_piece = median(piece);
  const auto vocab = runs.run("decsde", 1).tgt_vocab;
  const bool pass = m_sde >= m_piece && secs < 900;
  return {pass, "median LRL BLEU decsde " + fmt(m_sde) + " vs lookup_piece " + fmt(m_piece) + " over 3 seeds; " +
                    "target vocab " + std::to_string(vocab) + "; " + fmt(secs, 4) + " s total"};
}

Outcome embedding_gain(SyntheticRuns& runs) {
  const auto& model = runs.run("decsde", 1);
  const auto& base = runs.run("lookup_piece", 1);
  std::vector<std::string> hrl_words;
  std::vector<evalbench::WordPair> pairs;
  std::vector<evalbench::MrrBucket> model_mrr, base_mrr;
  {
    cli::Session<float> s(model.cfg);
    s.load_checkpoint(cli::default_checkpoint(model.cfg));
    hrl_words = cli::single_token_words(model.cfg, s.tgt_tokenizer(), "hrl", 1000);
    const auto lrl_words = cli::single_token_words(model.cfg, s.tgt_tokenizer(), "lrl", 1000);
    pairs = evalbench::extract_word_pairs(hrl_words, lrl_words, 1);
    model_mrr = cli::embedding_mrr(s, "hrl", "lrl", hrl_words, pairs);
  }
  {
    cli::Session<float> s(base.cfg);
    s.load_checkpoint(cli::default_checkpoint(base.cfg));
    base_mrr = cli::embedding_mrr(s, "hrl", "lrl", hrl_words, pairs);
  }
  for (const auto& g : evalbench::mrr_gain(model_mrr, base_mrr)) {
    if (g.distance != 1) continue;
    return {g.gain > 0 && g.pairs > 0, std::to_string(g.pairs) + " distance-1 pairs: MRR decsde " + fmt(g.model) +
                                           " vs lookup_piece " + fmt(g.baseline) + ", gain " + fmt(g.gain)};
  }
  return {false, "no distance-1 word pairs found"};
}

// One decoder per model, timed in alternating rounds so machine noise lands
// on both sides alike.
struct DecodeSide {
  explicit DecodeSide(const cli::ExperimentConfig& c) : cfg(c), session(c) {
    session.load_checkpoint(cli::default_checkpoint(cfg));
    for (const auto& line : cli::read_lines(cfg.find(cfg.test, "lrl")->src))
      sources.push_back(session.src_tokenizer().encode(line));
    const auto t0 = Clock::now();
    translator.emplace(session.model(), session.model().language("lrl"));
    precompute_sec = seconds_since(t0);
  }
  double decode() {
    const auto t0 = Clock::now();
    tokens = 0;
    for (const auto& out : translator->translate(sources, cfg.decoding)) tokens += static_cast<int64_t>(out.size());
    return seconds_since(t0);
  }
  const cli::ExperimentConfig& cfg;
  cli::Session<float> session;
  std::optional<nmt::Translator<float>> translator;
  std::vector<std::vector<int32_t>> sources;
  double precompute_sec = 0;
  int64_t tokens = 0;
};

Outcome decode_speed(SyntheticRuns& runs) {
  DecodeSide model(runs.run("decsde", 1).cfg);
  DecodeSide base(runs.run("lookup_piece", 1).cfg);
  model.decode();
  base.decode();
  std::vector<double> a, b;
  for (int round = 0; round < 15; ++round) {
    a.push_back(model.decode());
    b.push_back(base.decode());
  }
  const double ratio = median(a) / median(b);
  const double per_token = (median(a) / static_cast<double>(model.tokens)) / (median(b) / static_cast<double>(base.tokens));
  std::vector<double> train_ratio;
  for (uint64_t seed : {1, 2, 3})
    train_ratio.push_back(runs.run("decsde", seed).train_sec / runs.run("lookup_piece", seed).train_sec);
  return {ratio <= 1.25, "decode decsde " + fmt(median(a), 3) + " s (" + std::to_string(model.tokens) +
                             " tokens, table " + fmt(model.precompute_sec, 3) + " s) vs lookup_piece " +
                             fmt(median(b), 3) + " s (" + std::to_string(base.tokens) + " tokens), 15 interleaved rounds: ratio " +
                             fmt(ratio, 3) + ", per token " + fmt(per_token, 3) + "; training time ratio " +
                             fmt(median(train_ratio), 3) + " (informational)"};
}

// 9. Determinism ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// train_log.csv without the timing column.
std::vector<std::string> loss_curve(const fs::path& log) {
  std::vector<std::string> rows;
  std::ifstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 6 || cols[0] == "epoch") continue;
    rows.push_back(cols[0] + "," + cols[1] + "," + cols[2] + "," + cols[3] + "," + cols[5]);
  }
  return rows;
}

Outcome determinism(SyntheticRuns& runs) {
  const std::vector<std::pair<std::string, std::string>> small = {
      {"dim", "32"}, {"ffn_dim", "64"}, {"heads", "2"}, {"enc_layers", "1"}, {"dec_layers", "1"},
      {"latent_size", "64"}, {"u", "4"}, {"dropout", "0.1"}, {"max_epochs", "3"}};
  auto cfg = runs.config("decsde", 11, small);
  auto fresh = [&](const cli::ExperimentConfig& c) {
    fs::remove_all(c.work_dir);
    cli::build_vocab(c);
    cli::build_ngrams(c);
  };
  fresh(cfg);
  cli::train<float>(cfg, false, nullptr);
  const auto first = slurp(cfg.checkpoint("last.ckpt"));
  const auto first_curve = loss_curve(cfg.work_dir / "train_log.csv");

  fresh(cfg);
  cli::train<float>(cfg, false, nullptr);
  const bool same = slurp(cfg.checkpoint("last.ckpt")) == first && !first.empty();

  fresh(cfg);
  auto partial = small;
  partial.back() = {"max_epochs", "1"};
  cli::train<float>(runs.config("decsde", 11, partial), false, nullptr);
  cli::train<float>(cfg, true, nullptr);
  const bool resumed = slurp(cfg.checkpoint("last.ckpt")) == first;
  const bool curve = loss_curve(cfg.work_dir / "train_log.csv") == first_curve && first_curve.size() == 3;
  return {same && resumed && curve, std::string("two fresh runs ") + (same ? "bit-identical" : "DIFFER") +
                                        "; 1+2 epoch resume " + (resumed ? "bit-identical" : "DIFFERS") +
                                        ", loss curve " + (curve ? "identical" : "DIFFERS") + " (" +
                                        std::to_string(first.size()) + " byte checkpoint)"};
}

// 10. BLEU ------------------------------------------------------------------------

Outcome bleu_correctness() {
  const std::vector<std::string> refs = {"the cat is on the mat", "there is a dog in the garden .",
                                         "A quick brown fox jumps over the lazy dog"};
  const double identical = evalbench::bleu_corpus(refs, refs).score;

  // Matches per order 5/6, 3/5, 1/4, 0/3; the empty 4-gram order smooths to
  // 1/(2*3); equal lengths give no brevity penalty: 100 * (1/48)^(1/4).
  const std::vector<std::string> hyp = {"the cat sat on the mat"}, ref = {"the cat is on the mat"};
  const double hand = evalbench::bleu_corpus(hyp, ref).score;
  const double hand_want = 37.99178428257963;

  Rng rng(8);
  std::vector<std::string> hyps, rs;
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g", "."};
  for (int i = 0; i < 40; ++i) {
    std::string h, r;
    for (int k = 0; k < 4 + static_cast<int>(rng.below(8)); ++k) h += (k ? " " : "") + words[rng.below(words.size())];
    for (int k = 0; k < 4 + static_cast<int>(rng.below(8)); ++k) r += (k ? " " : "") + words[rng.below(words.size())];
    hyps.push_back(h);
    rs.push_back(r);
  }
  const double base = evalbench::bleu_corpus(hyps, rs).score;
  double worst = 0;
  for (int t = 0; t < 10; ++t) {
    std::vector<size_t> perm(hyps.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::string> ph, pr;
    for (size_t i : perm) {
      ph.push_back(hyps[i]);
      pr.push_back(rs[i]);
    }
    worst = std::max(worst, std::abs(evalbench::bleu_corpus(ph, pr).score - base));
  }
  const bool pass = identical == 100.0 && std::abs(hand - hand_want) < 1e-4 && worst < 1e-9;
  return {pass, "identical " + fmt(identical, 6) + "; hand case " + fmt(hand, 8) + " (want " + fmt(hand_want, 8) +
                    "); permutation drift " + fmt(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  std::set<int> wanted;
  fs::path work = fs::current_path() / "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      work = fs::absolute(argv[++i]);
    } else {
      try {
        wanted.insert(std::stoi(a));
      } catch (const std::exception&) {
        std::cerr << "usage: " << argv[0] << " [--work-dir DIR] [criterion...]\n";
        return 2;
      }
    }
  }
  fs::create_directories(work);
  SyntheticRuns runs(work / "synthetic");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"dense reference oracle", dense_reference_oracle},
      {"precompute equivalence", precompute_equivalence},
      {"weight tying", weight_tying},
      {"low-rank identity and ablation variants", low_rank_identity},
      {"synthetic transfer", [&] { return synthetic_transfer(runs); }},
      {"embedding similarity gain", [&] { return embedding_gain(runs); }},
      {"decode speed", [&] { return decode_speed(runs); }},
      {"determinism", [&] { return determinism(runs); }},
      {"BLEU correctness", bleu_correctness},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(number)) continue;
    Outcome out;
    const auto start = Clock::now();
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    failures += out.pass ? 0 : 1;
    std::cout << "criterion " << number << " " << criteria[i].first << ": " << (out.pass ? "PASS" : "FAIL") << " ("
              << out.detail << "; " << fmt(seconds_since(start), 3) << " s)\n"
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
