#include "decsde/cli/pipeline.h"

#include <chrono>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "decsde/common/error.h"
#include "decsde/common/utf8.h"
#include "decsde/evalbench/rare_words.h"
#include "decsde/segmenter/bpe.h"

namespace decsde::cli {

namespace fs = std::filesystem;
using segmenter::SubwordVocab;
using numkernel::Tensor;
using segmenter::Tokenizer;

namespace {

constexpr uint64_t kInitStream = 0x1a17;
constexpr char kTableMagic[4] = {'D', 'S', 'T', 'B'};
constexpr uint32_t kTableVersion = 1;

Tokenizer load_src_tokenizer(const ExperimentConfig& cfg) {
  for (const auto& p : {cfg.src_vocab, cfg.src_merges})
    if (!fs::exists(p)) throw DataError("missing " + p.string() + " (run build-vocab)");
  return Tokenizer::bpe({segmenter::MergeTable::load(cfg.src_merges), SubwordVocab::load(cfg.src_vocab)});
}

Tokenizer load_tgt_tokenizer(const ExperimentConfig& cfg) {
  if (!fs::exists(cfg.tgt_vocab)) throw DataError("missing " + cfg.tgt_vocab.string() + " (run build-vocab)");
  if (cfg.word_level_target()) return Tokenizer::word(SubwordVocab::load(cfg.tgt_vocab));
  if (!fs::exists(cfg.tgt_merges)) throw DataError("missing " + cfg.tgt_merges.string() + " (run build-vocab)");
  return Tokenizer::bpe({segmenter::MergeTable::load(cfg.tgt_merges), SubwordVocab::load(cfg.tgt_vocab)});
}

void check_languages(const SubwordVocab& v, const ExperimentConfig& cfg, const fs::path& path) {
  if (v.languages() != cfg.languages)
    throw ConfigError(path.string() + " was built for other languages; rerun build-vocab");
}

uint64_t fnv1a(uint64_t h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename V>
void put(std::ostream& out, const V& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V get(std::istream& in, const fs::path& path) {
  V v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("truncated table file " + path.string());
  return v;
}

trainer::CheckpointInfo checkpoint_info(const ExperimentConfig& cfg) {
  trainer::CheckpointInfo info;
  info.config_text = cfg.to_string();
  info.files = {{"src_vocab", cfg.src_vocab.string()}, {"src_merges", cfg.src_merges.string()},
                {"tgt_vocab", cfg.tgt_vocab.string()}};
  if (!cfg.word_level_target()) info.files.emplace_back("tgt_merges", cfg.tgt_merges.string());
  if (cfg.uses_ngrams()) info.files.emplace_back("ngrams", cfg.ngrams.string());
  return info;
}

// Lowest dev perplexity logged so far, for resumed runs.
double best_logged_ppl(const fs::path& log) {
  double best = std::numeric_limits<double>::infinity();
  std::ifstream in(log);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) continue;
    try {
      best = std::min(best, std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
    }
  }
  return best;
}

}  // namespace

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

void build_vocab(const ExperimentConfig& cfg) {
  if (cfg.train.empty()) throw ConfigError("no training corpora configured (train.<lang>.src/tgt)");
  std::vector<std::string> src, tgt;
  std::vector<std::vector<std::string>> tgt_corpora;
  for (const auto& f : cfg.train) {
    auto s = read_lines(f.src);
    src.insert(src.end(), s.begin(), s.end());
    tgt_corpora.push_back(read_lines(f.tgt));
    tgt.insert(tgt.end(), tgt_corpora.back().begin(), tgt_corpora.back().end());
  }
  for (const auto& p : {cfg.src_vocab, cfg.src_merges, cfg.tgt_vocab, cfg.tgt_merges})
    if (p.has_parent_path()) fs::create_directories(p.parent_path());

  const auto src_model = segmenter::train_bpe(src, cfg.src_vocab_size, cfg.languages);
  src_model.vocab.save(cfg.src_vocab);
  src_model.merges.save(cfg.src_merges);
  if (cfg.word_level_target()) {
    const int64_t specials = 4 + static_cast<int64_t>(cfg.languages.size());
    segmenter::build_word_vocab(tgt_corpora, cfg.vocab_size - specials, cfg.languages).save(cfg.tgt_vocab);
  } else {
    const auto tgt_model = segmenter::train_bpe(tgt, cfg.vocab_size, cfg.languages);
    tgt_model.vocab.save(cfg.tgt_vocab);
    tgt_model.merges.save(cfg.tgt_merges);
  }
}

void build_ngrams(const ExperimentConfig& cfg) {
  if (!fs::exists(cfg.tgt_vocab)) throw DataError("missing " + cfg.tgt_vocab.string() + " (run build-vocab)");
  const auto vocab = SubwordVocab::load(cfg.tgt_vocab);
  if (cfg.ngrams.has_parent_path()) fs::create_directories(cfg.ngrams.parent_path());
  chargrams::build_ngram_vocab(vocab, cfg.n_max, cfg.ngram_min_count).save(cfg.ngrams);
}

template <typename T>
Session<T>::Session(const ExperimentConfig& cfg)
    : cfg_(cfg),
      src_tok_(load_src_tokenizer(cfg)),
      tgt_tok_(load_tgt_tokenizer(cfg)),
      rng_(mix_seed(cfg.training.seed, kInitStream)) {
  check_languages(src_tok_.vocab(), cfg, cfg.src_vocab);
  check_languages(tgt_tok_.vocab(), cfg, cfg.tgt_vocab);
  if (cfg.uses_ngrams()) {
    if (!fs::exists(cfg.ngrams)) throw DataError("missing " + cfg.ngrams.string() + " (run build-ngrams)");
    ngv_ = chargrams::NGramVocab::load(cfg.ngrams);
    if (ngv_->n_max() != cfg.n_max) {
      throw ConfigError(cfg.ngrams.string() + " holds n-grams up to " + std::to_string(ngv_->n_max()) +
                        ", config asks for n_max = " + std::to_string(cfg.n_max) + "; rerun build-ngrams");
    }
  }
  model_ = std::make_unique<nmt::Transformer<T>>(cfg.model, src_tok_.vocab(), tgt_tok_.vocab(),
                                                 ngv_ ? &*ngv_ : nullptr, rng_);
}

template <typename T>
std::vector<trainer::ParallelCorpus> Session<T>::load(const std::vector<CorpusFiles>& files) const {
  std::vector<trainer::ParallelCorpus> out;
  for (const auto& f : files) {
    const auto src = read_lines(f.src);
    const auto tgt = read_lines(f.tgt);
    if (src.size() != tgt.size()) {
      throw DataError(f.src.string() + " has " + std::to_string(src.size()) + " lines but " + f.tgt.string() +
                      " has " + std::to_string(tgt.size()));
    }
    trainer::ParallelCorpus c{f.lang, {}};
    for (size_t i = 0; i < src.size(); ++i) c.pairs.push_back({src_tok_.encode(src[i]), tgt_tok_.encode(tgt[i])});
    out.push_back(std::move(c));
  }
  return out;
}

template <typename T>
trainer::CheckpointInfo Session<T>::load_checkpoint(const fs::path& path, trainer::Trainer<T>* trainer) {
  return trainer::load_checkpoint(path, *model_, trainer);
}

template <typename T>
void Session<T>::save_checkpoint(const fs::path& path, trainer::Trainer<T>* trainer) {
  auto info = checkpoint_info(cfg_);
  info.seed = cfg_.training.seed;
  trainer::save_checkpoint(path, *model_, trainer, info);
}

template <typename T>
uint64_t Session<T>::embedding_fingerprint() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : model_->target_embedding().parameters()) {
    h = fnv1a(h, p->name.data(), p->name.size());
    h = fnv1a(h, p->value.data(), p->value.size() * sizeof(T));
  }
  return h;
}

template <typename T>
void Session<T>::write_table(const std::string& lang, const fs::path& path) {
  const auto table = model_->target_embedding().precompute_table(model_->language(lang));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kTableMagic, 4);
  put(out, kTableVersion);
  put(out, static_cast<uint32_t>(sizeof(T)));
  put(out, static_cast<uint32_t>(lang.size()));
  out.write(lang.data(), static_cast<std::streamsize>(lang.size()));
  put(out, embedding_fingerprint());
  put(out, table.matrix.rows());
  put(out, table.matrix.cols());
  out.write(reinterpret_cast<const char*>(table.matrix.data()),
            static_cast<std::streamsize>(table.matrix.size() * sizeof(T)));
  if (!out) throw DataError("failed writing " + path.string());
}

template <typename T>
embedding::EmbeddingTable<T> Session<T>::read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read table " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kTableMagic, 4) != 0) throw DataError(path.string() + " is not a table file");
  if (get<uint32_t>(in, path) != kTableVersion) throw DataError(path.string() + ": unsupported table version");
  if (get<uint32_t>(in, path) != sizeof(T)) throw DataError(path.string() + ": value width differs from the model's");
  std::string lang(get<uint32_t>(in, path), '\0');
  if (!in.read(lang.data(), static_cast<std::streamsize>(lang.size()))) throw DataError("truncated " + path.string());
  const auto fingerprint = get<uint64_t>(in, path);
  const auto rows = get<int64_t>(in, path), cols = get<int64_t>(in, path);
  if (fingerprint != embedding_fingerprint()) {
    throw StaleTableError(path.string() + " was computed from other embedding parameters; rerun precompute");
  }
  auto& emb = model_->target_embedding();
  if (rows != emb.vocab_size() || cols != emb.dim()) throw DimensionError(path.string() + ": table shape differs");
  Tensor<T> matrix({rows, cols});
  if (!in.read(reinterpret_cast<char*>(matrix.data()), static_cast<std::streamsize>(matrix.size() * sizeof(T))))
    throw DataError("truncated " + path.string());
  return {std::move(matrix), model_->language(lang), emb.params_version(), &emb};
}

template <typename T>
std::vector<std::string> Session<T>::translate(const std::string& lang, const std::vector<std::string>& sources,
                                               const nmt::DecodeOptions& options,
                                               std::optional<embedding::EmbeddingTable<T>> table) {
  if (table && table->language.code != lang) {
    throw ConfigError("table is for '" + table->language.code + "', translating into '" + lang + "'");
  }
  nmt::Translator<T> tr = table ? nmt::Translator<T>(*model_, std::move(*table))
                                : nmt::Translator<T>(*model_, model_->language(lang));
  std::vector<std::string> out;
  out.reserve(sources.size());
  for (const auto& s : sources) {
    const auto ids = src_tok_.encode(s);
    out.push_back(tgt_tok_.decode(tr.beam(ids, options)));
  }
  return out;
}

fs::path default_checkpoint(const ExperimentConfig& cfg) {
  const auto best = cfg.checkpoint("best.ckpt");
  return fs::exists(best) ? best : cfg.checkpoint("last.ckpt");
}

template <typename T>
TrainSummary train(const ExperimentConfig& cfg, bool resume, std::ostream* progress) {
  const auto start = std::chrono::steady_clock::now();
  Session<T> session(cfg);
  const auto train_data = session.load(cfg.train);
  const auto dev_data = session.load(cfg.dev);
  if (train_data.empty()) throw ConfigError("no training corpora configured");
  fs::create_directories(cfg.work_dir);
  const auto last = cfg.checkpoint("last.ckpt"), best = cfg.checkpoint("best.ckpt");
  const auto log_path = cfg.work_dir / "train_log.csv";

  trainer::Trainer<T> trainer(session.model(), cfg.training);
  double best_ppl = std::numeric_limits<double>::infinity();
  const bool resuming = resume && fs::exists(last);
  if (resuming) {
    session.load_checkpoint(last, &trainer);
    best_ppl = best_logged_ppl(log_path);
    if (progress) *progress << "resumed from " << last.string() << " at epoch " << trainer.epoch() << "\n";
  }
  trainer::TrainLog log(log_path, resuming);
  TrainSummary summary;
  while (!trainer.finished()) {
    const auto stats = trainer.run_epoch(train_data, dev_data);
    log.write(stats);
    session.save_checkpoint(last, &trainer);
    const bool improved = dev_data.empty() || stats.dev_ppl < best_ppl;
    if (improved) {
      if (!dev_data.empty()) best_ppl = stats.dev_ppl;
      fs::copy_file(last, best, fs::copy_options::overwrite_existing);
    }
    if (progress) {
      *progress << "epoch " << stats.epoch << " step " << stats.step << " loss " << stats.loss << " lr " << stats.lr
                << " dev_ppl " << stats.dev_ppl << " tok/s " << static_cast<int64_t>(stats.tokens_per_sec)
                << (improved ? " *" : "") << "\n";
      progress->flush();
    }
    summary.last_loss = stats.loss;
  }
  summary.epochs = trainer.epoch();
  summary.steps = trainer.step();
  summary.best_dev_ppl = best_ppl;
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

template <typename T>
evalbench::BleuReport evaluate_test(Session<T>& session, const std::string& lang, const nmt::DecodeOptions& options,
                                    std::vector<std::string>* hyps) {
  const auto* files = session.config().find(session.config().test, lang);
  if (files == nullptr) throw ConfigError("no test." + lang + ".src/tgt configured");
  const auto out = session.translate(lang, read_lines(files->src), options);
  const auto refs = read_lines(files->tgt);
  auto report = evalbench::bleu_corpus(out, refs);
  if (hyps) *hyps = out;
  return report;
}

std::vector<std::string> single_token_words(const ExperimentConfig& cfg, const Tokenizer& tok, const std::string& lang,
                                            int64_t top_k) {
  const auto* files = cfg.find(cfg.train, lang);
  if (files == nullptr) throw ConfigError("no train." + lang + " corpus configured");
  const auto freq = evalbench::word_frequencies(read_lines(files->tgt));
  std::vector<std::pair<std::string, int64_t>> words(freq.begin(), freq.end());
  std::sort(words.begin(), words.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  std::vector<std::string> out;
  for (const auto& [w, c] : words) {
    if (static_cast<int64_t>(out.size()) >= top_k) break;
    const auto ids = tok.encode(w);
    if (ids.size() == 1 && ids[0] != SubwordVocab::kUnkId) out.push_back(w);
  }
  return out;
}

template <typename T>
std::vector<evalbench::MrrBucket> embedding_mrr(Session<T>& session, const std::string& hrl, const std::string& lrl,
                                                const std::vector<std::string>& hrl_words,
                                                const std::vector<evalbench::WordPair>& pairs) {
  auto& model = session.model();
  const auto& tok = session.tgt_tokenizer();
  const auto hrl_table = model.target_embedding().precompute_table(model.language(hrl));
  const auto lrl_table = model.target_embedding().precompute_table(model.language(lrl));
  const int64_t d = model.config().dim;
  auto rows = [&](const Tensor<T>& table, const std::vector<std::string>& words) {
    Tensor<T> out({static_cast<int64_t>(words.size()), d});
    for (size_t i = 0; i < words.size(); ++i) {
      const auto ids = tok.encode(words[i]);
      if (ids.size() != 1) throw ContractError("'" + words[i] + "' is not a single token");
      const auto src = table.row(ids[0]);
      std::copy(src.begin(), src.end(), out.data() + static_cast<int64_t>(i) * d);
    }
    return out;
  };
  std::map<std::string, int64_t> index;
  for (size_t i = 0; i < hrl_words.size(); ++i) index[hrl_words[i]] = static_cast<int64_t>(i);
  std::vector<std::string> queries;
  std::vector<int64_t> gold;
  for (const auto& p : pairs) {
    auto it = index.find(p.hrl);
    if (it == index.end()) throw ContractError("pair word '" + p.hrl + "' is not a candidate");
    queries.push_back(p.lrl);
    gold.push_back(it->second);
  }
  const auto rr = evalbench::reciprocal_ranks(rows(lrl_table.checked(), queries), rows(hrl_table.checked(), hrl_words), gold);
  return evalbench::mrr_by_distance(pairs, rr);
}

template <typename T>
BenchResult bench_variant(const ExperimentConfig& cfg, const std::string& lang, int runs,
                          const std::optional<fs::path>& checkpoint, bool time_training) {
  BenchResult r;
  r.variant = embedding::embed_mode_name(cfg.model.embed_mode);
  if (time_training) {
    Session<T> session(cfg);
    const auto train_data = session.load(cfg.train);
    auto tc = cfg.training;
    tc.max_epochs = runs + 1;
    tc.max_steps = 0;
    trainer::Trainer<T> trainer(session.model(), tc);
    r.train_epoch = evalbench::time_runs([&] { trainer.run_epoch(train_data); }, runs, 1);
  }
  Session<T> session(cfg);
  if (checkpoint) session.load_checkpoint(*checkpoint);
  const auto* files = cfg.find(cfg.test, lang);
  if (files == nullptr) throw ConfigError("no test." + lang + ".src/tgt configured");
  std::vector<std::vector<int32_t>> sources;
  for (const auto& line : read_lines(files->src)) sources.push_back(session.src_tokenizer().encode(line));
  auto& model = session.model();
  const auto t0 = std::chrono::steady_clock::now();
  nmt::Translator<T> tr(model, model.language(lang));
  r.precompute_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.decode = evalbench::time_runs(
      [&] {
        r.decoded_tokens = 0;
        for (const auto& out : tr.translate(sources, cfg.decoding)) r.decoded_tokens += static_cast<int64_t>(out.size());
      },
      runs, 1);
  return r;
}

#define DECSDE_INSTANTIATE(T)                                                                                     \
  template class Session<T>;                                                                                      \
  template TrainSummary train<T>(const ExperimentConfig&, bool, std::ostream*);                                   \
  template evalbench::BleuReport evaluate_test<T>(Session<T>&, const std::string&, const nmt::DecodeOptions&,     \
                                                  std::vector<std::string>*);                                     \
  template std::vector<evalbench::MrrBucket> embedding_mrr<T>(Session<T>&, const std::string&, const std::string&, \
                                                              const std::vector<std::string>&,                    \
                                                              const std::vector<evalbench::WordPair>&);           \
  template BenchResult bench_variant<T>(const ExperimentConfig&, const std::string&, int,                          \
                                        const std::optional<fs::path>&, bool);

DECSDE_INSTANTIATE(float)
DECSDE_INSTANTIATE(double)

}  // namespace decsde::cli
