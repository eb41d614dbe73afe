// Command-line front end. Every command takes --config plus optional
// overrides; errors map to exit codes 2 (config), 3 (data), 4 (numeric),
// 5 (stale precomputed table).
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "decsde/cli/pipeline.h"
#include "decsde/common/alloc.h"
#include "decsde/common/error.h"
#include "decsde/evalbench/rare_words.h"
#include "decsde/evalbench/report.h"
#include "decsde/evalbench/synthetic.h"

namespace fs = std::filesystem;
using namespace decsde;
using namespace decsde::cli;

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> set;
  std::string embed_mode;
  std::optional<int64_t> u, seed, n_max, latent_size, vocab_size, max_epochs, beam;
  std::string work_dir;

  void attach(CLI::App* app, bool config_required = true) {
    auto* c = app->add_option("-c,--config", config, "experiment config (key = value)");
    if (config_required) c->required();
    app->add_option("--set", set, "override a config entry, key=value (repeatable)");
    app->add_option("--embed-mode", embed_mode, "decsde | decsde_no_tying | decsde_full_transform | "
                                                "decsde_no_transform | lookup_piece | lookup_word");
    app->add_option("--u", u, "low-rank transform rank for every language");
    app->add_option("--seed", seed, "experiment seed");
    app->add_option("--n-max", n_max, "longest character n-gram");
    app->add_option("--latent-size", latent_size, "latent semantic entries s");
    app->add_option("--vocab-size", vocab_size, "target vocabulary size");
    app->add_option("--max-epochs", max_epochs, "training epochs");
    app->add_option("--work-dir", work_dir, "directory for vocabularies, checkpoints and logs");
  }

  ExperimentConfig load() const {
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& s : set) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!embed_mode.empty()) kv.emplace_back("embed_mode", embed_mode);
    auto num = [&](const char* key, const std::optional<int64_t>& v) {
      if (v) kv.emplace_back(key, std::to_string(*v));
    };
    num("u", u);
    num("seed", seed);
    num("n_max", n_max);
    num("latent_size", latent_size);
    num("vocab_size", vocab_size);
    num("max_epochs", max_epochs);
    num("beam", beam);
    if (!work_dir.empty()) kv.emplace_back("work_dir", fs::absolute(work_dir).string());
    return ExperimentConfig::load(config, kv);
  }
};

std::string pick_lang(const ExperimentConfig& cfg, const std::string& lang) {
  if (!lang.empty()) return lang;
  if (cfg.languages.size() == 1) return cfg.languages[0];
  throw ConfigError("--lang is required with several target languages");
}

fs::path checkpoint_or_default(const ExperimentConfig& cfg, const std::string& given) {
  const fs::path p = given.empty() ? default_checkpoint(cfg) : fs::path(given);
  if (!fs::exists(p)) throw DataError("checkpoint not found: " + p.string() + " (run train)");
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  CLI::App app{"DecSDE multilingual NMT toolkit"};
  app.require_subcommand(1);

  Overrides vocab_o;
  auto* build_vocab_cmd = app.add_subcommand("build-vocab", "train source and target subword vocabularies");
  vocab_o.attach(build_vocab_cmd);

  Overrides ngram_o;
  auto* build_ngrams_cmd = app.add_subcommand("build-ngrams", "extract character n-grams of the target vocabulary");
  ngram_o.attach(build_ngrams_cmd);

  Overrides train_o;
  bool resume = false;
  auto* train_cmd = app.add_subcommand("train", "train a model; writes best.ckpt, last.ckpt, train_log.csv");
  train_o.attach(train_cmd);
  train_cmd->add_flag("--resume", resume, "continue from last.ckpt in the work directory");

  Overrides tr_o;
  std::string tr_lang, tr_input, tr_output, tr_ckpt, tr_table;
  auto* translate_cmd = app.add_subcommand("translate", "translate source lines into one target language");
  tr_o.attach(translate_cmd);
  translate_cmd->add_option("--lang", tr_lang, "target language");
  translate_cmd->add_option("--beam", tr_o.beam, "beam size (1 = greedy)");
  translate_cmd->add_option("--input", tr_input, "source lines (default: the configured test set)");
  translate_cmd->add_option("--output", tr_output, "output file (default: stdout)");
  translate_cmd->add_option("--checkpoint", tr_ckpt, "model checkpoint (default: best.ckpt)");
  translate_cmd->add_option("--table", tr_table, "precomputed embedding table from `precompute`");

  Overrides pc_o;
  std::string pc_lang, pc_output, pc_ckpt;
  auto* precompute_cmd = app.add_subcommand("precompute", "write the target embedding table of one language");
  pc_o.attach(precompute_cmd);
  precompute_cmd->add_option("--lang", pc_lang, "target language");
  precompute_cmd->add_option("--output", pc_output, "table file")->required();
  precompute_cmd->add_option("--checkpoint", pc_ckpt, "model checkpoint (default: best.ckpt)");

  Overrides an_o, an_base;
  std::string an_hrl, an_lrl, an_out, an_ckpt, an_base_ckpt;
  int64_t an_top_k = 1000, an_cap = 0;
  auto* analyze_cmd = app.add_subcommand("analyze-embeddings", "cross-language word retrieval MRR vs a baseline");
  an_o.attach(analyze_cmd);
  analyze_cmd->add_option("--baseline-config", an_base.config, "baseline experiment config")->required();
  analyze_cmd->add_option("--hrl", an_hrl, "high-resource language (default: first)");
  analyze_cmd->add_option("--lrl", an_lrl, "low-resource language (default: second)");
  analyze_cmd->add_option("--top-k", an_top_k, "frequent words per language considered");
  analyze_cmd->add_option("--cap", an_cap, "max pairs per edit-distance bucket (0 = all)");
  analyze_cmd->add_option("--out-dir", an_out, "writes mrr.csv and mrr_gain.dat")->required();
  analyze_cmd->add_option("--checkpoint", an_ckpt, "model checkpoint");
  analyze_cmd->add_option("--baseline-checkpoint", an_base_ckpt, "baseline checkpoint");

  std::string eb_hyp, eb_ref, eb_train_ref, eb_csv;
  auto* eval_cmd = app.add_subcommand("eval-bleu", "corpus BLEU (13a, exp smoothing) and rare-word F1");
  eval_cmd->add_option("--hyp", eb_hyp, "hypotheses, one per line")->required();
  eval_cmd->add_option("--ref", eb_ref, "references, one per line")->required();
  eval_cmd->add_option("--train-ref", eb_train_ref, "training targets for word-frequency buckets");
  eval_cmd->add_option("--csv", eb_csv, "rare-word F1 per bucket as CSV (needs --train-ref)");

  Overrides bn_o, bn_base;
  std::string bn_lang, bn_out, bn_ckpt, bn_base_ckpt;
  int bn_runs = 3;
  bool bn_no_train = false;
  auto* bench_cmd = app.add_subcommand("bench", "train/decode timing of a model against a baseline");
  bn_o.attach(bench_cmd);
  bench_cmd->add_option("--baseline-config", bn_base.config, "baseline config")->required();
  bench_cmd->add_option("--lang", bn_lang, "language of the decoded test set");
  bench_cmd->add_option("--runs", bn_runs, "measured runs (median reported)")->check(CLI::Range(1, 100));
  bench_cmd->add_option("--out", bn_out, "CSV report");
  bench_cmd->add_option("--checkpoint", bn_ckpt, "model checkpoint for decoding (default: best.ckpt if present)");
  bench_cmd->add_option("--baseline-checkpoint", bn_base_ckpt, "baseline checkpoint for decoding");
  bench_cmd->add_flag("--no-train", bn_no_train, "skip training-epoch timing");

  evalbench::SyntheticConfig syn;
  std::string syn_out;
  auto* synth_cmd = app.add_subcommand("make-synthetic", "generate a related HRL/LRL corpus pair");
  synth_cmd->add_option("--out-dir", syn_out, "output directory")->required();
  synth_cmd->add_option("--seed", syn.seed, "generator seed");
  synth_cmd->add_option("--roots", syn.root_vocab_size, "shared word roots");
  synth_cmd->add_option("--rate", syn.corruption_rate, "mean substituted characters per LRL word, 0..2");
  synth_cmd->add_option("--hrl-pairs", syn.hrl_pairs, "HRL training pairs");
  synth_cmd->add_option("--lrl-pairs", syn.lrl_pairs, "LRL training pairs (5-10% of HRL)");
  synth_cmd->add_option("--dev-pairs", syn.dev_pairs, "dev pairs per language");
  synth_cmd->add_option("--test-pairs", syn.test_pairs, "LRL test pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build_vocab_cmd->parsed()) {
      const auto cfg = vocab_o.load();
      build_vocab(cfg);
      std::cerr << "wrote " << cfg.src_vocab.string() << " and " << cfg.tgt_vocab.string() << "\n";
    } else if (build_ngrams_cmd->parsed()) {
      const auto cfg = ngram_o.load();
      build_ngrams(cfg);
      std::cerr << "wrote " << cfg.ngrams.string() << "\n";
    } else if (train_cmd->parsed()) {
      const auto cfg = train_o.load();
      const auto s = with_precision(cfg, [&]<typename T>(std::type_identity<T>) { return train<T>(cfg, resume, &std::cerr); });
      std::cerr << "trained " << s.epochs << " epochs, " << s.steps << " steps in " << s.seconds << " s; best dev ppl "
                << s.best_dev_ppl << "\n";
    } else if (translate_cmd->parsed()) {
      const auto cfg = tr_o.load();
      const auto lang = pick_lang(cfg, tr_lang);
      std::vector<std::string> sources;
      if (!tr_input.empty()) {
        sources = read_lines(tr_input);
      } else {
        const auto* f = cfg.find(cfg.test, lang);
        if (f == nullptr) throw ConfigError("--input not given and no test." + lang + ".src configured");
        sources = read_lines(f->src);
      }
      const auto out = with_precision(cfg, [&]<typename T>(std::type_identity<T>) {
        Session<T> s(cfg);
        s.load_checkpoint(checkpoint_or_default(cfg, tr_ckpt));
        std::optional<embedding::EmbeddingTable<T>> table;
        if (!tr_table.empty()) table = s.read_table(tr_table);
        return s.translate(lang, sources, cfg.decoding, std::move(table));
      });
      if (tr_output.empty()) {
        for (const auto& l : out) std::cout << l << '\n';
      } else {
        write_lines(tr_output, out);
      }
    } else if (precompute_cmd->parsed()) {
      const auto cfg = pc_o.load();
      const auto lang = pick_lang(cfg, pc_lang);
      with_precision(cfg, [&]<typename T>(std::type_identity<T>) {
        Session<T> s(cfg);
        s.load_checkpoint(checkpoint_or_default(cfg, pc_ckpt));
        s.write_table(lang, pc_output);
      });
      std::cerr << "wrote " << pc_output << "\n";
    } else if (analyze_cmd->parsed()) {
      const auto cfg = an_o.load();
      const auto base_cfg = an_base.load();
      if (cfg.languages.size() < 2 && (an_hrl.empty() || an_lrl.empty()))
        throw ConfigError("analyze-embeddings needs two target languages");
      const auto hrl = an_hrl.empty() ? cfg.languages[0] : an_hrl;
      const auto lrl = an_lrl.empty() ? cfg.languages[1] : an_lrl;
      auto run = [&](const ExperimentConfig& c, const std::string& ckpt, const std::vector<std::string>* hrl_words,
                     const std::vector<evalbench::WordPair>* pairs, std::vector<std::string>* words_out,
                     std::vector<evalbench::WordPair>* pairs_out) {
        return with_precision(c, [&]<typename T>(std::type_identity<T>) {
          Session<T> s(c);
          s.load_checkpoint(checkpoint_or_default(c, ckpt));
          if (hrl_words == nullptr) {
            *words_out = single_token_words(c, s.tgt_tokenizer(), hrl, an_top_k);
            const auto lrl_words = single_token_words(c, s.tgt_tokenizer(), lrl, an_top_k);
            *pairs_out = evalbench::extract_word_pairs(*words_out, lrl_words, 4, an_cap);
            return embedding_mrr(s, hrl, lrl, *words_out, *pairs_out);
          }
          return embedding_mrr(s, hrl, lrl, *hrl_words, *pairs);
        });
      };
      std::vector<std::string> hrl_words;
      std::vector<evalbench::WordPair> pairs;
      const auto model_mrr = run(cfg, an_ckpt, nullptr, nullptr, &hrl_words, &pairs);
      const auto base_mrr = run(base_cfg, an_base_ckpt, &hrl_words, &pairs, nullptr, nullptr);
      const auto gains = evalbench::mrr_gain(model_mrr, base_mrr);
      std::vector<evalbench::Row> rows, dat;
      for (const auto& g : gains) {
        rows.push_back({std::to_string(g.distance), std::to_string(g.pairs), evalbench::fmt(g.model),
                        evalbench::fmt(g.baseline), evalbench::fmt(g.gain)});
        dat.push_back({std::to_string(g.distance), evalbench::fmt(g.gain)});
        std::cout << "distance " << g.distance << " pairs " << g.pairs << " mrr " << evalbench::fmt(g.model)
                  << " baseline " << evalbench::fmt(g.baseline) << " gain " << evalbench::fmt(g.gain) << "\n";
      }
      evalbench::write_csv(fs::path(an_out) / "mrr.csv", {"distance", "pairs", "mrr", "baseline_mrr", "gain"}, rows);
      evalbench::write_gnuplot(fs::path(an_out) / "mrr_gain.dat", {"distance", "gain"}, dat);
    } else if (eval_cmd->parsed()) {
      const auto hyps = read_lines(eb_hyp), refs = read_lines(eb_ref);
      std::cout << evalbench::bleu_corpus(hyps, refs).to_string() << "\n";
      if (!eb_train_ref.empty()) {
        const auto freq = evalbench::word_frequencies(read_lines(eb_train_ref));
        std::vector<evalbench::Row> rows;
        for (const auto& b : evalbench::rare_word_f1(hyps, refs, freq)) {
          rows.push_back({std::to_string(b.lo), std::to_string(b.hi), std::to_string(b.ref_words),
                          std::to_string(b.hyp_words), std::to_string(b.matches), evalbench::fmt(b.precision),
                          evalbench::fmt(b.recall), evalbench::fmt(b.f1)});
          std::cout << "freq [" << b.lo << "," << b.hi << ") f1 " << evalbench::fmt(b.f1) << "\n";
        }
        if (!eb_csv.empty())
          evalbench::write_csv(eb_csv, {"freq_lo", "freq_hi", "ref_words", "hyp_words", "matches", "precision",
                                        "recall", "f1"},
                               rows);
      } else if (!eb_csv.empty()) {
        throw ConfigError("--csv needs --train-ref");
      }
    } else if (bench_cmd->parsed()) {
      const auto cfg = bn_o.load();
      const auto base_cfg = bn_base.load();
      const auto lang = pick_lang(cfg, bn_lang);
      auto run = [&](const ExperimentConfig& c, const std::string& ckpt) {
        std::optional<fs::path> path;
        if (!ckpt.empty()) {
          path = ckpt;
        } else if (fs::exists(default_checkpoint(c))) {
          path = default_checkpoint(c);
        } else {
          std::cerr << "note: no checkpoint in " << c.work_dir.string() << ", decoding with initial weights\n";
        }
        return with_precision(c, [&]<typename T>(std::type_identity<T>) {
          return bench_variant<T>(c, lang, bn_runs, path, !bn_no_train);
        });
      };
      const auto a = run(cfg, bn_ckpt), b = run(base_cfg, bn_base_ckpt);
      std::vector<evalbench::Row> rows;
      for (const auto* r : {&a, &b}) {
        rows.push_back({r->variant, evalbench::fmt(r->train_epoch.median()), evalbench::fmt(r->decode.median()),
                        evalbench::fmt(r->precompute_sec), std::to_string(r->decoded_tokens)});
        std::cout << r->variant << ": train " << evalbench::fmt(r->train_epoch.median(), 3) << " s/epoch, decode "
                  << evalbench::fmt(r->decode.median(), 3) << " s, precompute " << evalbench::fmt(r->precompute_sec, 3)
                  << " s\n";
      }
      if (!bn_no_train)
        std::cout << "train ratio " << evalbench::fmt(a.train_epoch.median() / b.train_epoch.median(), 3) << "\n";
      std::cout << "decode ratio " << evalbench::fmt(a.decode.median() / b.decode.median(), 3) << "\n";
      if (!bn_out.empty())
        evalbench::write_csv(bn_out, {"variant", "train_sec_per_epoch", "decode_sec", "precompute_sec", "decoded_tokens"},
                             rows);
    } else if (synth_cmd->parsed()) {
      const auto pair = evalbench::make_synthetic_pair(syn);
      evalbench::write_synthetic_pair(pair, syn_out);
      std::cerr << "wrote " << syn_out << " (mean HRL/LRL edit distance " << evalbench::mean_lexicon_distance(pair)
                << ")\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
