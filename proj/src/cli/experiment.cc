#include "decsde/cli/experiment.h"

#include <algorithm>
#include <set>

#include "decsde/common/error.h"
#include "decsde/common/utf8.h"

namespace decsde::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& plain_keys() {
  static const std::set<std::string> keys = {
      "languages", "work_dir", "src_vocab", "src_merges", "tgt_vocab", "tgt_merges", "ngrams", "vocab_size",
      "src_vocab_size", "n_max", "ngram_min_count", "embed_mode", "tie_mode", "dim", "ffn_dim", "heads",
      "enc_layers", "dec_layers", "dropout", "max_len", "latent_size", "none_keeps_tanh", "u", "lr_peak",
      "warmup_steps", "max_epochs", "max_steps", "label_smoothing", "batch_tokens", "seed",
      "sampling_temperature", "adam_beta1", "adam_beta2", "adam_eps", "beam", "length_alpha", "decode_max_len",
      "precision"};
  return keys;
}

bool is_path_key(const std::string& key) {
  static const std::set<std::string> files = {"work_dir", "src_vocab", "src_merges", "tgt_vocab", "tgt_merges",
                                              "ngrams"};
  return files.count(key) || key.starts_with("train.") || key.starts_with("dev.") || key.starts_with("test.");
}

// Entries of `include = other.cfg` come first; the including file overrides them.
KeyValueConfig load_with_includes(const fs::path& path, int depth) {
  if (depth > 8) throw ConfigError("config includes nest too deeply at " + path.string());
  auto own = KeyValueConfig::load(path);
  if (!own.has("include")) return own;
  const fs::path include = own.require("include");
  auto merged = load_with_includes(path.parent_path() / include, depth + 1);
  // Relative paths of the included file stay relative to its own directory.
  if (include.has_parent_path()) {
    for (const auto& [k, v] : std::vector(merged.entries())) {
      if (!is_path_key(k) || fs::path(v).is_absolute()) continue;
      merged.set(k, (include.parent_path() / v).lexically_normal().string());
    }
  }
  for (const auto& [k, v] : own.entries())
    if (k != "include") merged.set(k, v);
  merged.erase("include");
  return merged;
}

std::vector<std::string> split_list(const std::string& s) {
  std::string spaced = s;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  return utf8::split_words(spaced);
}

}  // namespace

ExperimentConfig ExperimentConfig::from(KeyValueConfig raw, const fs::path& base_dir) {
  ExperimentConfig c;
  c.raw = std::move(raw);
  c.base_dir = base_dir;
  const auto& kv = c.raw;
  auto path_of = [&](const std::string& key, const fs::path& fallback) {
    const auto v = kv.get_string(key, "");
    if (v.empty()) return fallback;
    const fs::path p(v);
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  };

  c.languages = split_list(kv.require("languages"));
  if (c.languages.empty()) throw ConfigError("languages: at least one target language is required");
  const std::set<std::string> langs(c.languages.begin(), c.languages.end());
  if (langs.size() != c.languages.size()) throw ConfigError("languages: duplicate entry");

  for (const auto& [key, value] : kv.entries()) {
    if (plain_keys().count(key)) continue;
    const auto dot = key.find('.');
    const std::string head = key.substr(0, dot);
    const std::string rest = dot == std::string::npos ? "" : key.substr(dot + 1);
    if (head == "u" && langs.count(rest)) continue;
    if (head == "train" || head == "dev" || head == "test") {
      const auto dot2 = rest.find('.');
      const std::string lang = rest.substr(0, dot2);
      const std::string side = dot2 == std::string::npos ? "" : rest.substr(dot2 + 1);
      if (langs.count(lang) && (side == "src" || side == "tgt")) continue;
    }
    throw ConfigError("unknown config key '" + key + "'");
  }

  auto corpora = [&](const std::string& split) {
    std::vector<CorpusFiles> out;
    for (const auto& lang : c.languages) {
      const std::string prefix = split + "." + lang + ".";
      const bool has_src = kv.has(prefix + "src"), has_tgt = kv.has(prefix + "tgt");
      if (!has_src && !has_tgt) continue;
      if (has_src != has_tgt) throw ConfigError(prefix + "src and " + prefix + "tgt must be given together");
      CorpusFiles f{lang, path_of(prefix + "src", {}), path_of(prefix + "tgt", {})};
      for (const auto& p : {f.src, f.tgt})
        if (!fs::exists(p)) throw DataError("corpus file not found: " + p.string());
      out.push_back(std::move(f));
    }
    return out;
  };
  c.train = corpora("train");
  c.dev = corpora("dev");
  c.test = corpora("test");

  c.work_dir = path_of("work_dir", base_dir / "work");
  c.src_vocab = path_of("src_vocab", c.work_dir / "src_vocab.tsv");
  c.src_merges = path_of("src_merges", c.work_dir / "src_merges.txt");
  c.tgt_vocab = path_of("tgt_vocab", c.work_dir / "tgt_vocab.tsv");
  c.tgt_merges = path_of("tgt_merges", c.work_dir / "tgt_merges.txt");
  c.ngrams = path_of("ngrams", c.work_dir / "ngrams.tsv");

  c.vocab_size = kv.get_int("vocab_size", c.vocab_size);
  c.src_vocab_size = kv.get_int("src_vocab_size", c.vocab_size);
  c.n_max = static_cast<int>(kv.get_int("n_max", c.n_max));
  c.ngram_min_count = kv.get_int("ngram_min_count", c.ngram_min_count);
  const int64_t specials = 4 + static_cast<int64_t>(c.languages.size());
  if (c.vocab_size <= specials || c.src_vocab_size <= specials)
    throw ConfigError("vocab sizes must exceed the " + std::to_string(specials) + " special tokens");
  if (c.n_max < 1 || c.n_max > 8) throw ConfigError("n_max must be in [1, 8]");
  if (c.ngram_min_count < 1) throw ConfigError("ngram_min_count must be >= 1");

  auto& m = c.model;
  m.embed_mode = embedding::parse_embed_mode(kv.get_string("embed_mode", embedding::embed_mode_name(m.embed_mode)));
  m.tie_mode = nmt::parse_tie_mode(kv.get_string("tie_mode", nmt::tie_mode_name(m.tie_mode)));
  m.dim = kv.get_int("dim", m.dim);
  m.ffn_dim = kv.get_int("ffn_dim", m.ffn_dim);
  m.heads = kv.get_int("heads", m.heads);
  m.enc_layers = kv.get_int("enc_layers", m.enc_layers);
  m.dec_layers = kv.get_int("dec_layers", m.dec_layers);
  m.dropout = kv.get_double("dropout", m.dropout);
  m.max_len = kv.get_int("max_len", m.max_len);
  m.latent_size = kv.get_int("latent_size", m.latent_size);
  m.none_keeps_tanh = kv.get_bool("none_keeps_tanh", m.none_keeps_tanh);
  const int64_t u = kv.get_int("u", 16);
  for (const auto& lang : c.languages) m.languages.push_back({lang, kv.get_int("u." + lang, u)});
  m.validate();

  auto& t = c.training;
  t.lr_peak = kv.get_double("lr_peak", t.lr_peak);
  t.warmup_steps = kv.get_int("warmup_steps", t.warmup_steps);
  t.max_epochs = kv.get_int("max_epochs", t.max_epochs);
  t.max_steps = kv.get_int("max_steps", t.max_steps);
  t.label_smoothing = kv.get_double("label_smoothing", t.label_smoothing);
  t.batch_tokens = kv.get_int("batch_tokens", t.batch_tokens);
  const int64_t seed = kv.get_int("seed", static_cast<int64_t>(t.seed));
  if (seed < 0) throw ConfigError("seed must be >= 0");
  t.seed = static_cast<uint64_t>(seed);
  t.sampling_temperature = kv.get_double("sampling_temperature", t.sampling_temperature);
  t.adam.beta1 = kv.get_double("adam_beta1", t.adam.beta1);
  t.adam.beta2 = kv.get_double("adam_beta2", t.adam.beta2);
  t.adam.eps = kv.get_double("adam_eps", t.adam.eps);
  t.validate();

  auto& d = c.decoding;
  d.beam = kv.get_int("beam", d.beam);
  d.length_alpha = kv.get_double("length_alpha", d.length_alpha);
  d.max_len = kv.get_int("decode_max_len", d.max_len);
  if (d.beam < 1) throw ConfigError("beam must be >= 1");
  if (d.max_len < 0) throw ConfigError("decode_max_len must be >= 0");

  const auto precision = kv.get_string("precision", "float");
  if (precision == "float") {
    c.precision = Precision::kFloat;
  } else if (precision == "double") {
    c.precision = Precision::kDouble;
  } else {
    throw ConfigError("precision must be float or double, got '" + precision + "'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  auto raw = load_with_includes(path, 0);
  for (const auto& [k, v] : overrides) raw.set(k, v);
  return from(std::move(raw), fs::absolute(path).parent_path());
}

const CorpusFiles* ExperimentConfig::find(const std::vector<CorpusFiles>& set, const std::string& lang) const {
  for (const auto& f : set)
    if (f.lang == lang) return &f;
  return nullptr;
}

}  // namespace decsde::cli
