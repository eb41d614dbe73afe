#include "decsde/segmenter/vocab.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "decsde/common/error.h"
#include "decsde/common/parse.h"
#include "decsde/common/utf8.h"

namespace decsde::segmenter {

std::string flag_token(std::string_view language) { return "<2" + std::string(language) + ">"; }

SubwordVocab::SubwordVocab(std::span<const std::string> languages) : languages_(languages.begin(), languages.end()) {
  push(std::string(kPad), 0);
  push(std::string(kBos), 0);
  push(std::string(kEos), 0);
  push(std::string(kUnk), 0);
  for (const auto& lang : languages_) {
    if (lang.empty()) throw ConfigError("empty language code");
    push(flag_token(lang), 0);
  }
}

int32_t SubwordVocab::push(std::string token, int64_t count) {
  if (token.empty()) throw ContractError("empty vocabulary token");
  if (ids_.count(token) != 0) throw ContractError("duplicate vocabulary token '" + token + "'");
  const auto id = static_cast<int32_t>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
  return id;
}

int32_t SubwordVocab::add(std::string token, int64_t count) {
  if (tokens_.empty()) throw ContractError("vocabulary has no specials; construct it with a language list");
  for (char c : token) {
    if (c == '\t' || c == '\n' || c == ' ') throw ContractError("vocabulary token contains whitespace");
  }
  return push(std::move(token), count);
}

int32_t SubwordVocab::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

int32_t SubwordVocab::id_or_unk(std::string_view token) const {
  const int32_t id = find(token);
  return id < 0 ? kUnkId : id;
}

const std::string& SubwordVocab::token(int32_t id) const {
  if (id < 0 || id >= size()) throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[static_cast<size_t>(id)];
}

int64_t SubwordVocab::count(int32_t id) const {
  if (id < 0 || id >= size()) throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
  return counts_[static_cast<size_t>(id)];
}

int32_t SubwordVocab::flag_id(std::string_view language) const {
  for (size_t i = 0; i < languages_.size(); ++i)
    if (languages_[i] == language) return 4 + static_cast<int32_t>(i);
  throw ConfigError("language '" + std::string(language) + "' has no flag token in this vocabulary");
}

void SubwordVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\t' << counts_[i] << '\n';
}

SubwordVocab SubwordVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::vector<int64_t> counts;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token, id_text, count_text;
    if (!std::getline(fields, token, '\t') || !std::getline(fields, id_text, '\t') ||
        !std::getline(fields, count_text)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected token<TAB>id<TAB>count");
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (parse_int64(id_text, where) != static_cast<int64_t>(tokens.size())) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": ids must be dense and ordered");
    }
    tokens.push_back(token);
    counts.push_back(parse_int64(count_text, where));
  }
  if (tokens.size() < 4 || tokens[0] != kPad || tokens[1] != kBos || tokens[2] != kEos || tokens[3] != kUnk) {
    throw DataError(path.string() + ": vocabulary must start with <pad> <s> </s> <unk>");
  }
  std::vector<std::string> languages;
  size_t i = 4;
  for (; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.size() > 3 && t.rfind("<2", 0) == 0 && t.back() == '>') {
      languages.push_back(t.substr(2, t.size() - 3));
    } else {
      break;
    }
  }
  SubwordVocab v(languages);
  for (; i < tokens.size(); ++i) v.add(tokens[i], counts[i]);
  return v;
}

SubwordVocab build_word_vocab(std::span<const std::vector<std::string>> corpora, int64_t top_k,
                              std::span<const std::string> languages) {
  if (top_k < 1) throw ConfigError("word vocabulary needs top_k >= 1");
  std::map<std::string, int64_t> counts;
  for (const auto& corpus : corpora)
    for (const auto& line : corpus)
      for (auto& w : utf8::split_words(line)) ++counts[w];
  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  SubwordVocab vocab(languages);
  for (const auto& [w, c] : ranked) {
    if (static_cast<int64_t>(vocab.size() - vocab.num_specials()) >= top_k) break;
    if (vocab.contains(w)) continue;  // a corpus word that collides with a special token
    vocab.add(w, c);
  }
  return vocab;
}

}  // namespace decsde::segmenter
