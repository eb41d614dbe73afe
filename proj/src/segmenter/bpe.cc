#include "decsde/segmenter/bpe.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "decsde/common/error.h"
#include "decsde/common/utf8.h"

namespace decsde::segmenter {

MergeTable::MergeTable(std::vector<Merge> merges) {
  for (auto& [l, r] : merges) append(std::move(l), std::move(r));
}

std::string MergeTable::key(std::string_view left, std::string_view right) {
  std::string k;
  k.reserve(left.size() + right.size() + 1);
  k.append(left);
  k.push_back('\0');
  k.append(right);
  return k;
}

void MergeTable::append(std::string left, std::string right) {
  if (left.empty() || right.empty()) throw ContractError("merge with an empty symbol");
  ranks_.emplace(key(left, right), static_cast<int64_t>(merges_.size()));
  merges_.emplace_back(std::move(left), std::move(right));
}

int64_t MergeTable::rank(std::string_view left, std::string_view right) const {
  auto it = ranks_.find(key(left, right));
  return it == ranks_.end() ? -1 : it->second;
}

std::vector<std::string> MergeTable::apply(std::vector<std::string> symbols) const {
  while (symbols.size() > 1) {
    int64_t best = std::numeric_limits<int64_t>::max();
    for (size_t i = 0; i + 1 < symbols.size(); ++i) {
      const int64_t r = rank(symbols[i], symbols[i + 1]);
      if (r >= 0 && r < best) best = r;
    }
    if (best == std::numeric_limits<int64_t>::max()) break;
    const auto& [l, r] = merges_[static_cast<size_t>(best)];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == l && symbols[i + 1] == r) {
        next.push_back(l + r);
        ++i;
      } else {
        next.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(next);
  }
  return symbols;
}

void MergeTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write merges " + path.string());
  for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
}

MergeTable MergeTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read merges " + path.string());
  MergeTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() || line.find(' ', sp + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'left right'");
    }
    table.append(line.substr(0, sp), line.substr(sp + 1));
  }
  return table;
}

std::vector<std::string> word_symbols(std::string_view word, std::string_view boundary) {
  std::vector<std::string> symbols;
  symbols.emplace_back(boundary);
  for (auto& c : utf8::split_chars(word)) symbols.push_back(std::move(c));
  return symbols;
}

namespace {

using Pair = std::pair<std::string, std::string>;

struct PairHash {
  size_t operator()(const Pair& p) const {
    return std::hash<std::string>()(p.first) * 1000003u ^ std::hash<std::string>()(p.second);
  }
};

struct WordType {
  std::vector<std::string> symbols;
  int64_t count;
};

void count_pairs(const WordType& w, int64_t sign, std::unordered_map<Pair, int64_t, PairHash>& counts,
                 std::unordered_map<Pair, std::vector<size_t>, PairHash>* where, size_t index) {
  for (size_t i = 0; i + 1 < w.symbols.size(); ++i) {
    Pair p{w.symbols[i], w.symbols[i + 1]};
    counts[p] += sign * w.count;
    if (where != nullptr) (*where)[p].push_back(index);
  }
}

}  // namespace

BpeModel train_bpe(std::span<const std::string> corpus, int64_t vocab_size, std::span<const std::string> languages,
                   std::string_view boundary) {
  std::map<std::string, int64_t> word_counts;
  for (const auto& line : corpus)
    for (auto& w : utf8::split_words(line)) ++word_counts[w];
  if (word_counts.empty()) throw InputError("cannot train BPE on an empty corpus");

  std::vector<WordType> words;
  std::map<std::string, int64_t> char_counts;
  for (const auto& [w, c] : word_counts) {
    WordType wt{word_symbols(w, boundary), c};
    for (const auto& s : wt.symbols) char_counts[s] += c;
    words.push_back(std::move(wt));
  }

  BpeModel model{MergeTable{}, SubwordVocab(languages)};
  const int64_t base = model.vocab.num_specials() + static_cast<int64_t>(char_counts.size());
  if (vocab_size <= base) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " must exceed specials + distinct characters (" +
                      std::to_string(base) + ")");
  }
  std::vector<std::pair<std::string, int64_t>> chars(char_counts.begin(), char_counts.end());
  std::stable_sort(chars.begin(), chars.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [c, n] : chars) model.vocab.add(c, n);

  std::unordered_map<Pair, int64_t, PairHash> counts;
  std::unordered_map<Pair, std::vector<size_t>, PairHash> where;
  for (size_t i = 0; i < words.size(); ++i) count_pairs(words[i], +1, counts, &where, i);

  while (model.vocab.size() < vocab_size) {
    const Pair* best = nullptr;
    int64_t best_count = 0;
    for (const auto& [p, c] : counts) {
      if (c > best_count || (c == best_count && best != nullptr && p < *best)) {
        best = &p;
        best_count = c;
      }
    }
    if (best == nullptr || best_count < 2) break;
    const Pair merge = *best;
    const std::string merged = merge.first + merge.second;

    // Word indices may repeat in the index; visit each once.
    std::vector<size_t> touched = where[merge];
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (size_t wi : touched) {
      WordType& w = words[wi];
      bool present = false;
      for (size_t i = 0; i + 1 < w.symbols.size() && !present; ++i)
        present = w.symbols[i] == merge.first && w.symbols[i + 1] == merge.second;
      if (!present) continue;
      count_pairs(w, -1, counts, nullptr, wi);
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == merge.first && w.symbols[i + 1] == merge.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(next);
      count_pairs(w, +1, counts, &where, wi);
    }
    for (auto it = counts.begin(); it != counts.end();) {
      if (it->second == 0) {
        where.erase(it->first);
        it = counts.erase(it);
      } else {
        ++it;
      }
    }
    model.merges.append(merge.first, merge.second);
    if (!model.vocab.contains(merged)) model.vocab.add(merged, best_count);
  }
  return model;
}

std::vector<int32_t> encode_sentence(std::string_view sentence, const MergeTable& merges, const SubwordVocab& vocab) {
  std::vector<int32_t> ids;
  for (const auto& word : utf8::split_words(sentence)) {
    for (const auto& piece : merges.apply(word_symbols(word))) ids.push_back(vocab.id_or_unk(piece));
  }
  return ids;
}

std::string decode_pieces(std::span<const int32_t> ids, const SubwordVocab& vocab) {
  std::string text;
  for (int32_t id : ids) {
    if (vocab.is_special(id) && id != SubwordVocab::kUnkId) continue;
    const std::string& piece = vocab.token(id);
    size_t pos = 0;
    while (pos < piece.size()) {
      if (piece.compare(pos, kBoundary.size(), kBoundary) == 0) {
        text.push_back(' ');
        pos += kBoundary.size();
      } else {
        text.push_back(piece[pos++]);
      }
    }
  }
  return utf8::normalize_whitespace(text);
}

}  // namespace decsde::segmenter
