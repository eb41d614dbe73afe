#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "decsde/segmenter/vocab.h"

namespace decsde::segmenter {

// Ordered merge rules; earlier merges take priority.
class MergeTable {
 public:
  using Merge = std::pair<std::string, std::string>;

  MergeTable() = default;
  explicit MergeTable(std::vector<Merge> merges);

  void append(std::string left, std::string right);
  const std::vector<Merge>& merges() const { return merges_; }
  size_t size() const { return merges_.size(); }
  // Priority of (left, right); -1 when it is not a merge.
  int64_t rank(std::string_view left, std::string_view right) const;

  // Applies the merges to one word's symbol sequence.
  std::vector<std::string> apply(std::vector<std::string> symbols) const;

  // One "left right" pair per line, in priority order.
  void save(const std::filesystem::path& path) const;
  static MergeTable load(const std::filesystem::path& path);

  friend bool operator==(const MergeTable& a, const MergeTable& b) { return a.merges_ == b.merges_; }

 private:
  static std::string key(std::string_view left, std::string_view right);

  std::vector<Merge> merges_;
  std::unordered_map<std::string, int64_t> ranks_;
};

struct BpeModel {
  MergeTable merges;
  SubwordVocab vocab;
};

// Splits a whitespace-free word into symbols, the boundary marker first.
std::vector<std::string> word_symbols(std::string_view word, std::string_view boundary = kBoundary);

// Greedy byte-pair merging over the corpus word counts: repeatedly merge the
// most frequent adjacent pair (ties go to the smaller (left, right) in byte
// order) until the vocabulary holds vocab_size tokens or no pair occurs twice.
BpeModel train_bpe(std::span<const std::string> corpus, int64_t vocab_size, std::span<const std::string> languages,
                   std::string_view boundary = kBoundary);

// Segments one sentence into ids; symbols missing from the vocabulary map to UNK.
std::vector<int32_t> encode_sentence(std::string_view sentence, const MergeTable& merges, const SubwordVocab& vocab);

// Concatenates pieces, turning boundary markers back into spaces. Special
// tokens other than UNK are dropped.
std::string decode_pieces(std::span<const int32_t> ids, const SubwordVocab& vocab);

}  // namespace decsde::segmenter
