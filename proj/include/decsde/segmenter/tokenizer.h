#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decsde/segmenter/bpe.h"
#include "decsde/segmenter/vocab.h"

namespace decsde::segmenter {

enum class Segmentation {
  kBpe,           // merges + vocabulary trained here
  kWord,          // whole whitespace tokens (word-level baseline)
  kPretokenized,  // text already split into boundary-marked pieces by an external tool
};

// Text <-> id conversion for one side of the model.
class Tokenizer {
 public:
  static Tokenizer bpe(BpeModel model);
  static Tokenizer word(SubwordVocab vocab);
  static Tokenizer pretokenized(SubwordVocab vocab);

  Segmentation kind() const { return kind_; }
  const SubwordVocab& vocab() const { return vocab_; }
  const MergeTable& merges() const { return merges_; }

  std::vector<int32_t> encode(std::string_view sentence) const;
  std::string decode(std::span<const int32_t> ids) const;
  // Pieces of one word as strings (analysis helpers).
  std::vector<std::string> pieces(std::string_view word) const;

 private:
  Tokenizer(Segmentation kind, SubwordVocab vocab, MergeTable merges)
      : kind_(kind), vocab_(std::move(vocab)), merges_(std::move(merges)) {}

  Segmentation kind_;
  SubwordVocab vocab_;
  MergeTable merges_;
};

}  // namespace decsde::segmenter
