#include "decsde/segmenter/tokenizer.h"

#include "decsde/common/utf8.h"

namespace decsde::segmenter {

Tokenizer Tokenizer::bpe(BpeModel model) {
  return Tokenizer(Segmentation::kBpe, std::move(model.vocab), std::move(model.merges));
}

Tokenizer Tokenizer::word(SubwordVocab vocab) { return Tokenizer(Segmentation::kWord, std::move(vocab), {}); }

Tokenizer Tokenizer::pretokenized(SubwordVocab vocab) {
  return Tokenizer(Segmentation::kPretokenized, std::move(vocab), {});
}

std::vector<int32_t> Tokenizer::encode(std::string_view sentence) const {
  switch (kind_) {
    case Segmentation::kBpe:
      return encode_sentence(sentence, merges_, vocab_);
    case Segmentation::kWord:
    case Segmentation::kPretokenized: {
      std::vector<int32_t> ids;
      for (const auto& w : utf8::split_words(sentence)) ids.push_back(vocab_.id_or_unk(w));
      return ids;
    }
  }
  return {};
}

std::string Tokenizer::decode(std::span<const int32_t> ids) const {
  if (kind_ != Segmentation::kWord) return decode_pieces(ids, vocab_);
  std::string text;
  for (int32_t id : ids) {
    if (vocab_.is_special(id) && id != SubwordVocab::kUnkId) continue;
    if (!text.empty()) text.push_back(' ');
    text += vocab_.token(id);
  }
  return text;
}

std::vector<std::string> Tokenizer::pieces(std::string_view word) const {
  std::vector<std::string> out;
  for (int32_t id : encode(word)) out.push_back(vocab_.token(id));
  return out;
}

}  // namespace decsde::segmenter
