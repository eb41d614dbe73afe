#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace decsde::segmenter {

// Word-initial boundary marker (U+2581).
inline constexpr std::string_view kBoundary = "\xe2\x96\x81";

inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

// Source-side flag selecting the target language, e.g. "<2aze>".
std::string flag_token(std::string_view language);

// Dense token <-> id map. PAD, BOS, EOS, UNK and one flag per language occupy
// the lowest ids, in that order.
class SubwordVocab {
 public:
  static constexpr int32_t kPadId = 0;
  static constexpr int32_t kBosId = 1;
  static constexpr int32_t kEosId = 2;
  static constexpr int32_t kUnkId = 3;

  SubwordVocab() = default;
  explicit SubwordVocab(std::span<const std::string> languages);

  // Appends a regular token; duplicates and empty strings are rejected.
  int32_t add(std::string token, int64_t count);
  bool contains(std::string_view token) const { return find(token) >= 0; }
  // -1 when absent.
  int32_t find(std::string_view token) const;
  int32_t id_or_unk(std::string_view token) const;

  const std::string& token(int32_t id) const;
  int64_t count(int32_t id) const;
  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
  int32_t num_specials() const { return 4 + static_cast<int32_t>(languages_.size()); }
  bool is_special(int32_t id) const { return id >= 0 && id < num_specials(); }

  const std::vector<std::string>& languages() const { return languages_; }
  int32_t flag_id(std::string_view language) const;
  bool is_flag(int32_t id) const { return id >= 4 && id < num_specials(); }

  // TSV rows "token<TAB>id<TAB>count", specials first.
  void save(const std::filesystem::path& path) const;
  static SubwordVocab load(const std::filesystem::path& path);

  friend bool operator==(const SubwordVocab& a, const SubwordVocab& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_ && a.languages_ == b.languages_;
  }

 private:
  int32_t push(std::string token, int64_t count);

  std::vector<std::string> languages_;
  std::vector<std::string> tokens_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int32_t> ids_;
};

// Whitespace tokens over all corpora, most frequent first (ties by byte
// order), truncated to top_k. Used by the word-level lookup baseline.
SubwordVocab build_word_vocab(std::span<const std::vector<std::string>> corpora, int64_t top_k,
                              std::span<const std::string> languages);

}  // namespace decsde::segmenter
