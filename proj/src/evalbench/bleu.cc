#include "decsde/evalbench/bleu.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <regex>

#include "decsde/common/error.h"
#include "decsde/common/utf8.h"

namespace decsde::evalbench {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

using NGramCounts = std::map<std::vector<std::string>, int64_t>;

NGramCounts count_ngrams(const std::vector<std::string>& words, size_t n) {
  NGramCounts counts;
  for (size_t i = 0; i + n <= words.size(); ++i)
    ++counts[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                      words.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

std::vector<std::string> tokenize_13a(std::string_view line) {
  static const std::regex kSymbols(R"(([\{-\~\[-\` -\&\(-\+\:-\@\/]))");
  static const std::regex kPeriodAfter(R"(([^0-9])([\.,]))");
  static const std::regex kPeriodBefore(R"(([\.,])([^0-9]))");
  static const std::regex kDash(R"(([0-9])(-))");

  std::string s(line);
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  s = " " + s + " ";
  s = std::regex_replace(s, kSymbols, " $1 ");
  s = std::regex_replace(s, kPeriodAfter, "$1 $2 ");
  s = std::regex_replace(s, kPeriodBefore, " $1 $2");
  s = std::regex_replace(s, kDash, "$1 $2 ");
  return utf8::split_words(s);
}

BleuReport bleu_corpus(std::span<const std::string> hyps, std::span<const std::string> refs) {
  if (hyps.size() != refs.size()) {
    throw DataError("bleu: " + std::to_string(hyps.size()) + " hypotheses vs " + std::to_string(refs.size()) +
                    " references");
  }
  BleuReport r;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto h = tokenize_13a(hyps[i]);
    const auto f = tokenize_13a(refs[i]);
    r.hyp_len += static_cast<int64_t>(h.size());
    r.ref_len += static_cast<int64_t>(f.size());
    for (size_t n = 1; n <= 4; ++n) {
      const auto hc = count_ngrams(h, n);
      const auto rc = count_ngrams(f, n);
      for (const auto& [gram, c] : hc) {
        r.totals[n - 1] += c;
        auto it = rc.find(gram);
        if (it != rc.end()) r.matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (r.hyp_len == 0) return r;

  double smooth = 1.0;
  double log_sum = 0;
  for (size_t n = 0; n < 4; ++n) {
    if (r.totals[n] == 0) {
      // Hypotheses too short for this order; log(0) drives the score to 0.
      log_sum = -std::numeric_limits<double>::infinity();
      break;
    }
    if (r.matches[n] == 0) {
      smooth *= 2;
      r.precisions[n] = 100.0 / (smooth * static_cast<double>(r.totals[n]));
    } else {
      r.precisions[n] = 100.0 * static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    }
    log_sum += std::log(r.precisions[n] / 100.0);
  }
  r.brevity_penalty =
      r.hyp_len < r.ref_len ? std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len)) : 1.0;
  if (r.matches[0] == 0 || std::isinf(log_sum)) return r;
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

std::string BleuReport::to_string() const {
  char buf[256];
  const double ratio = ref_len ? static_cast<double>(hyp_len) / static_cast<double>(ref_len) : 0.0;
  std::snprintf(buf, sizeof buf,
                "BLEU = %.2f %.1f/%.1f/%.1f/%.1f (BP = %.3f ratio = %.3f hyp_len = %lld ref_len = %lld)", score,
                precisions[0], precisions[1], precisions[2], precisions[3], brevity_penalty, ratio,
                static_cast<long long>(hyp_len), static_cast<long long>(ref_len));
  return buf;
}

}  // namespace decsde::evalbench
