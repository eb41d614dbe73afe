#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "decsde/common/error.h"

namespace decsde {

// Whole-string integer parse; `where` prefixes the DataError message.
inline int64_t parse_int64(std::string_view text, const std::string& where) {
  int64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw DataError(where + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace decsde
