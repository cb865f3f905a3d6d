#pragma once

// Thin UTF-8 helpers over ICU.

#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "morphotok/common.hpp"

namespace morphotok::unicode {

inline bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

// Calls fn(code_point, utf8_bytes) for every code point. Input must be valid UTF-8.
template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) throw Error("invalid UTF-8 in \"" + std::string(s) + "\"");
    fn(c, s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
  }
}

inline std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> out;
  for_each_code_point(s, [&](UChar32, std::string_view bytes) { out.emplace_back(bytes); });
  return out;
}

inline std::size_t code_point_count(std::string_view s) {
  std::size_t n = 0;
  for_each_code_point(s, [&](UChar32, std::string_view) { ++n; });
  return n;
}

inline std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(std::string("ICU NFC unavailable: ") + u_errorName(status));
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) throw Error(std::string("NFC normalization failed: ") + u_errorName(status));
  std::string result;
  out.toUTF8String(result);
  return result;
}

inline std::string to_lower(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string result;
  u.toUTF8String(result);
  return result;
}

inline bool is_white_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

// General categories Pc Pd Ps Pe Pi Pf Po.
inline bool is_punctuation(UChar32 c) { return u_ispunct(c) != 0; }

// General categories Sm Sc Sk So.
inline bool is_symbol(UChar32 c) {
  return (U_GET_GC_MASK(c) & U_GC_S_MASK) != 0;
}

}  // namespace morphotok::unicode
