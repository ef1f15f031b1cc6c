#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace relforge::chars {

// One decoded codepoint and the number of bytes it consumed. Invalid UTF-8
// bytes are passed through one at a time as opaque letters so arbitrary
// byte strings never fail.
struct Decoded {
  std::uint32_t cp;
  int len;
  bool valid;
};

Decoded decode_utf8(std::string_view s, std::size_t i);

enum class Kind { Space, Punct, Letter };

// Classification profile: ASCII alnum are letters; ASCII printable
// non-alnum is punctuation; control characters count as whitespace;
// non-ASCII codepoints are letters unless they fall in the Unicode
// whitespace or punctuation ranges below.
Kind classify(std::uint32_t cp, bool valid);

inline bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

inline char to_lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
}

std::string lower_ascii(std::string_view s);

bool all_ascii_alpha(std::string_view s);
bool all_ascii_digit(std::string_view s);

}  // namespace relforge::chars
