#include "relforge/chars.hpp"

#include <algorithm>
#include <array>

namespace relforge::chars {

Decoded decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};

  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto bits = [&](std::size_t k) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F);
  };

  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    std::uint32_t cp = (static_cast<std::uint32_t>(b0 & 0x1F) << 6) | bits(1);
    if (cp >= 0x80) return {cp, 2, true};
  } else if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    std::uint32_t cp = (static_cast<std::uint32_t>(b0 & 0x0F) << 12) |
                       (bits(1) << 6) | bits(2);
    if (cp >= 0x800) return {cp, 3, true};
  } else if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    std::uint32_t cp = (static_cast<std::uint32_t>(b0 & 0x07) << 18) |
                       (bits(1) << 12) | (bits(2) << 6) | bits(3);
    if (cp >= 0x10000 && cp <= 0x10FFFF) return {cp, 4, true};
  }
  return {b0, 1, false};
}

namespace {

struct Range {
  std::uint32_t lo, hi;
};

// Common general-category-P ranges. Not the full Unicode table; covers
// Latin-1 signs, General Punctuation, CJK brackets and fullwidth forms.
constexpr std::array<Range, 21> kPunctRanges{{
    {0x00A1, 0x00A1}, {0x00A7, 0x00A7}, {0x00AB, 0x00AB}, {0x00B6, 0x00B7},
    {0x00BB, 0x00BB}, {0x00BF, 0x00BF}, {0x2010, 0x2027}, {0x2030, 0x205E},
    {0x3001, 0x3003}, {0x3008, 0x3011}, {0x3014, 0x301F}, {0x30FB, 0x30FB},
    {0xFE50, 0xFE52}, {0xFE54, 0xFE57}, {0xFF01, 0xFF03}, {0xFF05, 0xFF0A},
    {0xFF0C, 0xFF0F}, {0xFF1A, 0xFF1B}, {0xFF1F, 0xFF20}, {0xFF3B, 0xFF3D},
    {0xFF5F, 0xFF65},
}};

constexpr std::array<Range, 6> kSpaceRanges{{
    {0x00A0, 0x00A0}, {0x2000, 0x200A}, {0x2028, 0x2029},
    {0x202F, 0x202F}, {0x205F, 0x205F}, {0x3000, 0x3000},
}};

bool in_ranges(std::uint32_t cp, const Range* begin, const Range* end) {
  auto it = std::upper_bound(begin, end, cp, [](std::uint32_t v, const Range& r) {
    return v < r.lo;
  });
  return it != begin && cp <= (it - 1)->hi;
}

}  // namespace

Kind classify(std::uint32_t cp, bool valid) {
  if (!valid) return Kind::Letter;
  if (cp < 0x80) {
    char c = static_cast<char>(cp);
    if (is_ascii_alpha(c) || is_ascii_digit(c)) return Kind::Letter;
    if (cp <= 0x20 || cp == 0x7F) return Kind::Space;
    return Kind::Punct;
  }
  if (in_ranges(cp, kSpaceRanges.data(), kSpaceRanges.data() + kSpaceRanges.size()))
    return Kind::Space;
  if (in_ranges(cp, kPunctRanges.data(), kPunctRanges.data() + kPunctRanges.size()))
    return Kind::Punct;
  return Kind::Letter;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower_ascii(c);
  return out;
}

bool all_ascii_alpha(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_ascii_alpha(c)) return false;
  return true;
}

bool all_ascii_digit(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_ascii_digit(c)) return false;
  return true;
}

}  // namespace relforge::chars
