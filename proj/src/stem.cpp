// English Porter2 (Snowball) stemmer.
// Reference behavior: http://snowball.tartarus.org/algorithms/english/stemmer.html
// Consonant-y is marked 'Y' internally and restored at the end.

#include <array>
#include <cstring>
#include <string>
#include <string_view>
#include <unordered_map>

#include "relforge/chars.hpp"
#include "relforge/textprep.hpp"

namespace relforge::textprep {

namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

// bb dd ff gg mm nn pp rr tt
bool is_double(char a, char b) {
  if (a != b) return false;
  return std::strchr("bdfgmnprt", a) != nullptr;
}

bool is_li_ending(char c) { return std::strchr("cdeghkmnrt", c) != nullptr; }

bool ends_with(const std::string& w, std::string_view sfx) {
  return w.size() >= sfx.size() &&
         w.compare(w.size() - sfx.size(), sfx.size(), sfx) == 0;
}

// R1/R2 start positions stay fixed while the word shrinks; a suffix is
// "in" a region when it starts at or past the region start.
struct Regions {
  std::size_t r1, r2;
  bool in_r1(const std::string& w, std::size_t sfx_len) const {
    return w.size() - sfx_len >= r1;
  }
  bool in_r2(const std::string& w, std::size_t sfx_len) const {
    return w.size() - sfx_len >= r2;
  }
};

std::size_t region_after(const std::string& w, std::size_t from) {
  for (std::size_t i = from + 1; i < w.size(); ++i)
    if (!is_vowel(w[i]) && is_vowel(w[i - 1])) return i + 1;
  return w.size();
}

Regions compute_regions(const std::string& w) {
  std::size_t r1;
  if (w.rfind("gener", 0) == 0 || w.rfind("arsen", 0) == 0)
    r1 = 5;
  else if (w.rfind("commun", 0) == 0)
    r1 = 6;
  else
    r1 = region_after(w, 0);
  std::size_t r2 = r1 >= w.size() ? w.size() : region_after(w, r1);
  return {r1, r2};
}

bool contains_vowel(const std::string& w, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to && i < w.size(); ++i)
    if (is_vowel(w[i])) return true;
  return false;
}

// (a) non-vowel, vowel, non-vowel not w/x/Y at the end;
// (b) the whole word is vowel + non-vowel.
bool ends_in_short_syllable(const std::string& w) {
  std::size_t n = w.size();
  if (n == 2) return is_vowel(w[0]) && !is_vowel(w[1]);
  if (n < 3) return false;
  char last = w[n - 1];
  return !is_vowel(w[n - 3]) && is_vowel(w[n - 2]) && !is_vowel(last) &&
         last != 'w' && last != 'x' && last != 'Y';
}

bool is_short_word(const std::string& w, const Regions& r) {
  return ends_in_short_syllable(w) && r.r1 >= w.size();
}

const std::unordered_map<std::string_view, std::string_view> kSpecialWords = {
    {"skis", "ski"},     {"skies", "sky"},   {"dying", "die"},
    {"lying", "lie"},    {"tying", "tie"},   {"idly", "idl"},
    {"gently", "gentl"}, {"ugly", "ugli"},   {"early", "earli"},
    {"only", "onli"},    {"singly", "singl"},{"sky", "sky"},
    {"news", "news"},    {"howe", "howe"},   {"atlas", "atlas"},
    {"cosmos", "cosmos"},{"bias", "bias"},   {"andes", "andes"},
};

bool is_invariant_after_1a(const std::string& w) {
  static constexpr std::array<std::string_view, 8> words = {
      "inning", "outing",  "canning", "herring",
      "earring", "proceed", "exceed",  "succeed"};
  for (auto s : words)
    if (w == s) return true;
  return false;
}

void step0(std::string& w) {
  for (std::string_view sfx : {"'s'", "'s", "'"}) {
    if (ends_with(w, sfx)) {
      w.resize(w.size() - sfx.size());
      return;
    }
  }
}

void step1a(std::string& w) {
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
    return;
  }
  if (ends_with(w, "ied") || ends_with(w, "ies")) {
    w.resize(w.size() - 3);
    w += (w.size() > 1) ? "i" : "ie";
    return;
  }
  if (ends_with(w, "us") || ends_with(w, "ss")) return;
  if (ends_with(w, "s")) {
    if (w.size() >= 3 && contains_vowel(w, 0, w.size() - 2)) w.pop_back();
  }
}

void step1b(std::string& w, const Regions& r) {
  static constexpr std::array<std::string_view, 6> sfxs = {
      "eedly", "ingly", "edly", "eed", "ing", "ed"};
  for (auto sfx : sfxs) {
    if (!ends_with(w, sfx)) continue;
    if (sfx == "eed" || sfx == "eedly") {
      if (r.in_r1(w, sfx.size())) {
        w.resize(w.size() - sfx.size());
        w += "ee";
      }
      return;
    }
    if (!contains_vowel(w, 0, w.size() - sfx.size())) return;
    w.resize(w.size() - sfx.size());
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
      w += 'e';
    } else if (w.size() >= 2 && is_double(w[w.size() - 2], w[w.size() - 1])) {
      w.pop_back();
    } else if (is_short_word(w, r)) {
      w += 'e';
    }
    return;
  }
}

void step1c(std::string& w) {
  std::size_t n = w.size();
  if (n > 2 && (w[n - 1] == 'y' || w[n - 1] == 'Y') && !is_vowel(w[n - 2]))
    w[n - 1] = 'i';
}

struct Rule {
  std::string_view sfx;
  std::string_view repl;
};

// Longest matching suffix wins; if its region condition fails, nothing
// happens (no fallback to shorter suffixes).
void step2(std::string& w, const Regions& r) {
  static constexpr std::array<Rule, 24> rules = {{
      {"ization", "ize"}, {"ational", "ate"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"iveness", "ive"}, {"tional", "tion"},
      {"biliti", "ble"},  {"lessli", "less"}, {"entli", "ent"},
      {"ation", "ate"},   {"alism", "al"},    {"aliti", "al"},
      {"ousli", "ous"},   {"iviti", "ive"},   {"fulli", "ful"},
      {"enci", "ence"},   {"anci", "ance"},   {"abli", "able"},
      {"izer", "ize"},    {"ator", "ate"},    {"alli", "al"},
      {"ogi", "og"},      {"bli", "ble"},     {"li", ""},
  }};
  for (const auto& rule : rules) {
    if (!ends_with(w, rule.sfx)) continue;
    if (r.in_r1(w, rule.sfx.size())) {
      if (rule.sfx == "ogi") {
        if (w.size() >= 4 && w[w.size() - 4] == 'l') {
          w.resize(w.size() - 3);
          w += "og";
        }
      } else if (rule.sfx == "li") {
        if (w.size() >= 3 && is_li_ending(w[w.size() - 3]))
          w.resize(w.size() - 2);
      } else {
        w.resize(w.size() - rule.sfx.size());
        w += rule.repl;
      }
    }
    return;
  }
}

void step3(std::string& w, const Regions& r) {
  static constexpr std::array<Rule, 9> rules = {{
      {"ational", "ate"}, {"tional", "tion"}, {"alize", "al"},
      {"icate", "ic"},    {"iciti", "ic"},    {"ative", ""},
      {"ical", "ic"},     {"ness", ""},       {"ful", ""},
  }};
  for (const auto& rule : rules) {
    if (!ends_with(w, rule.sfx)) continue;
    if (r.in_r1(w, rule.sfx.size())) {
      if (rule.sfx == "ative") {
        if (r.in_r2(w, 5)) w.resize(w.size() - 5);
      } else {
        w.resize(w.size() - rule.sfx.size());
        w += rule.repl;
      }
    }
    return;
  }
}

void step4(std::string& w, const Regions& r) {
  static constexpr std::array<std::string_view, 18> sfxs = {
      "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism",
      "ate",  "iti",  "ous",  "ive",  "ize",  "ion",  "al",  "er",  "ic"};
  for (auto sfx : sfxs) {
    if (!ends_with(w, sfx)) continue;
    if (r.in_r2(w, sfx.size())) {
      if (sfx == "ion") {
        char prev = w.size() >= 4 ? w[w.size() - 4] : '\0';
        if (prev == 's' || prev == 't') w.resize(w.size() - 3);
      } else {
        w.resize(w.size() - sfx.size());
      }
    }
    return;
  }
}

void step5(std::string& w, const Regions& r) {
  if (ends_with(w, "e")) {
    if (r.in_r2(w, 1)) {
      w.pop_back();
    } else if (r.in_r1(w, 1)) {
      std::string stem_part = w.substr(0, w.size() - 1);
      if (!ends_in_short_syllable(stem_part)) w.pop_back();
    }
    return;
  }
  if (ends_with(w, "l") && r.in_r2(w, 1) && w.size() >= 2 &&
      w[w.size() - 2] == 'l')
    w.pop_back();
}

}  // namespace

std::string stem(std::string_view token) {
  // Stemming only makes sense for plain ASCII-alphabetic terms; numbers,
  // mixed alphanumerics and non-ASCII tokens pass through.
  if (!chars::all_ascii_alpha(token)) return std::string(token);
  if (token.size() <= 2) return std::string(token);

  if (auto it = kSpecialWords.find(token); it != kSpecialWords.end())
    return std::string(it->second);

  std::string w(token);

  // Mark consonant y as 'Y': initial y, or y after a vowel.
  if (w[0] == 'y') w[0] = 'Y';
  for (std::size_t i = 1; i < w.size(); ++i)
    if (w[i] == 'y' && is_vowel(w[i - 1])) w[i] = 'Y';

  const Regions r = compute_regions(w);

  step0(w);
  step1a(w);
  if (!is_invariant_after_1a(w)) {
    step1b(w, r);
    step1c(w);
    step2(w, r);
    step3(w, r);
    step4(w, r);
    step5(w, r);
  }

  for (char& c : w)
    if (c == 'Y') c = 'y';
  return w;
}

}  // namespace relforge::textprep
