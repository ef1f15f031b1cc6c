#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace relforge::textprep {

// Lowercase terms removed before indexing/matching. Entries must be
// lowercase and free of whitespace.
class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(std::vector<std::string> words);

  bool contains(const std::string& w) const { return words_.count(w) != 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// term -> list of expansion phrases, each phrase a list of terms.
// Keys lowercase; phrases non-empty; a key never expands to exactly
// itself alone.
class SynonymDict {
 public:
  SynonymDict() = default;

  void add(const std::string& term, std::vector<std::string> phrase);
  const std::vector<std::vector<std::string>>* find(const std::string& term) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::unordered_map<std::string, std::vector<std::vector<std::string>>> entries_;
};

struct PrepConfig {
  bool lowercase = true;
  bool apply_stemming = true;
  bool apply_stopwords = true;
  bool apply_synonyms = true;
};

// Split on whitespace and every non-alphanumeric character, discarding the
// separators; tokens come back lowercased. Non-ASCII letters survive as
// letters (see chars.hpp for the exact profile).
std::vector<std::string> basic_tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stops);

// English Porter2 (Snowball) stem. Tokens that are not purely ASCII-alphabetic
// (numbers, mixed alphanumerics, non-ASCII) are returned unchanged.
std::string stem(std::string_view token);

// Input tokens in order, then the deduplicated expansion terms of every
// input token found in the dictionary. One level deep.
std::vector<std::string> expand_synonyms(const std::vector<std::string>& tokens,
                                         const SynonymDict& dict);

// tokenize -> stopwords -> synonyms -> stem, each stage per cfg flag.
std::vector<std::string> preprocess(std::string_view text, const PrepConfig& cfg,
                                    const StopwordSet& stops,
                                    const SynonymDict& dict);

// One lowercase term per line; '#' lines and blank lines ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

// TSV: term<TAB>expansion phrase (whitespace-separated terms).
// Multiple lines per term accumulate.
SynonymDict load_synonyms(const std::filesystem::path& path);

}  // namespace relforge::textprep
