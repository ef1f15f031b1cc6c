#include "relforge/textprep.hpp"

#include <algorithm>

#include "relforge/chars.hpp"
#include "relforge/errors.hpp"
#include "relforge/tsv.hpp"

namespace relforge::textprep {

StopwordSet::StopwordSet(std::vector<std::string> words) {
  for (auto& w : words) {
    if (w.empty()) throw DataError("stopword entry is empty");
    for (char c : w) {
      if (c == ' ' || c == '\t')
        throw DataError("stopword contains whitespace: '" + w + "'");
      if (c >= 'A' && c <= 'Z')
        throw DataError("stopword not lowercase: '" + w + "'");
    }
    words_.insert(std::move(w));
  }
}

void SynonymDict::add(const std::string& term, std::vector<std::string> phrase) {
  if (term.empty()) throw DataError("synonym key is empty");
  for (char c : term)
    if (c >= 'A' && c <= 'Z')
      throw DataError("synonym key not lowercase: '" + term + "'");
  if (phrase.empty())
    throw DataError("synonym expansion for '" + term + "' is empty");
  if (phrase.size() == 1 && phrase[0] == term)
    throw DataError("synonym key '" + term + "' expands to itself");
  entries_[term].push_back(std::move(phrase));
}

const std::vector<std::vector<std::string>>* SynonymDict::find(
    const std::string& term) const {
  auto it = entries_.find(term);
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

std::vector<std::string> tokenize_impl(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    auto d = chars::decode_utf8(text, i);
    switch (chars::classify(d.cp, d.valid)) {
      case chars::Kind::Letter:
        for (int k = 0; k < d.len; ++k) {
          char c = text[i + k];
          cur.push_back(lowercase ? chars::to_lower_ascii(c) : c);
        }
        break;
      default:  // whitespace and punctuation both split and vanish
        if (!cur.empty()) {
          tokens.push_back(std::move(cur));
          cur.clear();
        }
        break;
    }
    i += static_cast<std::size_t>(d.len);
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

std::vector<std::string> basic_tokenize(std::string_view text) {
  return tokenize_impl(text, /*lowercase=*/true);
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stops) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (!stops.contains(t)) out.push_back(t);
  return out;
}

std::vector<std::string> expand_synonyms(const std::vector<std::string>& tokens,
                                         const SynonymDict& dict) {
  std::vector<std::string> out = tokens;
  if (dict.empty()) return out;
  std::unordered_set<std::string> seen;
  for (const auto& t : tokens) {
    const auto* phrases = dict.find(t);
    if (!phrases) continue;
    for (const auto& phrase : *phrases)
      for (const auto& term : phrase)
        if (seen.insert(term).second) out.push_back(term);
  }
  return out;
}

std::vector<std::string> preprocess(std::string_view text, const PrepConfig& cfg,
                                    const StopwordSet& stops,
                                    const SynonymDict& dict) {
  std::vector<std::string> tokens = tokenize_impl(text, cfg.lowercase);
  if (cfg.apply_stopwords) tokens = remove_stopwords(tokens, stops);
  if (cfg.apply_synonyms) tokens = expand_synonyms(tokens, dict);
  if (cfg.apply_stemming)
    for (auto& t : tokens) t = stem(t);
  return tokens;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::vector<std::string> words;
  for (auto& line : tsv::read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    words.push_back(line);
  }
  return StopwordSet(std::move(words));
}

SynonymDict load_synonyms(const std::filesystem::path& path) {
  SynonymDict dict;
  std::size_t lineno = 0;
  for (auto& line : tsv::read_lines(path)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = tsv::split_fields(line);
    if (fields.size() != 2)
      throw DataError("synonyms file " + path.string() + " line " +
                      std::to_string(lineno) + ": expected term<TAB>phrase");
    std::vector<std::string> phrase;
    for (auto& term : tsv::split_fields(fields[1], ' '))
      if (!term.empty()) phrase.push_back(term);
    dict.add(fields[0], std::move(phrase));
  }
  return dict;
}

}  // namespace relforge::textprep
