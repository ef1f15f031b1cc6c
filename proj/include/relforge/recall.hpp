#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relforge/textprep.hpp"

namespace relforge::recall {

struct CorpusItem {
  std::string item_id;
  std::string title;
  std::optional<double> price;
  std::optional<std::string> breadcrumb;
  std::optional<std::string> image_url;  // carried, unused
};

// Posting lists over preprocessed title terms. Ordinals are dense and
// follow corpus order; item_id strings appear only at the boundary.
struct InvertedIndex {
  std::unordered_map<std::string, std::vector<int>> postings;
  std::vector<std::string> item_ids;  // ordinal -> item_id
  std::size_t doc_count = 0;
};

struct CandidateStats {
  std::map<std::string, std::size_t> per_query;
  std::size_t total = 0;
  double reduction_ratio = 0.0;  // total / (|queries| * doc_count)
};

struct CandidateSet {
  std::vector<std::pair<std::string, std::string>> pairs;  // sorted, unique
  CandidateStats stats;
};

// Titles are preprocessed with synonyms forced off; queries get the full
// treatment at recall time.
InvertedIndex build_index(const std::vector<CorpusItem>& corpus,
                          const textprep::PrepConfig& cfg,
                          const textprep::StopwordSet& stops);

// Union of postings over all preprocessed + expanded query terms,
// lexicographically sorted item ids.
std::vector<std::string> recall_candidates(std::string_view query,
                                           const InvertedIndex& index,
                                           const textprep::PrepConfig& cfg,
                                           const textprep::StopwordSet& stops,
                                           const textprep::SynonymDict& dict);

CandidateSet recall_all(
    const std::vector<std::pair<std::string, std::string>>& queries,
    const InvertedIndex& index, const textprep::PrepConfig& cfg,
    const textprep::StopwordSet& stops, const textprep::SynonymDict& dict);

// item_id<TAB>title[<TAB>price][<TAB>breadcrumb][<TAB>image_url]; header
// row required.
std::vector<CorpusItem> load_corpus(const std::filesystem::path& path);

// query_id<TAB>query_text, no header.
std::vector<std::pair<std::string, std::string>> load_queries(
    const std::filesystem::path& path);

void write_candidates(const std::filesystem::path& path, const CandidateSet& cs);
std::vector<std::pair<std::string, std::string>> load_candidates(
    const std::filesystem::path& path);

void save_index(const std::filesystem::path& path, const InvertedIndex& index);
InvertedIndex load_index(const std::filesystem::path& path);

}  // namespace relforge::recall
