#include "relforge/recall.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "relforge/errors.hpp"
#include "relforge/tsv.hpp"

namespace relforge::recall {

InvertedIndex build_index(const std::vector<CorpusItem>& corpus,
                          const textprep::PrepConfig& cfg,
                          const textprep::StopwordSet& stops) {
  InvertedIndex index;
  index.doc_count = corpus.size();
  index.item_ids.reserve(corpus.size());

  textprep::PrepConfig title_cfg = cfg;
  title_cfg.apply_synonyms = false;
  const textprep::SynonymDict no_dict;

  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(corpus.size());
  for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
    const auto& item = corpus[ord];
    if (item.item_id.empty()) throw DataError("corpus item with empty item_id");
    if (!seen_ids.insert(item.item_id).second)
      throw DataError("duplicate item_id in corpus: '" + item.item_id + "'");
    index.item_ids.push_back(item.item_id);

    auto terms = textprep::preprocess(item.title, title_cfg, stops, no_dict);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms)
      index.postings[std::move(t)].push_back(static_cast<int>(ord));
  }
  return index;
}

namespace {

std::vector<int> recall_ordinals(std::string_view query,
                                 const InvertedIndex& index,
                                 const textprep::PrepConfig& cfg,
                                 const textprep::StopwordSet& stops,
                                 const textprep::SynonymDict& dict) {
  auto terms = textprep::preprocess(query, cfg, stops, dict);
  std::vector<int> hits;
  for (const auto& t : terms) {
    auto it = index.postings.find(t);
    if (it == index.postings.end()) continue;
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

}  // namespace

std::vector<std::string> recall_candidates(std::string_view query,
                                           const InvertedIndex& index,
                                           const textprep::PrepConfig& cfg,
                                           const textprep::StopwordSet& stops,
                                           const textprep::SynonymDict& dict) {
  std::vector<std::string> ids;
  for (int ord : recall_ordinals(query, index, cfg, stops, dict))
    ids.push_back(index.item_ids[static_cast<std::size_t>(ord)]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

CandidateSet recall_all(
    const std::vector<std::pair<std::string, std::string>>& queries,
    const InvertedIndex& index, const textprep::PrepConfig& cfg,
    const textprep::StopwordSet& stops, const textprep::SynonymDict& dict) {
  std::unordered_set<std::string> seen;
  for (const auto& [qid, text] : queries) {
    (void)text;
    if (!seen.insert(qid).second)
      throw DataError("duplicate query_id: '" + qid + "'");
  }

  CandidateSet cs;
  for (const auto& [qid, text] : queries) {
    auto ids = recall_candidates(text, index, cfg, stops, dict);
    cs.stats.per_query[qid] = ids.size();
    for (auto& id : ids) cs.pairs.emplace_back(qid, std::move(id));
  }
  std::sort(cs.pairs.begin(), cs.pairs.end());
  cs.stats.total = cs.pairs.size();
  const double denom =
      static_cast<double>(queries.size()) * static_cast<double>(index.doc_count);
  cs.stats.reduction_ratio =
      denom > 0 ? static_cast<double>(cs.stats.total) / denom : 0.0;
  return cs;
}

std::vector<CorpusItem> load_corpus(const std::filesystem::path& path) {
  auto lines = tsv::read_lines(path);
  if (lines.empty() || lines[0].rfind("item_id\ttitle", 0) != 0)
    throw DataError("corpus file " + path.string() +
                    ": header row 'item_id<TAB>title...' required");
  std::vector<CorpusItem> corpus;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = tsv::split_fields(lines[i]);
    if (f.size() < 2)
      throw DataError("corpus line " + std::to_string(i + 1) +
                      ": expected at least item_id<TAB>title");
    CorpusItem item;
    item.item_id = f[0];
    item.title = f[1];
    if (f.size() > 2 && !f[2].empty())
      item.price = tsv::parse_double(f[2], "price");
    if (f.size() > 3 && !f[3].empty()) item.breadcrumb = f[3];
    if (f.size() > 4 && !f[4].empty()) item.image_url = f[4];
    corpus.push_back(std::move(item));
  }
  return corpus;
}

std::vector<std::pair<std::string, std::string>> load_queries(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> queries;
  std::size_t lineno = 0;
  for (auto& line : tsv::read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = tsv::split_fields(line);
    if (f.size() != 2)
      throw DataError("queries line " + std::to_string(lineno) +
                      ": expected query_id<TAB>query_text");
    queries.emplace_back(f[0], f[1]);
  }
  return queries;
}

void write_candidates(const std::filesystem::path& path, const CandidateSet& cs) {
  std::string out;
  for (const auto& [qid, iid] : cs.pairs) {
    out += qid;
    out += '\t';
    out += iid;
    out += '\n';
  }
  tsv::write_file(path, out);
}

std::vector<std::pair<std::string, std::string>> load_candidates(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t lineno = 0;
  for (auto& line : tsv::read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = tsv::split_fields(line);
    if (f.size() != 2)
      throw DataError("candidates line " + std::to_string(lineno) +
                      ": expected query_id<TAB>item_id");
    pairs.emplace_back(f[0], f[1]);
  }
  return pairs;
}

void save_index(const std::filesystem::path& path, const InvertedIndex& index) {
  std::string out = "relforge-index\tv1\t" + std::to_string(index.doc_count) + "\n";
  for (const auto& id : index.item_ids) {
    out += id;
    out += '\n';
  }
  std::vector<std::string> terms;
  terms.reserve(index.postings.size());
  for (const auto& [term, _] : index.postings) terms.push_back(term);
  std::sort(terms.begin(), terms.end());
  for (const auto& term : terms) {
    out += term;
    const auto& posting = index.postings.at(term);
    for (std::size_t i = 0; i < posting.size(); ++i) {
      out += i == 0 ? '\t' : ',';
      out += std::to_string(posting[i]);
    }
    out += '\n';
  }
  tsv::write_file(path, out);
}

InvertedIndex load_index(const std::filesystem::path& path) {
  auto lines = tsv::read_lines(path);
  if (lines.empty()) throw DataError("index file empty: " + path.string());
  auto header = tsv::split_fields(lines[0]);
  if (header.size() != 3 || header[0] != "relforge-index" || header[1] != "v1")
    throw DataError("not a relforge index file: " + path.string());
  InvertedIndex index;
  index.doc_count =
      static_cast<std::size_t>(tsv::parse_int(header[2], "doc_count"));
  if (lines.size() < 1 + index.doc_count)
    throw DataError("index file truncated: " + path.string());
  for (std::size_t i = 0; i < index.doc_count; ++i)
    index.item_ids.push_back(lines[1 + i]);
  for (std::size_t i = 1 + index.doc_count; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = tsv::split_fields(lines[i]);
    if (f.size() != 2)
      throw DataError("index file line " + std::to_string(i + 1) + " malformed");
    std::vector<int> posting;
    for (auto& s : tsv::split_fields(f[1], ','))
      posting.push_back(static_cast<int>(tsv::parse_int(s, "ordinal")));
    index.postings.emplace(f[0], std::move(posting));
  }
  return index;
}

}  // namespace relforge::recall
