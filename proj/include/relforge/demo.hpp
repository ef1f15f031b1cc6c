#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "relforge/eval.hpp"
#include "relforge/recall.hpp"
#include "relforge/textprep.hpp"

namespace relforge::demo {

struct DemoSpec {
  int item_count = 1000;
  int query_count = 10;
  std::uint64_t seed = 7;
  double labeled_fraction = 0.4;  // of recalled candidates that carry labels
  int shard_count = 4;
  int worker_count = 2;
};

// Seeded synthetic retail corpus: each query names a product category;
// items are either category instances (relevant) or accessories that
// mention the category word (recalled by stage one, to be filtered by
// stage two). Two queries reach their category only through the synonym
// dictionary.
struct DemoData {
  std::vector<recall::CorpusItem> corpus;
  std::vector<std::pair<std::string, std::string>> queries;
  eval::TruthData truth;  // fully judged query x item universe
  std::vector<std::string> vocab_tokens;
  std::vector<std::string> stopwords;
  std::vector<std::pair<std::string, std::string>> synonym_lines;  // term, phrase
};

DemoData generate(const DemoSpec& spec);

// Runs both stages end to end under work_dir and prints a deterministic
// report. Returns the final overall F1.
double run_demo(const DemoSpec& spec, const std::filesystem::path& work_dir,
                std::ostream& out);

}  // namespace relforge::demo
