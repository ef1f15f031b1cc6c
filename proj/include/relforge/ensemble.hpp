#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace relforge::ensemble {

using PairKey = std::pair<std::string, std::string>;  // (query_id, item_id)

struct ScoreTable {
  std::map<PairKey, double> rows;
  std::string model_name;
};

// Arithmetic mean of per-pair scores over tables covering the identical
// key set. Per-pair summands are sorted numerically before adding, so any
// input ordering produces bit-identical output.
ScoreTable ensemble_mean(const std::vector<ScoreTable>& tables);

// Orchestrator score-file TSV (query_id<TAB>item_id<TAB>score<TAB>model).
ScoreTable load_score_table(const std::filesystem::path& path);
void save_score_table(const std::filesystem::path& path, const ScoreTable& table);

}  // namespace relforge::ensemble
