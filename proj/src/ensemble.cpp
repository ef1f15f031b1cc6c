#include "relforge/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "relforge/errors.hpp"
#include "relforge/tsv.hpp"

namespace relforge::ensemble {

ScoreTable ensemble_mean(const std::vector<ScoreTable>& tables) {
  if (tables.empty()) throw ContractError("ensemble_mean: need at least one table");

  const auto& base = tables[0];
  for (std::size_t t = 1; t < tables.size(); ++t) {
    // Strict key-set equality; partial ensembles hide shard bugs.
    for (const auto& [key, _] : base.rows) {
      if (!tables[t].rows.count(key))
        throw DataError("ensemble: table '" + tables[t].model_name +
                        "' missing pair (" + key.first + ", " + key.second + ")");
    }
    for (const auto& [key, _] : tables[t].rows) {
      if (!base.rows.count(key))
        throw DataError("ensemble: table '" + base.model_name +
                        "' missing pair (" + key.first + ", " + key.second + ")");
    }
  }

  ScoreTable out;
  std::vector<std::string> names;
  for (const auto& t : tables) names.push_back(t.model_name);
  std::sort(names.begin(), names.end());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out.model_name += '+';
    out.model_name += names[i];
  }

  std::vector<double> vals(tables.size());
  for (const auto& [key, v0] : base.rows) {
    vals[0] = v0;
    for (std::size_t t = 1; t < tables.size(); ++t)
      vals[t] = tables[t].rows.at(key);
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (double v : vals) sum += v;
    out.rows[key] = sum / static_cast<double>(tables.size());
  }
  return out;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  auto lines = tsv::read_lines(path);
  if (lines.empty() || lines[0] != "query_id\titem_id\tscore\tmodel")
    throw DataError("score file " + path.string() +
                    ": expected header query_id<TAB>item_id<TAB>score<TAB>model");
  ScoreTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = tsv::split_fields(lines[i]);
    if (f.size() != 4)
      throw DataError("score file line " + std::to_string(i + 1) + ": expected 4 fields");
    if (f[2] == "ERR")
      throw DataError("score file line " + std::to_string(i + 1) +
                      ": error record (score=ERR) cannot be ensembled");
    const double score = tsv::parse_double(f[2], "score");
    if (!std::isfinite(score))
      throw DataError("score file line " + std::to_string(i + 1) + ": non-finite score");
    if (!table.rows.emplace(PairKey{f[0], f[1]}, score).second)
      throw DataError("score file line " + std::to_string(i + 1) +
                      ": duplicate pair (" + f[0] + ", " + f[1] + ")");
    if (table.model_name.empty()) table.model_name = f[3];
  }
  if (table.model_name.empty()) table.model_name = path.stem().string();
  return table;
}

void save_score_table(const std::filesystem::path& path, const ScoreTable& table) {
  std::string out = "query_id\titem_id\tscore\tmodel\n";
  for (const auto& [key, score] : table.rows) {
    out += key.first;
    out += '\t';
    out += key.second;
    out += '\t';
    out += tsv::format_sig(score, 9);
    out += '\t';
    out += table.model_name;
    out += '\n';
  }
  tsv::write_file(path, out);
}

}  // namespace relforge::ensemble
