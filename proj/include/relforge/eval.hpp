#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "relforge/ensemble.hpp"

namespace relforge::eval {

using PairKey = ensemble::PairKey;
using PairSet = std::set<PairKey>;

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// A metric that may be undefined (e.g. precision with no predicted
// positives); `reason` says why when absent.
struct Metric {
  std::optional<double> value;
  std::string reason;
};

struct EvalReport {
  Counts counts;
  Metric precision, recall, f1;
  std::map<std::string, double> per_query_f1;
  std::optional<double> mean_per_query_f1;
  std::optional<double> threshold;
};

// Pooled precision/recall/F1 over the judged universe. predictions and
// truth must be subsets of universe.
EvalReport precision_recall_f1(const PairSet& predictions, const PairSet& truth,
                               const PairSet& universe);

// Unweighted mean of per-query F1 over `queries`. Within a query: empty
// truth and empty predictions score 1; empty truth with predictions
// scores 0.
double mean_per_query_f1(const PairSet& predictions, const PairSet& truth,
                         const PairSet& universe,
                         const std::vector<std::string>& queries,
                         std::map<std::string, double>* per_query = nullptr);

enum class Objective { Overall, PerQuery };

// Evaluates the objective at 0, 1 and every midpoint between adjacent
// distinct scores (prediction rule: score > threshold); ties break toward
// the higher threshold.
std::pair<double, EvalReport> sweep_threshold(const ensemble::ScoreTable& scores,
                                              const PairSet& truth,
                                              const PairSet& universe,
                                              Objective objective);

// Applies a fixed threshold and fills the full report, including the
// per-query metrics over the universe's query ids.
EvalReport evaluate_at_threshold(const ensemble::ScoreTable& scores,
                                 const PairSet& truth, const PairSet& universe,
                                 double threshold);

struct TruthData {
  PairSet positives;
  PairSet universe;  // every judged pair, label 0 or 1
};

// TSV query_id<TAB>item_id<TAB>label(0|1), no header.
TruthData load_truth(const std::filesystem::path& path);

std::string render_report(const EvalReport& report);
void write_per_query_tsv(const std::filesystem::path& path,
                         const EvalReport& report);

}  // namespace relforge::eval
