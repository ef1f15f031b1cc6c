#include "relforge/eval.hpp"

#include <algorithm>

#include "relforge/errors.hpp"
#include "relforge/tsv.hpp"

namespace relforge::eval {

namespace {

Counts count_outcomes(const PairSet& predictions, const PairSet& truth,
                      const PairSet& universe) {
  Counts c;
  for (const auto& pair : universe) {
    const bool predicted = predictions.count(pair) != 0;
    const bool positive = truth.count(pair) != 0;
    if (predicted && positive)
      ++c.tp;
    else if (predicted)
      ++c.fp;
    else if (positive)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

// F1 with the documented conventions: empty truth + empty predictions is
// perfect abstention (1.0); P=R=0 gives 0.
double slice_f1(const Counts& c) {
  const std::size_t predicted = c.tp + c.fp;
  const std::size_t positives = c.tp + c.fn;
  if (positives == 0 && predicted == 0) return 1.0;
  if (positives == 0 || predicted == 0) return 0.0;
  const double p = static_cast<double>(c.tp) / static_cast<double>(predicted);
  const double r = static_cast<double>(c.tp) / static_cast<double>(positives);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

EvalReport precision_recall_f1(const PairSet& predictions, const PairSet& truth,
                               const PairSet& universe) {
  for (const auto& pair : predictions)
    if (!universe.count(pair))
      throw ContractError("prediction outside universe: (" + pair.first + ", " +
                          pair.second + ")");
  for (const auto& pair : truth)
    if (!universe.count(pair))
      throw ContractError("truth pair outside universe: (" + pair.first + ", " +
                          pair.second + ")");

  EvalReport report;
  report.counts = count_outcomes(predictions, truth, universe);
  const auto& c = report.counts;

  if (c.tp + c.fp > 0)
    report.precision.value =
        static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  else
    report.precision.reason = "no predicted positives";

  if (c.tp + c.fn > 0)
    report.recall.value =
        static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  else
    report.recall.reason = "no positive pairs in truth";

  if (report.precision.value && report.recall.value) {
    const double p = *report.precision.value, r = *report.recall.value;
    report.f1.value = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  } else {
    report.f1.reason = "precision or recall undefined";
  }
  return report;
}

double mean_per_query_f1(const PairSet& predictions, const PairSet& truth,
                         const PairSet& universe,
                         const std::vector<std::string>& queries,
                         std::map<std::string, double>* per_query) {
  if (queries.empty()) throw ContractError("mean_per_query_f1: no queries");
  std::map<std::string, Counts> slices;
  for (const auto& q : queries) slices[q];
  for (const auto& pair : universe) {
    auto it = slices.find(pair.first);
    if (it == slices.end())
      throw ContractError("universe pair with unknown query_id: " + pair.first);
    const bool predicted = predictions.count(pair) != 0;
    const bool positive = truth.count(pair) != 0;
    if (predicted && positive)
      ++it->second.tp;
    else if (predicted)
      ++it->second.fp;
    else if (positive)
      ++it->second.fn;
    else
      ++it->second.tn;
  }
  double sum = 0.0;
  for (const auto& q : queries) {
    const double f1 = slice_f1(slices.at(q));
    if (per_query) (*per_query)[q] = f1;
    sum += f1;
  }
  return sum / static_cast<double>(queries.size());
}

namespace {

std::vector<std::string> universe_queries(const PairSet& universe) {
  std::vector<std::string> queries;
  for (const auto& pair : universe)
    if (queries.empty() || queries.back() != pair.first)
      queries.push_back(pair.first);
  return queries;  // universe is sorted by (query_id, item_id)
}

PairSet predictions_above(const ensemble::ScoreTable& scores,
                          const PairSet& universe, double threshold) {
  PairSet out;
  for (const auto& pair : universe)
    if (scores.rows.at(pair) > threshold) out.insert(pair);
  return out;
}

}  // namespace

EvalReport evaluate_at_threshold(const ensemble::ScoreTable& scores,
                                 const PairSet& truth, const PairSet& universe,
                                 double threshold) {
  for (const auto& pair : universe)
    if (!scores.rows.count(pair))
      throw DataError("scores missing universe pair (" + pair.first + ", " +
                      pair.second + ")");
  PairSet predictions = predictions_above(scores, universe, threshold);
  EvalReport report = precision_recall_f1(predictions, truth, universe);
  report.threshold = threshold;
  report.mean_per_query_f1 = mean_per_query_f1(
      predictions, truth, universe, universe_queries(universe), &report.per_query_f1);
  return report;
}

std::pair<double, EvalReport> sweep_threshold(const ensemble::ScoreTable& scores,
                                              const PairSet& truth,
                                              const PairSet& universe,
                                              Objective objective) {
  if (scores.rows.empty()) throw DataError("sweep_threshold: empty score table");
  for (const auto& pair : universe)
    if (!scores.rows.count(pair))
      throw DataError("scores missing universe pair (" + pair.first + ", " +
                      pair.second + ")");

  std::vector<double> distinct;
  for (const auto& pair : universe) distinct.push_back(scores.rows.at(pair));
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates;
  candidates.push_back(0.0);
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
    candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
  candidates.push_back(1.0);
  std::sort(candidates.begin(), candidates.end());

  const std::vector<std::string> queries = universe_queries(universe);
  double best_threshold = 0.0;
  double best_objective = -1.0;
  for (double t : candidates) {
    PairSet predictions = predictions_above(scores, universe, t);
    double value;
    if (objective == Objective::PerQuery) {
      value = mean_per_query_f1(predictions, truth, universe, queries);
    } else {
      EvalReport r = precision_recall_f1(predictions, truth, universe);
      value = r.f1.value.value_or(0.0);  // undefined objective counts as 0
    }
    if (value >= best_objective) {  // ties break toward the higher threshold
      best_objective = value;
      best_threshold = t;
    }
  }
  return {best_threshold,
          evaluate_at_threshold(scores, truth, universe, best_threshold)};
}

TruthData load_truth(const std::filesystem::path& path) {
  TruthData data;
  std::size_t lineno = 0;
  for (auto& line : tsv::read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = tsv::split_fields(line);
    if (f.size() != 3)
      throw DataError("truth line " + std::to_string(lineno) +
                      ": expected query_id<TAB>item_id<TAB>label");
    PairKey key{f[0], f[1]};
    if (data.universe.count(key))
      throw DataError("truth line " + std::to_string(lineno) + ": duplicate pair (" +
                      f[0] + ", " + f[1] + ")");
    data.universe.insert(key);
    if (f[2] == "1")
      data.positives.insert(std::move(key));
    else if (f[2] != "0")
      throw DataError("truth line " + std::to_string(lineno) + ": label must be 0 or 1");
  }
  return data;
}

std::string render_report(const EvalReport& report) {
  auto metric = [](const Metric& m) {
    return m.value ? tsv::format_sig(*m.value, 6) : "undefined (" + m.reason + ")";
  };
  std::string out;
  if (report.threshold)
    out += "threshold            " + tsv::format_sig(*report.threshold, 9) + "\n";
  out += "counts               TP=" + std::to_string(report.counts.tp) +
         " FP=" + std::to_string(report.counts.fp) +
         " FN=" + std::to_string(report.counts.fn) +
         " TN=" + std::to_string(report.counts.tn) + "\n";
  out += "precision            " + metric(report.precision) + "\n";
  out += "recall               " + metric(report.recall) + "\n";
  out += "f1                   " + metric(report.f1) + "\n";
  if (report.mean_per_query_f1)
    out += "mean per-query f1    " + tsv::format_sig(*report.mean_per_query_f1, 6) +
           " (" + std::to_string(report.per_query_f1.size()) + " queries)\n";
  return out;
}

void write_per_query_tsv(const std::filesystem::path& path,
                         const EvalReport& report) {
  std::string out = "query_id\tf1\n";
  for (const auto& [qid, f1] : report.per_query_f1) {
    out += qid;
    out += '\t';
    out += tsv::format_sig(f1, 9);
    out += '\n';
  }
  tsv::write_file(path, out);
}

}  // namespace relforge::eval
