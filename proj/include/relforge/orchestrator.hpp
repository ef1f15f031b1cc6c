#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relforge/recall.hpp"
#include "relforge/scorer.hpp"
#include "relforge/wordpiece.hpp"

namespace relforge::orchestrator {

// Everything a worker needs to turn a (query_id, item_id) row into a
// score. Immutable while workers run; shared freely across threads.
struct ScoringContext {
  const wordpiece::Vocab* vocab = nullptr;
  scorer::Model model;
  std::unordered_map<std::string, std::string> query_text;
  std::unordered_map<std::string, recall::CorpusItem> items;
  int max_seq_len = 64;
  bool use_price_breadcrumb = false;
  wordpiece::TokenizerOptions tok;
};

ScoringContext make_context(const wordpiece::Vocab& vocab, scorer::Model model,
                            const std::vector<recall::CorpusItem>& corpus,
                            const std::vector<std::pair<std::string, std::string>>& queries,
                            int max_seq_len, bool use_price_breadcrumb);

struct ScoringJob {
  std::filesystem::path work_dir;
  int shard_count = 1;
  int worker_count = 1;
  int batch_size = 128;
  std::filesystem::path model_path;       // informational, for the report
  std::filesystem::path candidates_path;  // informational
  double stale_claim_seconds = 600.0;
  bool fresh = false;  // wipe work_dir before sharding
};

// Contiguous partition into n files `shard-%05d-of-%05d.tsv`; sizes differ
// by at most one and concatenation reproduces the input exactly.
std::vector<std::filesystem::path> shard_manifest(
    const std::vector<std::pair<std::string, std::string>>& pairs, int n,
    const std::filesystem::path& work_dir);

// Scores one shard file into `scores-<same suffix>.tsv`, preserving input
// order. Unknown query/item ids become rows with score column `ERR`; the
// shard keeps going. `on_batch` (optional) runs after every batch.
std::filesystem::path score_shard(const std::filesystem::path& shard_path,
                                  const ScoringContext& ctx, int batch_size,
                                  const std::function<void()>& on_batch = {});

struct WorkerStats {
  int shards_scored = 0;
  int shards_reclaimed = 0;  // stale claims taken over
};

// Claim/score/done loop over a shared work directory. Returns when every
// shard has a done marker. Claims are create-exclusive files refreshed
// per batch; claims older than stale_seconds are deleted and re-claimed.
WorkerStats worker_loop(const std::filesystem::path& work_dir,
                        const ScoringContext& ctx, const std::string& worker_id,
                        int batch_size, double stale_seconds);

// Requires every done marker; concatenates shard score files, sorts by
// (query_id, item_id), verifies per-shard row counts and rejects
// duplicate pairs. Also writes the farm report from claim records.
std::filesystem::path merge_shards(const std::filesystem::path& work_dir);

struct FarmResult {
  std::filesystem::path merged;  // work_dir/merged_scores.tsv
  std::filesystem::path report;  // work_dir/farm_report.tsv
};

// shard + in-process workers + merge.
FarmResult run_farm(const ScoringJob& job,
                    const std::vector<std::pair<std::string, std::string>>& candidates,
                    const ScoringContext& ctx);

}  // namespace relforge::orchestrator
