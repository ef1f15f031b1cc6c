#include "relforge/orchestrator.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <utime.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "relforge/errors.hpp"
#include "relforge/tsv.hpp"

namespace relforge::orchestrator {

namespace fs = std::filesystem;

namespace {

std::string shard_suffix(int k, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d-of-%05d", k, n);
  return buf;
}

constexpr const char* kScoreHeader = "query_id\titem_id\tscore\tmodel";

struct ShardFile {
  fs::path tsv;
  fs::path claim;
  fs::path done;
  fs::path scores;
  int index = 0;
};

ShardFile shard_paths(const fs::path& work_dir, int k, int n) {
  const std::string sfx = shard_suffix(k, n);
  ShardFile s;
  s.tsv = work_dir / ("shard-" + sfx + ".tsv");
  s.claim = work_dir / ("shard-" + sfx + ".claim");
  s.done = work_dir / ("shard-" + sfx + ".done");
  s.scores = work_dir / ("scores-" + sfx + ".tsv");
  s.index = k;
  return s;
}

// Discover shards by filename pattern; validates the -of- suffix agrees.
std::vector<ShardFile> discover_shards(const fs::path& work_dir) {
  int total = -1;
  std::vector<int> seen;
  for (const auto& entry : fs::directory_iterator(work_dir)) {
    const std::string name = entry.path().filename().string();
    int k = 0, n = 0;
    if (std::sscanf(name.c_str(), "shard-%5d-of-%5d.tsv", &k, &n) == 2 &&
        name == "shard-" + shard_suffix(k, n) + ".tsv") {
      if (total == -1) total = n;
      if (total != n)
        throw DataError("work dir has mixed shard counts: " + work_dir.string());
      seen.push_back(k);
    }
  }
  if (total <= 0)
    throw DataError("no shard files in work dir: " + work_dir.string());
  std::sort(seen.begin(), seen.end());
  if (static_cast<int>(seen.size()) != total)
    throw DataError("work dir is missing shard files: expected " +
                    std::to_string(total) + ", found " +
                    std::to_string(seen.size()));
  std::vector<ShardFile> shards;
  shards.reserve(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) shards.push_back(shard_paths(work_dir, k, total));
  return shards;
}

bool create_exclusive(const fs::path& path, const std::string& content) {
  const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) return false;
  if (!content.empty()) {
    ssize_t written = ::write(fd, content.data(), content.size());
    (void)written;
  }
  ::close(fd);
  return true;
}

void touch(const fs::path& path) { ::utime(path.c_str(), nullptr); }

double seconds_since_mtime(const fs::path& path) {
  std::error_code ec;
  const auto mtime = fs::last_write_time(path, ec);
  if (ec) return 0.0;  // vanished: treat as fresh, the claim race resolves it
  const auto now = fs::file_time_type::clock::now();
  return std::chrono::duration<double>(now - mtime).count();
}

}  // namespace

ScoringContext make_context(const wordpiece::Vocab& vocab, scorer::Model model,
                            const std::vector<recall::CorpusItem>& corpus,
                            const std::vector<std::pair<std::string, std::string>>& queries,
                            int max_seq_len, bool use_price_breadcrumb) {
  ScoringContext ctx;
  ctx.vocab = &vocab;
  ctx.model = std::move(model);
  ctx.max_seq_len = max_seq_len;
  ctx.use_price_breadcrumb = use_price_breadcrumb;
  for (const auto& item : corpus) ctx.items.emplace(item.item_id, item);
  for (const auto& [qid, text] : queries) ctx.query_text.emplace(qid, text);
  return ctx;
}

std::vector<fs::path> shard_manifest(
    const std::vector<std::pair<std::string, std::string>>& pairs, int n,
    const fs::path& work_dir) {
  if (n < 1) throw ContractError("shard_manifest: shard count must be >= 1");
  std::error_code ec;
  fs::create_directories(work_dir, ec);
  if (ec) throw DataError("cannot create work dir " + work_dir.string() + ": " +
                          ec.message());

  const std::size_t total = pairs.size();
  const std::size_t base = total / static_cast<std::size_t>(n);
  const std::size_t extra = total % static_cast<std::size_t>(n);

  std::vector<fs::path> out;
  std::size_t cursor = 0;
  for (int k = 0; k < n; ++k) {
    const std::size_t size = base + (static_cast<std::size_t>(k) < extra ? 1 : 0);
    std::string body;
    for (std::size_t i = 0; i < size; ++i, ++cursor) {
      body += pairs[cursor].first;
      body += '\t';
      body += pairs[cursor].second;
      body += '\n';
    }
    const ShardFile s = shard_paths(work_dir, k, n);
    tsv::write_file(s.tsv, body);
    out.push_back(s.tsv);
  }
  return out;
}

fs::path score_shard(const fs::path& shard_path, const ScoringContext& ctx,
                     int batch_size, const std::function<void()>& on_batch) {
  if (batch_size < 1) throw ContractError("score_shard: batch_size must be >= 1");
  if (!ctx.vocab) throw ContractError("score_shard: context has no vocab");

  std::vector<std::pair<std::string, std::string>> rows;
  std::size_t lineno = 0;
  for (auto& line : tsv::read_lines(shard_path)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = tsv::split_fields(line);
    if (f.size() != 2)
      throw DataError("shard " + shard_path.filename().string() + " line " +
                      std::to_string(lineno) + ": expected query_id<TAB>item_id");
    rows.emplace_back(std::move(f[0]), std::move(f[1]));
  }

  std::string out = kScoreHeader;
  out += '\n';
  const auto batch = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < rows.size(); start += batch) {
    const std::size_t end = std::min(rows.size(), start + batch);
    for (std::size_t i = start; i < end; ++i) {
      const auto& [qid, iid] = rows[i];
      out += qid;
      out += '\t';
      out += iid;
      out += '\t';
      const auto q = ctx.query_text.find(qid);
      const auto it = ctx.items.find(iid);
      if (q == ctx.query_text.end() || it == ctx.items.end()) {
        out += "ERR";  // per-row error record; the shard keeps going
      } else {
        const auto& item = it->second;
        const std::string answer =
            ctx.use_price_breadcrumb
                ? wordpiece::compose_answer(item.title, item.price, item.breadcrumb)
                : item.title;
        const auto seq = wordpiece::encode_pair(q->second, answer, *ctx.vocab,
                                                ctx.max_seq_len, ctx.tok);
        const auto h = scorer::encode_features(seq, ctx.model.encoder);
        out += tsv::format_sig(scorer::model_prob(h, ctx.model), 9);
      }
      out += '\t';
      out += ctx.model.name;
      out += '\n';
    }
    if (on_batch) on_batch();
  }

  std::string name = shard_path.filename().string();
  name.replace(0, 5, "scores");  // shard-... -> scores-...
  const fs::path scores_path = shard_path.parent_path() / name;
  tsv::write_file(scores_path, out);
  return scores_path;
}

WorkerStats worker_loop(const fs::path& work_dir, const ScoringContext& ctx,
                        const std::string& worker_id, int batch_size,
                        double stale_seconds) {
  WorkerStats stats;
  const auto shards = discover_shards(work_dir);
  while (true) {
    bool all_done = true;
    bool progressed = false;
    for (const auto& s : shards) {
      std::error_code ec;
      if (fs::exists(s.done, ec)) continue;
      all_done = false;

      if (fs::exists(s.claim, ec)) {
        if (seconds_since_mtime(s.claim) <= stale_seconds) continue;
        // Stale claim: owner presumed dead. Remove and race to re-claim.
        fs::remove(s.claim, ec);
        ++stats.shards_reclaimed;
      }
      const auto now = std::chrono::system_clock::now().time_since_epoch();
      const auto stamp =
          std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
      if (!create_exclusive(s.claim,
                            worker_id + "\t" + std::to_string(stamp) + "\n"))
        continue;  // somebody else won

      const auto t0 = std::chrono::steady_clock::now();
      std::size_t shard_rows = 0;
      for (const auto& line : tsv::read_lines(s.tsv))
        if (!line.empty()) ++shard_rows;
      score_shard(s.tsv, ctx, batch_size, [&] { touch(s.claim); });
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      // Completion record appended to the claim; the done marker itself
      // stays zero-length.
      {
        std::string rec = tsv::format_sig(elapsed, 6) + "\t" +
                          std::to_string(shard_rows) + "\n";
        const int fd = ::open(s.claim.c_str(), O_WRONLY | O_APPEND);
        if (fd >= 0) {
          ssize_t written = ::write(fd, rec.data(), rec.size());
          (void)written;
          ::close(fd);
        }
      }
      create_exclusive(s.done, "");  // EEXIST is benign after a re-claim race
      ++stats.shards_scored;
      progressed = true;
    }
    if (all_done) break;
    if (!progressed)
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return stats;
}

fs::path merge_shards(const fs::path& work_dir) {
  const auto shards = discover_shards(work_dir);
  for (const auto& s : shards) {
    if (!fs::exists(s.done))
      throw DataError("merge refused: missing done marker for " +
                      s.tsv.filename().string());
  }

  struct Row {
    std::string query_id, item_id, rest;  // rest = score<TAB>model, verbatim
    int shard = 0;
  };
  std::vector<Row> rows;
  std::string report = "shard\tworker\tseconds\trows\n";

  for (const auto& s : shards) {
    std::size_t expected = 0;
    for (const auto& line : tsv::read_lines(s.tsv))
      if (!line.empty()) ++expected;

    auto lines = tsv::read_lines(s.scores);
    if (lines.empty() || lines[0] != kScoreHeader)
      throw DataError("score file for " + s.tsv.filename().string() +
                      " missing header");
    std::size_t got = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto f = tsv::split_fields(lines[i]);
      if (f.size() != 4)
        throw DataError("score row malformed in " + s.scores.filename().string());
      rows.push_back({std::move(f[0]), std::move(f[1]), f[2] + "\t" + f[3],
                      s.index});
      ++got;
    }
    if (got != expected)
      throw DataError("row count mismatch for " + s.tsv.filename().string() +
                      ": shard has " + std::to_string(expected) +
                      ", scores have " + std::to_string(got));

    // Farm report: worker identity from the claim record.
    std::string worker = "?", seconds = "?", row_count = std::to_string(got);
    std::error_code ec;
    if (fs::exists(s.claim, ec)) {
      auto claim_lines = tsv::read_lines(s.claim);
      if (!claim_lines.empty()) {
        auto head = tsv::split_fields(claim_lines[0]);
        if (!head.empty()) worker = head[0];
      }
      if (claim_lines.size() > 1) {
        auto stat = tsv::split_fields(claim_lines[1]);
        if (stat.size() == 2) {
          seconds = stat[0];
          row_count = stat[1];
        }
      }
    }
    report += s.tsv.filename().string() + "\t" + worker + "\t" + seconds + "\t" +
              row_count + "\n";
  }

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.query_id != b.query_id) return a.query_id < b.query_id;
    return a.item_id < b.item_id;
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].query_id == rows[i - 1].query_id &&
        rows[i].item_id == rows[i - 1].item_id)
      throw DataError("duplicate pair (" + rows[i].query_id + ", " +
                      rows[i].item_id + ") in shards " +
                      std::to_string(rows[i - 1].shard) + " and " +
                      std::to_string(rows[i].shard));
  }

  std::string out = kScoreHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.query_id;
    out += '\t';
    out += r.item_id;
    out += '\t';
    out += r.rest;
    out += '\n';
  }
  const fs::path merged = work_dir / "merged_scores.tsv";
  tsv::write_file(merged, out);
  tsv::write_file(work_dir / "farm_report.tsv", report);
  return merged;
}

FarmResult run_farm(const ScoringJob& job,
                    const std::vector<std::pair<std::string, std::string>>& candidates,
                    const ScoringContext& ctx) {
  if (job.worker_count < 1) throw ContractError("run_farm: worker_count must be >= 1");
  std::error_code ec;
  if (job.fresh && fs::exists(job.work_dir, ec)) fs::remove_all(job.work_dir, ec);

  bool have_shards = false;
  if (fs::exists(job.work_dir, ec)) {
    for (const auto& entry : fs::directory_iterator(job.work_dir)) {
      if (entry.path().filename().string().rfind("shard-", 0) == 0) {
        have_shards = true;
        break;
      }
    }
  }
  if (have_shards) {
    // Resume: shard layout must match the requested job.
    const auto existing = discover_shards(job.work_dir);
    if (static_cast<int>(existing.size()) != job.shard_count)
      throw DataError("work dir has " + std::to_string(existing.size()) +
                      " shards, job wants " + std::to_string(job.shard_count) +
                      " (use fresh to re-shard)");
  } else {
    shard_manifest(candidates, job.shard_count, job.work_dir);
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> failures(
      static_cast<std::size_t>(job.worker_count));
  for (int w = 0; w < job.worker_count; ++w) {
    workers.emplace_back([&, w] {
      try {
        worker_loop(job.work_dir, ctx, "inproc-" + std::to_string(w),
                    job.batch_size, job.stale_claim_seconds);
      } catch (...) {
        failures[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  FarmResult result;
  result.merged = merge_shards(job.work_dir);
  result.report = job.work_dir / "farm_report.tsv";
  return result;
}

}  // namespace relforge::orchestrator
