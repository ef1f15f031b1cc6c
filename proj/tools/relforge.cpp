// relforge: two-stage query/item relevance pipeline.
// Stage one recalls candidate items by term matching over an inverted
// title index; stage two scores candidates with a trained head over a
// deterministic hashed encoder, in a sharded worker farm.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "relforge/demo.hpp"
#include "relforge/ensemble.hpp"
#include "relforge/errors.hpp"
#include "relforge/eval.hpp"
#include "relforge/mix.hpp"
#include "relforge/orchestrator.hpp"
#include "relforge/recall.hpp"
#include "relforge/scorer.hpp"
#include "relforge/textprep.hpp"
#include "relforge/tsv.hpp"
#include "relforge/wordpiece.hpp"

namespace {

using namespace relforge;

// Seed fan-out: every subcommand derives module seeds from one --seed.
constexpr std::uint64_t kEncoderSeedOffset = 11;
constexpr std::uint64_t kSplitSeedOffset = 21;
constexpr std::uint64_t kTrainSeedOffset = 31;

struct PrepFlags {
  bool stemming = true;
  bool stopwords = true;
  bool synonyms = true;

  textprep::PrepConfig config() const {
    textprep::PrepConfig cfg;
    cfg.apply_stemming = stemming;
    cfg.apply_stopwords = stopwords;
    cfg.apply_synonyms = synonyms;
    return cfg;
  }
};

void add_prep_flags(CLI::App* cmd, PrepFlags& flags) {
  cmd->add_flag("--stemming,!--no-stemming", flags.stemming,
                "apply Porter2 stemming")
      ->capture_default_str();
  cmd->add_flag("--stopwords-filter,!--no-stopwords-filter", flags.stopwords,
                "remove stopwords")
      ->capture_default_str();
  cmd->add_flag("--synonyms-expand,!--no-synonyms-expand", flags.synonyms,
                "expand query synonyms")
      ->capture_default_str();
}

textprep::StopwordSet load_stops(const std::string& path) {
  return path.empty() ? textprep::StopwordSet() : textprep::load_stopwords(path);
}

textprep::SynonymDict load_dict(const std::string& path) {
  return path.empty() ? textprep::SynonymDict() : textprep::load_synonyms(path);
}

struct LabelRow {
  std::string query_id, item_id;
  int label;
};

std::vector<LabelRow> load_label_rows(const std::string& path) {
  std::vector<LabelRow> rows;
  auto truth = eval::load_truth(path);
  for (const auto& pair : truth.universe)
    rows.push_back({pair.first, pair.second,
                    truth.positives.count(pair) ? 1 : 0});
  return rows;
}

std::vector<scorer::LabeledPair> encode_labels(
    const std::vector<LabelRow>& rows,
    const std::vector<recall::CorpusItem>& corpus,
    const std::vector<std::pair<std::string, std::string>>& queries,
    const wordpiece::Vocab& vocab, int max_seq_len, bool use_price_breadcrumb) {
  std::unordered_map<std::string, const recall::CorpusItem*> by_id;
  for (const auto& item : corpus) by_id.emplace(item.item_id, &item);
  std::unordered_map<std::string, std::string> query_by_id(queries.begin(),
                                                           queries.end());
  std::vector<scorer::LabeledPair> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    auto q = query_by_id.find(row.query_id);
    if (q == query_by_id.end())
      throw DataError("label row with unknown query_id: " + row.query_id);
    auto it = by_id.find(row.item_id);
    if (it == by_id.end())
      throw DataError("label row with unknown item_id: " + row.item_id);
    const auto* item = it->second;
    scorer::LabeledPair pair;
    pair.query_id = row.query_id;
    pair.item_id = row.item_id;
    pair.label = row.label;
    const std::string answer =
        use_price_breadcrumb
            ? wordpiece::compose_answer(item->title, item->price, item->breadcrumb)
            : item->title;
    pair.encoded = wordpiece::encode_pair(q->second, answer, vocab, max_seq_len);
    out.push_back(std::move(pair));
  }
  return out;
}

void write_label_rows(const std::string& path,
                      const std::vector<scorer::LabeledPair>& rows) {
  std::string out;
  for (const auto& r : rows)
    out += r.query_id + "\t" + r.item_id + "\t" + std::to_string(r.label) + "\n";
  tsv::write_file(path, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relforge: two-stage e-commerce relevance pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file with `key = value` lines; "
                                 "command-line flags win over file values");
  app.get_formatter()->column_width(34);

  // ---- index ----------------------------------------------------------
  struct {
    std::string corpus, out, stopwords;
    PrepFlags prep;
  } ix;
  auto* cmd_index = app.add_subcommand("index", "build an inverted title index");
  cmd_index->add_option("--corpus", ix.corpus, "corpus TSV (header required)")
      ->required();
  cmd_index->add_option("--out", ix.out, "index dump path")->required();
  cmd_index->add_option("--stopwords", ix.stopwords, "stopword file");
  add_prep_flags(cmd_index, ix.prep);
  cmd_index->callback([&] {
    auto corpus = recall::load_corpus(ix.corpus);
    auto index = recall::build_index(corpus, ix.prep.config(), load_stops(ix.stopwords));
    recall::save_index(ix.out, index);
    std::cout << "indexed " << index.doc_count << " items, "
              << index.postings.size() << " terms -> " << ix.out << "\n";
  });

  // ---- recall ---------------------------------------------------------
  struct {
    std::string corpus, index, queries, out, stopwords, synonyms;
    PrepFlags prep;
  } rc;
  auto* cmd_recall =
      app.add_subcommand("recall", "stage one: recall candidate pairs");
  cmd_recall->add_option("--corpus", rc.corpus, "corpus TSV (builds index on the fly)");
  cmd_recall->add_option("--index", rc.index, "index dump from `index`");
  cmd_recall->add_option("--queries", rc.queries, "queries TSV")->required();
  cmd_recall->add_option("--out", rc.out, "candidates TSV out")->required();
  cmd_recall->add_option("--stopwords", rc.stopwords, "stopword file");
  cmd_recall->add_option("--synonyms", rc.synonyms, "synonyms TSV");
  add_prep_flags(cmd_recall, rc.prep);
  cmd_recall->callback([&] {
    if (rc.corpus.empty() == rc.index.empty())
      throw DataError("recall: pass exactly one of --corpus or --index");
    auto stops = load_stops(rc.stopwords);
    recall::InvertedIndex index =
        rc.index.empty()
            ? recall::build_index(recall::load_corpus(rc.corpus),
                                  rc.prep.config(), stops)
            : recall::load_index(rc.index);
    auto queries = recall::load_queries(rc.queries);
    auto cs = recall::recall_all(queries, index, rc.prep.config(), stops,
                                 load_dict(rc.synonyms));
    recall::write_candidates(rc.out, cs);
    std::cout << "candidates           " << cs.stats.total << "\n"
              << "queries              " << queries.size() << "\n"
              << "items                " << index.doc_count << "\n"
              << "reduction ratio      "
              << tsv::format_sig(cs.stats.reduction_ratio, 6) << "\n";
  });

  // ---- encode ---------------------------------------------------------
  struct {
    std::string vocab;
    int max_seq_len = 64;
    bool lowercase = true;
  } en;
  auto* cmd_encode = app.add_subcommand(
      "encode", "stream: query<TAB>answer lines on stdin -> "
                "ids<TAB>mask<TAB>segments on stdout");
  cmd_encode->add_option("--vocab", en.vocab, "vocab file, one token per line")
      ->required();
  cmd_encode->add_option("--max-seq-len", en.max_seq_len, "sequence budget")
      ->capture_default_str();
  cmd_encode->add_flag("--lowercase,!--no-lowercase", en.lowercase,
                       "lowercase before tokenizing")
      ->capture_default_str();
  cmd_encode->callback([&] {
    auto vocab = wordpiece::load_vocab(en.vocab);
    wordpiece::TokenizerOptions opt;
    opt.lowercase = en.lowercase;
    wordpiece::encode_stream(std::cin, std::cout, vocab, en.max_seq_len, opt);
  });

  // ---- split ----------------------------------------------------------
  struct {
    std::string labels, train_out, eval_out;
    double eval_fraction = 0.1;
    std::uint64_t seed = 7;
  } sp;
  auto* cmd_split =
      app.add_subcommand("split", "per-query train/eval split of a label file");
  cmd_split->add_option("--labels", sp.labels, "label TSV query_id<TAB>item_id<TAB>label")
      ->required();
  cmd_split->add_option("--train-out", sp.train_out, "train label TSV out")->required();
  cmd_split->add_option("--eval-out", sp.eval_out, "eval label TSV out")->required();
  cmd_split->add_option("--eval-fraction", sp.eval_fraction, "eval share in (0,1)")
      ->capture_default_str();
  cmd_split->add_option("--seed", sp.seed, "split seed")->capture_default_str();
  cmd_split->callback([&] {
    auto rows = load_label_rows(sp.labels);
    std::vector<scorer::LabeledPair> pairs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      pairs[i].query_id = rows[i].query_id;
      pairs[i].item_id = rows[i].item_id;
      pairs[i].label = rows[i].label;
    }
    auto [train, eval] = scorer::split_per_query(pairs, sp.eval_fraction,
                                                 sp.seed + kSplitSeedOffset);
    write_label_rows(sp.train_out, train);
    write_label_rows(sp.eval_out, eval);
    std::cout << "train " << train.size() << " -> " << sp.train_out << "\n"
              << "eval  " << eval.size() << " -> " << sp.eval_out << "\n";
  });

  // ---- train ----------------------------------------------------------
  struct {
    std::string labels, train_labels, eval_labels;
    std::string corpus, queries, vocab, out, log;
    std::string head = "logistic";
    int hidden = 32, dim = 64, table_size = 4096, max_seq_len = 64;
    double lr = 0.1, eval_fraction = 0.1;
    int batch = 32, epochs = 50, patience = 5;
    std::uint64_t seed = 7;
    bool use_price_breadcrumb = false;
  } tr;
  auto* cmd_train = app.add_subcommand("train", "train a classification head");
  cmd_train->add_option("--labels", tr.labels,
                        "labeled pairs TSV (auto-split per query)");
  cmd_train->add_option("--train-labels", tr.train_labels, "pre-split train TSV");
  cmd_train->add_option("--eval-labels", tr.eval_labels, "pre-split eval TSV");
  cmd_train->add_option("--corpus", tr.corpus, "corpus TSV")->required();
  cmd_train->add_option("--queries", tr.queries, "queries TSV")->required();
  cmd_train->add_option("--vocab", tr.vocab, "vocab file")->required();
  cmd_train->add_option("--out", tr.out, "model file out")->required();
  cmd_train->add_option("--log", tr.log, "training log TSV out");
  cmd_train->add_option("--head", tr.head, "head kind: logistic or mlp")
      ->check(CLI::IsMember({"logistic", "mlp"}))
      ->capture_default_str();
  cmd_train->add_option("--hidden", tr.hidden, "mlp hidden units")
      ->capture_default_str();
  cmd_train->add_option("--dim", tr.dim, "encoder width")->capture_default_str();
  cmd_train->add_option("--table-size", tr.table_size, "hashed embedding rows")
      ->capture_default_str();
  cmd_train->add_option("--max-seq-len", tr.max_seq_len, "sequence budget")
      ->capture_default_str();
  cmd_train->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
  cmd_train->add_option("--batch", tr.batch, "mini-batch size")->capture_default_str();
  cmd_train->add_option("--epochs", tr.epochs, "max epochs")->capture_default_str();
  cmd_train->add_option("--patience", tr.patience,
                        "epochs without eval-AUC improvement before stopping")
      ->capture_default_str();
  cmd_train->add_option("--eval-fraction", tr.eval_fraction,
                        "eval share for --labels auto-split")
      ->capture_default_str();
  cmd_train->add_option("--seed", tr.seed, "seed (fans out to encoder/split/train)")
      ->capture_default_str();
  cmd_train->add_flag("--use-price-breadcrumb", tr.use_price_breadcrumb,
                      "answer = title|price|breadcrumb")
      ->capture_default_str();
  cmd_train->callback([&] {
    if (tr.labels.empty() == (tr.train_labels.empty() || tr.eval_labels.empty()))
      throw DataError("train: pass --labels, or both --train-labels and --eval-labels");
    auto corpus = recall::load_corpus(tr.corpus);
    auto queries = recall::load_queries(tr.queries);
    auto vocab = wordpiece::load_vocab(tr.vocab);

    std::vector<scorer::LabeledPair> train_set, eval_set;
    if (!tr.labels.empty()) {
      auto all = encode_labels(load_label_rows(tr.labels), corpus, queries, vocab,
                               tr.max_seq_len, tr.use_price_breadcrumb);
      std::tie(train_set, eval_set) = scorer::split_per_query(
          all, tr.eval_fraction, tr.seed + kSplitSeedOffset);
    } else {
      train_set = encode_labels(load_label_rows(tr.train_labels), corpus, queries,
                                vocab, tr.max_seq_len, tr.use_price_breadcrumb);
      eval_set = encode_labels(load_label_rows(tr.eval_labels), corpus, queries,
                               vocab, tr.max_seq_len, tr.use_price_breadcrumb);
    }

    scorer::EncoderParams enc;
    enc.dim = tr.dim;
    enc.seed = tr.seed + kEncoderSeedOffset;
    enc.table_size = tr.table_size;
    scorer::TrainConfig cfg;
    cfg.learning_rate = tr.lr;
    cfg.batch_size = tr.batch;
    cfg.max_epochs = tr.epochs;
    cfg.patience = tr.patience;
    cfg.eval_fraction = tr.eval_fraction;
    cfg.seed = tr.seed + kTrainSeedOffset;
    const auto kind = tr.head == "mlp" ? scorer::HeadKind::Mlp
                                       : scorer::HeadKind::Logistic;
    auto result = scorer::train_head(train_set, eval_set, enc, cfg, kind, tr.hidden);
    result.model.name = std::filesystem::path(tr.out).stem().string();
    scorer::save_model(tr.out, result.model);
    if (!tr.log.empty()) scorer::write_train_log(tr.log, result.log);
    std::cout << "trained " << tr.head << " head on " << train_set.size()
              << " examples; best eval auc "
              << tsv::format_sig(result.best_auc, 6) << " at epoch "
              << result.best_epoch << "\n"
              << "model -> " << tr.out << "\n";
  });

  // ---- score ----------------------------------------------------------
  struct {
    std::string candidates, corpus, queries, vocab, model, work_dir;
    std::string role = "farm";
    std::string worker_id = "worker";
    int shards = 8, workers = 8, batch = 128, max_seq_len = 64, table_size = 4096;
    double stale_seconds = 600.0;
    bool fresh = false, use_price_breadcrumb = false;
  } sc;
  auto* cmd_score = app.add_subcommand(
      "score", "stage two: sharded parallel scoring over a shared work dir");
  cmd_score->add_option("--candidates", sc.candidates, "candidates TSV");
  cmd_score->add_option("--corpus", sc.corpus, "corpus TSV");
  cmd_score->add_option("--queries", sc.queries, "queries TSV");
  cmd_score->add_option("--vocab", sc.vocab, "vocab file");
  cmd_score->add_option("--model", sc.model, "model file");
  cmd_score->add_option("--work-dir", sc.work_dir, "shared work directory")
      ->envname("RELEVANCE_FORGE_WORKDIR");
  cmd_score->add_option("--role", sc.role,
                        "farm | shard | worker | merge (worker joins an "
                        "existing work dir; merge only combines)")
      ->check(CLI::IsMember({"farm", "shard", "worker", "merge"}))
      ->capture_default_str();
  cmd_score->add_option("--worker-id", sc.worker_id, "worker identity for claims")
      ->capture_default_str();
  cmd_score->add_option("--shards", sc.shards, "shard count")->capture_default_str();
  cmd_score->add_option("--workers", sc.workers, "in-process worker count")
      ->capture_default_str();
  cmd_score->add_option("--batch", sc.batch, "scoring batch size")
      ->capture_default_str();
  cmd_score->add_option("--max-seq-len", sc.max_seq_len, "sequence budget")
      ->capture_default_str();
  cmd_score->add_option("--table-size", sc.table_size,
                        "hashed embedding rows (must match training)")
      ->capture_default_str();
  cmd_score->add_option("--stale-seconds", sc.stale_seconds,
                        "claim age before another worker may steal the shard")
      ->capture_default_str();
  cmd_score->add_flag("--fresh", sc.fresh, "wipe the work dir first")
      ->capture_default_str();
  cmd_score->add_flag("--use-price-breadcrumb", sc.use_price_breadcrumb,
                      "answer = title|price|breadcrumb")
      ->capture_default_str();
  cmd_score->callback([&] {
    if (sc.work_dir.empty())
      throw DataError("score: --work-dir or RELEVANCE_FORGE_WORKDIR required");
    if (sc.role == "shard") {
      if (sc.candidates.empty())
        throw DataError("score --role shard: --candidates required");
      auto shards = orchestrator::shard_manifest(
          recall::load_candidates(sc.candidates), sc.shards, sc.work_dir);
      std::cout << "wrote " << shards.size() << " shards under " << sc.work_dir
                << "\n";
      return;
    }
    if (sc.role == "merge") {
      auto merged = orchestrator::merge_shards(sc.work_dir);
      std::cout << "merged -> " << merged.string() << "\n";
      return;
    }
    for (auto [v, f] :
         {std::pair<const std::string*, const char*>{&sc.corpus, "--corpus"},
          {&sc.queries, "--queries"},
          {&sc.vocab, "--vocab"},
          {&sc.model, "--model"}})
      if (v->empty())
        throw DataError("score --role " + sc.role + ": " + f + " required");
    const wordpiece::Vocab vocab = wordpiece::load_vocab(sc.vocab);
    auto model = scorer::load_model(sc.model);
    model.encoder.table_size = sc.table_size;
    const auto ctx = orchestrator::make_context(
        vocab, std::move(model), recall::load_corpus(sc.corpus),
        recall::load_queries(sc.queries), sc.max_seq_len,
        sc.use_price_breadcrumb);
    if (sc.role == "worker") {
      auto stats = orchestrator::worker_loop(sc.work_dir, ctx, sc.worker_id,
                                             sc.batch, sc.stale_seconds);
      std::cout << "worker " << sc.worker_id << " scored " << stats.shards_scored
                << " shards (" << stats.shards_reclaimed << " reclaimed)\n";
      return;
    }
    if (sc.candidates.empty()) throw DataError("score: --candidates required");
    orchestrator::ScoringJob job;
    job.work_dir = sc.work_dir;
    job.shard_count = sc.shards;
    job.worker_count = sc.workers;
    job.batch_size = sc.batch;
    job.model_path = sc.model;
    job.candidates_path = sc.candidates;
    job.stale_claim_seconds = sc.stale_seconds;
    job.fresh = sc.fresh;
    auto result =
        orchestrator::run_farm(job, recall::load_candidates(sc.candidates), ctx);
    std::cout << "merged -> " << result.merged.string() << "\n"
              << "report -> " << result.report.string() << "\n";
  });

  // ---- ensemble -------------------------------------------------------
  struct {
    std::vector<std::string> scores;
    std::string out;
  } em;
  auto* cmd_ensemble =
      app.add_subcommand("ensemble", "average score files over identical pairs");
  cmd_ensemble->add_option("--scores", em.scores, "score TSV (repeat per model)")
      ->required()
      ->expected(-1);
  cmd_ensemble->add_option("--out", em.out, "blended score TSV out")->required();
  cmd_ensemble->callback([&] {
    std::vector<ensemble::ScoreTable> tables;
    for (const auto& p : em.scores) tables.push_back(ensemble::load_score_table(p));
    auto blended = ensemble::ensemble_mean(tables);
    ensemble::save_score_table(em.out, blended);
    std::cout << "ensembled " << tables.size() << " tables ("
              << blended.model_name << ") -> " << em.out << "\n";
  });

  // ---- eval -----------------------------------------------------------
  struct {
    std::string scores, truth, per_query_out;
    double threshold = 0.5;
  } ev;
  auto* cmd_eval = app.add_subcommand(
      "eval", "precision/recall/F1 of thresholded scores against truth");
  cmd_eval->add_option("--scores", ev.scores, "score TSV")->required();
  cmd_eval->add_option("--truth", ev.truth, "truth TSV query_id<TAB>item_id<TAB>label")
      ->required();
  cmd_eval->add_option("--threshold", ev.threshold, "decision threshold; "
                       "predict relevant when score > threshold")
      ->capture_default_str();
  cmd_eval->add_option("--per-query-out", ev.per_query_out, "per-query F1 TSV out");
  cmd_eval->callback([&] {
    auto truth = eval::load_truth(ev.truth);
    auto scores = ensemble::load_score_table(ev.scores);
    auto report = eval::evaluate_at_threshold(scores, truth.positives,
                                              truth.universe, ev.threshold);
    std::cout << eval::render_report(report);
    if (!ev.per_query_out.empty()) eval::write_per_query_tsv(ev.per_query_out, report);
  });

  // ---- sweep ----------------------------------------------------------
  struct {
    std::string scores, truth, objective = "overall", per_query_out;
  } sw;
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "find the threshold maximizing F1 (overall or per-query mean)");
  cmd_sweep->add_option("--scores", sw.scores, "score TSV")->required();
  cmd_sweep->add_option("--truth", sw.truth, "truth TSV")->required();
  cmd_sweep->add_option("--objective", sw.objective, "overall | per_query")
      ->check(CLI::IsMember({"overall", "per_query"}))
      ->capture_default_str();
  cmd_sweep->add_option("--per-query-out", sw.per_query_out, "per-query F1 TSV out");
  cmd_sweep->callback([&] {
    auto truth = eval::load_truth(sw.truth);
    auto scores = ensemble::load_score_table(sw.scores);
    auto [threshold, report] = eval::sweep_threshold(
        scores, truth.positives, truth.universe,
        sw.objective == "per_query" ? eval::Objective::PerQuery
                                    : eval::Objective::Overall);
    std::cout << eval::render_report(report);
    if (!sw.per_query_out.empty()) eval::write_per_query_tsv(sw.per_query_out, report);
  });

  // ---- demo -----------------------------------------------------------
  struct {
    std::uint64_t seed = 7;
    int items = 1000, queries = 10, shards = 4, workers = 2;
    double labeled_fraction = 0.4;
    std::string work_dir = "relforge-demo";
  } dm;
  auto* cmd_demo = app.add_subcommand(
      "demo", "generate a synthetic corpus and run both stages end to end");
  cmd_demo->add_option("--seed", dm.seed, "seed for the whole run")
      ->capture_default_str();
  cmd_demo->add_option("--items", dm.items, "synthetic corpus size")
      ->capture_default_str();
  cmd_demo->add_option("--queries", dm.queries, "query count (max 10)")
      ->capture_default_str();
  cmd_demo->add_option("--shards", dm.shards, "farm shard count")
      ->capture_default_str();
  cmd_demo->add_option("--workers", dm.workers, "farm worker count")
      ->capture_default_str();
  cmd_demo->add_option("--labeled-fraction", dm.labeled_fraction,
                       "share of candidates carrying labels")
      ->capture_default_str();
  cmd_demo->add_option("--work-dir", dm.work_dir, "demo work directory")
      ->envname("RELEVANCE_FORGE_WORKDIR")
      ->capture_default_str();
  cmd_demo->callback([&] {
    demo::DemoSpec spec;
    spec.seed = dm.seed;
    spec.item_count = dm.items;
    spec.query_count = dm.queries;
    spec.shard_count = dm.shards;
    spec.worker_count = dm.workers;
    spec.labeled_fraction = dm.labeled_fraction;
    demo::run_demo(spec, dm.work_dir, std::cout);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  } catch (const relforge::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const relforge::ContractError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
