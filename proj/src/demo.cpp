#include "relforge/demo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <unordered_map>

#include "relforge/ensemble.hpp"
#include "relforge/errors.hpp"
#include "relforge/mix.hpp"
#include "relforge/orchestrator.hpp"
#include "relforge/scorer.hpp"
#include "relforge/tsv.hpp"
#include "relforge/wordpiece.hpp"

namespace relforge::demo {

namespace fs = std::filesystem;

namespace {

struct Category {
  const char* name;
  const char* query;     // query surface form; differs when a synonym is needed
  const char* crumb;
  std::vector<const char*> instances;
};

const std::vector<Category>& categories() {
  static const std::vector<Category> cats = {
      {"guitar", "guitar", "Music|Instruments",
       {"acoustic", "electric", "classical", "sunburst", "dreadnought"}},
      {"piano", "piano", "Music|Instruments",
       {"digital", "upright", "grand", "weighted", "studio"}},
      {"camera", "cam", "Electronics|Photography",
       {"mirrorless", "compact", "zoom", "instant", "action"}},
      {"laptop", "laptop", "Electronics|Computers",
       {"ultrabook", "gaming", "convertible", "business", "slim"}},
      {"drone", "drone", "Electronics|Aerial",
       {"quadcopter", "folding", "racing", "survey", "mini"}},
      {"watch", "watch", "Fashion|Wearables",
       {"chronograph", "analog", "diver", "field", "automatic"}},
      {"bicycle", "bike", "Sports|Cycling",
       {"road", "mountain", "gravel", "touring", "folding"}},
      {"keyboard", "keyboard", "Electronics|Peripherals",
       {"mechanical", "ergonomic", "tenkeyless", "backlit", "membrane"}},
      {"speaker", "speaker", "Electronics|Audio",
       {"bluetooth", "bookshelf", "floorstanding", "portable", "smart"}},
      {"lamp", "lamp", "Home|Lighting",
       {"desk", "floor", "bedside", "reading", "swing"}},
  };
  return cats;
}

const std::vector<const char*>& accessory_words() {
  static const std::vector<const char*> words = {
      "strings", "strap",   "case",        "cover", "stand",  "cable",
      "charger", "sticker", "parts",       "mount", "bag",    "replacement"};
  return words;
}

const std::vector<const char*>& noise_words() {
  static const std::vector<const char*> words = {
      "new",  "edition", "series", "model", "kit",   "set",
      "black", "silver",  "red",    "blue",  "deluxe", "premium"};
  return words;
}

}  // namespace

DemoData generate(const DemoSpec& spec) {
  if (spec.item_count < 1) throw ContractError("demo: item_count must be >= 1");
  if (spec.query_count < 1 ||
      spec.query_count > static_cast<int>(categories().size()))
    throw ContractError("demo: query_count must be in [1, " +
                        std::to_string(categories().size()) + "]");

  const auto& cats = categories();
  DemoData data;
  MixRng rng(splitmix64(spec.seed ^ 0x7261646F6D6F21ULL));

  std::set<std::string> tokens;
  auto note_tokens = [&](const std::string& text) {
    std::string cur;
    for (char c : text) {
      const char lc = (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
      if ((lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9')) {
        cur.push_back(lc);
      } else {
        if (!cur.empty()) tokens.insert(cur), cur.clear();
      }
    }
    if (!cur.empty()) tokens.insert(cur);
  };

  std::vector<int> item_category(static_cast<std::size_t>(spec.item_count));
  std::vector<bool> item_accessory(static_cast<std::size_t>(spec.item_count));

  for (int i = 0; i < spec.item_count; ++i) {
    const int c = static_cast<int>(rng.next_below(
        static_cast<std::uint64_t>(spec.query_count)));
    const bool accessory = rng.next_unit() < 0.35;
    item_category[static_cast<std::size_t>(i)] = c;
    item_accessory[static_cast<std::size_t>(i)] = accessory;
    const auto& cat = cats[static_cast<std::size_t>(c)];

    std::string title;
    if (accessory) {
      const auto& acc = accessory_words();
      title += acc[rng.next_below(acc.size())];
      if (rng.next_unit() < 0.5) {
        title += ' ';
        title += acc[rng.next_below(acc.size())];
      }
      title += " for ";
      title += cat.name;
      title += ' ';
      title += noise_words()[rng.next_below(noise_words().size())];
    } else {
      title += noise_words()[rng.next_below(noise_words().size())];
      title += ' ';
      title += cat.name;
      title += ' ';
      title += cat.instances[rng.next_below(cat.instances.size())];
      title += ' ';
      title += noise_words()[rng.next_below(noise_words().size())];
    }

    recall::CorpusItem item;
    item.item_id = "item-" + std::to_string(100000 + i);
    item.title = title;
    item.price = 5.0 + std::floor(rng.next_unit() * 49500.0) / 100.0;
    item.breadcrumb = accessory ? std::string("Accessories|") + cat.name
                                : std::string(cat.crumb);
    item.image_url = "img://" + item.item_id;
    note_tokens(item.title);
    note_tokens(*item.breadcrumb);
    data.corpus.push_back(std::move(item));
  }

  for (int q = 0; q < spec.query_count; ++q) {
    const auto& cat = cats[static_cast<std::size_t>(q)];
    data.queries.emplace_back("q-" + std::to_string(q), cat.query);
    note_tokens(cat.query);
    if (std::string(cat.query) != cat.name)
      data.synonym_lines.emplace_back(cat.query, cat.name);
  }

  // Fully judged universe: every query x item pair.
  for (int q = 0; q < spec.query_count; ++q) {
    const std::string qid = "q-" + std::to_string(q);
    for (int i = 0; i < spec.item_count; ++i) {
      eval::PairKey key{qid, data.corpus[static_cast<std::size_t>(i)].item_id};
      data.truth.universe.insert(key);
      if (item_category[static_cast<std::size_t>(i)] == q &&
          !item_accessory[static_cast<std::size_t>(i)])
        data.truth.positives.insert(std::move(key));
    }
  }

  data.stopwords = {"the", "for", "with", "and", "a", "of"};

  // digits so that price renders tokenize against the vocab
  for (char d = '0'; d <= '9'; ++d) {
    tokens.insert(std::string(1, d));
    tokens.insert("##" + std::string(1, d));
  }
  data.vocab_tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "|", "."};
  for (const auto& t : tokens) data.vocab_tokens.push_back(t);
  return data;
}

double run_demo(const DemoSpec& spec, const fs::path& work_dir,
                std::ostream& out) {
  DemoData data = generate(spec);

  std::error_code ec;
  fs::remove_all(work_dir, ec);
  fs::create_directories(work_dir);

  // Write the assets the way a real run would consume them.
  {
    std::string corpus = "item_id\ttitle\tprice\tbreadcrumb\timage_url\n";
    for (const auto& item : data.corpus) {
      corpus += item.item_id + "\t" + item.title + "\t" +
                tsv::format_sig(*item.price, 9) + "\t" + *item.breadcrumb +
                "\t" + *item.image_url + "\n";
    }
    tsv::write_file(work_dir / "corpus.tsv", corpus);

    std::string queries;
    for (const auto& [qid, text] : data.queries)
      queries += qid + "\t" + text + "\n";
    tsv::write_file(work_dir / "queries.tsv", queries);

    std::string truth;
    for (const auto& pair : data.truth.universe)
      truth += pair.first + "\t" + pair.second + "\t" +
               (data.truth.positives.count(pair) ? "1" : "0") + "\n";
    tsv::write_file(work_dir / "truth.tsv", truth);

    std::string stops;
    for (const auto& w : data.stopwords) stops += w + "\n";
    tsv::write_file(work_dir / "stopwords.txt", stops);

    std::string syn;
    for (const auto& [term, phrase] : data.synonym_lines)
      syn += term + "\t" + phrase + "\n";
    tsv::write_file(work_dir / "synonyms.tsv", syn);

    std::string vocab;
    for (const auto& t : data.vocab_tokens) vocab += t + "\n";
    tsv::write_file(work_dir / "vocab.txt", vocab);
  }

  const textprep::StopwordSet stops = textprep::load_stopwords(work_dir / "stopwords.txt");
  const textprep::SynonymDict dict = textprep::load_synonyms(work_dir / "synonyms.tsv");
  const wordpiece::Vocab vocab = wordpiece::load_vocab(work_dir / "vocab.txt");
  const textprep::PrepConfig prep;

  out << "demo seed            " << spec.seed << "\n";
  out << "corpus items         " << data.corpus.size() << "\n";
  out << "queries              " << data.queries.size() << "\n";
  out << "cartesian pairs      " << data.corpus.size() * data.queries.size()
      << "\n";

  // Stage one: coarse recall.
  const auto index = recall::build_index(data.corpus, prep, stops);
  const auto candidates = recall::recall_all(data.queries, index, prep, stops, dict);
  recall::write_candidates(work_dir / "candidates.tsv", candidates);
  out << "candidates           " << candidates.stats.total << "\n";
  out << "reduction ratio      "
      << tsv::format_sig(candidates.stats.reduction_ratio, 6) << "\n";

  // Supervised subset of the candidates, split per query.
  const int max_seq_len = 78;  // price + breadcrumb budget
  scorer::EncoderParams enc;
  enc.dim = 64;
  enc.seed = spec.seed + 11;
  std::unordered_map<std::string, const recall::CorpusItem*> by_id;
  for (const auto& item : data.corpus) by_id.emplace(item.item_id, &item);
  std::unordered_map<std::string, std::string> query_by_id(
      data.queries.begin(), data.queries.end());

  std::vector<scorer::LabeledPair> labeled;
  MixRng label_rng(splitmix64(spec.seed ^ 0x6C6162656C73ULL));
  for (const auto& [qid, iid] : candidates.pairs) {
    if (label_rng.next_unit() >= spec.labeled_fraction) continue;
    const auto* item = by_id.at(iid);
    scorer::LabeledPair pair;
    pair.query_id = qid;
    pair.item_id = iid;
    pair.label = data.truth.positives.count({qid, iid}) ? 1 : 0;
    pair.encoded = wordpiece::encode_pair(
        query_by_id.at(qid),
        wordpiece::compose_answer(item->title, item->price, item->breadcrumb),
        vocab, max_seq_len);
    labeled.push_back(std::move(pair));
  }
  auto [train_set, eval_set] =
      scorer::split_per_query(labeled, 0.1, spec.seed + 21);
  out << "labeled pairs        " << labeled.size() << " (train "
      << train_set.size() << ", eval " << eval_set.size() << ")\n";

  // Stage two: two heads on the frozen encoder, then the ensemble.
  scorer::TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.batch_size = 32;
  tc.max_epochs = 40;
  tc.patience = 8;
  tc.seed = spec.seed + 31;
  auto logistic = scorer::train_head(train_set, eval_set, enc, tc,
                                     scorer::HeadKind::Logistic);
  logistic.model.name = "demo.logistic";
  scorer::save_model(work_dir / "demo.logistic.model", logistic.model);
  scorer::write_train_log(work_dir / "demo.logistic.log.tsv", logistic.log);
  out << "logistic eval auc    " << tsv::format_sig(logistic.best_auc, 6)
      << " (epoch " << logistic.best_epoch << ")\n";

  tc.seed = spec.seed + 41;
  auto mlp =
      scorer::train_head(train_set, eval_set, enc, tc, scorer::HeadKind::Mlp);
  mlp.model.name = "demo.mlp32";
  scorer::save_model(work_dir / "demo.mlp32.model", mlp.model);
  scorer::write_train_log(work_dir / "demo.mlp32.log.tsv", mlp.log);
  out << "mlp eval auc         " << tsv::format_sig(mlp.best_auc, 6)
      << " (epoch " << mlp.best_epoch << ")\n";

  // Farm-score all candidates with both models.
  std::vector<ensemble::ScoreTable> tables;
  for (const auto* trained : {&logistic, &mlp}) {
    orchestrator::ScoringJob job;
    job.work_dir = work_dir / ("farm-" + trained->model.name);
    job.shard_count = spec.shard_count;
    job.worker_count = spec.worker_count;
    job.batch_size = 128;
    job.fresh = true;
    auto ctx = orchestrator::make_context(vocab, trained->model, data.corpus,
                                          data.queries, max_seq_len,
                                          /*use_price_breadcrumb=*/true);
    auto result = orchestrator::run_farm(job, candidates.pairs, ctx);
    tables.push_back(ensemble::load_score_table(result.merged));
  }
  ensemble::ScoreTable blended = ensemble::ensemble_mean(tables);
  ensemble::save_score_table(work_dir / "ensemble_scores.tsv", blended);
  out << "ensemble             " << blended.model_name << "\n";

  // Pick the operating threshold on the held-out labeled slice.
  eval::PairSet eval_universe, eval_truth;
  for (const auto& p : eval_set) {
    eval::PairKey key{p.query_id, p.item_id};
    if (p.label == 1) eval_truth.insert(key);
    eval_universe.insert(std::move(key));
  }
  ensemble::ScoreTable eval_scores;
  eval_scores.model_name = blended.model_name;
  for (const auto& key : eval_universe) eval_scores.rows[key] = blended.rows.at(key);
  auto [threshold, tuned] = eval::sweep_threshold(eval_scores, eval_truth,
                                                  eval_universe,
                                                  eval::Objective::Overall);
  out << "threshold            " << tsv::format_sig(threshold, 9)
      << " (held-out f1 " << tsv::format_sig(tuned.f1.value.value_or(0.0), 6)
      << ")\n";

  // Final evaluation over the fully judged universe; candidate pairs the
  // classifier accepts are the predictions, everything else is negative.
  eval::PairSet predictions;
  for (const auto& [key, score] : blended.rows)
    if (score > threshold) predictions.insert(key);
  eval::EvalReport report =
      eval::precision_recall_f1(predictions, data.truth.positives, data.truth.universe);
  report.threshold = threshold;
  std::vector<std::string> query_ids;
  for (const auto& [qid, text] : data.queries) query_ids.push_back(qid);
  report.mean_per_query_f1 =
      eval::mean_per_query_f1(predictions, data.truth.positives,
                              data.truth.universe, query_ids, &report.per_query_f1);
  eval::write_per_query_tsv(work_dir / "per_query_f1.tsv", report);

  out << "final evaluation over the judged universe\n";
  out << eval::render_report(report);
  return report.f1.value.value_or(0.0);
}

}  // namespace relforge::demo
