#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "relforge/errors.hpp"
#include "relforge/scorer.hpp"
#include "relforge/wordpiece.hpp"
#include "scorer_checks.hpp"
#include "test_support.hpp"

using namespace relforge;
using namespace relforge::scorer;

namespace {

wordpiece::Vocab test_vocab() {
  return wordpiece::Vocab(
      {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "red", "blue", "dog", "cat"});
}

}  // namespace

TEST_CASE("encode_features is deterministic and mask-driven") {
  auto vocab = test_vocab();
  EncoderParams enc;
  enc.dim = 8;
  enc.seed = 42;
  enc.table_size = 128;

  auto a = wordpiece::encode_pair("red dog", "blue cat", vocab, 16);
  auto b = wordpiece::encode_pair("red dog", "blue cat", vocab, 16);
  CHECK(encode_features(a, enc) == encode_features(b, enc));

  // padding length must not matter
  auto wide = wordpiece::encode_pair("red dog", "blue cat", vocab, 32);
  CHECK(encode_features(a, enc) == encode_features(wide, enc));

  // swapping a token across the [SEP] boundary changes h
  auto swapped = wordpiece::encode_pair("blue dog", "red cat", vocab, 16);
  CHECK(encode_features(a, enc) != encode_features(swapped, enc));

  // different seed, different space
  EncoderParams other = enc;
  other.seed = 43;
  CHECK(encode_features(a, enc) != encode_features(a, other));
}

TEST_CASE("logistic_head_prob") {
  LogisticHead zeros = init_logistic(4);
  std::vector<double> h = {0.3, -0.1, 2.0, 0.7};
  CHECK(logistic_head_prob(h, zeros) == doctest::Approx(0.5));

  // logits (0, ln 3) -> p = 3/4
  LogisticHead head = init_logistic(2);
  std::vector<double> h2 = {1.0, 0.0};
  head.w[2] = std::log(3.0);  // row 1, first column
  CHECK(logistic_head_prob(h2, head) == doctest::Approx(0.75).epsilon(1e-12));

  // shifting both logits by a constant changes nothing
  LogisticHead shifted = head;
  shifted.w[0] += 5.0;
  shifted.w[2] += 5.0;
  CHECK(logistic_head_prob(h2, shifted) ==
        doctest::Approx(logistic_head_prob(h2, head)).epsilon(1e-12));

  CHECK_THROWS_AS(logistic_head_prob(h, head), ContractError);
}

TEST_CASE("mlp_head_prob") {
  MlpHead zeros;
  zeros.dim = 3;
  zeros.hidden = 4;
  zeros.w1.assign(12, 0.0);
  zeros.b1.assign(4, 0.0);
  zeros.w2.assign(8, 0.0);
  zeros.b2.assign(2, 0.0);
  std::vector<double> h = {0.5, -0.5, 1.0};
  CHECK(mlp_head_prob(h, zeros) == doctest::Approx(0.5));

  // hidden=1 with a dead relu: probability collapses to softmax(b2)
  MlpHead dead;
  dead.dim = 2;
  dead.hidden = 1;
  dead.w1 = {-1.0, -1.0};
  dead.b1 = {-0.5};
  dead.w2 = {3.0, -2.0};
  dead.b2 = {0.0, std::log(3.0)};
  std::vector<double> pos = {0.2, 0.1};  // w1.h + b1 = -0.8 < 0
  CHECK(mlp_head_prob(pos, dead) == doctest::Approx(0.75).epsilon(1e-12));

  // identity W1 with positive activations reduces to the logistic head
  MlpHead ident;
  ident.dim = 2;
  ident.hidden = 2;
  ident.w1 = {1.0, 0.0, 0.0, 1.0};
  ident.b1 = {0.0, 0.0};
  ident.w2 = {0.4, -0.3, 1.1, 0.9};
  ident.b2 = {0.0, 0.0};
  LogisticHead same = init_logistic(2);
  same.w = ident.w2;
  std::vector<double> hp = {0.6, 0.25};  // strictly positive coords
  CHECK(mlp_head_prob(hp, ident) ==
        doctest::Approx(logistic_head_prob(hp, same)).epsilon(1e-12));

  CHECK_THROWS_AS(mlp_head_prob(h, dead), ContractError);
}

TEST_CASE("probabilities are proper") {
  MixRng rng(5);
  for (int t = 0; t < 200; ++t) {
    const int dim = 1 + static_cast<int>(rng.next_below(8));
    std::vector<double> h(static_cast<std::size_t>(dim));
    for (double& v : h) v = rng.next_symmetric() * 3;
    LogisticHead head = init_logistic(dim);
    for (double& v : head.w) v = rng.next_symmetric() * 3;
    const double p = logistic_head_prob(h, head);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    // the two softmax components sum to one
    LogisticHead swapped = head;
    for (int k = 0; k < dim; ++k)
      std::swap(swapped.w[static_cast<std::size_t>(k)],
                swapped.w[static_cast<std::size_t>(dim + k)]);
    CHECK(p + logistic_head_prob(h, swapped) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("complement_softmax_loss examples") {
  std::vector<double> even = {0.0, 0.0};
  CHECK(complement_softmax_loss(even, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(complement_softmax_loss(even, -1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<double> three = {std::log(2.0), 0.0, 0.0};
  // softmax_0 = 2/4; "not class 0" costs -log(1/2)
  CHECK(complement_softmax_loss(three, -1) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(complement_softmax_loss(even, 2), ContractError);
  CHECK_THROWS_AS(complement_softmax_loss(even, -3), ContractError);
  CHECK_THROWS_AS(complement_softmax_loss(std::vector<double>{0.0}, 0), ContractError);
}

TEST_CASE("complement loss: binary complement identity") {
  MixRng rng(17);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> logits = {rng.next_symmetric() * 4, rng.next_symmetric() * 4};
    for (int k = 0; k < 2; ++k) {
      const double neg = complement_softmax_loss(logits, -(k + 1));
      const double pos = complement_softmax_loss(logits, 1 - k);
      CHECK(neg == doctest::Approx(pos).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradients match central finite differences") {
  MixRng rng(99);
  auto lg = scorer_checks::check_logistic_gradients(rng, 30);
  CHECK(lg.max_rel_err < 1e-5);
  auto mg = scorer_checks::check_mlp_gradients(rng, 30);
  CHECK(mg.max_rel_err < 1e-5);
  auto cg = scorer_checks::check_complement_loss_gradients(rng, 30);
  CHECK(cg.max_rel_err < 1e-5);
}

namespace {

std::vector<LabeledPair> flat_pairs(const std::map<std::string, int>& sizes) {
  std::vector<LabeledPair> out;
  for (const auto& [qid, n] : sizes)
    for (int i = 0; i < n; ++i) {
      LabeledPair p;
      p.query_id = qid;
      p.item_id = qid + "-item-" + std::to_string(i);
      p.label = i % 2;
      out.push_back(std::move(p));
    }
  return out;
}

}  // namespace

TEST_CASE("split_per_query ratios") {
  auto [train, eval] = split_per_query(flat_pairs({{"q", 10}}), 0.1, 3);
  CHECK(train.size() == 9);
  CHECK(eval.size() == 1);

  auto [t1, e1] = split_per_query(flat_pairs({{"q", 1}}), 0.1, 3);
  CHECK(t1.size() == 1);
  CHECK(e1.empty());

  auto [t2, e2] = split_per_query(flat_pairs({{"q", 4}}), 0.5, 3);
  CHECK(t2.size() == 2);
  CHECK(e2.size() == 2);

  CHECK_THROWS_AS(split_per_query({}, 0.0, 1), ContractError);
  CHECK_THROWS_AS(split_per_query({}, 1.0, 1), ContractError);
}

TEST_CASE("split_per_query partitions exactly with per-query balance") {
  MixRng rng(55);
  for (int trial = 0; trial < 40; ++trial) {
    std::map<std::string, int> sizes;
    const int queries = 1 + static_cast<int>(rng.next_below(6));
    for (int q = 0; q < queries; ++q)
      sizes["q" + std::to_string(q)] = 1 + static_cast<int>(rng.next_below(30));
    const double fraction = 0.05 + 0.9 * rng.next_unit();
    auto data = flat_pairs(sizes);
    auto [train, eval] = split_per_query(data, fraction, rng.next_u64());

    CHECK(train.size() + eval.size() == data.size());
    std::multiset<std::string> got, want;
    for (const auto& p : data) want.insert(p.query_id + "/" + p.item_id);
    for (const auto& p : train) got.insert(p.query_id + "/" + p.item_id);
    for (const auto& p : eval) got.insert(p.query_id + "/" + p.item_id);
    CHECK(got == want);

    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& p : train) counts[p.query_id].first++;
    for (const auto& p : eval) counts[p.query_id].second++;
    for (const auto& [qid, n] : sizes) {
      const auto [tr, ev] = counts[qid];
      CHECK(tr + ev == n);
      if (n >= 2) {
        CHECK(tr >= 1);
        CHECK(ev >= 1);
        CHECK(std::abs(static_cast<double>(ev) / n - fraction) <= 1.0 / n + 1e-12);
      }
    }
  }
}

TEST_CASE("batch_auc") {
  CHECK(batch_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) ==
        doctest::Approx(1.0));
  CHECK(batch_auc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) ==
        doctest::Approx(0.5));
  CHECK(batch_auc(std::vector<double>{0.8, 0.6, 0.4}, std::vector<int>{1, 0, 1}) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(batch_auc(std::vector<double>{0.5, 0.6}, std::vector<int>{1, 1}),
                  ContractError);
}

TEST_CASE("train_head reaches AUC 1.0 on the separable toy set") {
  auto toy = scorer_checks::make_separable_toy_set(1001);
  TrainConfig cfg;
  cfg.learning_rate = 2.0;
  cfg.batch_size = 16;
  cfg.max_epochs = 50;
  cfg.patience = 50;
  cfg.seed = 9;
  auto result = train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Logistic);
  CHECK(result.best_auc == doctest::Approx(1.0));
  CHECK(result.best_epoch <= 50);
}

TEST_CASE("train_head with lr=0 returns the initial head") {
  auto toy = scorer_checks::make_separable_toy_set(1002, 60, 20);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 5;
  cfg.seed = 4;
  auto logistic = train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Logistic);
  CHECK(logistic.model.logistic.w == init_logistic(toy.enc.dim).w);

  auto mlp = train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Mlp, 8);
  auto init = init_mlp(toy.enc.dim, 8, cfg.seed);
  CHECK(mlp.model.mlp.w1 == init.w1);
  CHECK(mlp.model.mlp.b1 == init.b1);
  CHECK(mlp.model.mlp.w2 == init.w2);
  CHECK(mlp.model.mlp.b2 == init.b2);
}

TEST_CASE("train_head is bitwise deterministic for a fixed seed") {
  auto toy = scorer_checks::make_separable_toy_set(1003, 80, 20);
  TrainConfig cfg;
  cfg.learning_rate = 0.7;
  cfg.batch_size = 8;
  cfg.max_epochs = 12;
  cfg.seed = 21;
  auto a = train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Mlp, 16);
  auto b = train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Mlp, 16);
  CHECK(a.model.mlp.w1 == b.model.mlp.w1);
  CHECK(a.model.mlp.b1 == b.model.mlp.b1);
  CHECK(a.model.mlp.w2 == b.model.mlp.w2);
  CHECK(a.model.mlp.b2 == b.model.mlp.b2);
  CHECK(a.best_auc == b.best_auc);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
}

TEST_CASE("training loss is non-increasing with full-batch lr=0.01") {
  auto toy = scorer_checks::make_separable_toy_set(1004, 100, 20);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = static_cast<int>(toy.train.size());
  cfg.max_epochs = 25;
  cfg.patience = 0;  // run them all
  cfg.seed = 2;
  auto result = train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Logistic);
  REQUIRE(result.log.size() == 25);
  for (std::size_t i = 1; i < result.log.size(); ++i)
    CHECK(result.log[i].train_loss <= result.log[i - 1].train_loss + 1e-12);
}

TEST_CASE("train_head rejects single-class data") {
  auto toy = scorer_checks::make_separable_toy_set(1005, 40, 10);
  for (auto& p : toy.train) p.label = 1;
  TrainConfig cfg;
  CHECK_THROWS_AS(train_head(toy.train, toy.eval, toy.enc, cfg, HeadKind::Logistic),
                  DataError);
  CHECK_THROWS_AS(train_head({}, toy.eval, toy.enc, cfg, HeadKind::Logistic),
                  DataError);
}

TEST_CASE("model files round-trip bitwise") {
  testsup::TempDir dir("model");
  auto toy = scorer_checks::make_separable_toy_set(1006, 50, 12);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.seed = 8;

  for (auto kind : {HeadKind::Logistic, HeadKind::Mlp}) {
    auto result = train_head(toy.train, toy.eval, toy.enc, cfg, kind, 8);
    result.model.name = "m";
    const auto path = dir.file(kind == HeadKind::Logistic ? "lr.model" : "mlp.model");
    save_model(path, result.model);
    auto loaded = load_model(path);
    CHECK(loaded.kind == result.model.kind);
    CHECK(loaded.encoder.dim == result.model.encoder.dim);
    CHECK(loaded.encoder.seed == result.model.encoder.seed);
    if (kind == HeadKind::Logistic) {
      CHECK(loaded.logistic.w == result.model.logistic.w);
    } else {
      CHECK(loaded.mlp.hidden == result.model.mlp.hidden);
      CHECK(loaded.mlp.w1 == result.model.mlp.w1);
      CHECK(loaded.mlp.b1 == result.model.mlp.b1);
      CHECK(loaded.mlp.w2 == result.model.mlp.w2);
      CHECK(loaded.mlp.b2 == result.model.mlp.b2);
    }
  }
  CHECK_THROWS_AS(load_model(dir.file("missing.model")), DataError);
  auto junk = testsup::write_temp(dir, "junk.model", "whatever 1 2 3\n");
  CHECK_THROWS_AS(load_model(junk), DataError);
  auto inf = testsup::write_temp(dir, "inf.model",
                                 "logistic 2 0 1\n0.5 inf\n0.1 0.2\n");
  CHECK_THROWS_WITH_AS(load_model(inf), doctest::Contains("non-finite"),
                       DataError);
}
