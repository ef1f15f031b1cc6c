#include <doctest.h>

#include <algorithm>

#include "relforge/ensemble.hpp"
#include "relforge/errors.hpp"
#include "relforge/mix.hpp"
#include "test_support.hpp"

using namespace relforge;
using namespace relforge::ensemble;

namespace {

ScoreTable table(const std::string& name,
                 std::vector<std::pair<PairKey, double>> rows) {
  ScoreTable t;
  t.model_name = name;
  for (auto& [k, v] : rows) t.rows[k] = v;
  return t;
}

}  // namespace

TEST_CASE("ensemble_mean basics") {
  auto a = table("a", {{{"q", "i"}, 0.2}});
  auto b = table("b", {{{"q", "i"}, 0.4}});
  auto c = table("c", {{{"q", "i"}, 0.9}});

  // N=1 identity
  auto one = ensemble_mean({a});
  CHECK(one.rows == a.rows);
  CHECK(one.model_name == "a");

  auto mean = ensemble_mean({a, b, c});
  CHECK(mean.rows.at({"q", "i"}) == doctest::Approx(0.5));
  CHECK(mean.model_name == "a+b+c");

  CHECK_THROWS_AS(ensemble_mean({}), ContractError);
}

TEST_CASE("ensemble_mean requires identical key sets") {
  auto a = table("a", {{{"q", "i1"}, 0.2}, {{"q", "i2"}, 0.4}});
  auto b = table("b", {{{"q", "i1"}, 0.5}});
  CHECK_THROWS_WITH_AS(ensemble_mean({a, b}), doctest::Contains("i2"), DataError);
  auto c = table("c", {{{"q", "i1"}, 0.5}, {{"q", "i3"}, 0.6}});
  CHECK_THROWS_AS(ensemble_mean({a, c}), DataError);
}

TEST_CASE("ensemble permutation invariance, bounds, idempotence") {
  MixRng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t keys = 1 + rng.next_below(12);
    const std::size_t n = 1 + rng.next_below(5);
    std::vector<ScoreTable> tables(n);
    for (std::size_t t = 0; t < n; ++t)
      tables[t].model_name = "m" + std::to_string(t);
    for (std::size_t k = 0; k < keys; ++k) {
      PairKey key{"q" + std::to_string(rng.next_below(3)),
                  "i" + std::to_string(k)};
      for (std::size_t t = 0; t < n; ++t)
        tables[t].rows[key] = 0.001 + 0.998 * rng.next_unit();
    }

    auto mean = ensemble_mean(tables);
    auto shuffled = tables;
    deterministic_shuffle(shuffled, rng);
    auto mean2 = ensemble_mean(shuffled);
    CHECK(mean.rows == mean2.rows);  // exact, not approximate
    CHECK(mean.model_name == mean2.model_name);

    for (const auto& [key, v] : mean.rows) {
      double lo = 1e9, hi = -1e9;
      for (const auto& t : tables) {
        lo = std::min(lo, t.rows.at(key));
        hi = std::max(hi, t.rows.at(key));
      }
      CHECK(v >= lo);
      CHECK(v <= hi);
    }

    // ensembling N copies of one table returns that table
    std::vector<ScoreTable> copies(3, tables[0]);
    auto same = ensemble_mean(copies);
    for (const auto& [key, v] : same.rows)
      CHECK(v == doctest::Approx(tables[0].rows.at(key)).epsilon(1e-15));
  }
}

TEST_CASE("score table file round trip") {
  testsup::TempDir dir("scores");
  auto t = table("model-x", {{{"q1", "i1"}, 0.25}, {{"q1", "i2"}, 0.75}});
  save_score_table(dir.file("s.tsv"), t);
  auto loaded = load_score_table(dir.file("s.tsv"));
  CHECK(loaded.model_name == "model-x");
  CHECK(loaded.rows.size() == 2);
  CHECK(loaded.rows.at({"q1", "i2"}) == doctest::Approx(0.75));

  auto bad = testsup::write_temp(dir, "bad.tsv", "no header\n");
  CHECK_THROWS_AS(load_score_table(bad), DataError);
  auto err = testsup::write_temp(
      dir, "err.tsv", "query_id\titem_id\tscore\tmodel\nq\ti\tERR\tm\n");
  CHECK_THROWS_WITH_AS(load_score_table(err), doctest::Contains("ERR"), DataError);
}
