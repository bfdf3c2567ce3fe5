#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ensrec/error.hpp"
#include "ensrec/metrics.hpp"

using namespace ensrec;
using doctest::Approx;

namespace {

// Written out longhand: log2(x) = ln(x) / ln(2), positions 1-based.
double oracle_dcg(const std::vector<int>& rel) {
  double s = 0.0;
  for (std::size_t p = 1; p <= rel.size(); ++p) s += rel[p - 1] / (std::log(p + 1.0) / std::log(2.0));
  return s;
}

double oracle_ndcg(const std::vector<int>& ranked, const std::vector<int>& holdout, int n) {
  std::vector<int> rel(n, 0);
  for (int i = 0; i < n && i < static_cast<int>(ranked.size()); ++i)
    rel[i] = std::count(holdout.begin(), holdout.end(), ranked[i]) ? 1 : 0;
  return oracle_dcg(rel) / oracle_dcg(std::vector<int>(n, 1));
}

}  // namespace

TEST_CASE("dcg frozen values") {
  CHECK(metrics::dcg(std::vector<int>{0, 0, 0}) == 0.0);
  CHECK(metrics::dcg(std::vector<int>{1}) == 1.0);
  CHECK(metrics::dcg(std::vector<int>{1, 0, 1}) == Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_WITH(metrics::dcg(std::vector<int>{}), "empty list");
  CHECK_THROWS_AS(metrics::dcg(std::vector<int>{2}), Error);
}

TEST_CASE("idcg frozen values") {
  CHECK(metrics::idcg(1) == 1.0);
  CHECK(metrics::idcg(3) == Approx(2.1309297535714574).epsilon(1e-14));
  CHECK(metrics::idcg(2) == Approx(1.6309297535714574).epsilon(1e-14));
  CHECK_THROWS_WITH(metrics::idcg(0), "invalid length");
  CHECK_THROWS_WITH(metrics::idcg(-3), "invalid length");
}

TEST_CASE("ndcg_user examples") {
  const std::vector<ItemIndex> items{0, 1, 2};
  CHECK(metrics::ndcg_user(items, std::vector<ItemIndex>{0, 1, 2}, 3) == Approx(1.0));
  CHECK(metrics::ndcg_user(items, std::vector<ItemIndex>{}, 3) == 0.0);
  CHECK(metrics::ndcg_user(items, std::vector<ItemIndex>{0, 2}, 3) ==
        Approx(0.70391808903413475).epsilon(1e-14));
  // Short list padded with misses; the denominator keeps the full n.
  CHECK(metrics::ndcg_user(std::vector<ItemIndex>{0}, std::vector<ItemIndex>{0}, 2) ==
        Approx(1.0 / 1.6309297535714574));
  // Only the first n count.
  CHECK(metrics::ndcg_user(std::vector<ItemIndex>{5, 6, 7}, std::vector<ItemIndex>{7}, 2) == 0.0);

  RankedList ranked{{0, 0.9}, {1, 0.5}, {2, 0.1}};
  CHECK(metrics::ndcg_user(ranked, std::vector<ItemIndex>{0, 2}, 3) ==
        metrics::ndcg_user(items, std::vector<ItemIndex>{0, 2}, 3));
}

TEST_CASE("ndcg_model population") {
  std::vector<RankedList> lists{{{0, 1.0}}, {{1, 1.0}}};
  std::vector<std::vector<ItemIndex>> holdouts{{0}, {5}};
  CHECK(metrics::ndcg_model(lists, holdouts, 1) == Approx(0.5));

  // One user, pattern [1,0,1].
  std::vector<RankedList> one{{{0, 3.0}, {1, 2.0}, {2, 1.0}}};
  CHECK(metrics::ndcg_model(one, {{0, 2}}, 3) == Approx(0.7039180890341347));

  std::vector<RankedList> all{{{0, 1.0}, {1, 0.5}}, {{3, 1.0}, {4, 0.2}}};
  CHECK(metrics::ndcg_model(all, {{0, 1}, {3, 4}}, 2) == Approx(1.0));

  SUBCASE("empty holdouts are skipped by default") {
    std::vector<RankedList> l{{{0, 1.0}}, {{1, 1.0}}};
    CHECK(metrics::ndcg_model(l, {{0}, {}}, 1) == Approx(1.0));
    CHECK(metrics::ndcg_model(l, {{0}, {}}, 1, {true}) == Approx(0.5));
  }
  SUBCASE("missing list counts as zero") {
    CHECK(metrics::ndcg_model({{{0, 1.0}}}, {{0}, {3}}, 1) == Approx(0.5));
  }
  SUBCASE("empty population") {
    try {
      metrics::ndcg_model({{{0, 1.0}}}, {{}}, 1);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kRuntime);
      CHECK(std::string(e.what()) == "empty evaluation population");
    }
  }
}

TEST_CASE("ndcg properties on random lists") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int catalog = 5 + static_cast<int>(rng() % 30);
    std::vector<ItemIndex> all(catalog);
    for (int i = 0; i < catalog; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    const int len = 1 + static_cast<int>(rng() % catalog);
    std::vector<ItemIndex> ranked(all.begin(), all.begin() + len);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<ItemIndex> holdout(all.begin(), all.begin() + rng() % (catalog + 1));
    std::sort(holdout.begin(), holdout.end());
    const int n = 1 + static_cast<int>(rng() % 20);

    const double v = metrics::ndcg_user(ranked, holdout, n);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0 + 1e-12);
    REQUIRE(v == Approx(oracle_ndcg({ranked.begin(), ranked.end()},
                                    {holdout.begin(), holdout.end()}, n))
                     .epsilon(1e-12));

    // Turning a miss into a hit never lowers the score.
    for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(n); ++i) {
      if (std::binary_search(holdout.begin(), holdout.end(), ranked[i])) continue;
      auto more = holdout;
      more.insert(std::upper_bound(more.begin(), more.end(), ranked[i]), ranked[i]);
      REQUIRE(metrics::ndcg_user(ranked, more, n) > v);
      break;
    }
    // Moving a hit up past a miss never lowers the score.
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      const bool hit = std::binary_search(holdout.begin(), holdout.end(), ranked[i]);
      const bool prev = std::binary_search(holdout.begin(), holdout.end(), ranked[i - 1]);
      if (hit && !prev) {
        auto swapped = ranked;
        std::swap(swapped[i], swapped[i - 1]);
        REQUIRE(metrics::ndcg_user(swapped, holdout, n) >= v);
        break;
      }
    }
  }
}
