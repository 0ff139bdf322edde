#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "signedrec/evaluator.hpp"

using namespace signedrec;
using testutil::brute_ndcg;
using testutil::brute_recall;

namespace {

// Records sorted by (user, item) so indices match the dataset order.
struct Fixture {
  Dataset ds;
  Split split;
};

Fixture explicit_fixture() {
  // user 0: train {3,5}, test item 2 rated 5, item 3 rated 4
  // user 1: no train, test item 0 rated 5 (global train mean is 4)
  // user 2: train {4}, test item 1 rated 4
  std::vector<Interaction> r{{0, 0, 3}, {0, 1, 5}, {0, 2, 5}, {0, 3, 4},
                             {1, 0, 5}, {2, 0, 4}, {2, 1, 4}};
  Dataset ds(3, 4, r, FeedbackKind::Explicit);
  Split s;
  s.train = {0, 1, 5};
  s.test = {2, 3, 4, 6};
  return {std::move(ds), std::move(s)};
}

// Implicit data with a 0.5 split: every user has `per_user` items.
Fixture implicit_fixture(std::size_t users, std::size_t items, std::size_t per_user,
                         std::uint64_t seed) {
  auto ds = testutil::random_implicit(users, items, per_user, seed);
  auto s = split_ratings(ds, 0.5, seed, true);
  return {std::move(ds), std::move(s)};
}

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

}  // namespace

TEST_CASE("relevance rule") {
  const auto f = explicit_fixture();
  CHECK(relevance_labels(f.ds, f.split, 0) == std::vector<ItemId>{2});
  // 5 > 4 against the global mean
  CHECK(relevance_labels(f.ds, f.split, 1) == std::vector<ItemId>{0});
  // rating equal to the mean is not relevant
  CHECK(relevance_labels(f.ds, f.split, 2).empty());
  const auto table = relevance_table(f.ds, f.split);
  CHECK(table.size() == 3);
  CHECK(table[0] == std::vector<ItemId>{2});
}

TEST_CASE("implicit test items are all relevant") {
  const auto f = implicit_fixture(10, 20, 4, 1);
  const auto table = relevance_table(f.ds, f.split);
  for (UserId u = 0; u < 10; ++u) CHECK(table[u].size() == 2);
}

TEST_CASE("recall examples") {
  const std::vector<ItemId> ranked{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  CHECK(recall_at_k(ranked, std::vector<ItemId>{3, 7}, 10) == 1.0);
  CHECK(recall_at_k(ranked, std::vector<ItemId>{1, 20, 21, 22}, 10) == 0.25);
  CHECK(recall_at_k(ranked, std::vector<ItemId>{5, 11}, 100) == 1.0);
  CHECK_THROWS_AS(recall_at_k(ranked, std::vector<ItemId>{}, 10), ContractError);
  CHECK_THROWS_AS(recall_at_k(ranked, std::vector<ItemId>{1}, 0), ContractError);
}

TEST_CASE("NDCG examples") {
  const std::vector<ItemId> ranked{0, 1, 2, 3};
  CHECK(ndcg_at_k(ranked, std::vector<ItemId>{0, 1}, 10) == doctest::Approx(1.0).epsilon(1e-15));
  const double v = ndcg_at_k(ranked, std::vector<ItemId>{0, 2}, 3);
  CHECK(std::abs(v - 0.9197) < 1e-4);
  CHECK(v == doctest::Approx(1.5 / (1.0 + 1.0 / std::log2(3.0))).epsilon(1e-14));
  // one-hot at rank k: iDCG = 1
  CHECK(ndcg_at_k(ranked, std::vector<ItemId>{3}, 4) == doctest::Approx(1.0 / std::log2(5.0)));
}

TEST_CASE("metrics match the brute-force oracle") {
  std::mt19937_64 rng(314);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    std::vector<ItemId> ranked(n);
    std::iota(ranked.begin(), ranked.end(), ItemId{0});
    std::shuffle(ranked.begin(), ranked.end(), rng);
    std::vector<ItemId> relevant;
    for (ItemId i = 0; i < n + 5; ++i) {
      if (std::bernoulli_distribution(0.3)(rng)) relevant.push_back(i);
    }
    if (relevant.empty()) relevant.push_back(ItemId(n / 2));
    const int k = std::uniform_int_distribution<int>(1, int(n) + 5)(rng);
    CHECK(std::abs(recall_at_k(ranked, relevant, k) - brute_recall(ranked, relevant, k)) <= 1e-12);
    CHECK(std::abs(ndcg_at_k(ranked, relevant, k) - brute_ndcg(ranked, relevant, k)) <= 1e-12);
  }
}

TEST_CASE("moving a relevant item up never lowers NDCG") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ItemId> ranked(15);
    std::iota(ranked.begin(), ranked.end(), ItemId{0});
    std::shuffle(ranked.begin(), ranked.end(), rng);
    std::vector<ItemId> relevant{2, 5, 9};
    const int k = std::uniform_int_distribution<int>(1, 15)(rng);
    const std::size_t at = std::uniform_int_distribution<std::size_t>(1, 14)(rng);
    if (!std::binary_search(relevant.begin(), relevant.end(), ranked[at])) continue;
    const double before = ndcg_at_k(ranked, relevant, k);
    std::swap(ranked[at], ranked[at - 1]);
    CHECK(ndcg_at_k(ranked, relevant, k) >= before - 1e-15);
  }
}

TEST_CASE("oracle scorer reaches the upper bound") {
  const auto f = implicit_fixture(40, 60, 10, 2);
  const auto obs = observed_sets(f.split, f.ds);
  const auto relevant = relevance_table(f.ds, f.split);
  EvalConfig cfg;
  cfg.ks = {3, 10};
  const auto run = evaluate_ranking(
      [&](UserId u, std::span<const ItemId> cand, std::span<double> s) {
        for (std::size_t c = 0; c < cand.size(); ++c) {
          s[c] = std::binary_search(relevant[u].begin(), relevant[u].end(), cand[c]) ? 1.0 : 0.0;
        }
      },
      f.ds, f.split, obs, cfg);
  CHECK(run.all.users == 40);
  // 5 relevant per user
  CHECK(run.all.recall.at(3) == doctest::Approx(3.0 / 5.0));
  CHECK(run.all.recall.at(10) == doctest::Approx(1.0));
  CHECK(run.all.ndcg.at(3) == doctest::Approx(1.0));
  CHECK(run.all.ndcg.at(10) == doctest::Approx(1.0));
  // 5 train items each: everyone is cold under the default threshold
  CHECK(run.cold.users == 40);
}

TEST_CASE("random scorer matches the analytic expectation within the Monte-Carlo band") {
  const auto f = implicit_fixture(100, 200, 20, 3);
  const auto obs = observed_sets(f.split, f.ds);
  EvalConfig cfg;
  cfg.ks = {10};
  cfg.threads = 2;
  // Each relevant item lands at rank r with probability 1/|candidates|.
  const double n_cand = 190.0;
  const double n_rel = 10.0;
  double dcg = 0.0;
  double idcg = 0.0;
  for (int r = 1; r <= 10; ++r) {
    dcg += (n_rel / n_cand) / std::log2(r + 1.0);
    idcg += 1.0 / std::log2(r + 1.0);
  }
  const double expected = dcg / idcg;
  const int runs = 30;
  std::vector<double> values;
  for (int rep = 0; rep < runs; ++rep) {
    const auto run = evaluate_ranking(
        [&](UserId u, std::span<const ItemId> cand, std::span<double> s) {
          for (std::size_t c = 0; c < cand.size(); ++c) {
            s[c] = double(mix((std::uint64_t(rep) << 40) ^ (std::uint64_t(u) << 20) ^ cand[c]));
          }
        },
        f.ds, f.split, obs, cfg);
    values.push_back(run.all.ndcg.at(10));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / runs;
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (runs - 1) / runs);
  CHECK(std::abs(mean - expected) < 4.0 * se);
}

TEST_CASE("cold slice selects users below the threshold") {
  std::vector<Interaction> r;
  // user 0: 12 train + 1 test, user 1: 2 train + 1 test
  for (ItemId i = 0; i < 13; ++i) r.push_back({0, i, 1});
  for (ItemId i = 0; i < 3; ++i) r.push_back({1, i, 1});
  Dataset ds(2, 20, r, FeedbackKind::Implicit);
  Split s;
  for (std::size_t k = 0; k < 12; ++k) s.train.push_back(k);
  s.test.push_back(12);
  s.train.push_back(13);
  s.train.push_back(14);
  s.test.push_back(15);
  const auto obs = observed_sets(s, ds);
  EvalConfig cfg;
  const auto run = evaluate_ranking(
      [](UserId, std::span<const ItemId> cand, std::span<double> sc) {
        for (std::size_t c = 0; c < cand.size(); ++c) sc[c] = -double(cand[c]);
      },
      ds, s, obs, cfg);
  CHECK(run.all.users == 2);
  CHECK(run.cold.users == 1);
  // user 1 candidates start at item 2, its test item: rank 1
  CHECK(run.cold.ndcg.at(10) == doctest::Approx(1.0));
}

TEST_CASE("no eligible users is a validation error") {
  const auto f = explicit_fixture();
  Split s = f.split;
  s.test = {3};  // rating 4 against mean 4 is not relevant
  s.train = {0, 1, 2, 4, 5, 6};
  const auto obs = observed_sets(s, f.ds);
  CHECK_THROWS_AS(evaluate_ranking([](UserId, auto, auto) {}, f.ds, s, obs, EvalConfig{}),
                  ValidationError);
}

TEST_CASE("report aggregates repeats and writes rows") {
  EvalReport report;
  auto run_with = [](double ndcg) {
    RunMetrics m;
    m.all.users = 5;
    m.all.ndcg[10] = ndcg;
    m.all.recall[10] = ndcg / 2;
    m.cold.users = 2;
    m.cold.ndcg[10] = ndcg / 2;
    m.cold.recall[10] = ndcg / 4;
    return m;
  };
  report.add("sdpl", 0.7, run_with(0.2));
  report.add("sdpl", 0.7, run_with(0.4));
  report.add("bpr", 0.7, run_with(0.1));
  report.add("bpr", 0.7, run_with(0.1));
  const auto s = report.summary("sdpl", 0.7, "all", "ndcg", 10);
  CHECK(s.mean == doctest::Approx(0.3));
  CHECK(s.std == doctest::Approx(std::sqrt(0.02)));
  CHECK(s.per_seed == std::vector<double>{0.2, 0.4});
  CHECK(report.models() == std::vector<std::string>{"sdpl", "bpr"});
  CHECK(report.ks() == std::vector<int>{10});
  CHECK(relative_drop(0.3, 0.15) == doctest::Approx(-0.5));

  std::ostringstream csv;
  report.write_csv(csv);
  CHECK(csv.str().rfind("model,split_ratio,slice,metric,k,mean,std\n", 0) == 0);
  CHECK(csv.str().find("sdpl,0.7,all,ndcg,10,") != std::string::npos);
  std::ostringstream per_seed;
  report.write_per_seed(per_seed);
  CHECK(per_seed.str().find("bpr,0.7,cold,recall,10,1,") != std::string::npos);
  std::ostringstream table;
  report.write_table(table);
  CHECK(table.str().find("sdpl") != std::string::npos);
}
