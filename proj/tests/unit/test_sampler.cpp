#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "helpers.hpp"
#include "signedrec/sampler.hpp"

using namespace signedrec;

namespace {

using Edges = std::vector<std::pair<UserId, UserId>>;

// Items 1..6 shifted to 0..5 plus a padding item 0: user 0 observes {1,2},
// friend 1 observes {2,3}, foe 2 observes {4}; catalog is 0..6.
struct WorkedExample {
  ObservedSets observed = testutil::observed_from(7, {{1, 2}, {2, 3}, {4}});
  SignedSocialGraph graph = SignedSocialGraph::from_edges(3, Edges{{0, 1}}, Edges{{0, 2}});
};

double chi_square_p(const std::vector<double>& counts) {
  double total = 0.0;
  for (const double c : counts) total += c;
  const double expected = total / double(counts.size());
  double chi2 = 0.0;
  for (const double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(double(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

}  // namespace

TEST_CASE("eligible set of the worked example") {
  const WorkedExample ex;
  // Item 0 is padding outside the original 1..6 catalog.
  CHECK(eligible_negatives(0, ex.observed, ex.graph) == std::vector<ItemId>{0, 5, 6});
}

TEST_CASE("eligible set on the 1..6 catalog is {5, 6}") {
  // Re-index so the catalog is exactly 1..6 (id 0 observed by the user).
  const auto observed = testutil::observed_from(7, {{0, 1, 2}, {2, 3}, {4}});
  const auto graph = SignedSocialGraph::from_edges(3, Edges{{0, 1}}, Edges{{0, 2}});
  CHECK(eligible_negatives(0, observed, graph) == std::vector<ItemId>{5, 6});
}

TEST_CASE("no neighbors gives the unobserved set") {
  const auto observed = testutil::observed_from(5, {{1, 3}, {0}});
  const auto graph = SignedSocialGraph::from_edges(2, Edges{}, Edges{});
  CHECK(eligible_negatives(0, observed, graph) == observed.unobserved(0));
}

TEST_CASE("neighbors covering every unobserved item leave nothing") {
  const auto observed = testutil::observed_from(4, {{0}, {1, 2}, {3}});
  const auto graph = SignedSocialGraph::from_edges(3, Edges{{0, 1}}, Edges{{0, 2}});
  CHECK(eligible_negatives(0, observed, graph).empty());
  SamplerConfig cfg;
  Rng rng(1);
  const std::vector<ItemId> empty;
  CHECK(draw_negatives(1, cfg, empty, rng).skipped);
}

TEST_CASE("a small pool is exhausted exactly once") {
  const std::vector<ItemId> pool{5, 6};
  SamplerConfig cfg;
  Rng rng(3);
  const auto d = draw_negatives(2, cfg, pool, rng);
  CHECK_FALSE(d.skipped);
  CHECK(d.items == std::vector<ItemId>{5, 6});
}

TEST_CASE("draws are distinct, sorted and sized") {
  std::vector<ItemId> pool(40);
  for (ItemId i = 0; i < 40; ++i) pool[i] = 2 * i;
  SamplerConfig cfg;
  cfg.negatives_per_positive = 3;
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    const auto d = draw_negatives(2, cfg, pool, rng);
    REQUIRE(d.items.size() == 6);
    CHECK(std::is_sorted(d.items.begin(), d.items.end()));
    CHECK(std::adjacent_find(d.items.begin(), d.items.end()) == d.items.end());
    for (const auto i : d.items) CHECK(std::binary_search(pool.begin(), pool.end(), i));
  }
}

TEST_CASE("single draws from {5, 6} are balanced") {
  const std::vector<ItemId> pool{5, 6};
  SamplerConfig cfg;
  cfg.negatives_per_positive = 1;
  Rng rng(21);
  const int n = 100000;
  int fives = 0;
  for (int k = 0; k < n; ++k) fives += draw_negatives(1, cfg, pool, rng).items.at(0) == 5;
  CHECK(std::abs(double(fives) / n - 0.5) < 0.01);
}

TEST_CASE("draws are uniform over a larger pool") {
  std::vector<ItemId> pool(20);
  for (ItemId i = 0; i < 20; ++i) pool[i] = i;
  SamplerConfig cfg;
  cfg.negatives_per_positive = 3;
  Rng rng(77);
  std::vector<double> counts(20, 0.0);
  for (int k = 0; k < 20000; ++k) {
    for (const auto i : draw_negatives(1, cfg, pool, rng).items) counts[i] += 1.0;
  }
  CHECK(chi_square_p(counts) > 0.01);
}

TEST_CASE("social draws avoid neighbor items, unconditional ones do not") {
  const WorkedExample ex;
  SamplerConfig social;
  social.negatives_per_positive = 4;
  SamplerConfig plain = social;
  plain.mode = SamplingMode::Unconditional;
  NegativeSampler s(ex.observed, &ex.graph, social);
  NegativeSampler p(ex.observed, &ex.graph, plain);
  Rng rng(4);
  bool plain_hit_friend_item = false;
  for (int k = 0; k < 500; ++k) {
    for (const auto i : s.draw(0, 1, rng).draw.items) {
      CHECK(i != 3);
      CHECK(i != 4);
    }
    for (const auto i : p.draw(0, 1, rng).draw.items) plain_hit_friend_item |= i == 3;
  }
  CHECK(plain_hit_friend_item);
}

TEST_CASE("exhausted users fall back to the unobserved set") {
  const auto observed = testutil::observed_from(4, {{0}, {1, 2}, {3}});
  const auto graph = SignedSocialGraph::from_edges(3, Edges{{0, 1}}, Edges{{0, 2}});
  NegativeSampler s(observed, &graph, SamplerConfig{});
  Rng rng(2);
  const auto r = s.draw(0, 1, rng);
  CHECK(r.fell_back);
  CHECK(r.draw.items == std::vector<ItemId>{1, 2, 3});
  CHECK(s.fallbacks() == 1);
}

TEST_CASE("randomized graphs: social draws never touch neighbor items") {
  Rng gen(2718);
  std::size_t total_draws = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_users = 30;
    const std::size_t n_items = 120;
    const auto ds = testutil::random_implicit(n_users, n_items, 6, gen());
    const auto obs = observed_sets(testutil::all_train(ds), ds);
    Edges trust;
    Edges distrust;
    std::set<std::pair<UserId, UserId>> used;
    std::uniform_int_distribution<UserId> pick(0, n_users - 1);
    for (int e = 0; e < 90; ++e) {
      const UserId a = pick(gen);
      const UserId b = pick(gen);
      if (a == b || !used.insert({a, b}).second) continue;
      (e % 3 == 0 ? distrust : trust).emplace_back(a, b);
    }
    const auto graph = SignedSocialGraph::from_edges(n_users, trust, distrust);
    SamplerConfig cfg;
    NegativeSampler sampler(obs, &graph, cfg);
    for (UserId u = 0; u < n_users; ++u) {
      std::set<ItemId> forbidden(obs.observed(u).begin(), obs.observed(u).end());
      for (const auto a : graph.friends(u)) forbidden.insert(obs.observed(a).begin(), obs.observed(a).end());
      for (const auto b : graph.foes(u)) forbidden.insert(obs.observed(b).begin(), obs.observed(b).end());
      for (int k = 0; k < 170; ++k) {
        const auto r = sampler.draw(u, 1, gen);
        REQUIRE_FALSE(r.fell_back);
        for (const auto i : r.draw.items) REQUIRE_FALSE(forbidden.contains(i));
        ++total_draws;
      }
    }
  }
  CHECK(total_draws >= 100000);
}
