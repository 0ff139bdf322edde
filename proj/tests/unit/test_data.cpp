#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "signedrec/data.hpp"

using namespace signedrec;

namespace {

IdMap users_named(std::initializer_list<const char*> names) {
  IdMap m;
  for (const auto* n : names) m.intern(n);
  return m;
}

SignedSocialGraph graph_from_text(const std::string& trust, const std::string& distrust,
                                  const IdMap& users, GraphIngestStats* stats = nullptr) {
  std::istringstream t(trust);
  std::istringstream d(distrust);
  return parse_signed_graph(t, d, users, stats);
}

}  // namespace

TEST_CASE("ingest re-indexes users and items densely") {
  testutil::TempDir dir;
  testutil::write_file(dir / "r.tsv", "7\t2\t4\n7\t5\t5\n9\t2\t3\n");
  const auto ds = ingest_interactions(dir / "r.tsv", FeedbackKind::Explicit);
  CHECK(ds.n_users() == 2);
  CHECK(ds.n_items() == 2);
  CHECK(ds.size() == 3);
  CHECK(ds.user_ids().external(0) == "7");
  CHECK(ds.user_ids().external(1) == "9");
  CHECK(ds.item_ids().external(1) == "5");
  const std::vector<Interaction> expected{{0, 0, 4.0}, {0, 1, 5.0}, {1, 0, 3.0}};
  CHECK(std::equal(ds.interactions().begin(), ds.interactions().end(), expected.begin()));
}

TEST_CASE("empty input is rejected") {
  testutil::TempDir dir;
  testutil::write_file(dir / "empty.tsv", "");
  CHECK_THROWS_WITH_AS(ingest_interactions(dir / "empty.tsv", FeedbackKind::Explicit),
                       "no interactions", ValidationError);
}

TEST_CASE("malformed line reports its line number") {
  std::istringstream in("a\tb\tc\n");
  try {
    (void)parse_interactions(in, FeedbackKind::Explicit);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream two_fields("u\ti\t3\nu\n");
  try {
    (void)parse_interactions(two_fields, FeedbackKind::Explicit);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("rating scale and implicit counts are validated") {
  std::istringstream high("u\ti\t6\n");
  CHECK_THROWS_AS(parse_interactions(high, FeedbackKind::Explicit), ValidationError);
  std::istringstream low("u\ti\t0\n");
  CHECK_THROWS_AS(parse_interactions(low, FeedbackKind::Explicit), ValidationError);
  std::istringstream fractional("u\ti\t1.5\n");
  CHECK_THROWS_AS(parse_interactions(fractional, FeedbackKind::Implicit), ValidationError);
  std::istringstream negative("u\ti\t-1\n");
  CHECK_THROWS_AS(parse_interactions(negative, FeedbackKind::Implicit), ValidationError);
  std::istringstream counts("u\ti\t3\nu\tj\t0\n");
  CHECK(parse_interactions(counts, FeedbackKind::Implicit).size() == 2);
}

TEST_CASE("duplicate keys are rejected") {
  std::istringstream in("u\ti\t3\nu\ti\t4\n");
  CHECK_THROWS_AS(parse_interactions(in, FeedbackKind::Explicit), ValidationError);
  CHECK_THROWS_AS(Dataset(1, 1, {{0, 0, 1.0}, {0, 0, 2.0}}, FeedbackKind::Explicit),
                  ValidationError);
}

TEST_CASE("signed graph ingestion") {
  const auto users = users_named({"0", "1", "2"});
  SUBCASE("friends and foes") {
    const auto g = graph_from_text("0\t1\n", "0\t2\n", users);
    CHECK(std::vector<UserId>(g.friends(0).begin(), g.friends(0).end()) ==
          std::vector<UserId>{1});
    CHECK(std::vector<UserId>(g.foes(0).begin(), g.foes(0).end()) == std::vector<UserId>{2});
    CHECK(g.friends(1).empty());
  }
  SUBCASE("duplicate edges merge") {
    const auto g = graph_from_text("0\t1\n0\t1\n", "", users);
    CHECK(g.friends(0).size() == 1);
    CHECK(g.trust_edges() == 1);
  }
  SUBCASE("conflict names the pair") {
    CHECK_THROWS_WITH_AS(graph_from_text("0\t1\n", "0\t1\n", users),
                         doctest::Contains("(0, 1)"), ConflictError);
  }
  SUBCASE("unknown users and self-edges are dropped and counted") {
    GraphIngestStats stats;
    const auto g = graph_from_text("0\t1\n0\t42\n2\t2\n", "1\t99\n", users, &stats);
    CHECK(stats.dropped_unknown == 2);
    CHECK(stats.dropped_self == 1);
    CHECK(g.trust_edges() == 1);
    CHECK(g.distrust_edges() == 0);
  }
  SUBCASE("edge-list constructor enforces the invariants") {
    const std::vector<std::pair<UserId, UserId>> self{{1, 1}};
    const std::vector<std::pair<UserId, UserId>> none;
    CHECK_THROWS_AS(SignedSocialGraph::from_edges(3, self, none), ContractError);
    const std::vector<std::pair<UserId, UserId>> out_of_range{{0, 3}};
    CHECK_THROWS_AS(SignedSocialGraph::from_edges(3, out_of_range, none), ContractError);
  }
}

TEST_CASE("split sizes and determinism") {
  const auto ds = testutil::random_implicit(10, 20, 1, 3);
  const auto s = split_ratings(ds, 0.7, 11);
  CHECK(s.train.size() == 7);
  CHECK(s.test.size() == 3);
  CHECK(split_ratings(ds, 0.7, 11) == s);
  CHECK_THROWS_AS(split_ratings(ds, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(split_ratings(ds, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(split_ratings(ds, 1.5, 1), ValidationError);
}

TEST_CASE("split of 1000 interactions at 0.5 stays in the +-0.5% band") {
  const auto ds = testutil::random_implicit(100, 50, 10, 5);
  REQUIRE(ds.size() == 1000);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = split_ratings(ds, 0.5, seed);
    CHECK(s.train.size() >= 495);
    CHECK(s.train.size() <= 505);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (const auto t : s.test) CHECK(all.insert(t).second);
    CHECK(all.size() == ds.size());
  }
}

TEST_CASE("stratified split keeps every user's ratio") {
  const auto ds = testutil::random_implicit(30, 40, 10, 8);
  const auto s = split_ratings(ds, 0.7, 4, true);
  CHECK(s.stratified);
  std::vector<int> train_per_user(30, 0);
  for (const auto idx : s.train) ++train_per_user[ds.interactions()[idx].user];
  for (const int c : train_per_user) CHECK(c == 7);
}

TEST_CASE("observed sets partition the catalog") {
  const std::vector<Interaction> records{{0, 1, 1}, {0, 2, 1}, {1, 0, 1}, {1, 1, 1},
                                         {1, 2, 1}, {1, 3, 1}};
  const Dataset ds(3, 4, records, FeedbackKind::Implicit);
  const auto obs = observed_sets(testutil::all_train(ds), ds);
  CHECK(std::vector<ItemId>(obs.observed(0).begin(), obs.observed(0).end()) ==
        std::vector<ItemId>{1, 2});
  CHECK(obs.unobserved(0) == std::vector<ItemId>{0, 3});
  CHECK(obs.observed(2).empty());
  CHECK(obs.unobserved(2).size() == 4);
  CHECK(obs.unobserved(1).empty());
  CHECK(obs.item_count(1) == 2);
  for (UserId u = 0; u < 3; ++u) {
    std::set<ItemId> all(obs.observed(u).begin(), obs.observed(u).end());
    for (const auto i : obs.unobserved(u)) CHECK(all.insert(i).second);
    CHECK(all.size() == 4);
  }
}

TEST_CASE("observed sets only see the train split") {
  const auto ds = testutil::random_implicit(20, 30, 6, 2);
  const auto s = split_ratings(ds, 0.5, 9);
  const auto obs = observed_sets(s, ds);
  for (const auto idx : s.test) {
    const auto& r = ds.interactions()[idx];
    CHECK_FALSE(obs.contains(r.user, r.item));
  }
  for (const auto idx : s.train) {
    const auto& r = ds.interactions()[idx];
    CHECK(obs.contains(r.user, r.item));
  }
}

TEST_CASE("caches round-trip") {
  testutil::TempDir dir;
  testutil::write_file(dir / "r.tsv", "# comment\nalice\tbook\t4\nbob\tbook\t2\nalice\tpen\t5\n");
  const auto ds = ingest_interactions(dir / "r.tsv", FeedbackKind::Explicit);
  write_dataset(ds, dir / "ds.txt");
  CHECK(read_dataset(dir / "ds.txt") == ds);

  write_interactions_tsv(ds, dir / "again.tsv");
  CHECK(ingest_interactions(dir / "again.tsv", FeedbackKind::Explicit) == ds);

  const auto g = graph_from_text("alice\tbob\n", "bob\talice\n", ds.user_ids());
  write_graph(g, dir / "g.txt");
  CHECK(read_graph(dir / "g.txt") == g);

  const auto s = split_ratings(ds, 0.5, 3);
  write_split(s, dir / "s.txt");
  CHECK(read_split(dir / "s.txt") == s);
}
