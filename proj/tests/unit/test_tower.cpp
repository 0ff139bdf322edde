#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gradcheck.hpp"
#include "helpers.hpp"

using namespace signedrec;

namespace {

TowerShape shape_of(int d, int h, std::size_t n_users, std::size_t n_items) {
  TowerShape s;
  s.dim = d;
  s.hidden_layers = h;
  s.n_users = n_users;
  s.n_items = n_items;
  return s;
}

PartialRelation rel(UserId u, ItemId i, ItemId j) {
  PartialRelation r;
  r.user = u;
  r.preferred = i;
  r.other = j;
  return r;
}

// d=2, h=1 network with H_i = (2) and H_u = (3) for item 0 / user 0.
TowerNetwork crafted_net() {
  TowerNetwork net(shape_of(2, 1, 1, 2));
  net.weight(Branch::ItemPositive, 1) << 1.0, 0.0;
  net.weight(Branch::User, 1) << 0.0, 1.0;
  net.item_embedding() << 2.0, 0.0, 1.0, 0.0;
  net.user_embedding() << 0.0, 3.0;
  return net;
}

}  // namespace

TEST_CASE("tower widths halve from the embedding layer") {
  const TowerShape s = shape_of(256, 4, 1, 1);
  CHECK(s.width(0) == 256);
  CHECK(s.width(1) == 128);
  CHECK(s.width(2) == 64);
  CHECK(s.width(3) == 32);
  CHECK(s.width(4) == 16);
  const TowerNetwork net(s);
  for (int q = 1; q <= 4; ++q) {
    CHECK(net.weight(Branch::User, q).rows() == s.width(q));
    CHECK(net.weight(Branch::User, q).cols() == s.width(q - 1));
    CHECK(net.layer_bias(Branch::ItemPositive, q).rows() == s.width(q));
  }
}

TEST_CASE("tower shape rejects 2^h > d") {
  CHECK_THROWS_AS(validate_tower_shape(4, 3), ContractError);
  CHECK_THROWS_AS(validate_tower_shape(8, 0), ContractError);
  CHECK_THROWS_AS(validate_tower_shape(6, 2), ContractError);
  CHECK_NOTHROW(validate_tower_shape(2, 1));
  CHECK_NOTHROW(validate_tower_shape(256, 4));
  CHECK_THROWS_AS(TowerNetwork(shape_of(2, 2, 1, 1)), ContractError);
}

TEST_CASE("forward pass examples") {
  SUBCASE("zero network gives zero activations") {
    const TowerNetwork net(shape_of(8, 2, 1, 1));
    const auto t = net.forward_branch(Branch::User, Eigen::VectorXd::Random(8));
    REQUIRE(t.activation.size() == 3);
    CHECK(t.activation[1].isZero(0.0));
    CHECK(t.activation[2].isZero(0.0));
    CHECK(t.activation[2].size() == 2);
  }
  SUBCASE("single-row identity passes a positive coordinate") {
    TowerNetwork net(shape_of(2, 1, 1, 1));
    net.weight(Branch::User, 1) << 1.0, 0.0;
    const auto t = net.forward_branch(Branch::User, Eigen::Vector2d(3.0, -4.0));
    CHECK(t.activation[1](0) == 3.0);
  }
  SUBCASE("activations are never negative") {
    std::mt19937_64 rng(3);
    const auto net = testutil::random_tower(rng, true, false, 8, 3);
    const auto t = net.forward_branch(Branch::ItemPositive, Eigen::VectorXd::Constant(8, -1.0));
    for (const auto& a : t.activation) {
      if (&a == &t.activation.front()) continue;
      CHECK(a.minCoeff() >= 0.0);
    }
  }
  SUBCASE("width mismatch is a contract error") {
    const TowerNetwork net(shape_of(4, 1, 1, 1));
    CHECK_THROWS_AS(net.forward_branch(Branch::User, Eigen::VectorXd::Zero(3)), ContractError);
  }
}

TEST_CASE("score examples") {
  SUBCASE("zero network scores one half") {
    const TowerNetwork net(shape_of(4, 1, 2, 3));
    const auto t = net.scoring_table();
    CHECK(sigmoid(t.logit(1, 2)) == 0.5);
    CHECK(predict_probability(t, 1, 0, 2) == 0.5);
  }
  SUBCASE("large item bias saturates") {
    TowerNetwork net(shape_of(4, 1, 1, 1));
    net.item_bias()(0) = 30.0;
    CHECK(sigmoid(net.scoring_table().logit(0, 0)) > 0.999999);
  }
  SUBCASE("crafted weights give s = 6") {
    const auto net = crafted_net();
    const auto t = net.scoring_table();
    CHECK(t.logit(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(sigmoid(t.logit(0, 0)) == doctest::Approx(0.9975273768).epsilon(1e-9));
    const std::vector<PartialRelation> batch{rel(0, 0, 1)};
    const auto [pos, neg] = net.score_relations(batch);
    CHECK(pos(0) == doctest::Approx(6.0));
    CHECK(neg(0) == doctest::Approx(3.0));
  }
}

TEST_CASE("predict probability examples") {
  CHECK(relation_probability(1.0, 0.0) == 1.0);
  CHECK(relation_probability(0.3, 0.3) == 0.5);
  CHECK(relation_probability(0.0, 1.0) == 0.0);
}

TEST_CASE("ranking by score") {
  TowerNetwork net(shape_of(4, 1, 1, 4));
  SUBCASE("higher bias first") {
    net.item_bias()(1) = -5.0;
    net.item_bias()(2) = 5.0;
    const std::vector<ItemId> cand{1, 2};
    const auto ranked = score_all_items(net.scoring_table(), 0, cand);
    CHECK(ranked[0].item == 2);
    CHECK(ranked[1].item == 1);
  }
  SUBCASE("ties go to the lower id") {
    const std::vector<ItemId> cand{3, 0, 2};
    const auto ranked = score_all_items(net.scoring_table(), 0, cand);
    CHECK(ranked[0].item == 0);
    CHECK(ranked[1].item == 2);
    CHECK(ranked[2].item == 3);
  }
  SUBCASE("order by probability equals order by logit") {
    std::mt19937_64 rng(11);
    const auto rnd = testutil::random_tower(rng, true, false, 8, 2, 2, 30);
    const auto t = rnd.scoring_table();
    std::vector<ItemId> cand(30);
    for (ItemId i = 0; i < 30; ++i) cand[i] = i;
    const auto ranked = score_all_items(t, 1, cand);
    for (std::size_t k = 1; k < ranked.size(); ++k) {
      CHECK(t.logit(1, ranked[k - 1].item) >= t.logit(1, ranked[k].item));
      CHECK(ranked[k - 1].probability >= ranked[k].probability);
      CHECK(ranked[k].probability >= 0.0);
      CHECK(ranked[k].probability <= 1.0);
    }
  }
}

TEST_CASE("loss examples") {
  SUBCASE("equal logits give |batch| ln 2") {
    const TowerNetwork net(shape_of(4, 2, 3, 5));
    std::mt19937_64 rng(1);
    const auto batch = testutil::random_batch(7, 3, 5, rng);
    CHECK(std::abs(net.loss(batch, 0.0) - 7.0 * std::numbers::ln2) < 1e-10);
  }
  SUBCASE("saturated margin gives zero loss") {
    TowerNetwork net(shape_of(4, 1, 1, 2));
    net.item_bias()(0) = 30.0;
    const std::vector<PartialRelation> batch{rel(0, 0, 1)};
    CHECK(net.loss(batch, 0.0) < 1e-12);
  }
  SUBCASE("regularizer covers exactly the trainable blocks") {
    std::mt19937_64 rng(5);
    const auto net = testutil::random_tower(rng);
    const auto batch = testutil::random_batch(3, 3, 5, rng);
    double expected = 0.0;
    for (const auto& b : net.parameters().blocks()) {
      if (b.name.find("embedding") != std::string::npos) continue;
      expected += net.parameters().matrix(net.parameters().find(b.name)).squaredNorm();
    }
    const double lambda = 0.37;
    CHECK(std::abs(net.loss(batch, lambda) - net.loss(batch, 0.0) - lambda * expected) < 1e-10);
  }
  SUBCASE("empty batch is a contract error") {
    const TowerNetwork net(shape_of(4, 1, 1, 2));
    std::vector<double> grad(net.parameters().size());
    CHECK_THROWS_AS(net.loss_and_gradients({}, 0.0, grad), ContractError);
  }
}

TEST_CASE("tower gradients match finite differences") {
  std::mt19937_64 rng(42);
  SUBCASE("shared item branches") {
    for (int trial = 0; trial < 20; ++trial) {
      auto net = testutil::random_tower(rng);
      const auto batch = testutil::random_batch(3, 3, 5, rng);
      const auto r = testutil::check_gradients(net, batch, 0.01);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst_block);
      CHECK(r.frozen_zero);
    }
  }
  SUBCASE("separate item branches") {
    for (int trial = 0; trial < 10; ++trial) {
      auto net = testutil::random_tower(rng, false);
      CHECK(net.parameters().find("item_neg.W1") < net.parameters().blocks().size());
      const auto batch = testutil::random_batch(3, 3, 5, rng);
      const auto r = testutil::check_gradients(net, batch, 0.01);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst_block);
    }
  }
  SUBCASE("trainable embeddings") {
    for (int trial = 0; trial < 10; ++trial) {
      auto net = testutil::random_tower(rng, true, true);
      const auto batch = testutil::random_batch(3, 3, 5, rng);
      const auto r = testutil::check_gradients(net, batch, 0.01);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst_block);
    }
  }
}

TEST_CASE("linear gradients match finite differences") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = testutil::random_linear(rng);
    const auto batch = testutil::random_batch(3, 3, 5, rng);
    const auto r = testutil::check_gradients(s, batch, 0.01);
    CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst_block);
  }
}

TEST_CASE("dead ReLU layer blocks upstream gradients") {
  std::mt19937_64 rng(8);
  auto net = testutil::random_tower(rng, true, false, 8, 2);
  net.layer_bias(Branch::User, 1).setConstant(-1e3);
  const auto batch = testutil::random_batch(4, 3, 5, rng);
  std::vector<double> grad(net.parameters().size());
  net.loss_and_gradients(batch, 0.0, grad);
  const auto& p = net.parameters();
  CHECK(p.map(std::span<const double>(grad), p.find("user.W1")).isZero(0.0));
  CHECK(p.map(std::span<const double>(grad), p.find("user.c1")).isZero(0.0));
  const auto t = net.forward_branch(Branch::User, net.user_embedding().row(0).transpose());
  CHECK(t.activation[1].isZero(0.0));
}

TEST_CASE("non-finite parameters raise a numeric error naming the block") {
  std::mt19937_64 rng(9);
  auto net = testutil::random_tower(rng);
  net.weight(Branch::User, 2)(0, 0) = std::nan("");
  const auto batch = testutil::random_batch(2, 3, 5, rng);
  std::vector<double> grad(net.parameters().size());
  CHECK_THROWS_WITH_AS(net.loss_and_gradients(batch, 0.0, grad), doctest::Contains("user.W2"),
                       NumericError);
}

TEST_CASE("checkpoints round-trip exactly") {
  testutil::TempDir dir;
  std::mt19937_64 rng(10);
  SUBCASE("tower, shared") {
    const auto net = testutil::random_tower(rng);
    write_checkpoint(net, {99, "finetune"}, dir / "t.ckpt");
    CheckpointMeta meta;
    const auto back = read_checkpoint(dir / "t.ckpt", &meta);
    CHECK(back->kind() == ScorerKind::Tower);
    CHECK(back->parameters() == net.parameters());
    CHECK(meta.seed == 99);
    CHECK(meta.stage == "finetune");
    CHECK(dynamic_cast<const TowerNetwork&>(*back).shape().shared_item_branches);
  }
  SUBCASE("tower, separate") {
    const auto net = testutil::random_tower(rng, false, true, 8, 3);
    write_checkpoint(net, {1, "pretrain"}, dir / "t.ckpt");
    const auto back = read_checkpoint(dir / "t.ckpt");
    CHECK(back->parameters() == net.parameters());
    CHECK(back->hidden_layers() == 3);
    CHECK_FALSE(dynamic_cast<const TowerNetwork&>(*back).shape().shared_item_branches);
  }
  SUBCASE("linear") {
    const auto s = testutil::random_linear(rng);
    write_checkpoint(s, {2, "train"}, dir / "l.ckpt");
    const auto back = read_checkpoint(dir / "l.ckpt");
    CHECK(back->kind() == ScorerKind::Linear);
    CHECK(back->parameters() == s.parameters());
  }
  SUBCASE("corrupt file") {
    testutil::write_file(dir / "bad.ckpt", "not a checkpoint\n");
    CHECK_THROWS(read_checkpoint(dir / "bad.ckpt"));
  }
}

TEST_CASE("He initialization is seeded and biases start at frequencies") {
  std::mt19937_64 rng(12);
  const auto emb = testutil::random_embeddings(3, 5, 8, rng);
  const auto freq = testutil::random_frequency(3, 5, rng);
  const auto s = shape_of(8, 2, 3, 5);
  const auto a = TowerNetwork::initialized(s, emb, freq, 7);
  const auto b = TowerNetwork::initialized(s, emb, freq, 7);
  const auto c = TowerNetwork::initialized(s, emb, freq, 8);
  CHECK(a.parameters() == b.parameters());
  CHECK_FALSE(a.parameters() == c.parameters());
  CHECK(a.item_bias()(3) == freq.item[3]);
  CHECK(a.user_bias()(1) == freq.user[1]);
  CHECK(a.layer_bias(Branch::User, 1).isZero(0.0));
  CHECK(a.user_embedding() == emb.users);
}
