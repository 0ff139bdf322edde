#include "signedrec/tower.hpp"

#include <cmath>

namespace signedrec {

namespace {

constexpr std::array<const char*, 3> kBranchNames{"item_pos", "user", "item_neg"};

struct BranchPass {
  std::vector<Eigen::MatrixXd> pre;  // q = 1..h
  std::vector<Eigen::MatrixXd> act;  // q = 0..h
};

}  // namespace

void validate_tower_shape(int dim, int hidden_layers) {
  if (hidden_layers < 1) throw ContractError("tower needs at least one hidden layer");
  if (dim < 1) throw ContractError("tower dimension must be >= 1");
  if (hidden_layers >= 31 || (std::int64_t{1} << hidden_layers) > dim) {
    throw ContractError("tower constraint 2^h <= d violated (d=" + std::to_string(dim) +
                        ", h=" + std::to_string(hidden_layers) + ")");
  }
  if (dim % (1 << hidden_layers) != 0) {
    throw ContractError("d must be divisible by 2^h so every layer halves exactly");
  }
}

TowerNetwork::TowerNetwork(const TowerShape& shape, bool trainable_embeddings)
    : Scorer(shape.n_users, shape.n_items), shape_(shape) {
  validate_tower_shape(shape.dim, shape.hidden_layers);
  for (int b = 0; b < 3; ++b) {
    if (b == int(Branch::ItemNegative) && shape.shared_item_branches) {
      weight_blocks_[b] = weight_blocks_[int(Branch::ItemPositive)];
      bias_blocks_[b] = bias_blocks_[int(Branch::ItemPositive)];
      continue;
    }
    for (int q = 1; q <= shape.hidden_layers; ++q) {
      const std::string prefix = std::string(kBranchNames[b]) + '.';
      weight_blocks_[b].push_back(params_.add(prefix + "W" + std::to_string(q), shape.width(q),
                                              shape.width(q - 1), true));
      bias_blocks_[b].push_back(
          params_.add(prefix + "c" + std::to_string(q), shape.width(q), 1, true));
    }
  }
  user_bias_ = params_.add("user_bias", Eigen::Index(shape.n_users), 1, true);
  item_bias_ = params_.add("item_bias", Eigen::Index(shape.n_items), 1, true);
  user_emb_ = params_.add("user_embedding", Eigen::Index(shape.n_users), shape.dim,
                          trainable_embeddings);
  item_emb_ = params_.add("item_embedding", Eigen::Index(shape.n_items), shape.dim,
                          trainable_embeddings);
}

TowerNetwork TowerNetwork::initialized(const TowerShape& shape, const EmbeddingTable& embeddings,
                                       const InteractionFrequency& frequency, std::uint64_t seed,
                                       bool trainable_embeddings) {
  if (embeddings.dim() != shape.dim ||
      std::size_t(embeddings.users.rows()) != shape.n_users ||
      std::size_t(embeddings.items.rows()) != shape.n_items) {
    throw ContractError("embedding table does not match tower shape");
  }
  if (frequency.user.size() != shape.n_users || frequency.item.size() != shape.n_items) {
    throw ContractError("interaction frequencies do not match tower shape");
  }
  TowerNetwork net(shape, trainable_embeddings);
  auto rng = make_rng(seed, "init");
  for (int b = 0; b < 3; ++b) {
    if (b == int(Branch::ItemNegative) && shape.shared_item_branches) continue;
    for (int q = 1; q <= shape.hidden_layers; ++q) {
      std::normal_distribution<double> he(0.0, std::sqrt(2.0 / shape.width(q - 1)));
      auto w = net.weight(Branch(b), q);
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = he(rng);
      }
    }
  }
  net.user_bias() = Eigen::Map<const Eigen::VectorXd>(frequency.user.data(),
                                                      Eigen::Index(frequency.user.size()));
  net.item_bias() = Eigen::Map<const Eigen::VectorXd>(frequency.item.data(),
                                                      Eigen::Index(frequency.item.size()));
  net.user_embedding() = embeddings.users;
  net.item_embedding() = embeddings.items;
  return net;
}

std::size_t TowerNetwork::weight_block(Branch b, int q) const {
  return weight_blocks_.at(int(b)).at(q - 1);
}

std::size_t TowerNetwork::bias_block(Branch b, int q) const {
  return bias_blocks_.at(int(b)).at(q - 1);
}

void TowerNetwork::forward_batch(Branch b, Eigen::MatrixXd input, std::vector<Eigen::MatrixXd>& pre,
                                 std::vector<Eigen::MatrixXd>& act) const {
  const int h = shape_.hidden_layers;
  pre.resize(h);
  act.resize(h + 1);
  act[0] = std::move(input);
  for (int q = 1; q <= h; ++q) {
    pre[q - 1] = weight(b, q) * act[q - 1];
    pre[q - 1].colwise() += layer_bias(b, q).col(0);
    act[q] = pre[q - 1].cwiseMax(0.0);
  }
}

BranchTrace TowerNetwork::forward_branch(Branch b, const Eigen::VectorXd& input) const {
  if (input.size() != shape_.dim) {
    throw ContractError("branch input has width " + std::to_string(input.size()) +
                        ", expected " + std::to_string(shape_.dim));
  }
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> act;
  forward_batch(b, input, pre, act);
  BranchTrace trace;
  for (auto& z : pre) trace.pre_activation.emplace_back(z.col(0));
  for (auto& a : act) trace.activation.emplace_back(a.col(0));
  return trace;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> TowerNetwork::score_relations(
    std::span<const PartialRelation> batch) const {
  const auto n = Eigen::Index(batch.size());
  Eigen::MatrixXd xi(shape_.dim, n);
  Eigen::MatrixXd xu(shape_.dim, n);
  Eigen::MatrixXd xj(shape_.dim, n);
  const auto items = item_embedding();
  const auto users = user_embedding();
  for (Eigen::Index k = 0; k < n; ++k) {
    xi.col(k) = items.row(batch[k].preferred).transpose();
    xu.col(k) = users.row(batch[k].user).transpose();
    xj.col(k) = items.row(batch[k].other).transpose();
  }
  BranchPass pi;
  BranchPass pu;
  BranchPass pj;
  forward_batch(Branch::ItemPositive, std::move(xi), pi.pre, pi.act);
  forward_batch(Branch::User, std::move(xu), pu.pre, pu.act);
  forward_batch(Branch::ItemNegative, std::move(xj), pj.pre, pj.act);
  const int h = shape_.hidden_layers;
  Eigen::VectorXd si = (pi.act[h].array() * pu.act[h].array()).colwise().sum().transpose();
  Eigen::VectorXd sj = (pj.act[h].array() * pu.act[h].array()).colwise().sum().transpose();
  const auto bu = user_bias();
  const auto bi = item_bias();
  for (Eigen::Index k = 0; k < n; ++k) {
    si[k] += bi(batch[k].preferred, 0) + bu(batch[k].user, 0);
    sj[k] += bi(batch[k].other, 0) + bu(batch[k].user, 0);
  }
  return {si, sj};
}

double TowerNetwork::loss_and_gradients(std::span<const PartialRelation> batch, double lambda,
                                        std::span<double> grad) const {
  if (batch.empty()) throw ContractError("empty batch");
  if (grad.size() != params_.size()) throw ContractError("gradient buffer has wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);

  const auto n = Eigen::Index(batch.size());
  const int h = shape_.hidden_layers;
  const auto items = item_embedding();
  const auto users = user_embedding();
  Eigen::MatrixXd xi(shape_.dim, n);
  Eigen::MatrixXd xu(shape_.dim, n);
  Eigen::MatrixXd xj(shape_.dim, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    xi.col(k) = items.row(batch[k].preferred).transpose();
    xu.col(k) = users.row(batch[k].user).transpose();
    xj.col(k) = items.row(batch[k].other).transpose();
  }
  std::array<BranchPass, 3> pass;
  forward_batch(Branch::ItemPositive, std::move(xi), pass[0].pre, pass[0].act);
  forward_batch(Branch::User, std::move(xu), pass[1].pre, pass[1].act);
  forward_batch(Branch::ItemNegative, std::move(xj), pass[2].pre, pass[2].act);
  const auto& top_i = pass[0].act[h];
  const auto& top_u = pass[1].act[h];
  const auto& top_j = pass[2].act[h];

  const auto bu = user_bias();
  const auto bi = item_bias();
  auto g_bi = params_.map(grad, item_bias_);

  Eigen::VectorXd ds_i(n);
  Eigen::VectorXd ds_j(n);
  double loss = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& rel = batch[k];
    const double s_i = top_i.col(k).dot(top_u.col(k)) + bi(rel.preferred, 0) + bu(rel.user, 0);
    const double s_j = top_j.col(k).dot(top_u.col(k)) + bi(rel.other, 0) + bu(rel.user, 0);
    const double diff = s_i - s_j;
    loss += softplus_neg(diff);
    // d/d diff of -ln sigma(diff)
    const double g = -sigmoid(-diff);
    ds_i[k] = g;
    ds_j[k] = -g;
    g_bi(rel.preferred, 0) += ds_i[k];
    g_bi(rel.other, 0) += ds_j[k];
    // b_u cancels in s_ui - s_uj; only the regularizer reaches it.
  }
  if (!std::isfinite(loss)) {
    for (const auto& b : params_.blocks()) {
      const auto block = params_.matrix(params_.find(b.name));
      if (!block.allFinite()) throw NumericError("non-finite value in parameter block " + b.name);
    }
    throw NumericError("non-finite ranking loss");
  }

  std::array<Eigen::MatrixXd, 3> d_top{top_u * ds_i.asDiagonal(),
                                       top_i * ds_i.asDiagonal() + top_j * ds_j.asDiagonal(),
                                       top_u * ds_j.asDiagonal()};
  const bool embeddings_trainable = params_.blocks()[user_emb_].trainable;
  auto g_users = params_.map(grad, user_emb_);
  auto g_items = params_.map(grad, item_emb_);
  for (int b = 0; b < 3; ++b) {
    Eigen::MatrixXd dh = std::move(d_top[b]);
    for (int q = h; q >= 1; --q) {
      const Eigen::MatrixXd dz =
          (dh.array() * (pass[b].pre[q - 1].array() > 0.0).cast<double>()).matrix();
      params_.map(grad, weight_block(Branch(b), q)).noalias() += dz * pass[b].act[q - 1].transpose();
      params_.map(grad, bias_block(Branch(b), q)).col(0) += dz.rowwise().sum();
      if (q > 1 || embeddings_trainable) dh = weight(Branch(b), q).transpose() * dz;
    }
    if (embeddings_trainable) {
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto& rel = batch[k];
        if (b == 0) g_items.row(rel.preferred) += dh.col(k).transpose();
        if (b == 1) g_users.row(rel.user) += dh.col(k).transpose();
        if (b == 2) g_items.row(rel.other) += dh.col(k).transpose();
      }
    }
  }

  add_regularization(lambda, loss, grad);
  check_gradient(grad);
  return loss;
}

ScoringTable TowerNetwork::scoring_table() const {
  const int h = shape_.hidden_layers;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> act;
  ScoringTable table;
  forward_batch(Branch::ItemPositive, item_embedding().transpose(), pre, act);
  table.item_repr = act[h].transpose();
  forward_batch(Branch::User, user_embedding().transpose(), pre, act);
  table.user_repr = act[h].transpose();
  table.user_bias = user_bias().col(0);
  table.item_bias = item_bias().col(0);
  return table;
}

}  // namespace signedrec
