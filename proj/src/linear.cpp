#include "signedrec/linear.hpp"

#include <cmath>

namespace signedrec {

LinearScorer::LinearScorer(std::size_t n_users, std::size_t n_items, int dim)
    : Scorer(n_users, n_items), dim_(dim) {
  if (dim < 1) throw ContractError("linear scorer dimension must be >= 1");
  user_emb_ = params_.add("user_embedding", Eigen::Index(n_users), dim, true);
  item_emb_ = params_.add("item_embedding", Eigen::Index(n_items), dim, true);
  user_bias_ = params_.add("user_bias", Eigen::Index(n_users), 1, true);
  item_bias_ = params_.add("item_bias", Eigen::Index(n_items), 1, true);
}

LinearScorer LinearScorer::initialized(const EmbeddingTable& embeddings,
                                       const InteractionFrequency& frequency) {
  LinearScorer s(std::size_t(embeddings.users.rows()), std::size_t(embeddings.items.rows()),
                 embeddings.dim());
  if (frequency.user.size() != s.n_users() || frequency.item.size() != s.n_items()) {
    throw ContractError("interaction frequencies do not match embedding table");
  }
  s.user_embedding() = embeddings.users;
  s.item_embedding() = embeddings.items;
  s.user_bias() = Eigen::Map<const Eigen::VectorXd>(frequency.user.data(),
                                                    Eigen::Index(frequency.user.size()));
  s.item_bias() = Eigen::Map<const Eigen::VectorXd>(frequency.item.data(),
                                                    Eigen::Index(frequency.item.size()));
  return s;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LinearScorer::score_relations(
    std::span<const PartialRelation> batch) const {
  const auto n = Eigen::Index(batch.size());
  Eigen::VectorXd si(n);
  Eigen::VectorXd sj(n);
  const auto u_emb = user_embedding();
  const auto i_emb = item_embedding();
  const auto bu = user_bias();
  const auto bi = item_bias();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = batch[k];
    si[k] = u_emb.row(r.user).dot(i_emb.row(r.preferred)) + bu(r.user, 0) + bi(r.preferred, 0);
    sj[k] = u_emb.row(r.user).dot(i_emb.row(r.other)) + bu(r.user, 0) + bi(r.other, 0);
  }
  return {si, sj};
}

double LinearScorer::loss_and_gradients(std::span<const PartialRelation> batch, double lambda,
                                        std::span<double> grad) const {
  if (batch.empty()) throw ContractError("empty batch");
  if (grad.size() != params_.size()) throw ContractError("gradient buffer has wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto [si, sj] = score_relations(batch);
  const auto u_emb = user_embedding();
  const auto i_emb = item_embedding();
  auto g_u = params_.map(grad, user_emb_);
  auto g_i = params_.map(grad, item_emb_);
  auto g_bi = params_.map(grad, item_bias_);
  double loss = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& r = batch[k];
    const double diff = si[Eigen::Index(k)] - sj[Eigen::Index(k)];
    loss += softplus_neg(diff);
    const double g = -sigmoid(-diff);
    g_u.row(r.user) += g * (i_emb.row(r.preferred) - i_emb.row(r.other));
    g_i.row(r.preferred) += g * u_emb.row(r.user);
    g_i.row(r.other) -= g * u_emb.row(r.user);
    g_bi(r.preferred, 0) += g;
    g_bi(r.other, 0) -= g;
    // b_u cancels in s_ui - s_uj; only the regularizer reaches it.
  }
  if (!std::isfinite(loss)) {
    for (const auto& b : params_.blocks()) {
      if (!params_.matrix(params_.find(b.name)).allFinite()) {
        throw NumericError("non-finite value in parameter block " + b.name);
      }
    }
    throw NumericError("non-finite ranking loss");
  }
  add_regularization(lambda, loss, grad);
  check_gradient(grad);
  return loss;
}

ScoringTable LinearScorer::scoring_table() const {
  ScoringTable t;
  t.user_repr = user_embedding();
  t.item_repr = item_embedding();
  t.user_bias = user_bias().col(0);
  t.item_bias = item_bias().col(0);
  return t;
}

}  // namespace signedrec
