#pragma once

#include <array>

#include "signedrec/scorer.hpp"

namespace signedrec {

enum class Branch { ItemPositive = 0, User = 1, ItemNegative = 2 };

struct TowerShape {
  int dim = 256;  // d, width of the embedding layer
  int hidden_layers = 4;  // h
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  // The positive- and negative-item branches share W and c. With separate
  // item branches the pairwise loss is minimized by inflating one branch and
  // shrinking the other regardless of the item, so ranking collapses.
  bool shared_item_branches = true;

  // Width of layer q (0 = embedding layer): d / 2^q.
  int width(int q) const { return dim >> q; }
};

// Throws ContractError unless h >= 1, d >= 1 and d is divisible by 2^h
// (which implies 2^h <= d).
void validate_tower_shape(int dim, int hidden_layers);

struct BranchTrace {
  std::vector<Eigen::VectorXd> pre_activation;  // Z^(q), q = 1..h
  std::vector<Eigen::VectorXd> activation;      // H^(q), q = 0..h
};

// Three ReLU towers over (V_i, U_u, V_j) whose widths halve at each layer.
// Layer q of each branch: H^(q) = ReLU(W^(q) H^(q-1) + c^(q)). The logit of
// (u, i) is H_i^(h) . H_u^(h) + b_i + b_u with scalar popularity biases.
class TowerNetwork final : public Scorer {
 public:
  // Zero-initialized network; embeddings are trainable blocks when
  // `trainable_embeddings` is set.
  TowerNetwork(const TowerShape& shape, bool trainable_embeddings = false);

  // He-initialized weights, zero layer biases, popularity biases set to the
  // given interaction frequencies, embeddings copied from the table.
  static TowerNetwork initialized(const TowerShape& shape, const EmbeddingTable& embeddings,
                                  const InteractionFrequency& frequency, std::uint64_t seed,
                                  bool trainable_embeddings = false);

  ScorerKind kind() const override { return ScorerKind::Tower; }
  std::unique_ptr<Scorer> clone() const override { return std::make_unique<TowerNetwork>(*this); }
  int dim() const override { return shape_.dim; }
  int hidden_layers() const override { return shape_.hidden_layers; }
  const TowerShape& shape() const noexcept { return shape_; }

  ParameterSet::Map weight(Branch b, int q) { return params_.matrix(weight_block(b, q)); }
  ParameterSet::ConstMap weight(Branch b, int q) const { return params_.matrix(weight_block(b, q)); }
  ParameterSet::Map layer_bias(Branch b, int q) { return params_.matrix(bias_block(b, q)); }
  ParameterSet::ConstMap layer_bias(Branch b, int q) const { return params_.matrix(bias_block(b, q)); }
  ParameterSet::Map user_bias() { return params_.matrix(user_bias_); }
  ParameterSet::ConstMap user_bias() const { return params_.matrix(user_bias_); }
  ParameterSet::Map item_bias() { return params_.matrix(item_bias_); }
  ParameterSet::ConstMap item_bias() const { return params_.matrix(item_bias_); }
  ParameterSet::Map user_embedding() { return params_.matrix(user_emb_); }
  ParameterSet::ConstMap user_embedding() const { return params_.matrix(user_emb_); }
  ParameterSet::Map item_embedding() { return params_.matrix(item_emb_); }
  ParameterSet::ConstMap item_embedding() const { return params_.matrix(item_emb_); }

  BranchTrace forward_branch(Branch b, const Eigen::VectorXd& input) const;

  std::pair<Eigen::VectorXd, Eigen::VectorXd> score_relations(
      std::span<const PartialRelation> batch) const override;
  double loss_and_gradients(std::span<const PartialRelation> batch, double lambda,
                            std::span<double> grad) const override;
  ScoringTable scoring_table() const override;

 private:
  std::size_t weight_block(Branch b, int q) const;
  std::size_t bias_block(Branch b, int q) const;
  // Column-batched forward pass of one branch; columns are entities.
  void forward_batch(Branch b, Eigen::MatrixXd input, std::vector<Eigen::MatrixXd>& pre,
                     std::vector<Eigen::MatrixXd>& act) const;

  TowerShape shape_;
  std::array<std::vector<std::size_t>, 3> weight_blocks_;
  std::array<std::vector<std::size_t>, 3> bias_blocks_;
  std::size_t user_bias_ = 0;
  std::size_t item_bias_ = 0;
  std::size_t user_emb_ = 0;
  std::size_t item_emb_ = 0;
};

}  // namespace signedrec
