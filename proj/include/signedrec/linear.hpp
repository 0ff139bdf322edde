#pragma once

#include "signedrec/scorer.hpp"

namespace signedrec {

// Shallow scorer s_ui = U_u . V_i + b_u + b_i with trainable factors, used
// by the BPR and SPL variants.
class LinearScorer final : public Scorer {
 public:
  LinearScorer(std::size_t n_users, std::size_t n_items, int dim);

  static LinearScorer initialized(const EmbeddingTable& embeddings,
                                  const InteractionFrequency& frequency);

  ScorerKind kind() const override { return ScorerKind::Linear; }
  std::unique_ptr<Scorer> clone() const override { return std::make_unique<LinearScorer>(*this); }
  int dim() const override { return dim_; }

  ParameterSet::Map user_embedding() { return params_.matrix(user_emb_); }
  ParameterSet::ConstMap user_embedding() const { return params_.matrix(user_emb_); }
  ParameterSet::Map item_embedding() { return params_.matrix(item_emb_); }
  ParameterSet::ConstMap item_embedding() const { return params_.matrix(item_emb_); }
  ParameterSet::Map user_bias() { return params_.matrix(user_bias_); }
  ParameterSet::ConstMap user_bias() const { return params_.matrix(user_bias_); }
  ParameterSet::Map item_bias() { return params_.matrix(item_bias_); }
  ParameterSet::ConstMap item_bias() const { return params_.matrix(item_bias_); }

  std::pair<Eigen::VectorXd, Eigen::VectorXd> score_relations(
      std::span<const PartialRelation> batch) const override;
  double loss_and_gradients(std::span<const PartialRelation> batch, double lambda,
                            std::span<double> grad) const override;
  ScoringTable scoring_table() const override;

 private:
  int dim_;
  std::size_t user_emb_ = 0;
  std::size_t item_emb_ = 0;
  std::size_t user_bias_ = 0;
  std::size_t item_bias_ = 0;
};

}  // namespace signedrec
