#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signedrec/criteria.hpp"
#include "signedrec/mf.hpp"

namespace signedrec {

// All model parameters in one contiguous buffer, partitioned into named
// row-major blocks. Frozen blocks are stored (and checkpointed) but receive
// no gradient, no regularization and no optimizer updates.
class ParameterSet {
 public:
  struct Block {
    std::string name;
    std::size_t offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    bool trainable = true;

    std::size_t size() const noexcept { return std::size_t(rows * cols); }
    friend bool operator==(const Block&, const Block&) = default;
  };

  using Map = Eigen::Map<RowMatrix>;
  using ConstMap = Eigen::Map<const RowMatrix>;

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, bool trainable);

  Map matrix(std::size_t block) { return map(std::span<double>(values_), block); }
  ConstMap matrix(std::size_t block) const { return map(std::span<const double>(values_), block); }
  Map map(std::span<double> buffer, std::size_t block) const;
  ConstMap map(std::span<const double> buffer, std::size_t block) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  std::size_t find(std::string_view name) const;
  // Block whose storage contains flat index k.
  const Block& block_of(std::size_t k) const;

  double trainable_squared_norm() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<Block> blocks_;
  std::vector<double> values_;
};

// Everything needed to compute s_ui = user_repr[u] . item_repr[i] + b_u + b_i
// for arbitrary (u, i).
struct ScoringTable {
  RowMatrix user_repr;
  RowMatrix item_repr;
  Eigen::VectorXd user_bias;
  Eigen::VectorXd item_bias;

  double logit(UserId u, ItemId i) const {
    return user_repr.row(u).dot(item_repr.row(i)) + user_bias[u] + item_bias[i];
  }
};

enum class ScorerKind { Tower, Linear };

std::string to_string(ScorerKind kind);

// Pairwise scorer trained with the ranking loss
//   L = sum softplus(-(s_ui - s_uj)) + lambda * |Theta|^2
// where Theta is the set of trainable blocks.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual ScorerKind kind() const = 0;
  virtual std::unique_ptr<Scorer> clone() const = 0;
  virtual int dim() const = 0;
  virtual int hidden_layers() const { return 0; }

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }

  // Logits of the positive and negative item of each relation.
  virtual std::pair<Eigen::VectorXd, Eigen::VectorXd> score_relations(
      std::span<const PartialRelation> batch) const = 0;

  // Returns the loss and overwrites `grad` (size parameters().size()) with
  // its gradient. Throws NumericError naming the offending parameter block
  // when something non-finite appears.
  virtual double loss_and_gradients(std::span<const PartialRelation> batch, double lambda,
                                    std::span<double> grad) const = 0;

  double loss(std::span<const PartialRelation> batch, double lambda) const;

  // Inference-time representation (the item-positive branch scores items).
  virtual ScoringTable scoring_table() const = 0;

 protected:
  Scorer(std::size_t n_users, std::size_t n_items) : n_users_(n_users), n_items_(n_items) {}
  Scorer(const Scorer&) = default;
  Scorer& operator=(const Scorer&) = default;

  void add_regularization(double lambda, double& loss, std::span<double> grad) const;
  void check_gradient(std::span<const double> grad) const;

  std::size_t n_users_;
  std::size_t n_items_;
  ParameterSet params_;
};

// -ln sigma(z), stable for large |z|.
double softplus_neg(double z);
double sigmoid(double z);

// (x_ui - x_uj) / 2 + 0.5 with x = sigma(logit).
double relation_probability(double x_ui, double x_uj);
double predict_probability(const ScoringTable& table, UserId u, ItemId i, ItemId j);

struct RankedItem {
  ItemId item = 0;
  double probability = 0.0;  // x_ui
};

// Candidates ordered by x_ui descending, ties by ascending item id.
std::vector<RankedItem> score_all_items(const ScoringTable& table, UserId u,
                                        std::span<const ItemId> candidates);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string stage;  // "pretrain", "finetune" or "train"
};

void write_checkpoint(const Scorer& scorer, const CheckpointMeta& meta,
                      const std::filesystem::path& path);
std::unique_ptr<Scorer> read_checkpoint(const std::filesystem::path& path,
                                        CheckpointMeta* meta = nullptr);

}  // namespace signedrec
