#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "signedrec/data.hpp"

namespace signedrec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MFMode { NonNegative, Weighted };

std::string to_string(MFMode mode);

// User factors U (n x d) and item factors V (m x d), one entity per row.
struct EmbeddingTable {
  RowMatrix users;
  RowMatrix items;

  int dim() const noexcept { return static_cast<int>(users.cols()); }
  bool all_finite() const { return users.allFinite() && items.allFinite(); }
};

struct MFConfig {
  int dim = 256;
  int max_iters = 200;
  // Stop once |J_t - J_{t-1}| <= tolerance * max(1, J_t).
  double tolerance = 1e-7;
  // Confidence slope: c_ui = 1 + alpha * count (weighted mode only).
  double alpha = 40.0;
  double regularization = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct MFResult {
  EmbeddingTable table;
  bool converged = false;
  // Objective after initialization, then after every iteration.
  std::vector<double> objective;
};

// Non-negative factorization of the observed entries by multiplicative
// updates minimizing sum_obs (x - u.v)^2 + reg (|U|^2 + |V|^2).
MFResult factorize_explicit(std::span<const Interaction> records, std::size_t n_users,
                            std::size_t n_items, const MFConfig& cfg);
MFResult factorize_explicit(const Dataset& ds, const MFConfig& cfg);

// Weighted matrix factorization by alternating least squares over the full
// matrix with preference p = [count > 0] and confidence c = 1 + alpha*count.
MFResult factorize_implicit(std::span<const Interaction> records, std::size_t n_users,
                            std::size_t n_items, const MFConfig& cfg);
MFResult factorize_implicit(const Dataset& ds, const MFConfig& cfg);

double explicit_objective(std::span<const Interaction> records, const EmbeddingTable& t,
                          double regularization);
double implicit_objective(std::span<const Interaction> records, const EmbeddingTable& t,
                          double alpha, double regularization);

// Max-normalized train interaction counts, each in [0, 1].
struct InteractionFrequency {
  std::vector<double> user;
  std::vector<double> item;
};

InteractionFrequency interaction_frequency(const ObservedSets& observed);
InteractionFrequency interaction_frequency(const Dataset& ds, const Split& split);

// Replaces rows of entities without train interactions by the mean of the
// trained rows, so never-seen users/items still get a usable embedding.
void fill_untrained_rows(EmbeddingTable& table, const ObservedSets& observed);

struct EmbeddingHeader {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  int dim = 0;
  MFMode mode = MFMode::NonNegative;
  std::uint64_t seed = 0;
};

void write_embeddings(const EmbeddingTable& t, MFMode mode, std::uint64_t seed,
                      const std::filesystem::path& path);
EmbeddingTable read_embeddings(const std::filesystem::path& path, EmbeddingHeader* header = nullptr);

}  // namespace signedrec
