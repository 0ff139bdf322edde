#include "signedrec/mf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>

#include <spdlog/spdlog.h>

#include "signedrec/parallel.hpp"

namespace signedrec {

namespace {

struct Entry {
  std::uint32_t other;
  double value;
};

// Adjacency of the observed entries by user and by item.
struct Incidence {
  std::vector<std::vector<Entry>> by_user;
  std::vector<std::vector<Entry>> by_item;
};

Incidence build_incidence(std::span<const Interaction> records, std::size_t n_users,
                          std::size_t n_items) {
  Incidence inc{std::vector<std::vector<Entry>>(n_users), std::vector<std::vector<Entry>>(n_items)};
  for (const auto& r : records) {
    if (r.user >= n_users || r.item >= n_items) throw ContractError("record id out of range");
    inc.by_user[r.user].push_back({r.item, r.value});
    inc.by_item[r.item].push_back({r.user, r.value});
  }
  return inc;
}

void check_config(const MFConfig& cfg) {
  if (cfg.dim < 1) throw ContractError("MF dimension must be >= 1");
  if (cfg.max_iters < 0) throw ContractError("max_iters must be >= 0");
  if (cfg.regularization < 0.0 || cfg.alpha < 0.0) {
    throw ContractError("regularization and alpha must be >= 0");
  }
}

bool converged(const std::vector<double>& obj, double tol) {
  if (obj.size() < 2) return false;
  const double cur = obj.back();
  const double prev = obj[obj.size() - 2];
  return std::abs(prev - cur) <= tol * std::max(1.0, std::abs(cur));
}

// One multiplicative half-step: rows of `target` are updated with `other`
// fixed. Entries whose denominator vanishes do not affect the objective and
// keep their value.
void multiplicative_update(RowMatrix& target, const RowMatrix& other,
                           const std::vector<std::vector<Entry>>& lists, double reg,
                           unsigned threads) {
  const auto d = target.cols();
  parallel_for(lists.size(), threads, [&](std::size_t r) {
    Eigen::VectorXd num = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd den = Eigen::VectorXd::Zero(d);
    const Eigen::RowVectorXd row = target.row(r);
    for (const auto& e : lists[r]) {
      const auto o = other.row(e.other);
      const double pred = row.dot(o);
      num += e.value * o.transpose();
      den += pred * o.transpose();
    }
    den += reg * row.transpose();
    for (Eigen::Index k = 0; k < d; ++k) {
      if (den[k] > 0.0) target(r, k) = row[k] * num[k] / den[k];
    }
  });
}

// Solves every row of `target` against fixed `other` under the weighted
// least-squares objective.
void als_half_sweep(RowMatrix& target, const RowMatrix& other,
                    const std::vector<std::vector<Entry>>& lists, double alpha, double reg,
                    unsigned threads, std::atomic<bool>& jitter_logged) {
  const auto d = target.cols();
  const Eigen::MatrixXd gram = other.transpose() * other;
  parallel_for(lists.size(), threads, [&](std::size_t r) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += reg;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (const auto& e : lists[r]) {
      const auto o = other.row(e.other).transpose();
      const double c = 1.0 + alpha * e.value;
      const double p = e.value > 0.0 ? 1.0 : 0.0;
      a.noalias() += (c - 1.0) * o * o.transpose();
      b += c * p * o;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    double jitter = 1e-10;
    while (llt.info() != Eigen::Success) {
      if (!jitter_logged.exchange(true)) {
        spdlog::warn("singular ALS normal equations; adding ridge jitter");
      }
      a.diagonal().array() += jitter;
      jitter *= 10.0;
      llt.compute(a);
    }
    target.row(r) = llt.solve(b).transpose();
  });
}

}  // namespace

std::string to_string(MFMode mode) {
  return mode == MFMode::NonNegative ? "nnmf" : "wmf";
}

double explicit_objective(std::span<const Interaction> records, const EmbeddingTable& t,
                          double regularization) {
  double loss = 0.0;
  for (const auto& r : records) {
    const double e = r.value - t.users.row(r.user).dot(t.items.row(r.item));
    loss += e * e;
  }
  return loss + regularization * (t.users.squaredNorm() + t.items.squaredNorm());
}

double implicit_objective(std::span<const Interaction> records, const EmbeddingTable& t,
                          double alpha, double regularization) {
  // Every cell with c = 1, p = 0, then corrected on the observed cells.
  const Eigen::MatrixXd uu = t.users.transpose() * t.users;
  const Eigen::MatrixXd vv = t.items.transpose() * t.items;
  double loss = (uu.array() * vv.array()).sum();
  for (const auto& r : records) {
    const double pred = t.users.row(r.user).dot(t.items.row(r.item));
    const double c = 1.0 + alpha * r.value;
    const double p = r.value > 0.0 ? 1.0 : 0.0;
    loss += c * (p - pred) * (p - pred) - pred * pred;
  }
  return loss + regularization * (t.users.squaredNorm() + t.items.squaredNorm());
}

MFResult factorize_explicit(std::span<const Interaction> records, std::size_t n_users,
                            std::size_t n_items, const MFConfig& cfg) {
  check_config(cfg);
  const auto inc = build_incidence(records, n_users, n_items);
  auto rng = make_rng(cfg.seed, "mf");
  std::uniform_real_distribution<double> init(0.0, 0.1);

  MFResult result;
  auto& t = result.table;
  t.users = RowMatrix::NullaryExpr(n_users, cfg.dim, [&] { return init(rng); });
  t.items = RowMatrix::NullaryExpr(n_items, cfg.dim, [&] { return init(rng); });
  result.objective.push_back(explicit_objective(records, t, cfg.regularization));

  for (int it = 0; it < cfg.max_iters; ++it) {
    multiplicative_update(t.users, t.items, inc.by_user, cfg.regularization, cfg.threads);
    multiplicative_update(t.items, t.users, inc.by_item, cfg.regularization, cfg.threads);
    result.objective.push_back(explicit_objective(records, t, cfg.regularization));
    if (converged(result.objective, cfg.tolerance)) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged && cfg.max_iters > 0) {
    spdlog::debug("NNMF stopped after {} iterations without meeting tolerance", cfg.max_iters);
  }
  return result;
}

MFResult factorize_explicit(const Dataset& ds, const MFConfig& cfg) {
  if (ds.kind() != FeedbackKind::Explicit) {
    throw ContractError("factorize_explicit requires explicit feedback");
  }
  return factorize_explicit(ds.interactions(), ds.n_users(), ds.n_items(), cfg);
}

MFResult factorize_implicit(std::span<const Interaction> records, std::size_t n_users,
                            std::size_t n_items, const MFConfig& cfg) {
  check_config(cfg);
  const auto inc = build_incidence(records, n_users, n_items);
  auto rng = make_rng(cfg.seed, "mf");
  std::normal_distribution<double> init(0.0, 0.01);

  MFResult result;
  auto& t = result.table;
  t.users = RowMatrix::NullaryExpr(n_users, cfg.dim, [&] { return init(rng); });
  t.items = RowMatrix::NullaryExpr(n_items, cfg.dim, [&] { return init(rng); });
  result.objective.push_back(implicit_objective(records, t, cfg.alpha, cfg.regularization));

  std::atomic<bool> jitter_logged{false};
  for (int it = 0; it < cfg.max_iters; ++it) {
    als_half_sweep(t.users, t.items, inc.by_user, cfg.alpha, cfg.regularization, cfg.threads,
                   jitter_logged);
    als_half_sweep(t.items, t.users, inc.by_item, cfg.alpha, cfg.regularization, cfg.threads,
                   jitter_logged);
    result.objective.push_back(implicit_objective(records, t, cfg.alpha, cfg.regularization));
    if (converged(result.objective, cfg.tolerance)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

MFResult factorize_implicit(const Dataset& ds, const MFConfig& cfg) {
  if (ds.kind() != FeedbackKind::Implicit) {
    throw ContractError("factorize_implicit requires implicit feedback");
  }
  return factorize_implicit(ds.interactions(), ds.n_users(), ds.n_items(), cfg);
}

InteractionFrequency interaction_frequency(const ObservedSets& observed) {
  InteractionFrequency f;
  f.user.resize(observed.n_users());
  f.item.resize(observed.n_items());
  std::size_t max_user = 0;
  std::size_t max_item = 0;
  for (UserId u = 0; u < observed.n_users(); ++u) {
    max_user = std::max(max_user, observed.observed(u).size());
  }
  for (ItemId i = 0; i < observed.n_items(); ++i) {
    max_item = std::max(max_item, observed.item_count(i));
  }
  for (UserId u = 0; u < observed.n_users(); ++u) {
    f.user[u] = max_user ? double(observed.observed(u).size()) / double(max_user) : 0.0;
  }
  for (ItemId i = 0; i < observed.n_items(); ++i) {
    f.item[i] = max_item ? double(observed.item_count(i)) / double(max_item) : 0.0;
  }
  return f;
}

InteractionFrequency interaction_frequency(const Dataset& ds, const Split& split) {
  return interaction_frequency(observed_sets(split, ds));
}

void fill_untrained_rows(EmbeddingTable& table, const ObservedSets& observed) {
  auto fill = [](RowMatrix& m, auto&& trained) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m.cols());
    std::size_t count = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (trained(r)) {
        mean += m.row(r);
        ++count;
      }
    }
    if (count == 0) return;
    mean /= double(count);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (!trained(r)) m.row(r) = mean;
    }
  };
  fill(table.users, [&](Eigen::Index u) { return !observed.observed(UserId(u)).empty(); });
  fill(table.items, [&](Eigen::Index i) { return observed.item_count(ItemId(i)) > 0; });
}

void write_embeddings(const EmbeddingTable& t, MFMode mode, std::uint64_t seed,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << "signedrec-embeddings 1\n"
      << t.users.rows() << ' ' << t.items.rows() << ' ' << t.dim() << ' ' << to_string(mode)
      << ' ' << seed << '\n';
  out.write(reinterpret_cast<const char*>(t.users.data()),
            static_cast<std::streamsize>(t.users.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(t.items.data()),
            static_cast<std::streamsize>(t.items.size() * sizeof(double)));
}

EmbeddingTable read_embeddings(const std::filesystem::path& path, EmbeddingHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::string magic;
  int version = 0;
  EmbeddingHeader h;
  std::string mode;
  in >> magic >> version >> h.n_users >> h.n_items >> h.dim >> mode >> h.seed;
  if (!in || magic != "signedrec-embeddings" || version != 1) {
    throw ParseError("not an embedding cache: " + path.string(), 1);
  }
  h.mode = mode == "wmf" ? MFMode::Weighted : MFMode::NonNegative;
  in.get();
  EmbeddingTable t;
  t.users.resize(Eigen::Index(h.n_users), h.dim);
  t.items.resize(Eigen::Index(h.n_items), h.dim);
  in.read(reinterpret_cast<char*>(t.users.data()),
          static_cast<std::streamsize>(t.users.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(t.items.data()),
          static_cast<std::streamsize>(t.items.size() * sizeof(double)));
  if (!in) throw ParseError("truncated embedding cache: " + path.string(), 0);
  if (header) *header = h;
  return t;
}

}  // namespace signedrec
