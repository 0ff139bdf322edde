#include "signedrec/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "signedrec/parallel.hpp"

namespace signedrec {

void validate_eval_config(const EvalConfig& cfg) {
  if (cfg.ks.empty()) throw ContractError("at least one k is required");
  for (const int k : cfg.ks) {
    if (k < 1) throw ContractError("k must be >= 1");
  }
  if (cfg.repeats < 1) throw ContractError("repeats must be >= 1");
}

std::vector<std::vector<ItemId>> relevance_table(const Dataset& ds, const Split& split) {
  const auto records = ds.interactions();
  std::vector<std::vector<ItemId>> relevant(ds.n_users());
  if (ds.kind() == FeedbackKind::Implicit) {
    for (const auto idx : split.test) relevant[records[idx].user].push_back(records[idx].item);
  } else {
    std::vector<double> sum(ds.n_users(), 0.0);
    std::vector<std::size_t> count(ds.n_users(), 0);
    double global = 0.0;
    for (const auto idx : split.train) {
      sum[records[idx].user] += records[idx].value;
      ++count[records[idx].user];
      global += records[idx].value;
    }
    if (!split.train.empty()) global /= double(split.train.size());
    for (const auto idx : split.test) {
      const auto& r = records[idx];
      const double mean = count[r.user] ? sum[r.user] / double(count[r.user]) : global;
      if (r.value > mean) relevant[r.user].push_back(r.item);
    }
  }
  for (auto& items : relevant) std::sort(items.begin(), items.end());
  return relevant;
}

std::vector<ItemId> relevance_labels(const Dataset& ds, const Split& split, UserId u) {
  if (u >= ds.n_users()) throw ContractError("user id out of range");
  return std::move(relevance_table(ds, split)[u]);
}

namespace {

void check_metric_args(std::span<const ItemId> relevant, int k) {
  if (relevant.empty()) throw ContractError("metric undefined for an empty relevant set");
  if (k < 1) throw ContractError("k must be >= 1");
}

bool is_relevant(std::span<const ItemId> relevant, ItemId i) {
  return std::binary_search(relevant.begin(), relevant.end(), i);
}

}  // namespace

double recall_at_k(std::span<const ItemId> ranked, std::span<const ItemId> relevant, int k) {
  check_metric_args(relevant, k);
  const auto depth = std::min<std::size_t>(std::size_t(k), ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += is_relevant(relevant, ranked[r]) ? 1 : 0;
  return double(hits) / double(relevant.size());
}

double ndcg_at_k(std::span<const ItemId> ranked, std::span<const ItemId> relevant, int k) {
  check_metric_args(relevant, k);
  const auto depth = std::min<std::size_t>(std::size_t(k), ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (is_relevant(relevant, ranked[r])) dcg += 1.0 / std::log2(double(r) + 2.0);
  }
  double ideal = 0.0;
  const auto ideal_depth = std::min<std::size_t>(std::size_t(k), relevant.size());
  for (std::size_t r = 0; r < ideal_depth; ++r) ideal += 1.0 / std::log2(double(r) + 2.0);
  return dcg / ideal;
}

RunMetrics evaluate_ranking(const ScoreFn& score, const Dataset& ds, const Split& split,
                            const ObservedSets& observed, const EvalConfig& cfg) {
  validate_eval_config(cfg);
  if (observed.n_users() != ds.n_users() || observed.n_items() != ds.n_items()) {
    throw ContractError("observed sets do not match the dataset");
  }
  const auto relevant = relevance_table(ds, split);
  std::vector<UserId> eligible;
  for (UserId u = 0; u < ds.n_users(); ++u) {
    if (!relevant[u].empty()) eligible.push_back(u);
  }
  if (eligible.empty()) throw ValidationError("no user has a relevant test item");

  const auto n_k = cfg.ks.size();
  // Per eligible user: recall for each k, then ndcg for each k.
  std::vector<double> values(eligible.size() * 2 * n_k);
  parallel_for(eligible.size(), cfg.threads, [&](std::size_t e) {
    const UserId u = eligible[e];
    const auto seen = observed.observed(u);
    std::vector<ItemId> candidates;
    candidates.reserve(ds.n_items() - seen.size());
    for (ItemId i = 0; i < ds.n_items(); ++i) {
      if (!std::binary_search(seen.begin(), seen.end(), i)) candidates.push_back(i);
    }
    std::vector<double> s(candidates.size());
    score(u, candidates, s);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (s[a] != s[b]) return s[a] > s[b];
      return candidates[a] < candidates[b];
    });
    std::vector<ItemId> ranked(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) ranked[r] = candidates[order[r]];
    for (std::size_t q = 0; q < n_k; ++q) {
      values[e * 2 * n_k + q] = recall_at_k(ranked, relevant[u], cfg.ks[q]);
      values[e * 2 * n_k + n_k + q] = ndcg_at_k(ranked, relevant[u], cfg.ks[q]);
    }
  });

  RunMetrics out;
  auto fill = [&](SliceMetrics& slice, auto&& keep) {
    std::vector<double> sums(2 * n_k, 0.0);
    for (std::size_t e = 0; e < eligible.size(); ++e) {
      if (!keep(eligible[e])) continue;
      ++slice.users;
      for (std::size_t c = 0; c < 2 * n_k; ++c) sums[c] += values[e * 2 * n_k + c];
    }
    if (slice.users == 0) return;
    for (std::size_t q = 0; q < n_k; ++q) {
      slice.recall[cfg.ks[q]] = sums[q] / double(slice.users);
      slice.ndcg[cfg.ks[q]] = sums[n_k + q] / double(slice.users);
    }
  };
  fill(out.all, [](UserId) { return true; });
  fill(out.cold, [&](UserId u) { return observed.observed(u).size() < cfg.cold_start_threshold; });
  return out;
}

RunMetrics evaluate_scorer(const Scorer& scorer, const Dataset& ds, const Split& split,
                           const ObservedSets& observed, const EvalConfig& cfg) {
  if (scorer.n_users() != ds.n_users() || scorer.n_items() != ds.n_items()) {
    throw ContractError("checkpoint shape does not match the dataset");
  }
  const auto table = scorer.scoring_table();
  return evaluate_ranking(
      [&](UserId u, std::span<const ItemId> candidates, std::span<double> s) {
        for (std::size_t c = 0; c < candidates.size(); ++c) s[c] = table.logit(u, candidates[c]);
      },
      ds, split, observed, cfg);
}

void EvalReport::add(const std::string& model, double ratio, const RunMetrics& run) {
  if (std::find(model_order_.begin(), model_order_.end(), model) == model_order_.end()) {
    model_order_.push_back(model);
  }
  runs_[Key{model, ratio}].push_back(run);
}

MetricSummary EvalReport::summary(const std::string& model, double ratio,
                                  const std::string& slice, const std::string& metric,
                                  int k) const {
  const auto it = runs_.find(Key{model, ratio});
  if (it == runs_.end()) throw ContractError("no runs for model " + model);
  MetricSummary out;
  for (const auto& run : it->second) {
    const auto& s = slice == "cold" ? run.cold : run.all;
    const auto& table = metric == "ndcg" ? s.ndcg : s.recall;
    const auto v = table.find(k);
    out.per_seed.push_back(v == table.end() ? std::numeric_limits<double>::quiet_NaN()
                                            : v->second);
  }
  const double n = double(out.per_seed.size());
  out.mean = std::accumulate(out.per_seed.begin(), out.per_seed.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : out.per_seed) ss += (v - out.mean) * (v - out.mean);
  out.std = out.per_seed.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return out;
}

std::vector<std::string> EvalReport::models() const { return model_order_; }

std::vector<double> EvalReport::ratios() const {
  std::vector<double> out;
  for (const auto& [key, runs] : runs_) {
    if (std::find(out.begin(), out.end(), key.ratio) == out.end()) out.push_back(key.ratio);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> EvalReport::ks() const {
  std::vector<int> out;
  for (const auto& [key, runs] : runs_) {
    for (const auto& run : runs) {
      for (const auto& [k, v] : run.all.recall) {
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "model,split_ratio,slice,metric,k,mean,std\n";
  for (const double ratio : ratios()) {
    for (const auto& model : model_order_) {
      if (!runs_.contains(Key{model, ratio})) continue;
      for (const char* slice : {"all", "cold"}) {
        for (const char* metric : {"recall", "ndcg"}) {
          for (const int k : ks()) {
            const auto s = summary(model, ratio, slice, metric, k);
            out << fmt::format("{},{},{},{},{},{:.6f},{:.6f}\n", model, ratio, slice, metric, k,
                               s.mean, s.std);
          }
        }
      }
    }
  }
}

void EvalReport::write_per_seed(std::ostream& out) const {
  out << "model,split_ratio,slice,metric,k,seed_index,value\n";
  for (const double ratio : ratios()) {
    for (const auto& model : model_order_) {
      if (!runs_.contains(Key{model, ratio})) continue;
      for (const char* slice : {"all", "cold"}) {
        for (const char* metric : {"recall", "ndcg"}) {
          for (const int k : ks()) {
            const auto s = summary(model, ratio, slice, metric, k);
            for (std::size_t r = 0; r < s.per_seed.size(); ++r) {
              out << fmt::format("{},{},{},{},{},{},{:.6f}\n", model, ratio, slice, metric, k, r,
                                 s.per_seed[r]);
            }
          }
        }
      }
    }
  }
}

double relative_drop(double all, double cold) { return (cold - all) / all; }

void EvalReport::write_table(std::ostream& out) const {
  const auto k_list = ks();
  std::vector<std::pair<std::string, int>> columns;
  for (const char* metric : {"recall", "ndcg"}) {
    for (const int k : k_list) columns.emplace_back(metric, k);
  }
  auto header = [&](const std::string& title) {
    out << fmt::format("{:<12}", title);
    for (const auto& [metric, k] : columns) {
      out << fmt::format(" {:>17}", fmt::format("{}@{}", metric == "ndcg" ? "NDCG" : "R", k));
    }
    out << '\n';
  };
  for (const double ratio : ratios()) {
    std::vector<std::string> present;
    for (const auto& model : model_order_) {
      if (runs_.contains(Key{model, ratio})) present.push_back(model);
    }
    out << fmt::format("== all users, train ratio {} ==\n", ratio);
    header("model");
    for (const auto& model : present) {
      out << fmt::format("{:<12}", model);
      for (const auto& [metric, k] : columns) {
        const auto s = summary(model, ratio, "all", metric, k);
        out << fmt::format(" {:>8.4f}+-{:<7.4f}", s.mean, s.std);
      }
      out << '\n';
    }
    if (present.size() > 1) {
      out << fmt::format("{:<12}", "best vs 2nd");
      for (const auto& [metric, k] : columns) {
        std::vector<double> means;
        for (const auto& model : present) means.push_back(summary(model, ratio, "all", metric, k).mean);
        std::sort(means.begin(), means.end(), std::greater<>());
        out << fmt::format(" {:>16.2f}%", 100.0 * (means[0] - means[1]) / means[1]);
      }
      out << '\n';
    }
    out << fmt::format("== cold-start users, train ratio {} ==\n", ratio);
    header("model");
    for (const auto& model : present) {
      out << fmt::format("{:<12}", model);
      for (const auto& [metric, k] : columns) {
        const auto cold = summary(model, ratio, "cold", metric, k);
        const auto all = summary(model, ratio, "all", metric, k);
        if (std::isnan(cold.mean)) {
          out << fmt::format(" {:>17}", "n/a");
        } else {
          out << fmt::format(" {:>7.4f} ({:>+6.1f}%)", cold.mean,
                             100.0 * relative_drop(all.mean, cold.mean));
        }
      }
      out << '\n';
    }
  }
}

}  // namespace signedrec
