#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "signedrec/data.hpp"
#include "signedrec/scorer.hpp"

namespace signedrec {

struct EvalConfig {
  std::vector<int> ks{10, 20};
  int repeats = 5;
  std::size_t cold_start_threshold = 10;  // users with fewer train interactions
  unsigned threads = 1;
};

void validate_eval_config(const EvalConfig& cfg);

// Relevant test items per user, ascending. Explicit feedback: rating strictly
// above the user's train mean (global train mean when the user has no train
// ratings). Implicit feedback: every test interaction.
std::vector<std::vector<ItemId>> relevance_table(const Dataset& ds, const Split& split);
std::vector<ItemId> relevance_labels(const Dataset& ds, const Split& split, UserId u);

// `relevant` must be sorted and nonempty.
double recall_at_k(std::span<const ItemId> ranked, std::span<const ItemId> relevant, int k);
double ndcg_at_k(std::span<const ItemId> ranked, std::span<const ItemId> relevant, int k);

struct SliceMetrics {
  std::size_t users = 0;
  std::map<int, double> recall;  // keyed by k, averaged over users
  std::map<int, double> ndcg;
};

struct RunMetrics {
  SliceMetrics all;
  SliceMetrics cold;
};

// Fills `scores` (one per candidate) for user u.
using ScoreFn =
    std::function<void(UserId u, std::span<const ItemId> candidates, std::span<double> scores)>;

// Ranks all items outside u's train set by descending score (ties by
// ascending id) for every user with at least one relevant test item.
RunMetrics evaluate_ranking(const ScoreFn& score, const Dataset& ds, const Split& split,
                            const ObservedSets& observed, const EvalConfig& cfg);
RunMetrics evaluate_scorer(const Scorer& scorer, const Dataset& ds, const Split& split,
                           const ObservedSets& observed, const EvalConfig& cfg);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats
  std::vector<double> per_seed;
};

// Aggregated rows keyed by (model, ratio).
class EvalReport {
 public:
  void add(const std::string& model, double ratio, const RunMetrics& run);

  // slice: "all" or "cold"; metric: "recall" or "ndcg".
  MetricSummary summary(const std::string& model, double ratio, const std::string& slice,
                        const std::string& metric, int k) const;
  std::vector<std::string> models() const;
  std::vector<double> ratios() const;
  std::vector<int> ks() const;

  // Lines `model,split_ratio,slice,metric,k,mean,std`.
  void write_csv(std::ostream& out) const;
  // `model,split_ratio,slice,metric,k,seed_index,value`.
  void write_per_seed(std::ostream& out) const;
  // Tables of all-user metrics with the relative improvement of the best
  // model over the runner-up, and cold-start metrics with their relative
  // change against all users.
  void write_table(std::ostream& out) const;

 private:
  struct Key {
    std::string model;
    double ratio;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<RunMetrics>> runs_;
  std::vector<std::string> model_order_;
};

// Relative change (cold - all) / all.
double relative_drop(double all, double cold);

}  // namespace signedrec
