#include "signedrec/sampler.hpp"

#include <algorithm>
#include <unordered_set>

namespace signedrec {

std::vector<ItemId> eligible_negatives(UserId u, const ObservedSets& observed,
                                       const SignedSocialGraph& graph) {
  std::vector<char> blocked(observed.n_items(), 0);
  for (const auto i : observed.observed(u)) blocked[i] = 1;
  for (const auto a : graph.friends(u)) {
    for (const auto i : observed.observed(a)) blocked[i] = 1;
  }
  for (const auto b : graph.foes(u)) {
    for (const auto i : observed.observed(b)) blocked[i] = 1;
  }
  std::vector<ItemId> out;
  for (ItemId i = 0; i < observed.n_items(); ++i) {
    if (!blocked[i]) out.push_back(i);
  }
  return out;
}

NegativeDraw draw_negatives(std::size_t positives_count, const SamplerConfig& cfg,
                            std::span<const ItemId> pool, Rng& rng) {
  if (cfg.negatives_per_positive < 1) throw ContractError("negatives_per_positive must be >= 1");
  NegativeDraw out;
  if (pool.empty()) {
    out.skipped = true;
    return out;
  }
  const std::size_t n = pool.size();
  const std::size_t k = std::min(positives_count * cfg.negatives_per_positive, n);
  // Floyd's subset sampling: k uniform distinct positions.
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(k * 2);
  std::vector<std::size_t> order;
  order.reserve(k);
  for (std::size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const auto t = pick(rng);
    const auto pos = chosen.insert(t).second ? t : j;
    if (pos == j) chosen.insert(j);
    order.push_back(pos);
  }
  out.items.reserve(k);
  for (const auto pos : order) out.items.push_back(pool[pos]);
  std::sort(out.items.begin(), out.items.end());
  return out;
}

NegativeSampler::NegativeSampler(const ObservedSets& observed, const SignedSocialGraph* graph,
                                 SamplerConfig cfg)
    : cfg_(cfg), unobserved_(observed.n_users()) {
  if (cfg_.negatives_per_positive < 1) throw ContractError("negatives_per_positive must be >= 1");
  if (cfg_.mode == SamplingMode::Social && graph == nullptr) {
    throw ContractError("social sampling needs a signed graph");
  }
  for (UserId u = 0; u < observed.n_users(); ++u) unobserved_[u] = observed.unobserved(u);
  if (cfg_.mode == SamplingMode::Social) {
    eligible_.resize(observed.n_users());
    for (UserId u = 0; u < observed.n_users(); ++u) {
      eligible_[u] = eligible_negatives(u, observed, *graph);
    }
  }
}

NegativeSampler::Result NegativeSampler::draw(UserId u, std::size_t positives_count, Rng& rng) {
  Result result;
  if (cfg_.mode == SamplingMode::Social && !eligible_[u].empty()) {
    result.draw = draw_negatives(positives_count, cfg_, eligible_[u], rng);
    return result;
  }
  if (cfg_.mode == SamplingMode::Social) {
    result.fell_back = true;
    ++fallbacks_;
  }
  result.draw = draw_negatives(positives_count, cfg_, unobserved_[u], rng);
  return result;
}

}  // namespace signedrec
