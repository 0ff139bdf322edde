#pragma once

#include <span>
#include <vector>

#include "signedrec/data.hpp"

namespace signedrec {

enum class SamplingMode { Social, Unconditional };

struct SamplerConfig {
  std::size_t negatives_per_positive = 5;
  SamplingMode mode = SamplingMode::Social;
};

// E_u = I \ (I+_u  U  I+_a for every friend a  U  I+_b for every foe b), ascending.
std::vector<ItemId> eligible_negatives(UserId u, const ObservedSets& observed,
                                       const SignedSocialGraph& graph);

struct NegativeDraw {
  std::vector<ItemId> items;  // ascending, no duplicates
  bool skipped = false;       // the pool was empty
};

// Draws min(positives_count * negatives_per_positive, |pool|) distinct items
// uniformly without replacement from `pool`.
NegativeDraw draw_negatives(std::size_t positives_count, const SamplerConfig& cfg,
                            std::span<const ItemId> pool, Rng& rng);

// Per-epoch cache of the per-user negative pools. In social mode a user whose
// eligible set is empty falls back to I-_u for that draw; fallbacks are
// counted.
class NegativeSampler {
 public:
  NegativeSampler(const ObservedSets& observed, const SignedSocialGraph* graph,
                  SamplerConfig cfg);

  struct Result {
    NegativeDraw draw;
    bool fell_back = false;
  };

  Result draw(UserId u, std::size_t positives_count, Rng& rng);

  std::span<const ItemId> eligible(UserId u) const { return eligible_.at(u); }
  std::span<const ItemId> unobserved(UserId u) const { return unobserved_.at(u); }
  std::size_t fallbacks() const noexcept { return fallbacks_; }
  const SamplerConfig& config() const noexcept { return cfg_; }

 private:
  SamplerConfig cfg_;
  std::vector<std::vector<ItemId>> unobserved_;
  std::vector<std::vector<ItemId>> eligible_;
  std::size_t fallbacks_ = 0;
};

}  // namespace signedrec
