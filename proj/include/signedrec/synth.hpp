#pragma once

#include <vector>

#include "signedrec/data.hpp"

namespace signedrec {

// Planted generator: users and items belong to preference clusters, each
// split into niches. Users draw most interactions from their own niche and
// cluster; friends are drawn from the same niche, foes from other clusters.
struct SynthConfig {
  std::size_t users = 200;
  std::size_t items = 500;
  std::size_t clusters = 4;
  std::size_t niches = 4;  // per cluster
  double density = 0.02;
  std::size_t friends_per_user = 5;
  std::size_t foes_per_user = 3;
  double niche_share = 0.6;    // interactions drawn from the user's niche
  double cluster_share = 0.25; // from the rest of the user's cluster; remainder uniform
  double activity_spread = 0.8;  // log-normal sigma of per-user activity
  FeedbackKind kind = FeedbackKind::Explicit;
  std::uint64_t seed = 0;
};

struct SynthData {
  Dataset dataset;
  SignedSocialGraph graph;
  std::vector<std::size_t> user_cluster;
  std::vector<std::size_t> user_niche;
  std::vector<std::size_t> item_cluster;
  std::vector<std::size_t> item_niche;
};

void validate_synth_config(const SynthConfig& cfg);
SynthData generate_synthetic(const SynthConfig& cfg);

}  // namespace signedrec
