#include "signedrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace signedrec {

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.users < 2 || cfg.items < 2) throw ValidationError("synthetic data needs >= 2 users and items");
  if (cfg.clusters < 1 || cfg.niches < 1) throw ValidationError("clusters and niches must be >= 1");
  if (cfg.clusters * cfg.niches > cfg.items) {
    throw ValidationError("more cluster niches than items");
  }
  if (!(cfg.density > 0.0) || cfg.density > 1.0) {
    throw ValidationError("density must be in (0, 1]");
  }
  if (cfg.niche_share < 0.0 || cfg.cluster_share < 0.0 || cfg.niche_share + cfg.cluster_share > 1.0) {
    throw ValidationError("niche_share + cluster_share must lie in [0, 1]");
  }
  if (cfg.activity_spread < 0.0) throw ValidationError("activity_spread must be >= 0");
}

namespace {

// Uniform pick from `pool` of an item not yet in `taken`; nullopt when the
// pool is exhausted.
std::optional<ItemId> pick_fresh(const std::vector<ItemId>& pool, const std::set<ItemId>& taken,
                                 Rng& rng) {
  if (pool.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const ItemId i = pool[pick(rng)];
    if (!taken.contains(i)) return i;
  }
  std::vector<ItemId> rest;
  for (const auto i : pool) {
    if (!taken.contains(i)) rest.push_back(i);
  }
  if (rest.empty()) return std::nullopt;
  return rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
}

std::vector<UserId> sample_distinct(std::vector<UserId> pool, std::size_t count, Rng& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(count, pool.size()));
  return pool;
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  auto rng = make_rng(cfg.seed, "synth");
  SynthData out;
  const std::size_t n = cfg.users;
  const std::size_t m = cfg.items;
  const std::size_t groups = cfg.clusters * cfg.niches;

  out.item_cluster.resize(m);
  out.item_niche.resize(m);
  std::vector<std::vector<ItemId>> niche_items(groups);
  std::vector<std::vector<ItemId>> cluster_items(cfg.clusters);
  for (ItemId i = 0; i < m; ++i) {
    out.item_cluster[i] = i % cfg.clusters;
    out.item_niche[i] = (i / cfg.clusters) % cfg.niches;
    niche_items[out.item_cluster[i] * cfg.niches + out.item_niche[i]].push_back(i);
    cluster_items[out.item_cluster[i]].push_back(i);
  }
  std::vector<ItemId> all_items(m);
  std::iota(all_items.begin(), all_items.end(), ItemId{0});

  out.user_cluster.resize(n);
  out.user_niche.resize(n);
  std::vector<std::vector<UserId>> niche_users(groups);
  std::vector<std::vector<UserId>> cluster_users(cfg.clusters);
  for (UserId u = 0; u < n; ++u) {
    out.user_cluster[u] = u % cfg.clusters;
    out.user_niche[u] = (u / cfg.clusters) % cfg.niches;
    niche_users[out.user_cluster[u] * cfg.niches + out.user_niche[u]].push_back(u);
    cluster_users[out.user_cluster[u]].push_back(u);
  }

  // Heterogeneous activity with mean density * items.
  std::lognormal_distribution<double> activity(0.0, cfg.activity_spread);
  std::vector<double> weight(n);
  for (auto& w : weight) w = activity(rng);
  const double mean_weight = std::accumulate(weight.begin(), weight.end(), 0.0) / double(n);
  const double target = cfg.density * double(m);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Interaction> records;
  IdMap users;
  IdMap items;
  for (UserId u = 0; u < n; ++u) users.intern("u" + std::to_string(u));
  for (ItemId i = 0; i < m; ++i) items.intern("i" + std::to_string(i));

  for (UserId u = 0; u < n; ++u) {
    const auto count = std::clamp<std::size_t>(
        std::size_t(std::llround(weight[u] / mean_weight * target)), 1, m);
    const auto& own_niche = niche_items[out.user_cluster[u] * cfg.niches + out.user_niche[u]];
    const auto& own_cluster = cluster_items[out.user_cluster[u]];
    std::set<ItemId> taken;
    while (taken.size() < count) {
      const double r = unit(rng);
      std::optional<ItemId> item;
      if (r < cfg.niche_share) {
        item = pick_fresh(own_niche, taken, rng);
      } else if (r < cfg.niche_share + cfg.cluster_share) {
        item = pick_fresh(own_cluster, taken, rng);
      }
      if (!item) item = pick_fresh(all_items, taken, rng);
      taken.insert(*item);
      double value = 1.0;
      if (cfg.kind == FeedbackKind::Explicit) {
        const bool same_cluster = out.item_cluster[*item] == out.user_cluster[u];
        const bool same_niche = same_cluster && out.item_niche[*item] == out.user_niche[u];
        if (same_niche) {
          value = unit(rng) < 0.7 ? 5.0 : 4.0;
        } else if (same_cluster) {
          value = unit(rng) < 0.5 ? 4.0 : 3.0;
        } else {
          value = 1.0 + double(std::uniform_int_distribution<int>(0, 2)(rng));
        }
      }
      records.push_back({u, *item, value});
    }
  }
  out.dataset = Dataset(n, m, std::move(records), cfg.kind, std::move(users), std::move(items));

  std::vector<std::pair<UserId, UserId>> trust;
  std::vector<std::pair<UserId, UserId>> distrust;
  for (UserId u = 0; u < n; ++u) {
    std::vector<UserId> peers;
    for (const auto v : niche_users[out.user_cluster[u] * cfg.niches + out.user_niche[u]]) {
      if (v != u) peers.push_back(v);
    }
    if (peers.size() < cfg.friends_per_user) {
      for (const auto v : cluster_users[out.user_cluster[u]]) {
        if (v != u && std::find(peers.begin(), peers.end(), v) == peers.end()) peers.push_back(v);
      }
    }
    const auto friends = sample_distinct(peers, cfg.friends_per_user, rng);
    for (const auto a : friends) trust.emplace_back(u, a);

    std::vector<UserId> others;
    for (UserId v = 0; v < n; ++v) {
      if (v == u || std::find(friends.begin(), friends.end(), v) != friends.end()) continue;
      // With a single cluster there is no "other" cluster: foes are arbitrary.
      if (cfg.clusters > 1 && out.user_cluster[v] == out.user_cluster[u]) continue;
      others.push_back(v);
    }
    for (const auto b : sample_distinct(others, cfg.foes_per_user, rng)) distrust.emplace_back(u, b);
  }
  out.graph = SignedSocialGraph::from_edges(n, trust, distrust);
  return out;
}

}  // namespace signedrec
