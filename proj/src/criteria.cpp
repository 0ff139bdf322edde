#include "signedrec/criteria.hpp"

#include <algorithm>
#include <iterator>

namespace signedrec {

namespace {

bool has(std::span<const ItemId> sorted, ItemId x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

bool disjoint(std::span<const ItemId> a, std::span<const ItemId> b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return false;
    }
  }
  return true;
}

std::vector<ItemId> set_minus(std::span<const ItemId> a, std::span<const ItemId> b) {
  std::vector<ItemId> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<ItemId> set_and(std::span<const ItemId> a, std::span<const ItemId> b) {
  std::vector<ItemId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::span<const ItemId> friend_items(const CriterionContext& ctx) {
  return ctx.friend_view ? ctx.friend_view->observed : std::span<const ItemId>{};
}

std::span<const ItemId> foe_items(const CriterionContext& ctx) {
  return ctx.foe_view ? ctx.foe_view->observed : std::span<const ItemId>{};
}

PartialRelation make(const CriterionContext& ctx, ItemId i, ItemId j, int r) {
  PartialRelation rel;
  rel.user = ctx.user;
  rel.preferred = i;
  rel.other = j;
  rel.criterion = r;
  if (ctx.friend_view) rel.friend_id = ctx.friend_view->id;
  if (ctx.foe_view) rel.foe_id = ctx.foe_view->id;
  return rel;
}

}  // namespace

void validate_context(const CriterionContext& ctx) {
  auto sorted_unique = [](std::span<const ItemId> s) {
    return std::adjacent_find(s.begin(), s.end(), std::greater_equal<>{}) == s.end();
  };
  if (!sorted_unique(ctx.observed) || !sorted_unique(ctx.negatives) ||
      !sorted_unique(friend_items(ctx)) || !sorted_unique(foe_items(ctx))) {
    throw ContractError("criterion context item lists must be sorted and unique");
  }
  if (!disjoint(ctx.negatives, ctx.observed)) {
    throw ContractError("sampled negatives intersect the user's observed items");
  }
  if (!disjoint(ctx.negatives, friend_items(ctx))) {
    throw ContractError("sampled negatives intersect the friend's observed items");
  }
  if (!disjoint(ctx.negatives, foe_items(ctx))) {
    throw ContractError("sampled negatives intersect the foe's observed items");
  }
}

bool relation_holds(const PartialRelation& rel, const CriterionContext& ctx) {
  const ItemId i = rel.preferred;
  const ItemId j = rel.other;
  if (i == j || rel.user != ctx.user) return false;
  const auto u_items = ctx.observed;
  const auto s_items = ctx.negatives;
  const auto a_items = friend_items(ctx);
  const auto b_items = foe_items(ctx);
  const bool has_friend = ctx.friend_view.has_value();
  const bool has_foe = ctx.foe_view.has_value();
  switch (rel.criterion) {
    case 1:
      return has(u_items, i) && has(s_items, j) && !has(b_items, j);
    case 2:
      return has_friend && has(u_items, i) && has(a_items, j) && !has(u_items, j);
    case 3:
      return has_friend && has(u_items, i) && has(a_items, i) && has(a_items, j) &&
             !has(u_items, j);
    case 4:
      return has_friend && has(a_items, i) && has(s_items, j) && !has(b_items, j);
    case 5:
      return has_friend && has_foe && has(a_items, i) && has(b_items, j);
    case 6:
      return has_foe && has(s_items, i) && has(b_items, j);
    default:
      return false;
  }
}

RelationDrawer::RelationDrawer(const CriterionContext& ctx) : ctx_(ctx) {
  validate_context(ctx);
  const auto a_items = friend_items(ctx);
  const auto b_items = foe_items(ctx);
  guarded_ = set_minus(ctx.negatives, b_items);
  const std::uint64_t n_u = ctx.observed.size();
  const std::uint64_t n_g = guarded_.size();
  sizes_[0] = n_u * n_g;
  if (ctx.friend_view) {
    friend_only_ = set_minus(a_items, ctx.observed);
    common_ = set_and(ctx.observed, a_items);
    sizes_[1] = n_u * friend_only_.size();
    sizes_[2] = common_.size() * friend_only_.size();
    sizes_[3] = a_items.size() * n_g;
  }
  if (ctx.friend_view && ctx.foe_view) {
    sizes_[4] = a_items.size() * b_items.size() - set_and(a_items, b_items).size();
  }
  if (ctx.foe_view) sizes_[5] = ctx.negatives.size() * b_items.size();
}

bool RelationDrawer::empty() const {
  return std::all_of(sizes_.begin(), sizes_.end(), [](auto s) { return s == 0; });
}

PartialRelation RelationDrawer::member(int criterion, std::uint64_t index, Rng& rng) const {
  const auto a_items = friend_items(ctx_);
  const auto b_items = foe_items(ctx_);
  auto pick = [&](std::span<const ItemId> left, std::span<const ItemId> right) {
    return make(ctx_, left[index / right.size()], right[index % right.size()], criterion);
  };
  switch (criterion) {
    case 1: return pick(ctx_.observed, guarded_);
    case 2: return pick(ctx_.observed, friend_only_);
    case 3: return pick(common_, friend_only_);
    case 4: return pick(a_items, guarded_);
    case 5: {
      // Uniform over F x B without the diagonal, by rejection.
      std::uniform_int_distribution<std::uint64_t> full(0, a_items.size() * b_items.size() - 1);
      while (true) {
        const auto k = full(rng);
        const ItemId i = a_items[k / b_items.size()];
        const ItemId j = b_items[k % b_items.size()];
        if (i != j) return make(ctx_, i, j, criterion);
      }
    }
    default: return pick(ctx_.negatives, b_items);
  }
}

std::optional<PartialRelation> RelationDrawer::draw(const CaseWeights& weights, Rng& rng) const {
  std::array<double, kCriteriaCount> mass{};
  double total = 0.0;
  for (int r = 0; r < kCriteriaCount; ++r) {
    if (weights[r] < 0.0) throw ContractError("criterion weights must be nonnegative");
    mass[r] = sizes_[r] > 0 ? weights[r] : 0.0;
    total += mass[r];
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double target = unit(rng) * total;
  if (total <= 0.0) return std::nullopt;
  int chosen = -1;
  double acc = 0.0;
  for (int r = 0; r < kCriteriaCount; ++r) {
    if (mass[r] <= 0.0) continue;
    chosen = r;
    acc += mass[r];
    if (target < acc) break;
  }
  std::uniform_int_distribution<std::uint64_t> index(0, sizes_[chosen] - 1);
  return member(chosen + 1, index(rng), rng);
}

std::vector<PartialRelation> enumerate_relations(const CriterionContext& ctx) {
  validate_context(ctx);
  const auto a_items = friend_items(ctx);
  const auto b_items = foe_items(ctx);
  const auto guarded = set_minus(ctx.negatives, b_items);
  std::vector<PartialRelation> out;
  auto product = [&](std::span<const ItemId> left, std::span<const ItemId> right, int r) {
    for (const auto i : left) {
      for (const auto j : right) {
        if (i != j) out.push_back(make(ctx, i, j, r));
      }
    }
  };
  product(ctx.observed, guarded, 1);
  if (ctx.friend_view) {
    const auto friend_only = set_minus(a_items, ctx.observed);
    const auto common = set_and(ctx.observed, a_items);
    product(ctx.observed, friend_only, 2);
    product(common, friend_only, 3);
    product(a_items, guarded, 4);
    if (ctx.foe_view) product(a_items, b_items, 5);
  }
  if (ctx.foe_view) product(ctx.negatives, b_items, 6);
  return out;
}

std::optional<PartialRelation> sample_relation(const CriterionContext& ctx,
                                               const CaseWeights& weights, Rng& rng) {
  return RelationDrawer(ctx).draw(weights, rng);
}

}  // namespace signedrec
