#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "signedrec/common.hpp"

namespace signedrec {

inline constexpr int kCriteriaCount = 6;

// i >_u j, tagged with the ranking criterion (1..6) that produced it.
struct PartialRelation {
  UserId user = 0;
  ItemId preferred = 0;  // i
  ItemId other = 0;      // j
  int criterion = 1;
  std::optional<UserId> friend_id;
  std::optional<UserId> foe_id;

  friend bool operator==(const PartialRelation&, const PartialRelation&) = default;
};

struct NeighborView {
  UserId id = 0;
  std::span<const ItemId> observed;  // sorted I+ of the neighbor
};

// Non-owning view of everything the six criteria look at for one user and
// one (friend, foe) draw. All item lists are sorted ascending and must
// outlive the context.
struct CriterionContext {
  UserId user = 0;
  std::span<const ItemId> observed;   // I+_u
  std::span<const ItemId> negatives;  // sampled S-_u, disjoint from I+_u, I+_a, I+_b
  std::optional<NeighborView> friend_view;
  std::optional<NeighborView> foe_view;
};

// Throws ContractError if the sortedness or disjointness requirements fail.
void validate_context(const CriterionContext& ctx);

// Exact membership test of a relation against its own criterion.
bool relation_holds(const PartialRelation& rel, const CriterionContext& ctx);

// All six relation sets, criterion 1 first, each in (i, j) ascending order.
//   R1: i in I+_u,          j in S-_u, j not in I+_b
//   R2: i in I+_u,          j in I+_a \ I+_u
//   R3: i in I+_u & I+_a,   j in I+_a \ I+_u
//   R4: i in I+_a,          j in S-_u, j not in I+_b
//   R5: i in I+_a,          j in I+_b, i != j
//   R6: i in S-_u,          j in I+_b
// Without a friend R2..R5 are empty; without a foe R5, R6 are empty and the
// I+_b guards are vacuous.
std::vector<PartialRelation> enumerate_relations(const CriterionContext& ctx);

using CaseWeights = std::array<double, kCriteriaCount>;

inline constexpr CaseWeights kUniformCases{1, 1, 1, 1, 1, 1};
inline constexpr CaseWeights kFirstCaseOnly{1, 0, 0, 0, 0, 0};

// Precomputes the set algebra of one context so repeated draws are cheap.
class RelationDrawer {
 public:
  explicit RelationDrawer(const CriterionContext& ctx);

  std::size_t case_size(int criterion) const { return sizes_.at(criterion - 1); }
  bool empty() const;

  // Picks a criterion with probability proportional to its weight among the
  // nonempty ones, then a uniform member of that set. Returns nullopt when
  // every weighted set is empty. Consumes one uniform draw for the criterion
  // even when only one is possible, so runs with equal seeds stay aligned.
  std::optional<PartialRelation> draw(const CaseWeights& weights, Rng& rng) const;

 private:
  PartialRelation member(int criterion, std::uint64_t index, Rng& rng) const;

  CriterionContext ctx_;
  std::vector<ItemId> friend_only_;     // I+_a \ I+_u
  std::vector<ItemId> common_;          // I+_u & I+_a
  std::vector<ItemId> guarded_;         // S-_u \ I+_b
  std::array<std::uint64_t, kCriteriaCount> sizes_{};
};

std::optional<PartialRelation> sample_relation(const CriterionContext& ctx,
                                               const CaseWeights& weights, Rng& rng);

}  // namespace signedrec
