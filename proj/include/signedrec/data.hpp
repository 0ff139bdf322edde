#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "signedrec/common.hpp"

namespace signedrec {

enum class FeedbackKind { Explicit, Implicit };

std::string to_string(FeedbackKind kind);
FeedbackKind parse_feedback_kind(std::string_view text);

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  double value = 0.0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Dense 0-based ids for external string ids, in order of first appearance.
class IdMap {
 public:
  std::uint32_t intern(const std::string& external);
  std::optional<std::uint32_t> find(const std::string& external) const;
  const std::string& external(std::uint32_t internal) const { return names_.at(internal); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const IdMap& a, const IdMap& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Sparse user-item matrix. Interactions are sorted by (user, item) and keys
// are unique; ids are dense.
class Dataset {
 public:
  Dataset() = default;

  // Validates ids, duplicates and value ranges; sorts the records.
  Dataset(std::size_t n_users, std::size_t n_items, std::vector<Interaction> interactions,
          FeedbackKind kind, IdMap users = {}, IdMap items = {});

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t size() const noexcept { return interactions_.size(); }
  FeedbackKind kind() const noexcept { return kind_; }
  std::span<const Interaction> interactions() const noexcept { return interactions_; }
  const IdMap& user_ids() const noexcept { return users_; }
  const IdMap& item_ids() const noexcept { return items_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::vector<Interaction> interactions_;
  FeedbackKind kind_ = FeedbackKind::Explicit;
  IdMap users_;
  IdMap items_;
};

// Per-user sorted friend (trust) and foe (distrust) lists.
class SignedSocialGraph {
 public:
  SignedSocialGraph() = default;
  explicit SignedSocialGraph(std::size_t n_users) : friends_(n_users), foes_(n_users) {}

  // Builds from directed edge lists. Duplicates are merged; self-edges and
  // out-of-range ids are rejected with ContractError; a pair present in both
  // lists raises ConflictError.
  static SignedSocialGraph from_edges(std::size_t n_users,
                                      std::span<const std::pair<UserId, UserId>> trust,
                                      std::span<const std::pair<UserId, UserId>> distrust);

  std::size_t n_users() const noexcept { return friends_.size(); }
  std::span<const UserId> friends(UserId u) const { return friends_.at(u); }
  std::span<const UserId> foes(UserId u) const { return foes_.at(u); }
  std::size_t trust_edges() const noexcept;
  std::size_t distrust_edges() const noexcept;
  bool empty() const noexcept { return trust_edges() == 0 && distrust_edges() == 0; }

  friend bool operator==(const SignedSocialGraph&, const SignedSocialGraph&) = default;

 private:
  std::vector<std::vector<UserId>> friends_;
  std::vector<std::vector<UserId>> foes_;
};

struct GraphIngestStats {
  std::size_t dropped_unknown = 0;
  std::size_t dropped_self = 0;
  std::size_t duplicates = 0;
};

// Train/test partition over interaction records (indices into
// Dataset::interactions()).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  bool stratified = false;

  friend bool operator==(const Split&, const Split&) = default;
};

// I+_u from the train split, plus per-item train counts.
class ObservedSets {
 public:
  ObservedSets() = default;
  ObservedSets(std::size_t n_items, std::vector<std::vector<ItemId>> per_user);

  std::size_t n_users() const noexcept { return observed_.size(); }
  std::size_t n_items() const noexcept { return n_items_; }
  std::span<const ItemId> observed(UserId u) const { return observed_.at(u); }
  bool contains(UserId u, ItemId i) const;
  // I−_u = I \ I+_u, ascending.
  std::vector<ItemId> unobserved(UserId u) const;
  std::size_t item_count(ItemId i) const { return item_counts_.at(i); }

 private:
  std::size_t n_items_ = 0;
  std::vector<std::vector<ItemId>> observed_;
  std::vector<std::size_t> item_counts_;
};

// Reads `user<TAB>item<TAB>value` lines and re-indexes ids densely.
Dataset ingest_interactions(const std::filesystem::path& path, FeedbackKind kind);
Dataset parse_interactions(std::istream& in, FeedbackKind kind);

// Reads `user<TAB>user` trust and distrust files. External ids are resolved
// through `users`; edges naming unknown users or self-edges are dropped and
// counted in `stats`.
SignedSocialGraph ingest_signed_graph(const std::filesystem::path& trust_path,
                                      const std::filesystem::path& distrust_path,
                                      const IdMap& users, GraphIngestStats* stats = nullptr);
SignedSocialGraph parse_signed_graph(std::istream& trust, std::istream& distrust,
                                     const IdMap& users, GraphIngestStats* stats = nullptr);

// Uniform random split over interaction records. With `stratified`, each
// user's records are split separately.
Split split_ratings(const Dataset& ds, double ratio, std::uint64_t seed, bool stratified = false);

ObservedSets observed_sets(const Split& split, const Dataset& ds);

// Line-oriented caches. The dataset cache keeps the id maps so a reload
// yields an identical Dataset.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
void write_interactions_tsv(const Dataset& ds, const std::filesystem::path& path);
void write_graph(const SignedSocialGraph& g, const std::filesystem::path& path);
SignedSocialGraph read_graph(const std::filesystem::path& path);
void write_split(const Split& split, const std::filesystem::path& path);
Split read_split(const std::filesystem::path& path);

}  // namespace signedrec
