#include "signedrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace signedrec {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool skippable(std::string_view line) {
  return line.empty() || line.front() == '#' || line.front() == '%';
}

std::optional<double> parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << std::setprecision(17);
  return out;
}

void expect_key(std::istream& in, std::string_view key, const std::filesystem::path& path) {
  std::string got;
  if (!(in >> got) || got != key) {
    throw ParseError("cache " + path.string() + ": expected '" + std::string(key) + "'", 0);
  }
}

}  // namespace

std::string to_string(FeedbackKind kind) {
  return kind == FeedbackKind::Explicit ? "explicit" : "implicit";
}

FeedbackKind parse_feedback_kind(std::string_view text) {
  if (text == "explicit") return FeedbackKind::Explicit;
  if (text == "implicit") return FeedbackKind::Implicit;
  throw ValidationError("unknown feedback kind: " + std::string(text));
}

std::uint32_t IdMap::intern(const std::string& external) {
  const auto [it, inserted] =
      index_.try_emplace(external, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(external);
  return it->second;
}

std::optional<std::uint32_t> IdMap::find(const std::string& external) const {
  const auto it = index_.find(external);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Dataset::Dataset(std::size_t n_users, std::size_t n_items, std::vector<Interaction> interactions,
                 FeedbackKind kind, IdMap users, IdMap items)
    : n_users_(n_users),
      n_items_(n_items),
      interactions_(std::move(interactions)),
      kind_(kind),
      users_(std::move(users)),
      items_(std::move(items)) {
  for (const auto& r : interactions_) {
    if (r.user >= n_users_ || r.item >= n_items_) {
      throw ValidationError("interaction id out of range");
    }
    if (kind_ == FeedbackKind::Explicit && (r.value < kMinRating || r.value > kMaxRating)) {
      throw ValidationError("rating outside [1,5]: " + std::to_string(r.value));
    }
    if (kind_ == FeedbackKind::Implicit && (r.value < 0.0 || r.value != std::floor(r.value))) {
      throw ValidationError("implicit count must be a nonnegative integer: " +
                            std::to_string(r.value));
    }
  }
  std::sort(interactions_.begin(), interactions_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  });
  const auto dup = std::adjacent_find(
      interactions_.begin(), interactions_.end(),
      [](const auto& a, const auto& b) { return a.user == b.user && a.item == b.item; });
  if (dup != interactions_.end()) {
    throw ValidationError("duplicate interaction for user " + std::to_string(dup->user) +
                          ", item " + std::to_string(dup->item));
  }
  if (users_.size() != 0 && users_.size() != n_users_) {
    throw ValidationError("user id map size does not match n_users");
  }
  if (items_.size() != 0 && items_.size() != n_items_) {
    throw ValidationError("item id map size does not match n_items");
  }
}

Dataset parse_interactions(std::istream& in, FeedbackKind kind) {
  IdMap users;
  IdMap items;
  std::vector<Interaction> records;
  std::set<std::pair<UserId, ItemId>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (skippable(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected user<TAB>item<TAB>value",
                       line_no);
    }
    const auto value = parse_double(fields[2]);
    if (!value) {
      throw ParseError("line " + std::to_string(line_no) + ": value '" + std::string(fields[2]) +
                           "' is not a number",
                       line_no);
    }
    if (kind == FeedbackKind::Explicit && (*value < kMinRating || *value > kMaxRating)) {
      throw ValidationError("line " + std::to_string(line_no) + ": rating " +
                            std::string(fields[2]) + " outside [1,5]");
    }
    if (kind == FeedbackKind::Implicit && (*value < 0.0 || *value != std::floor(*value))) {
      throw ValidationError("line " + std::to_string(line_no) + ": implicit count " +
                            std::string(fields[2]) + " is not a nonnegative integer");
    }
    const UserId u = users.intern(std::string(fields[0]));
    const ItemId i = items.intern(std::string(fields[1]));
    if (!seen.emplace(u, i).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate (user, item) pair");
    }
    records.push_back({u, i, *value});
  }
  if (records.empty()) throw ValidationError("no interactions");
  const auto n_users = users.size();
  const auto n_items = items.size();
  return Dataset(n_users, n_items, std::move(records), kind, std::move(users), std::move(items));
}

Dataset ingest_interactions(const std::filesystem::path& path, FeedbackKind kind) {
  auto in = open_input(path);
  return parse_interactions(in, kind);
}

std::size_t SignedSocialGraph::trust_edges() const noexcept {
  std::size_t n = 0;
  for (const auto& f : friends_) n += f.size();
  return n;
}

std::size_t SignedSocialGraph::distrust_edges() const noexcept {
  std::size_t n = 0;
  for (const auto& f : foes_) n += f.size();
  return n;
}

SignedSocialGraph SignedSocialGraph::from_edges(
    std::size_t n_users, std::span<const std::pair<UserId, UserId>> trust,
    std::span<const std::pair<UserId, UserId>> distrust) {
  SignedSocialGraph g(n_users);
  auto add = [&](std::vector<std::vector<UserId>>& adj, std::pair<UserId, UserId> e) {
    if (e.first >= n_users || e.second >= n_users) throw ContractError("edge id out of range");
    if (e.first == e.second) throw ContractError("self-edge");
    adj[e.first].push_back(e.second);
  };
  for (const auto& e : trust) add(g.friends_, e);
  for (const auto& e : distrust) add(g.foes_, e);
  for (std::size_t u = 0; u < n_users; ++u) {
    for (auto* list : {&g.friends_[u], &g.foes_[u]}) {
      std::sort(list->begin(), list->end());
      list->erase(std::unique(list->begin(), list->end()), list->end());
    }
    std::vector<UserId> both;
    std::set_intersection(g.friends_[u].begin(), g.friends_[u].end(), g.foes_[u].begin(),
                          g.foes_[u].end(), std::back_inserter(both));
    if (!both.empty()) {
      throw ConflictError("pair (" + std::to_string(u) + ", " + std::to_string(both.front()) +
                          ") is both trusted and distrusted");
    }
  }
  return g;
}

SignedSocialGraph parse_signed_graph(std::istream& trust, std::istream& distrust,
                                     const IdMap& users, GraphIngestStats* stats) {
  GraphIngestStats local;
  auto& st = stats ? *stats : local;
  std::set<std::pair<UserId, UserId>> trust_set;
  std::set<std::pair<UserId, UserId>> distrust_set;

  auto read = [&](std::istream& in, std::set<std::pair<UserId, UserId>>& out,
                  std::string_view label) {
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = strip_cr(raw);
      if (skippable(line)) continue;
      auto fields = split_tabs(line);
      // Epinions dumps sometimes carry a trailing weight column.
      if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
        throw ParseError(std::string(label) + " line " + std::to_string(line_no) +
                             ": expected user<TAB>user",
                         line_no);
      }
      const auto a = users.find(std::string(fields[0]));
      const auto b = users.find(std::string(fields[1]));
      if (!a || !b) {
        ++st.dropped_unknown;
        continue;
      }
      if (*a == *b) {
        ++st.dropped_self;
        continue;
      }
      if (!out.emplace(*a, *b).second) ++st.duplicates;
    }
  };
  read(trust, trust_set, "trust");
  read(distrust, distrust_set, "distrust");

  for (const auto& e : trust_set) {
    if (distrust_set.contains(e)) {
      throw ConflictError("pair (" + users.external(e.first) + ", " + users.external(e.second) +
                          ") appears in both trust and distrust");
    }
  }
  if (st.dropped_unknown > 0) {
    spdlog::warn("dropped {} social edges referencing unknown users", st.dropped_unknown);
  }
  if (st.dropped_self > 0) spdlog::warn("dropped {} self-edges", st.dropped_self);

  const std::vector<std::pair<UserId, UserId>> t(trust_set.begin(), trust_set.end());
  const std::vector<std::pair<UserId, UserId>> d(distrust_set.begin(), distrust_set.end());
  return SignedSocialGraph::from_edges(users.size(), t, d);
}

SignedSocialGraph ingest_signed_graph(const std::filesystem::path& trust_path,
                                      const std::filesystem::path& distrust_path,
                                      const IdMap& users, GraphIngestStats* stats) {
  auto trust = open_input(trust_path);
  auto distrust = open_input(distrust_path);
  return parse_signed_graph(trust, distrust, users, stats);
}

Split split_ratings(const Dataset& ds, double ratio, std::uint64_t seed, bool stratified) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError("split ratio must lie in (0,1), got " + std::to_string(ratio));
  }
  Rng rng(seed);
  Split split;
  split.ratio = ratio;
  split.seed = seed;
  split.stratified = stratified;

  auto take = [&](std::vector<std::size_t> idx) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * double(idx.size())));
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + n_train);
    split.test.insert(split.test.end(), idx.begin() + n_train, idx.end());
  };

  const auto records = ds.interactions();
  if (!stratified) {
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), 0);
    take(std::move(all));
  } else {
    std::size_t begin = 0;
    while (begin < records.size()) {
      std::size_t end = begin;
      while (end < records.size() && records[end].user == records[begin].user) ++end;
      std::vector<std::size_t> idx(end - begin);
      std::iota(idx.begin(), idx.end(), begin);
      take(std::move(idx));
      begin = end;
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ObservedSets::ObservedSets(std::size_t n_items, std::vector<std::vector<ItemId>> per_user)
    : n_items_(n_items), observed_(std::move(per_user)), item_counts_(n_items, 0) {
  for (auto& items : observed_) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (const auto i : items) {
      if (i >= n_items_) throw ContractError("observed item out of range");
      ++item_counts_[i];
    }
  }
}

bool ObservedSets::contains(UserId u, ItemId i) const {
  const auto& items = observed_.at(u);
  return std::binary_search(items.begin(), items.end(), i);
}

std::vector<ItemId> ObservedSets::unobserved(UserId u) const {
  const auto& items = observed_.at(u);
  std::vector<ItemId> out;
  out.reserve(n_items_ - items.size());
  auto it = items.begin();
  for (ItemId i = 0; i < n_items_; ++i) {
    if (it != items.end() && *it == i) {
      ++it;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

ObservedSets observed_sets(const Split& split, const Dataset& ds) {
  std::vector<std::vector<ItemId>> per_user(ds.n_users());
  const auto records = ds.interactions();
  for (const auto idx : split.train) {
    const auto& r = records[idx];
    per_user[r.user].push_back(r.item);
  }
  return ObservedSets(ds.n_items(), std::move(per_user));
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "signedrec-dataset\t1\n";
  out << "kind\t" << to_string(ds.kind()) << '\n';
  out << "users\t" << ds.n_users() << '\n';
  out << "items\t" << ds.n_items() << '\n';
  out << "interactions\t" << ds.size() << '\n';
  for (const auto& name : ds.user_ids().names()) out << "u\t" << name << '\n';
  for (const auto& name : ds.item_ids().names()) out << "i\t" << name << '\n';
  for (const auto& r : ds.interactions()) {
    out << "r\t" << r.user << '\t' << r.item << '\t' << r.value << '\n';
  }
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::vector<std::string> {
    if (!std::getline(in, line)) throw ParseError("cache " + path.string() + ": truncated", line_no);
    ++line_no;
    std::vector<std::string> out;
    for (auto f : split_tabs(strip_cr(line))) out.emplace_back(f);
    return out;
  };
  auto header = [&](std::string_view key) {
    const auto f = next();
    if (f.size() != 2 || f[0] != key) {
      throw ParseError("cache " + path.string() + ": expected " + std::string(key), line_no);
    }
    return f[1];
  };
  if (header("signedrec-dataset") != "1") throw ParseError("unsupported dataset cache", 1);
  const auto kind = parse_feedback_kind(header("kind"));
  const auto n_users = std::stoull(header("users"));
  const auto n_items = std::stoull(header("items"));
  const auto n_records = std::stoull(header("interactions"));
  IdMap users;
  IdMap items;
  for (std::size_t k = 0; k < n_users; ++k) {
    const auto f = next();
    if (f.size() != 2 || f[0] != "u") throw ParseError("bad user id line", line_no);
    users.intern(f[1]);
  }
  for (std::size_t k = 0; k < n_items; ++k) {
    const auto f = next();
    if (f.size() != 2 || f[0] != "i") throw ParseError("bad item id line", line_no);
    items.intern(f[1]);
  }
  std::vector<Interaction> records;
  records.reserve(n_records);
  for (std::size_t k = 0; k < n_records; ++k) {
    const auto f = next();
    if (f.size() != 4 || f[0] != "r") throw ParseError("bad record line", line_no);
    const auto value = parse_double(f[3]);
    if (!value) throw ParseError("bad record value", line_no);
    records.push_back({static_cast<UserId>(std::stoul(f[1])),
                       static_cast<ItemId>(std::stoul(f[2])), *value});
  }
  return Dataset(n_users, n_items, std::move(records), kind, std::move(users), std::move(items));
}

void write_interactions_tsv(const Dataset& ds, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& r : ds.interactions()) {
    const auto user = ds.user_ids().size() ? ds.user_ids().external(r.user) : std::to_string(r.user);
    const auto item = ds.item_ids().size() ? ds.item_ids().external(r.item) : std::to_string(r.item);
    out << user << '\t' << item << '\t' << r.value << '\n';
  }
}

void write_graph(const SignedSocialGraph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "signedrec-graph\t1\n";
  out << "users\t" << g.n_users() << '\n';
  for (UserId u = 0; u < g.n_users(); ++u) {
    for (const auto a : g.friends(u)) out << "+\t" << u << '\t' << a << '\n';
    for (const auto b : g.foes(u)) out << "-\t" << u << '\t' << b << '\n';
  }
}

SignedSocialGraph read_graph(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "signedrec-graph" || version != 1) throw ParseError("not a graph cache", 1);
  expect_key(in, "users", path);
  std::size_t n_users = 0;
  in >> n_users;
  std::vector<std::pair<UserId, UserId>> trust;
  std::vector<std::pair<UserId, UserId>> distrust;
  std::string sign;
  UserId a = 0;
  UserId b = 0;
  while (in >> sign >> a >> b) {
    if (sign == "+") {
      trust.emplace_back(a, b);
    } else if (sign == "-") {
      distrust.emplace_back(a, b);
    } else {
      throw ParseError("bad edge sign in graph cache", 0);
    }
  }
  return SignedSocialGraph::from_edges(n_users, trust, distrust);
}

void write_split(const Split& split, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "signedrec-split\t1\n";
  out << "ratio\t" << split.ratio << '\n';
  out << "seed\t" << split.seed << '\n';
  out << "stratified\t" << (split.stratified ? 1 : 0) << '\n';
  out << "train\t" << split.train.size() << '\n';
  for (const auto idx : split.train) out << idx << '\n';
  out << "test\t" << split.test.size() << '\n';
  for (const auto idx : split.test) out << idx << '\n';
}

Split read_split(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "signedrec-split" || version != 1) throw ParseError("not a split cache", 1);
  Split split;
  int stratified = 0;
  std::size_t n = 0;
  expect_key(in, "ratio", path);
  in >> split.ratio;
  expect_key(in, "seed", path);
  in >> split.seed;
  expect_key(in, "stratified", path);
  in >> stratified;
  split.stratified = stratified != 0;
  expect_key(in, "train", path);
  in >> n;
  split.train.resize(n);
  for (auto& idx : split.train) in >> idx;
  expect_key(in, "test", path);
  in >> n;
  split.test.resize(n);
  for (auto& idx : split.test) in >> idx;
  if (!in) throw ParseError("truncated split cache " + path.string(), 0);
  return split;
}

}  // namespace signedrec
