#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "signedrec/data.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("signedrec-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Observed sets straight from per-user item lists.
inline signedrec::ObservedSets observed_from(std::size_t n_items,
                                             std::vector<std::vector<signedrec::ItemId>> lists) {
  return signedrec::ObservedSets(n_items, std::move(lists));
}

// Every record in train.
inline signedrec::Split all_train(const signedrec::Dataset& ds) {
  signedrec::Split s;
  for (std::size_t k = 0; k < ds.size(); ++k) s.train.push_back(k);
  s.ratio = 1.0;
  return s;
}

// Small implicit dataset where every user has `per_user` random items.
inline signedrec::Dataset random_implicit(std::size_t n_users, std::size_t n_items,
                                          std::size_t per_user, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<signedrec::Interaction> records;
  for (signedrec::UserId u = 0; u < n_users; ++u) {
    std::vector<signedrec::ItemId> items(n_items);
    for (signedrec::ItemId i = 0; i < n_items; ++i) items[i] = i;
    std::shuffle(items.begin(), items.end(), rng);
    for (std::size_t k = 0; k < per_user; ++k) records.push_back({u, items[k], 1.0});
  }
  return signedrec::Dataset(n_users, n_items, std::move(records),
                            signedrec::FeedbackKind::Implicit);
}

}  // namespace testutil
