#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace signedrec {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using Rng = std::mt19937_64;

// Input could not be parsed; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Input parsed but violates a domain rule (rating scale, empty data, ...).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A user pair appears in both the trust and the distrust relation.
class ConflictError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller.
class ContractError : public std::logic_error {
  using std::logic_error::logic_error;
};

// Non-finite value produced during training or scoring.
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Derives an independent seed for a named stream ("split", "mf", "init",
// "sampler", ...) from one root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

inline Rng make_rng(std::uint64_t root, std::string_view stream) {
  return Rng(derive_seed(root, stream));
}

}  // namespace signedrec
