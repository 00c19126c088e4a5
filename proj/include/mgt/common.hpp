#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgt {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

inline constexpr std::string_view kCodeVersion = "mgt-0.1.0";

// Error taxonomy. The CLI maps these to exit codes:
//   config_error -> 2, model_error -> 3, everything numeric -> 1.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct model_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mesh or operator failed one of its construction invariants.
struct validation_error : numeric_error {
  explicit validation_error(const std::string& invariant, const std::string& detail)
      : numeric_error("invariant violated [" + invariant + "]: " + detail), invariant(invariant) {}
  std::string invariant;
};

struct parse_error : config_error {
  parse_error(const std::string& what, std::size_t position)
      : config_error(what + " (at offset " + std::to_string(position) + ")"), position(position) {}
  std::size_t position;
};

// FNV-1a, used for content hashes of configs and cache records. Stable across
// runs and platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace mgt
