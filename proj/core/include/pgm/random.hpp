#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pgm {

// ---- Seed derivation ----------------------------------------------------
//
// Child streams are derived from a master seed by hashing the seed together
// with integer labels (run index, stream role). Distinct label tuples give
// statistically independent streams, and a stream's seed never depends on
// how many other streams exist — reordering filters in a config does not
// change any filter's draws.

/// splitmix64 step; the standard 64-bit finalizer used to decorrelate seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a hash of a string, used to map filter names to stream roles so the
/// role does not depend on the filter's position in the config file.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives a child seed from (master, label_a, label_b). Chained splitmix64
/// so that every coordinate perturbs the whole output.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label_a,
                                                  std::uint64_t label_b = 0) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ label_a);
  h = splitmix64(h ^ label_b);
  return h;
}

/// Stream roles for the fixed per-run streams. Filters use
/// fnv1a64(filter_name) instead, which cannot collide with these small values
/// for any printable name.
enum class StreamRole : std::uint64_t {
  truth_process = 1,
  truth_measurement = 2,
  truth_init = 3,
};

[[nodiscard]] constexpr std::uint64_t role_label(StreamRole r) noexcept {
  return static_cast<std::uint64_t>(r);
}

// ---- RandomSource --------------------------------------------------------

/// Seeded random stream: mt19937_64 with explicit uniform and Gaussian
/// draws. The Gaussian uses Box-Muller rather than std::normal_distribution
/// because the latter's algorithm is implementation-defined, and the
/// determinism contract ("same seed, same samples") must hold across
/// standard libraries.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw on [0, 1) with 53 random bits.
  [[nodiscard]] double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw via Box-Muller (both uniforms consumed per draw;
  /// no cached spare, keeping the stream position easy to reason about).
  [[nodiscard]] double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1]: log stays finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Vector of iid standard normals.
  [[nodiscard]] Eigen::VectorXd gaussian_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = gaussian();
    return v;
  }

  /// Uniform integer in [0, n).
  [[nodiscard]] int uniform_index(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n)) % n;
  }

  /// Access to the raw engine (for std::shuffle-style consumers).
  [[nodiscard]] std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pgm
