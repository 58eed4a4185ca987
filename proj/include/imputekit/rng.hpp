#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace imputekit {

// Seeded random stream. The engine (mt19937_64) is fully specified by the
// standard, and the distributions below are implemented here rather than
// taken from <random>, so a given seed yields the same draws everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Standard normal via Box-Muller (one value per call).
  double normal();

  /// Independent stream for `label`. Depends only on this stream's seed and
  /// the label, never on how many values have been drawn.
  Rng child(std::string_view label) const { return Rng(derive(seed_, label)); }

  static std::uint64_t derive(std::uint64_t seed, std::string_view label);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Joins label parts with '/', formatting numbers in shortest round-trip form.
std::string seed_label(std::initializer_list<std::string_view> parts);
std::string format_number(double value);

}  // namespace imputekit
