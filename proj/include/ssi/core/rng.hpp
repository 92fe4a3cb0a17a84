#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ssi {

/// Seeded 64-bit generator (SplitMix64). All stochastic code in the project
/// draws from an Rng derived from one run seed via split(), so every component
/// gets an independent, reproducible stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal() noexcept;
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  // Independent child stream keyed by a label. Does not advance this stream.
  Rng split(std::string_view label) const noexcept;
  Rng split(std::uint64_t index) const noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace ssi
