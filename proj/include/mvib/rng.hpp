#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvib/error.hpp"

namespace mvib {

// Seeded generator with a portable output contract. The engine sequence of
// std::mt19937_64 is fixed by the standard; the distributions layered on top
// of it are not, so uniform/normal/index sampling is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  static constexpr const char* algorithm() { return "mt19937_64"; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller; one normal per pair of uniforms, nothing cached between calls.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw InvalidArgument("Rng::index: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  // Text snapshot of the full generator state (engine + counters).
  std::string state() const {
    std::ostringstream out;
    out << seed_ << ' ' << draws_ << ' ' << engine_;
    return out.str();
  }

  void restore(const std::string& text) {
    std::istringstream in(text);
    std::uint64_t seed = 0, draws = 0;
    std::mt19937_64 engine;
    if (!(in >> seed >> draws >> engine)) throw FormatError("Rng::restore: malformed state");
    seed_ = seed;
    draws_ = draws;
    engine_ = engine;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.seed_ == b.seed_ && a.draws_ == b.draws_ && a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
};

}  // namespace mvib
