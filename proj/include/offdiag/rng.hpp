#pragma once

#include <cstdint>
#include <random>

#include "offdiag/complex_matrix.hpp"

namespace offdiag {

/// SplitMix64 step; used to derive independent per-trial seeds so that trial
/// loops stay deterministic under any schedule.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base;
  std::uint64_t z = splitmix64(s);
  s = z ^ index;
  return splitmix64(s);
}

/// Documented, release-stable generator: mt19937_64 bit stream with an
/// explicit Box-Muller transform (std::normal_distribution is
/// implementation-defined, so it is not used; outputs are reproducible
/// bit-for-bit for a given seed on any IEEE-754 platform).
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in (0, 1].
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  cdouble complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return cdouble(re, im);
  }

  std::uint64_t bits() { return gen_(); }

  ComplexMatrix gaussian_matrix(std::size_t rows, std::size_t cols) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = complex_gaussian();
    return m;
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace offdiag
