// Counter-based deterministic random numbers. Every draw is a pure function
// of (seed, stream, counter), so runs are reproducible across platforms and
// independent streams can be split without coordination.
#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

#include "sqc/linalg.hpp"

namespace sqc {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {
// SplitMix64 finalizer: a strong 64-bit mixing function.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream_name)
      : seed_(seed), stream_(fnv1a64(stream_name)) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() {
    std::uint64_t z = detail::mix64(seed_ ^ 0x2545f4914f6cdd1dull);
    z = detail::mix64(z ^ stream_);
    return detail::mix64(z ^ counter_++);
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller on two fresh counter draws.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
  }

  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return Complex(re, im);
  }

  // Haar-random pure state of dimension d.
  Vector haar_state(int d) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = complex_normal();
    return v / v.norm();
  }

  // Haar-random unitary via QR of a Ginibre matrix with phase correction.
  Matrix haar_unitary(int d) {
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = complex_normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
      const Complex rjj = r(j, j);
      q.col(j) *= (std::abs(rjj) > 0 ? rjj / std::abs(rjj) : Complex(1.0));
    }
    return q;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace sqc
