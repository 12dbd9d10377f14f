#pragma once

// Deterministic low-discrepancy point sampling (Halton with a seed offset)
// and a small xorshift generator for the randomized identity tests.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace kmob {

inline double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline int nth_prime(int k) {
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                               31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  return primes[k % 20];
}

// Points in [0,1)^d; identical (count, seed) always yields identical output.
inline std::vector<Eigen::VectorXd> halton_points(int count, int dim, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  const std::uint64_t offset = 17 + 1000 * seed;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd p(dim);
    for (int d = 0; d < dim; ++d) p(d) = halton(offset + i, nth_prime(d));
    pts.push_back(p);
  }
  return pts;
}

// Deterministic uniform doubles for property-style tests.
class XorShift {
 public:
  explicit XorShift(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next() {
    s_ ^= s_ << 13;
    s_ ^= s_ >> 7;
    s_ ^= s_ << 17;
    return s_;
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(next() >> 11) / 9007199254740992.0);
  }
  Eigen::VectorXd vector(int n, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  std::uint64_t s_;
};

}  // namespace kmob
