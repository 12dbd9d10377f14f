#pragma once

// Real polynomials with ascending-degree coefficient storage. Hosts the
// profile functions Theta_j, the characteristic-polynomial factors and the
// invariant polynomial fitting helpers.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kmob/jet.hpp"

namespace kmob {

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Polynomial from_roots(const std::vector<double>& roots, double lead = 1.0) {
    Polynomial p(std::vector<double>{lead});
    for (double r : roots) p = p * Polynomial({-r, 1.0});
    return p;
  }

  const std::vector<double>& coeffs() const { return c_; }
  int degree() const { return c_.empty() ? -1 : static_cast<int>(c_.size()) - 1; }
  bool zero() const { return c_.empty(); }
  double lead() const { return c_.empty() ? 0.0 : c_.back(); }

  double operator()(double t) const {
    double r = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * t + *it;
    return r;
  }

  Jet2 operator()(const Jet2& t) const {
    Jet2 r(t.dim());
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * t + *it;
    return r;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial();
    std::vector<double> d(c_.size() - 1);
    for (size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Polynomial(std::move(d));
  }

  Polynomial operator*(const Polynomial& o) const {
    if (zero() || o.zero()) return Polynomial();
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (size_t i = 0; i < c_.size(); ++i)
      for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return Polynomial(std::move(r));
  }

  Polynomial operator+(const Polynomial& o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
    return Polynomial(std::move(r));
  }

  Polynomial operator-(const Polynomial& o) const { return *this + (-1.0) * o; }

  friend Polynomial operator*(double s, const Polynomial& p) {
    std::vector<double> r = p.c_;
    for (double& x : r) x *= s;
    return Polynomial(std::move(r));
  }

  bool almost_equal(const Polynomial& o, double tol = 1e-12) const {
    const Polynomial d = *this - o;
    double scale = 0.0;
    for (double x : c_) scale = std::max(scale, std::abs(x));
    for (double x : o.c_) scale = std::max(scale, std::abs(x));
    for (double x : d.c_)
      if (std::abs(x) > tol * std::max(1.0, scale)) return false;
    return true;
  }

  // Quotient and remainder by a monic divisor.
  std::pair<Polynomial, Polynomial> divmod(const Polynomial& monic) const {
    std::vector<double> rem = c_;
    std::vector<double> quo;
    const int dd = monic.degree();
    while (static_cast<int>(rem.size()) - 1 >= dd) {
      const double f = rem.back() / monic.lead();
      quo.push_back(f);
      const size_t off = rem.size() - 1 - dd;
      for (int i = 0; i <= dd; ++i) rem[off + i] -= f * monic.c_[i];
      rem.pop_back();
    }
    std::reverse(quo.begin(), quo.end());
    return {Polynomial(std::move(quo)), Polynomial(std::move(rem))};
  }

 private:
  void trim() {
    while (!c_.empty() && std::abs(c_.back()) == 0.0) c_.pop_back();
  }
  std::vector<double> c_;
};

// Elementary symmetric functions sigma_0..sigma_l of jets (sigma_0 = 1).
inline std::vector<Jet2> elementary_symmetric(const std::vector<Jet2>& x, int n) {
  std::vector<Jet2> s(x.size() + 1, Jet2(n));
  s[0] = Jet2::constant(1.0, n);
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t r = std::min(i + 1, x.size()); r >= 1; --r) s[r] += x[i] * s[r - 1];
  return s;
}

}  // namespace kmob
