#pragma once

// Degree-2 truncated multivariate Taylor jets: every scalar carries its
// exact value, gradient and Hessian in the chart coordinates. This is the
// numeric carrier for all metric, complex-structure and endomorphism
// derivatives in the engine.

#include <Eigen/Dense>
#include <cmath>

#include "kmob/errors.hpp"

namespace kmob {

class Jet2 {
 public:
  double v = 0.0;
  Eigen::VectorXd g;  // length n
  Eigen::MatrixXd h;  // n x n, kept symmetric

  Jet2() : g(0), h(0, 0) {}

  explicit Jet2(int n) : v(0.0), g(Eigen::VectorXd::Zero(n)), h(Eigen::MatrixXd::Zero(n, n)) {}

  static Jet2 constant(double value, int n) {
    Jet2 j(n);
    j.v = value;
    return j;
  }

  // Coordinate seed: value with unit gradient in slot k.
  static Jet2 variable(double value, int k, int n) {
    Jet2 j(n);
    j.v = value;
    j.g(k) = 1.0;
    return j;
  }

  int dim() const { return static_cast<int>(g.size()); }

  // Jet of the k-th partial derivative. Value and gradient are exact;
  // the Hessian would need third derivatives of the source and is zeroed.
  Jet2 dpartial(int k) const {
    Jet2 j(dim());
    j.v = g(k);
    j.g = h.row(k).transpose();
    return j;
  }

  Jet2 operator-() const {
    Jet2 r = *this;
    r.v = -r.v;
    r.g = -r.g;
    r.h = -r.h;
    return r;
  }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    g += o.g;
    h += o.h;
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    g -= o.g;
    h -= o.h;
    return *this;
  }

  friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }

  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r(a.dim());
    r.v = a.v * b.v;
    r.g = a.v * b.g + b.v * a.g;
    r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
  }

  friend Jet2 operator*(double s, Jet2 a) {
    a.v *= s;
    a.g *= s;
    a.h *= s;
    return a;
  }
  friend Jet2 operator*(Jet2 a, double s) { return s * a; }

  friend Jet2 operator+(Jet2 a, double s) {
    a.v += s;
    return a;
  }
  friend Jet2 operator+(double s, Jet2 a) { return a + s; }
  friend Jet2 operator-(Jet2 a, double s) { return a + (-s); }
  friend Jet2 operator-(double s, const Jet2& a) { return (-a) + s; }

  Jet2 reciprocal() const {
    if (v == 0.0) throw DegenerateEvaluation("jet division by zero");
    Jet2 r(dim());
    const double iv = 1.0 / v;
    r.v = iv;
    r.g = -iv * iv * g;
    r.h = -iv * iv * h + 2.0 * iv * iv * iv * g * g.transpose();
    return r;
  }

  friend Jet2 operator/(const Jet2& a, const Jet2& b) { return a * b.reciprocal(); }
  friend Jet2 operator/(const Jet2& a, double s) { return a * (1.0 / s); }
  friend Jet2 operator/(double s, const Jet2& b) { return s * b.reciprocal(); }
};

// Univariate chain rule for f with derivatives (f0, f1, f2) at a.v.
inline Jet2 jet_chain(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r(a.dim());
  r.v = f0;
  r.g = f1 * a.g;
  r.h = f1 * a.h + f2 * a.g * a.g.transpose();
  return r;
}

inline Jet2 sqrt(const Jet2& a) {
  if (a.v <= 0.0) throw OutOfDomain("jet sqrt of non-positive value");
  const double s = std::sqrt(a.v);
  return jet_chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

inline Jet2 log(const Jet2& a) {
  if (a.v <= 0.0) throw OutOfDomain("jet log of non-positive value");
  return jet_chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return jet_chain(a, e, e, e);
}

inline Jet2 powi(const Jet2& a, int k) {
  if (k == 0) return Jet2::constant(1.0, a.dim());
  if (k == 1) return a;
  if (k < 0) return powi(a, -k).reciprocal();
  const double p0 = std::pow(a.v, k);
  const double p1 = k * std::pow(a.v, k - 1);
  const double p2 = double(k) * (k - 1) * std::pow(a.v, k - 2);
  return jet_chain(a, p0, p1, p2);
}

}  // namespace kmob
