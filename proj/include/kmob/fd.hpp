#pragma once

// Finite-difference oracle. Jets are the primary differentiation path;
// these stencils exist to cross-validate them and to differentiate the few
// quantities (pointwise mu, exterior derivatives of sampled forms) that the
// degree-2 jets cannot reach.

#include <Eigen/Dense>
#include <functional>

#include "kmob/errors.hpp"

namespace kmob {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

enum class FdOrder { Central2, Central4 };

struct FdStencil {
  double step = 1e-4;
  FdOrder order = FdOrder::Central4;
  bool richardson = false;  // one extrapolation level on top of `order`

  FdStencil() = default;
  FdStencil(double s, FdOrder o, bool rich = false) : step(s), order(o), richardson(rich) {
    if (step <= 0.0) throw Error("FdStencil: step must be positive");
  }
};

namespace detail {

inline double fd_dir(const ScalarField& f, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& dir, double h, FdOrder order) {
  auto at = [&](double t) { return f(x + t * dir); };
  if (order == FdOrder::Central2) return (at(h) - at(-h)) / (2.0 * h);
  return (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
}

}  // namespace detail

// Derivative of f along `dir` at x, honoring the stencil order and optional
// Richardson level.
inline double fd_directional(const ScalarField& f, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& dir, const FdStencil& st) {
  const double d_h = detail::fd_dir(f, x, dir, st.step, st.order);
  if (!st.richardson) return d_h;
  const double d_h2 = detail::fd_dir(f, x, dir, st.step / 2.0, st.order);
  const double p = (st.order == FdOrder::Central2) ? 4.0 : 16.0;
  return (p * d_h2 - d_h) / (p - 1.0);
}

inline Eigen::VectorXd fd_gradient(const ScalarField& f, const Eigen::VectorXd& x,
                                   const FdStencil& st) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  for (int k = 0; k < n; ++k)
    g(k) = fd_directional(f, x, Eigen::VectorXd::Unit(n, k), st);
  return g;
}

// Hessian as the symmetrized FD gradient of the FD gradient.
inline Eigen::MatrixXd fd_hessian(const ScalarField& f, const Eigen::VectorXd& x,
                                  const FdStencil& st) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd h(n, n);
  for (int k = 0; k < n; ++k) {
    auto gk = [&](const Eigen::VectorXd& p) {
      return fd_directional(f, p, Eigen::VectorXd::Unit(n, k), st);
    };
    for (int l = 0; l < n; ++l)
      h(k, l) = fd_directional(gk, x, Eigen::VectorXd::Unit(n, l), st);
  }
  return 0.5 * (h + h.transpose());
}

struct FdDerivatives {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

inline FdDerivatives fd_derivative(const ScalarField& f, const Eigen::VectorXd& x,
                                   const FdStencil& st) {
  try {
    return {fd_gradient(f, x, st), fd_hessian(f, x, st)};
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationFailed(std::string("fd_derivative: ") + e.what());
  }
}

}  // namespace kmob
