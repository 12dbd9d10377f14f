#pragma once

// Curvature nullity machinery: the constant-holomorphic-curvature model
// tensor K, the shifted operator Z_B = R + 4BK, pointwise nullity spaces,
// the endomorphism-commutator condition battery, the bracket-kernel lemma
// certificate, and the explicit 4D constant formula.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "kmob/mobility.hpp"
#include "kmob/polynomial.hpp"

namespace kmob {

// K(X,Y) = 1/4 (Y-flat (x) X - X-flat (x) Y + JY-flat (x) JX - JX-flat (x) JY
//               + 2 g(X,JY) J)
inline Eigen::MatrixXd K_tensor(const PointFrame& f, const Eigen::VectorXd& X,
                                const Eigen::VectorXd& Y) {
  const Eigen::MatrixXd gv = f.g.values(), Jv = f.J.values();
  const Eigen::VectorXd JX = Jv * X, JY = Jv * Y;
  return 0.25 * (X * (gv * Y).transpose() - Y * (gv * X).transpose() +
                 JX * (gv * JY).transpose() - JY * (gv * JX).transpose() +
                 2.0 * X.dot(gv * JY) * Jv);
}

inline Eigen::MatrixXd Z_B(const PointFrame& f, double B, const Eigen::VectorXd& X,
                           const Eigen::VectorXd& Y) {
  return f.R.endo(X, Y) + 4.0 * B * K_tensor(f, X, Y);
}

struct NullityResult {
  double B = 0.0;
  int dimension = 0;
  Eigen::MatrixXd basis;  // columns span the nullity space
  std::vector<double> singular_values;
  double j_invariance = 0.0;  // distance of J basis from span(basis)
};

// Kernel of the stacked map Z -> { Z_B(E_i, E_j) Z } over a J-adapted
// orthonormal frame, SVD threshold 1e-7 relative to the top singular value.
inline NullityResult nullity_space(const PointFrame& f, double B) {
  const int n = f.dim();
  const Eigen::MatrixXd E = unitary_frame(f);
  const int pairs = n * (n - 1) / 2;
  Eigen::MatrixXd stacked(pairs * n, n);
  int row = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      stacked.block(row, 0, n, n) = Z_B(f, B, E.col(i), E.col(j));
      row += n;
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
  NullityResult out;
  out.B = B;
  const double top = svd.singularValues()(0);
  for (int k = 0; k < n; ++k) out.singular_values.push_back(svd.singularValues()(k));
  for (int k = 0; k < n; ++k)
    if (svd.singularValues()(k) <= 1e-7 * std::max(top, 1e-300)) ++out.dimension;
  if (top <= 1e-12) out.dimension = n;  // operator identically zero
  out.basis = svd.matrixV().rightCols(out.dimension);
  if (out.dimension > 0 && out.dimension < n) {
    const Eigen::MatrixXd JB = f.J.values() * out.basis;
    out.j_invariance =
        (JB - out.basis * (out.basis.transpose() * JB)).norm();
  }
  return out;
}

// Nullity dimensions over a grid of B values (uniqueness scan).
inline std::vector<int> nullity_scan(const PointFrame& f, const std::vector<double>& Bs) {
  std::vector<int> dims;
  for (double b : Bs) dims.push_back(nullity_space(f, b).dimension);
  return dims;
}

inline std::vector<double> b_grid(double center, double radius, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i)
    g.push_back(center - radius + 2.0 * radius * i / (count - 1));
  return g;
}

// max over frame pairs of || [R(X,Y), A] + 4 [K(X,Y), nabla Lambda] ||
inline double integrability_residual(const SolvedPoint& sp) {
  const PointFrame& f = sp.ev.frame;
  const int n = f.dim();
  const Eigen::MatrixXd E = unitary_frame(f);
  const Eigen::MatrixXd Av = sp.sol.A.values();
  const Eigen::MatrixXd NL = nabla_lambda(sp);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Eigen::MatrixXd R = f.R.endo(E.col(i), E.col(j));
      const Eigen::MatrixXd K = K_tensor(f, E.col(i), E.col(j));
      const Eigen::MatrixXd res =
          (R * Av - Av * R) + 4.0 * (K * NL - NL * K);
      worst = std::max(worst, res.norm());
    }
  return worst;
}

struct EquivalenceBattery {
  double bracket_ZA = 0.0;    // || [Z_B(X,Y), A] ||
  double scalar_line = 0.0;   // deviation of nabla Lambda - B A from span{Id}
  double Z_on_Jlambda = 0.0;  // || Z_B(X, J Lambda) ||
  double Z_on_gradxi = 0.0;   // || Z_B(X,Y) grad xi_i ||
};

inline EquivalenceBattery equivalence_battery(const std::vector<SolvedPoint>& pts,
                                              double B) {
  EquivalenceBattery out;
  for (const auto& sp : pts) {
    const PointFrame& f = sp.ev.frame;
    const int n = f.dim();
    const Eigen::MatrixXd E = unitary_frame(f);
    const Eigen::MatrixXd Av = sp.sol.A.values();
    const Eigen::MatrixXd NL = nabla_lambda(sp);
    const Eigen::MatrixXd D = NL - B * Av;
    out.scalar_line = std::max(
        out.scalar_line,
        (D - (D.trace() / n) * Eigen::MatrixXd::Identity(n, n)).norm());
    const Eigen::VectorXd Jlam = f.J.values() * values_of(sp.sol.lambda);
    std::vector<Eigen::VectorXd> gxi;
    const Eigen::MatrixXd ginv = f.g_inv.values();
    for (const auto& x : sp.ev.chart.xi) gxi.push_back(ginv * x.g);
    for (int i = 0; i < n; ++i) {
      out.Z_on_Jlambda =
          std::max(out.Z_on_Jlambda, (Z_B(f, B, E.col(i), Jlam)).norm());
      for (int j = i + 1; j < n; ++j) {
        const Eigen::MatrixXd Z = Z_B(f, B, E.col(i), E.col(j));
        out.bracket_ZA = std::max(out.bracket_ZA, (Z * Av - Av * Z).norm());
        for (const auto& v : gxi)
          out.Z_on_gradxi = std::max(out.Z_on_gradxi, (Z * v).norm());
      }
    }
  }
  return out;
}

// || [K(X,Y), nabla Lambda - B A - mu Id] + 1/4 [Z_B(X,Y), A] || maxed over
// frame pairs; an identity for arbitrary constants (B, mu).
inline double second_identity_residual(const SolvedPoint& sp, double B, double mu) {
  const PointFrame& f = sp.ev.frame;
  const int n = f.dim();
  const Eigen::MatrixXd E = unitary_frame(f);
  const Eigen::MatrixXd Av = sp.sol.A.values();
  const Eigen::MatrixXd D =
      nabla_lambda(sp) - B * Av - mu * Eigen::MatrixXd::Identity(n, n);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Eigen::MatrixXd K = K_tensor(f, E.col(i), E.col(j));
      const Eigen::MatrixXd Z = Z_B(f, B, E.col(i), E.col(j));
      worst = std::max(
          worst, ((K * D - D * K) + 0.25 * (Z * Av - Av * Z)).norm());
    }
  return worst;
}

struct KbracketCertificate {
  int kernel_dim = 0;
  double identity_distance = 0.0;  // generator distance from span{Id}
  std::vector<double> singular_values;
};

// Kernel of Q -> { [K(E_a, Z), Q] } on the hermitian endomorphisms (those
// commuting with J and g-symmetric). Expected: one-dimensional, spanned by Id.
inline KbracketCertificate verify_Kbracket_kernel(const PointFrame& f,
                                                  const Eigen::VectorXd& Z) {
  if (Z.norm() == 0.0) throw ZeroVector("verify_Kbracket_kernel: zero direction");
  const int n = f.dim();
  const int m = n / 2;
  const Eigen::MatrixXd E = unitary_frame(f);
  const Eigen::MatrixXd Einv = E.inverse();

  // hermitian basis in frame coordinates: blocks [[S, -T], [T, S]],
  // S symmetric, T antisymmetric; dimension m^2
  std::vector<Eigen::MatrixXd> basis;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
      M(i, j) = M(j, i) = M(m + i, m + j) = M(m + j, m + i) = 1.0;
      basis.push_back(E * M * Einv);
    }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      // antisymmetric T block: T(i,j) = 1, T(j,i) = -1
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
      M(m + i, j) = 1.0;
      M(m + j, i) = -1.0;
      M(i, m + j) = -1.0;
      M(j, m + i) = 1.0;
      basis.push_back(E * M * Einv);
    }
  const int d = static_cast<int>(basis.size());

  std::vector<Eigen::MatrixXd> Ks;
  for (int a = 0; a < n; ++a) Ks.push_back(K_tensor(f, E.col(a), Z));
  Eigen::MatrixXd map(n * n * n, d);
  for (int q = 0; q < d; ++q) {
    int row = 0;
    for (int a = 0; a < n; ++a) {
      const Eigen::MatrixXd C = Ks[a] * basis[q] - basis[q] * Ks[a];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) map(row++, q) = C(i, j);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeThinV);
  KbracketCertificate out;
  const double top = svd.singularValues()(0);
  for (int k = 0; k < d; ++k) {
    out.singular_values.push_back(svd.singularValues()(k));
    if (svd.singularValues()(k) <= 1e-8 * top) ++out.kernel_dim;
  }
  if (out.kernel_dim >= 1) {
    Eigen::VectorXd coeff = svd.matrixV().col(d - 1);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int q = 0; q < d; ++q) Q += coeff(q) * basis[q];
    Q /= Q.norm();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    out.identity_distance = (Q - (Q.trace() / n) * I).norm();
  }
  return out;
}

// Closed-form constant for 4D from the two profile polynomials, with the
// residual of its eigenvalue-independence condition.
struct BExplicit {
  double B = 0.0;
  double derivB_residual = 0.0;
};

inline BExplicit b_explicit_4d(const Polynomial& F1, const Polynomial& F2, double xi1,
                               double xi2) {
  if (xi1 == xi2)
    throw CoincidentEigenvalues("b_explicit_4d: eigenvalues must be distinct");
  const double d = xi1 - xi2;
  BExplicit out;
  out.B = ((F1.derivative()(xi1) + F2.derivative()(xi2)) * d -
           2.0 * (F1(xi1) - F2(xi2))) /
          (4.0 * d * d * d);
  out.derivB_residual =
      std::abs(F2.derivative().derivative()(xi2) * d * d +
               2.0 * (F1.derivative()(xi1) + 2.0 * F2.derivative()(xi2)) * d -
               6.0 * (F1(xi1) - F2(xi2)));
  return out;
}

}  // namespace kmob
