#pragma once

// Complex cone over a base whose solution system has constant -1: cone
// metric and complex structure, the parallel endomorphism built from a base
// solution triple (A, Lambda, mu), and the quotient-side bookkeeping
// (eigenvalue interlacing, radial functions, Vandermonde sums, the quotient
// algebraic identity and the mobility count of a decomposition).

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "kmob/mobility.hpp"

namespace kmob {

// Re-embed a jet in n base variables into n+2 cone variables (r, t, base...).
inline Jet2 pad_jet(const Jet2& a, int nhat) {
  const int n = a.dim();
  Jet2 r(nhat);
  r.v = a.v;
  r.g.segment(2, n) = a.g;
  r.h.block(2, 2, n, n) = a.h;
  return r;
}

struct ConeEval {
  Eigen::VectorXd point;  // (r, t, base...)
  JetMat g, J;
  PointFrame frame;
  Jet2 r;
  std::vector<Jet2> phi;  // phi = dt - tau, padded
  Eval base;
};

class ConeInstance {
 public:
  explicit ConeInstance(InstancePtr base, double r_min = 0.5, double r_max = 2.0)
      : base_(std::move(base)), r_min_(r_min), r_max_(r_max) {
    if (r_min_ <= 0.0 || r_max_ <= r_min_)
      throw ConstructionError("cone: radial band must satisfy 0 < r_min < r_max");
  }

  int dim() const { return base_->dim() + 2; }
  InstancePtr base() const { return base_; }

  ConeEval eval(const Eigen::VectorXd& phat) const {
    const int n = base_->dim();
    const int nh = n + 2;
    if (phat.size() != nh) throw DomainViolation("cone: wrong point dimension");
    const double rv = phat(0);
    if (rv < r_min_ || rv > r_max_)
      throw DomainViolation("cone: radial coordinate outside the band");

    ConeEval ce;
    ce.point = phat;
    ce.base = evaluate(*base_, phat.segment(2, n));
    if (ce.base.chart.tau.empty())
      throw MissingPotential("cone: base chart carries no potential 1-form");

    ce.r = Jet2::variable(rv, 0, nh);
    const Jet2 r2 = ce.r * ce.r;

    // phi = dt + tau: the sign that makes hat J parallel with our orientation
    // of the base Kahler form (measured, see the J column construction below)
    std::vector<Jet2> tau(n);
    for (int a = 0; a < n; ++a) tau[a] = pad_jet(ce.base.chart.tau[a], nh);
    ce.phi.assign(nh, Jet2(nh));
    ce.phi[1] = Jet2::constant(1.0, nh);
    for (int a = 0; a < n; ++a) ce.phi[2 + a] = tau[a];

    // hat g = dr^2 + r^2 (phi^2 + g)
    ce.g = JetMat(nh, nh, nh);
    ce.g(0, 0) = Jet2::constant(1.0, nh);
    for (int i = 1; i < nh; ++i)
      for (int j = 1; j < nh; ++j) ce.g(i, j) = r2 * (ce.phi[i] * ce.phi[j]);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        ce.g(2 + a, 2 + b) += r2 * pad_jet(ce.base.chart.g(a, b), nh);

    // hat J columns: d_r -> (1/r) d_t, d_t -> -r d_r,
    // base e_a -> J e_a - tau(J e_a) d_t - r tau(e_a) d_r
    // (the d_t and d_r coefficients are forced by hat J^2 = -Id and
    // hermiticity once phi is fixed)
    ce.J = JetMat(nh, nh, nh);
    ce.J(1, 0) = ce.r.reciprocal();
    ce.J(0, 1) = -1.0 * ce.r;
    for (int a = 0; a < n; ++a) {
      Jet2 tJa(nh);
      for (int b = 0; b < n; ++b) {
        const Jet2 Jba = pad_jet(ce.base.chart.J(b, a), nh);
        ce.J(2 + b, 2 + a) = Jba;
        tJa -= tau[b] * Jba;
      }
      ce.J(1, 2 + a) = tJa;
      ce.J(0, 2 + a) = -1.0 * (ce.r * tau[a]);
    }

    ce.frame = make_frame(phat, ce.g, ce.J);
    return ce;
  }

  // Cone points over base samples: r and t low-discrepancy in the band.
  std::vector<Eigen::VectorXd> sample(int count, std::uint64_t seed) const {
    auto bpts = base_->sample(count, seed);
    auto rt = halton_points(count, 2, seed + 7);
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd p(dim());
      p(0) = r_min_ + rt[i](0) * (r_max_ - r_min_);
      p(1) = -0.5 + rt[i](1);
      p.segment(2, base_->dim()) = bpts[i];
      out.push_back(p);
    }
    return out;
  }

 private:
  InstancePtr base_;
  double r_min_, r_max_;
};

// Endomorphism on the cone from a base solution triple, via the bilinear form
//   mu dr^2 - r dr (.) Lambda-flat
//   + r^2 (mu phi^2 + phi (.) Lambda-flat(J.) + g(A.,.)),
// (.) the symmetric product, index raised by the cone metric. Requires the
// base system constant to be -1.
inline JetMat hatA_from_solution(const ConeEval& ce, const Solution& sol, double B) {
  if (std::abs(B + 1.0) > 1e-6)
    throw WrongB("hatA_from_solution: base solution constant must be -1");
  const int n = ce.base.frame.dim();
  const int nh = n + 2;
  SolvedPoint sp{ce.base, sol};
  const Jet2 mu = pad_jet(mu_jet(sp, B), nh);
  const Jet2 r2 = ce.r * ce.r;

  std::vector<Jet2> lflat_base = ce.base.chart.g * sol.lambda;
  std::vector<Jet2> lflat(nh, Jet2(nh)), lflatJ(nh, Jet2(nh));
  for (int a = 0; a < n; ++a) lflat[2 + a] = pad_jet(lflat_base[a], nh);
  for (int a = 0; a < n; ++a) {
    Jet2 s(nh);
    for (int b = 0; b < n; ++b)
      s += lflat[2 + b] * pad_jet(ce.base.chart.J(b, a), nh);
    lflatJ[2 + a] = s;
  }

  JetMat form(nh, nh, nh);
  form(0, 0) = mu;
  for (int i = 0; i < nh; ++i) {
    form(0, i) -= ce.r * lflat[i];
    form(i, 0) -= ce.r * lflat[i];
  }
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nh; ++j)
      form(i, j) += r2 * (mu * (ce.phi[i] * ce.phi[j]) + ce.phi[i] * lflatJ[j] +
                          lflatJ[i] * ce.phi[j]);
  // g(A., .) on the base block
  const JetMat gA = ce.base.chart.g * sol.A;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) form(2 + a, 2 + b) += r2 * pad_jet(gA(a, b), nh);

  return ce.g.inverse() * form;
}

// max over points of || hat-nabla hatA ||, plus the eigenvalue spread.
struct ParallelReport {
  double nabla_residual = 0.0;
  double eigenvalue_spread = 0.0;
  std::vector<double> eigenvalues;  // from the first point, sorted
};

inline ParallelReport parallel_residual(
    const std::vector<std::pair<ConeEval, JetMat>>& pts) {
  if (pts.empty()) throw EmptyDomain("parallel_residual: no points");
  ParallelReport out;
  std::vector<Eigen::VectorXd> eigs;
  for (const auto& [ce, hatA] : pts) {
    out.nabla_residual =
        std::max(out.nabla_residual, frob(cov_endo(hatA, ce.frame.gamma)));
    Eigen::VectorXcd ev = hatA.values().eigenvalues();
    Eigen::VectorXd re = ev.real();
    std::sort(re.data(), re.data() + re.size());
    eigs.push_back(re);
  }
  out.eigenvalues.assign(eigs[0].data(), eigs[0].data() + eigs[0].size());
  for (const auto& e : eigs)
    out.eigenvalue_spread =
        std::max(out.eigenvalue_spread, (e - eigs[0]).lpNorm<Eigen::Infinity>());
  return out;
}

// residual of hat-nabla C = Id for the cone field C = r d_r
inline double cone_field_residual(const ConeEval& ce) {
  const int nh = ce.frame.dim();
  std::vector<Jet2> C(nh, Jet2(nh));
  C[0] = ce.r;
  return (cov_vector(C, ce.frame.gamma) - Eigen::MatrixXd::Identity(nh, nh)).norm();
}

// Killing residual of K = 1/2 hatJ grad r^2 (= d_t in these coordinates)
inline double moment_killing_residual(const ConeEval& ce) {
  const int nh = ce.frame.dim();
  std::vector<Jet2> dr2(nh, Jet2(nh));
  const Jet2 r2 = ce.r * ce.r;
  for (int a = 0; a < nh; ++a) dr2[a] = r2.dpartial(a);
  std::vector<Jet2> K = ce.J * (ce.frame.g_inv * dr2);
  for (auto& e : K) e = 0.5 * e;
  return killing_residual(K, ce.frame);
}

// --- quotient-side bookkeeping --------------------------------------------------

inline void require_distinct(const std::vector<double>& C) {
  for (size_t i = 0; i < C.size(); ++i)
    for (size_t j = i + 1; j < C.size(); ++j)
      if (C[i] == C[j])
        throw DuplicateEigenvalues("eigenvalue list must be distinct");
}

// p_A(t) = r^{-2} prod_i (t - C_i)^{m_i - 1} sum_i r_i^2 prod_{j != i} (t - C_j)
inline double char_poly_relation(const std::vector<double>& C, const std::vector<int>& m,
                                 const std::vector<double>& r_values, double t) {
  if (C.size() != m.size() || C.size() != r_values.size())
    throw LengthMismatch("char_poly_relation: mismatched lists");
  double r2 = 0.0;
  for (double ri : r_values) r2 += ri * ri;
  if (r2 <= 0.0) throw ZeroVector("char_poly_relation: all radii zero");
  double head = 1.0;
  for (size_t i = 0; i < C.size(); ++i)
    for (int k = 0; k < m[i] - 1; ++k) head *= (t - C[i]);
  double s = 0.0;
  for (size_t i = 0; i < C.size(); ++i) {
    double p = r_values[i] * r_values[i];
    for (size_t j = 0; j < C.size(); ++j)
      if (j != i) p *= (t - C[j]);
    s += p;
  }
  return head * s / r2;
}

// C_0 <= xi_1 <= C_1 <= ... <= xi_l <= C_l
inline bool interlacing_check(const std::vector<double>& C, const std::vector<double>& xi) {
  if (xi.size() + 1 != C.size())
    throw LengthMismatch("interlacing_check: need one more constant than eigenvalue");
  for (size_t i = 0; i < xi.size(); ++i)
    if (xi[i] < C[i] || xi[i] > C[i + 1]) return false;
  return true;
}

// r_I^2 = prod_i (C_I - xi_i) / prod_{J != I} (C_I - C_J)
template <typename Scalar>
std::vector<Scalar> r2_from_xi_generic(const std::vector<double>& C,
                                       const std::vector<Scalar>& xi, const Scalar& one) {
  std::vector<Scalar> out;
  for (size_t I = 0; I < C.size(); ++I) {
    Scalar num = one;
    for (const auto& x : xi) num = num * (C[I] - x);
    double den = 1.0;
    for (size_t J = 0; J < C.size(); ++J)
      if (J != I) den *= (C[I] - C[J]);
    out.push_back((1.0 / den) * num);
  }
  return out;
}

inline std::vector<double> r_from_xi(const std::vector<double>& C,
                                     const std::vector<double>& xi) {
  require_distinct(C);
  auto r2 = r2_from_xi_generic<double>(C, xi, 1.0);
  std::vector<double> out;
  for (double v : r2) {
    if (v < 0.0) throw NegativeSquare("r_from_xi: interlacing violated");
    out.push_back(std::sqrt(v));
  }
  return out;
}

inline std::vector<Jet2> r2_from_xi_jets(const std::vector<double>& C,
                                         const std::vector<Jet2>& xi) {
  require_distinct(C);
  if (xi.empty()) throw EmptyDomain("r2_from_xi_jets: no eigenvalues");
  return r2_from_xi_generic<Jet2>(C, xi, Jet2::constant(1.0, xi[0].dim()));
}

// coefficient of d xi_i in d(r_I^2): - prod_{j != i} (C_I - xi_j) / prod_{J != I} (C_I - C_J)
inline double trafo_dr_coefficient(const std::vector<double>& C,
                                   const std::vector<double>& xi, size_t I, size_t i) {
  double num = -1.0;
  for (size_t j = 0; j < xi.size(); ++j)
    if (j != i) num *= (C[I] - xi[j]);
  double den = 1.0;
  for (size_t J = 0; J < C.size(); ++J)
    if (J != I) den *= (C[I] - C[J]);
  return num / den;
}

// roots of sum_I r_I^2 prod_{J != I} (t - C_J), bisected per interlacing interval
inline std::vector<double> xi_from_r(const std::vector<double>& C,
                                     const std::vector<double>& r_values) {
  require_distinct(C);
  auto poly_at = [&](double t) {
    double s = 0.0;
    for (size_t I = 0; I < C.size(); ++I) {
      double p = r_values[I] * r_values[I];
      for (size_t J = 0; J < C.size(); ++J)
        if (J != I) p *= (t - C[J]);
      s += p;
    }
    return s;
  };
  std::vector<double> roots;
  for (size_t k = 0; k + 1 < C.size(); ++k) {
    double lo = C[k], hi = C[k + 1];
    double flo = poly_at(lo), fhi = poly_at(hi);
    if (flo == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if (fhi == 0.0) {
      roots.push_back(hi);
      continue;
    }
    if (flo * fhi > 0.0)
      throw EvaluationFailed("xi_from_r: no sign change in an interlacing interval");
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const double fm = poly_at(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if (flo * fm < 0.0)
        hi = mid;
      else {
        lo = mid;
        flo = fm;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return roots;
}

// Theta(t) = -4 prod_I (t - C_I)
inline Polynomial theta_from_cone(const std::vector<double>& C) {
  require_distinct(C);
  return -4.0 * Polynomial::from_roots(C);
}

// sum_I C_I^k / prod_{J != I} (C_I - C_J): 0 for k < l, 1 for k = l
inline double vandermonde_sum(const std::vector<double>& C, int k) {
  require_distinct(C);
  double s = 0.0;
  for (size_t I = 0; I < C.size(); ++I) {
    double den = 1.0;
    for (size_t J = 0; J < C.size(); ++J)
      if (J != I) den *= (C[I] - C[J]);
    s += std::pow(C[I], k) / den;
  }
  return s;
}

// residual of  sum r_i^2 f_i^2 - (sum r_i^2 f_i)^2 = 1/2 sum r_i^2 r_j^2 (f_i - f_j)^2
// with f_i = phi_i(X), maxed over the supplied tangent vectors; requires the
// unit level set sum r_i^2 = 1.
inline double quotient_identity(const std::vector<double>& r_values,
                                const std::vector<Eigen::VectorXd>& phis,
                                const std::vector<Eigen::VectorXd>& vectors) {
  if (r_values.size() != phis.size())
    throw LengthMismatch("quotient_identity: one covector per block required");
  double r2 = 0.0;
  for (double ri : r_values) r2 += ri * ri;
  if (std::abs(r2 - 1.0) > 1e-10)
    throw NotOnLevelSet("quotient_identity: radii must lie on the unit level set");
  double worst = 0.0;
  for (const auto& X : vectors) {
    double lhs = 0.0, mean = 0.0, rhs = 0.0;
    std::vector<double> f;
    for (size_t i = 0; i < phis.size(); ++i) f.push_back(phis[i].dot(X));
    for (size_t i = 0; i < f.size(); ++i) {
      const double w = r_values[i] * r_values[i];
      lhs += w * f[i] * f[i];
      mean += w * f[i];
    }
    lhs -= mean * mean;
    for (size_t i = 0; i < f.size(); ++i)
      for (size_t j = 0; j < f.size(); ++j)
        rhs += 0.5 * r_values[i] * r_values[i] * r_values[j] * r_values[j] *
               (f[i] - f[j]) * (f[i] - f[j]);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// Mobility of a cone decomposed into f flat complex dimensions and i
// irreducible non-flat factors: f^2 + i.
inline int mobility_from_decomposition(int f, int i) {
  if (f < 0 || i < 0 || f + i < 1)
    throw InvalidDecomposition("mobility_from_decomposition: need f, i >= 0, f + i >= 1");
  return f * f + i;
}

}  // namespace kmob
