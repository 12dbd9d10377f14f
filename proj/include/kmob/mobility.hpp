#pragma once

// Solution-space verification: membership residual for the defining first
// order system of A, least-squares estimation of the constants (B, mu),
// the full three-line system residuals, construction of derived solutions,
// mobility lower-bound certificates, the invariant polynomial F(t), and the
// c-projective companion metric round trip.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "kmob/fd.hpp"
#include "kmob/metrics.hpp"

namespace kmob {

struct SolvedPoint {
  Eval ev;
  Solution sol;
};

using SolField = std::function<SolvedPoint(const Eigen::VectorXd&)>;

inline SolField instance_field(InstancePtr inst) {
  return [inst](const Eigen::VectorXd& p) {
    SolvedPoint sp{evaluate(*inst, p), {}};
    sp.sol = sp.ev.chart.solution();
    return sp;
  };
}

inline std::vector<SolvedPoint> solve_points(const SolField& field,
                                             const std::vector<Eigen::VectorXd>& pts) {
  std::vector<SolvedPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(field(p));
  return out;
}

// nabla Lambda as an endomorphism: N(b,a) = nabla_a Lambda^b.
inline Eigen::MatrixXd nabla_lambda(const SolvedPoint& sp) {
  return cov_vector(sp.sol.lambda, sp.ev.frame.gamma).transpose();
}

// Right side of the defining equation evaluated on the coordinate vector e_a.
inline Eigen::MatrixXd main_eq_rhs(const PointFrame& f, const Eigen::VectorXd& lam, int a) {
  const int n = f.dim();
  const Eigen::MatrixXd gv = f.g.values(), Jv = f.J.values();
  const Eigen::VectorXd X = Eigen::VectorXd::Unit(n, a);
  const Eigen::VectorXd JX = Jv * X, Jlam = Jv * lam;
  return lam * (gv * X).transpose() + X * (gv * lam).transpose() +
         Jlam * (gv * JX).transpose() + JX * (gv * Jlam).transpose();
}

// max_a || (nabla A)_{e_a} - rhs(e_a) ||_F
inline double main_equation_residual(const SolvedPoint& sp) {
  const int n = sp.ev.frame.dim();
  const auto dA = cov_endo(sp.sol.A, sp.ev.frame.gamma);
  const Eigen::VectorXd lam = values_of(sp.sol.lambda);
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    worst = std::max(worst, (dA[a] - main_eq_rhs(sp.ev.frame, lam, a)).norm());
  return worst;
}

struct BmuEstimate {
  double B = 0.0;
  std::vector<double> mu;       // per point
  double fit_residual = 0.0;    // max || nabla Lambda - mu Id - B A ||
  double B_spread = 0.0;        // max |B_p - B|
  std::vector<double> mu_trace; // cross-check from 2m mu = tr nabla Lambda - B tr A
};

// Per-point least squares for nabla Lambda = mu Id + B A in span{Id, A},
// then B averaged over points.
inline BmuEstimate estimate_B_mu(const std::vector<SolvedPoint>& pts) {
  if (pts.size() < 2) throw DegenerateFit("estimate_B_mu: needs at least two points");
  std::vector<double> Bs, mus;
  for (const auto& sp : pts) {
    const int n = sp.ev.frame.dim();
    const Eigen::MatrixXd Av = sp.sol.A.values();
    const Eigen::MatrixXd NL = nabla_lambda(sp);
    const double tII = n, tIA = Av.trace(), tAA = (Av * Av).trace();
    const double det = tII * tAA - tIA * tIA;
    // det = 0 exactly when A is proportional to Id
    if (det < 1e-10 * std::max(1.0, tAA * tII)) {
      mus.push_back(NL.trace() / n);
      continue;
    }
    const double rI = NL.trace(), rA = (NL * Av).trace();
    mus.push_back((tAA * rI - tIA * rA) / det);
    Bs.push_back((tII * rA - tIA * rI) / det);
  }
  if (Bs.empty())
    throw DegenerateFit("estimate_B_mu: A proportional to Id at every sampled point");
  BmuEstimate est;
  for (double b : Bs) est.B += b;
  est.B /= static_cast<double>(Bs.size());
  est.mu = mus;
  for (double b : Bs) est.B_spread = std::max(est.B_spread, std::abs(b - est.B));
  for (size_t i = 0; i < pts.size(); ++i) {
    const auto& sp = pts[i];
    const int n = sp.ev.frame.dim();
    const Eigen::MatrixXd Av = sp.sol.A.values();
    const Eigen::MatrixXd NL = nabla_lambda(sp);
    est.fit_residual = std::max(
        est.fit_residual,
        (NL - mus[i] * Eigen::MatrixXd::Identity(n, n) - est.B * Av).norm());
    est.mu_trace.push_back((NL.trace() - est.B * Av.trace()) / n);
  }
  return est;
}

// mu from the trace identity 2m mu = tr nabla Lambda - B tr A.
inline double mu_from_trace(const SolvedPoint& sp, double B) {
  const int n = sp.ev.frame.dim();
  return (nabla_lambda(sp).trace() - B * sp.sol.A.values().trace()) / n;
}

// mu as a jet: value from the trace identity, first derivatives from the
// closed gradient relation nabla mu = 2B Lambda-flat, second derivatives from
// differentiating that relation (enough for one covariant derivative).
inline Jet2 mu_jet(const SolvedPoint& sp, double B) {
  const int n = sp.ev.frame.dim();
  Jet2 mu(n);
  mu.v = mu_from_trace(sp, B);
  std::vector<Jet2> lflat = sp.ev.chart.g * sp.sol.lambda;
  for (int a = 0; a < n; ++a) mu.g(a) = 2.0 * B * lflat[a].v;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) mu.h(a, b) = B * (lflat[b].g(a) + lflat[a].g(b));
  return mu;
}

struct ExtendedResiduals {
  double res_main = 0.0;
  double res_lambda = 0.0;  // || nabla Lambda - mu Id - B A || with per-point mu
  double res_mu = 0.0;      // FD gradient of mu vs 2B Lambda-flat
};

inline ExtendedResiduals extended_system_residual(const SolField& field, double B,
                                                  const std::vector<Eigen::VectorXd>& pts) {
  ExtendedResiduals r;
  const FdStencil st(1e-4, FdOrder::Central4, false);
  for (const auto& p : pts) {
    const SolvedPoint sp = field(p);
    const int n = sp.ev.frame.dim();
    r.res_main = std::max(r.res_main, main_equation_residual(sp));
    const double mu = mu_from_trace(sp, B);
    const Eigen::MatrixXd NL = nabla_lambda(sp);
    r.res_lambda = std::max(
        r.res_lambda,
        (NL - mu * Eigen::MatrixXd::Identity(n, n) - B * sp.sol.A.values()).norm());
    auto mu_field = [&](const Eigen::VectorXd& q) { return mu_from_trace(field(q), B); };
    const Eigen::VectorXd dmu = fd_gradient(mu_field, p, st);
    const Eigen::VectorXd lflat = sp.ev.frame.g.values() * values_of(sp.sol.lambda);
    r.res_mu = std::max(r.res_mu, (dmu - 2.0 * B * lflat).lpNorm<Eigen::Infinity>());
  }
  return r;
}

// --- derived solutions ----------------------------------------------------------

enum class TildeMode { Parallel, B0, Bneg1 };

// Derived element of the solution space. Parallel: A^2. B = 0:
// Lambda-flat (x) Lambda + its J image, with Lambda-tilde = mu Lambda.
// B = -1 (metric prescaled): A^2 + the B = 0 term, Lambda-tilde = (A + mu Id) Lambda.
inline Solution tilde_solution(const SolvedPoint& sp, TildeMode mode, double B) {
  const int n = sp.ev.frame.dim();
  const double lam_norm = values_of(sp.sol.lambda).norm();
  Solution out;
  if (mode == TildeMode::Parallel) {
    if (lam_norm > 1e-7)
      throw ModeMismatch("tilde_solution: parallel mode requires Lambda = 0");
    out.A = sp.sol.A * sp.sol.A;
    out.lambda.assign(n, Jet2(n));
    return out;
  }
  if (mode == TildeMode::B0 && std::abs(B) > 1e-7)
    throw ModeMismatch("tilde_solution: B0 mode requires B = 0");
  if (mode == TildeMode::Bneg1 && std::abs(B + 1.0) > 1e-6)
    throw ModeMismatch("tilde_solution: Bneg1 mode requires the metric scaled to B = -1");

  const std::vector<Jet2> lflat = sp.ev.chart.g * sp.sol.lambda;
  std::vector<Jet2> Jlam = sp.ev.chart.J * sp.sol.lambda;
  std::vector<Jet2> Jlflat(n, Jet2(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) Jlflat[a] += sp.ev.chart.g(a, b) * Jlam[b];
  JetMat rank2(n, n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      rank2(a, b) = sp.sol.lambda[a] * lflat[b] + Jlam[a] * Jlflat[b];

  const Jet2 mu = mu_jet(sp, B);
  if (mode == TildeMode::B0) {
    out.A = rank2;
    out.lambda.resize(n);
    for (int a = 0; a < n; ++a) out.lambda[a] = mu * sp.sol.lambda[a];
  } else {
    out.A = sp.sol.A * sp.sol.A + rank2;
    out.lambda = sp.sol.A * sp.sol.lambda;
    for (int a = 0; a < n; ++a) out.lambda[a] += mu * sp.sol.lambda[a];
  }
  return out;
}

// --- mobility certificate -------------------------------------------------------

struct MobilityCertificate {
  std::vector<std::string> labels;
  Eigen::MatrixXd gram;  // Frobenius pairing aggregated over points
  std::vector<double> singular_values;
  int rank = 0;
  double max_main_eq_residual = 0.0;
  double fitted_B = 0.0;
  bool scaled = false;  // metric rescaled so the fitted constant is -1
};

inline MobilityCertificate mobility_lower_bound(InstancePtr inst, int count,
                                                std::uint64_t seed) {
  const auto pts = inst->sample(count, seed);
  SolField field = instance_field(inst);
  std::vector<SolvedPoint> sps = solve_points(field, pts);

  double lam_norm = 0.0;
  for (const auto& sp : sps)
    lam_norm = std::max(lam_norm, values_of(sp.sol.lambda).norm());

  MobilityCertificate cert;
  std::vector<std::vector<Eigen::MatrixXd>> cands;  // per candidate, per point
  const int n = inst->dim();

  auto add_candidate = [&](const std::string& label,
                           const std::function<Solution(const SolvedPoint&)>& make) {
    std::vector<Eigen::MatrixXd> vals;
    double worst = 0.0;
    for (const auto& sp : sps) {
      SolvedPoint cand{sp.ev, make(sp)};
      worst = std::max(worst, main_equation_residual(cand));
      vals.push_back(cand.sol.A.values());
    }
    if (worst < 1e-6) {
      cert.labels.push_back(label);
      cands.push_back(std::move(vals));
      cert.max_main_eq_residual = std::max(cert.max_main_eq_residual, worst);
    }
  };

  auto identity_sol = [n](const SolvedPoint& sp) {
    Solution s{JetMat::identity(n, n), std::vector<Jet2>(n, Jet2(n))};
    (void)sp;
    return s;
  };

  if (lam_norm < 1e-9) {
    add_candidate("identity", identity_sol);
    add_candidate("A", [](const SolvedPoint& sp) { return sp.sol; });
    add_candidate("A_squared",
                  [](const SolvedPoint& sp) { return tilde_solution(sp, TildeMode::Parallel, 0.0); });
  } else {
    BmuEstimate est = estimate_B_mu(sps);
    cert.fitted_B = est.B;
    if (est.B < -1e-8) {
      // rescale the metric so the fitted constant becomes -1, then apply the
      // derived-solution construction on the rescaled data
      InstancePtr scaled = std::make_shared<ScaledInstance>(inst, -est.B);
      cert.scaled = true;
      sps = solve_points(instance_field(scaled), pts);
      add_candidate("identity", identity_sol);
      add_candidate("A", [](const SolvedPoint& sp) { return sp.sol; });
      add_candidate("A_tilde", [](const SolvedPoint& sp) {
        return tilde_solution(sp, TildeMode::Bneg1, -1.0);
      });
    } else if (std::abs(est.B) <= 1e-8) {
      add_candidate("identity", identity_sol);
      add_candidate("A", [](const SolvedPoint& sp) { return sp.sol; });
      add_candidate("A_tilde",
                    [](const SolvedPoint& sp) { return tilde_solution(sp, TildeMode::B0, 0.0); });
    } else {
      add_candidate("identity", identity_sol);
      add_candidate("A", [](const SolvedPoint& sp) { return sp.sol; });
    }
  }

  const int k = static_cast<int>(cands.size());
  if (k == 0) throw DegenerateFit("mobility_lower_bound: no candidate passed the residual gate");
  cert.gram = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> norms(k, 0.0);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (const auto& m : cands[i]) s += m.squaredNorm();
    norms[i] = std::sqrt(s);
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (size_t p = 0; p < cands[i].size(); ++p)
        s += (cands[i][p].array() * cands[j][p].array()).sum();
      cert.gram(i, j) = s / (norms[i] * norms[j]);
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cert.gram);
  for (int i = 0; i < k; ++i) {
    cert.singular_values.push_back(svd.singularValues()(i));
    if (svd.singularValues()(i) > 1e-8 * svd.singularValues()(0)) ++cert.rank;
  }
  return cert;
}

// --- invariant polynomial -------------------------------------------------------

// p_A(t) as a jet through the point, via sqrt of the real characteristic
// polynomial of the hermitian endomorphism A. Requires t above the spectrum.
inline Jet2 char_poly_jet(const SolvedPoint& sp, double t) {
  const int n = sp.ev.frame.dim();
  JetMat M = -1.0 * sp.sol.A;
  for (int i = 0; i < n; ++i) M(i, i) = M(i, i) + t;
  return sqrt(M.det());
}

struct FPolyResult {
  std::vector<Eigen::VectorXd> coeffs;  // per point, ascending degree
  double spread = 0.0;                  // max coefficientwise deviation from the mean
  std::vector<double> nodes;
};

// F(t) = -4 (Bt + mu) p_A(t) + 2 dp_A(Lambda); the second term is the inner
// product of the two hamiltonian fields 2 J Lambda and J grad p_A(t), with the
// sign fixed by requiring point-independence (measured, not assumed).
inline FPolyResult f_polynomial(const std::vector<SolvedPoint>& pts, double B) {
  if (pts.empty()) throw EmptyDomain("f_polynomial: no points");
  const int n = pts[0].ev.frame.dim();
  const int m = n / 2;
  double ub = -1e300;
  for (const auto& sp : pts) {
    Eigen::VectorXcd ev = sp.sol.A.values().eigenvalues();
    for (int i = 0; i < ev.size(); ++i) ub = std::max(ub, ev(i).real());
  }
  FPolyResult out;
  const int deg = m + 1, nn = m + 2;
  for (int k = 0; k < nn; ++k) {
    const double x = std::cos((2.0 * k + 1.0) * M_PI / (2.0 * nn));
    out.nodes.push_back(ub + 1.0 + 0.5 * x);
  }
  Eigen::MatrixXd V(nn, deg + 1);
  for (int k = 0; k < nn; ++k)
    for (int j = 0; j <= deg; ++j) V(k, j) = std::pow(out.nodes[k], j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(0) / svd.singularValues()(deg) > 1e10)
    throw IllConditioned("f_polynomial: node matrix condition above 1e10");

  for (const auto& sp : pts) {
    const double mu = mu_from_trace(sp, B);
    const Eigen::VectorXd lam = values_of(sp.sol.lambda);
    Eigen::VectorXd F(nn);
    for (int k = 0; k < nn; ++k) {
      const Jet2 pA = char_poly_jet(sp, out.nodes[k]);
      F(k) = -4.0 * (B * out.nodes[k] + mu) * pA.v + 2.0 * pA.g.dot(lam);
    }
    out.coeffs.push_back(svd.solve(F));
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(deg + 1);
  for (const auto& c : out.coeffs) mean += c;
  mean /= static_cast<double>(out.coeffs.size());
  for (const auto& c : out.coeffs)
    out.spread = std::max(out.spread, (c - mean).lpNorm<Eigen::Infinity>());
  return out;
}

// --- c-projective companion metric ----------------------------------------------

struct CprojResult {
  double roundtrip = 0.0;  // || A(g, g-tilde) - A ||
  double pattern_residual = 0.0;
  Eigen::VectorXd phi;  // the 1-form of the connection difference
};

// g-tilde = (det A)^{-1/2} g A^{-1}; the Levi-Civita connections must differ
// by the c-projective pattern Phi_a d^c_b + Phi_b d^c_a - (Phi J)_a J^c_b
// - (Phi J)_b J^c_a, with Phi recovered from the trace.
inline CprojResult cproj_pair(const SolvedPoint& sp, double shift = 0.0) {
  const int n = sp.ev.frame.dim();
  JetMat A = sp.sol.A;
  if (shift != 0.0)
    for (int i = 0; i < n; ++i) A(i, i) = A(i, i) + shift;
  Jet2 detA = A.det();
  if (std::abs(detA.v) < 1e-10)
    throw SingularA("cproj_pair: endomorphism numerically singular after shifting");
  if (detA.v < 0.0)
    throw SingularA("cproj_pair: negative determinant, endomorphism not hermitian");
  const Jet2 s = sqrt(detA).reciprocal();
  JetMat gt = s * (sp.ev.chart.g * A.inverse());
  const auto gamma_t = christoffel(gt, gt.inverse());

  // round trip through the defining relation
  const double w = std::pow(gt.values().determinant() / sp.ev.frame.g.values().determinant(),
                            1.0 / (2.0 * (n / 2 + 1)));
  CprojResult out;
  out.roundtrip = (w * gt.values().inverse() * sp.ev.frame.g.values() - A.values()).norm();

  const Eigen::MatrixXd Jv = sp.ev.frame.J.values();
  std::vector<Eigen::MatrixXd> D(n);  // D[c](a,b) = difference tensor
  for (int c = 0; c < n; ++c)
    D[c] = gamma_t[c].values() - sp.ev.frame.gamma[c].values();
  out.phi = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out.phi(a) += D[b](a, b);
  out.phi /= static_cast<double>(n + 2);
  const Eigen::VectorXd phiJ = Jv.transpose() * out.phi;  // (Phi J)_a = Phi_c J^c_a
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double worst = 0.0;
      for (int c = 0; c < n; ++c) {
        double pat = out.phi(a) * (b == c) + out.phi(b) * (a == c) -
                     phiJ(a) * Jv(c, b) - phiJ(b) * Jv(c, a);
        worst = std::max(worst, std::abs(D[c](a, b) - pat));
      }
      out.pattern_residual = std::max(out.pattern_residual, worst);
    }
  return out;
}

}  // namespace kmob
