#pragma once

// Metric family constructors. Every chart evaluator returns exact 2-jets of
// the metric, the complex structure, the potential 1-form (d tau = 2 omega),
// the hamiltonian form phi and the solution endomorphism A with its vector
// field Lambda = 1/4 grad_g tr A.
//
// Families:
//   - SpaceForm(m, c): constant holomorphic sectional curvature c on a ball
//     chart, Fubini-Study / flat / hyperbolic potential.
//   - Orthotoric4D(F1, F2): two nonconstant eigenvalue coordinates, profile
//     polynomials F1, F2.
//   - HamiltonianBundle(l, Theta_j, constant eigenvalues with space-form
//     bases): the general local form with l nonconstant eigenvalues fibred
//     over a product of space forms.
//   - Product: block product with parallel A.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kmob/geometry.hpp"
#include "kmob/polynomial.hpp"
#include "kmob/sampling.hpp"

namespace kmob {

struct Flags {
  bool bochner_flat = false;
  bool weakly_bochner_flat = false;
  bool chsc = false;
  bool kahler_einstein = false;
  // Constant of the profile-polynomial criterion, -lead(Theta)/4. The
  // empirical sign relation to the fitted constant is measured at runtime.
  std::optional<double> ccb_B;
};

// Solution data detached from a chart (used for derived solutions).
struct Solution {
  JetMat A;                  // value and gradient exact
  std::vector<Jet2> lambda;  // value and gradient exact
};

struct Chart {
  Eigen::VectorXd point;
  JetMat g, J, omega, phi, A;
  std::vector<Jet2> tau;     // potential 1-form, d tau = 2 omega
  std::vector<Jet2> xi;      // nonconstant eigenvalue coordinates
  std::vector<Jet2> lambda;  // 1/4 grad_g tr A
  int ell = 0;
  // unweighted Kahler forms of the constant-eigenvalue base blocks,
  // embedded in chart coordinates (value matrices)
  std::vector<Eigen::MatrixXd> base_omegas;

  Solution solution() const { return {A, lambda}; }
};

namespace detail {

// A = g^{-1} phi J from the dictionary g(AX,Y) = phi(X,JY);
// Lambda = 1/4 grad_g tr A.
inline void finish_chart(Chart& c) {
  const int n = c.g.rows();
  c.omega = c.J.transpose() * c.g;
  const JetMat ginv = c.g.inverse();
  c.A = ginv * (c.phi * c.J);
  const Jet2 tr = c.A.trace();
  std::vector<Jet2> dtr(n, Jet2(n));
  for (int a = 0; a < n; ++a) dtr[a] = tr.dpartial(a);
  c.lambda = ginv * dtr;
  for (auto& e : c.lambda) e = 0.25 * e;
}

inline void check_positive(const Eigen::MatrixXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw DomainViolation("metric not positive definite at the point");
}

}  // namespace detail

// --- space form block ---------------------------------------------------------

// Hermitian metric of constant holomorphic sectional curvature c on the chart
// |z|^2 < 4/|c| (all z for c >= 0), from the potential (2/c) log(1 + c|z|^2/4).
// z = (x_1..x_mb, y_1..y_mb) as jets in an ambient nvars-variable space.
struct BaseChart {
  JetMat g, Jm;
  std::vector<Jet2> tau;  // d tau = 2 omega on the block
};

inline BaseChart spaceform_block(int mb, double c, const std::vector<Jet2>& z, int nvars) {
  const int nn = 2 * mb;
  Jet2 u(nvars);
  for (const auto& zk : z) u += zk * zk;
  u = (c / 4.0) * u;
  if (u.v <= -1.0 + 1e-9) throw DomainViolation("space form chart: outside the model ball");
  const Jet2 f = (u + 1.0).reciprocal();
  const Jet2 f2 = f * f;
  BaseChart bc{JetMat(nn, nn, nvars), JetMat(nn, nn, nvars),
               std::vector<Jet2>(nn, Jet2(nvars))};
  for (int i = 0; i < mb; ++i)
    for (int j = 0; j < mb; ++j) {
      Jet2 S = -(c / 8.0) * (f2 * (z[i] * z[j] + z[mb + i] * z[mb + j]));
      if (i == j) S += 0.5 * f;
      Jet2 T = -(c / 8.0) * (f2 * (z[i] * z[mb + j] - z[mb + i] * z[j]));
      bc.g(i, j) = 2.0 * S;
      bc.g(mb + i, mb + j) = 2.0 * S;
      bc.g(i, mb + j) = 2.0 * T;
      bc.g(mb + j, i) = 2.0 * T;
    }
  for (int k = 0; k < mb; ++k) {
    bc.Jm(mb + k, k) = Jet2::constant(1.0, nvars);
    bc.Jm(k, mb + k) = Jet2::constant(-1.0, nvars);
    bc.tau[k] = -1.0 * (f * z[mb + k]);
    bc.tau[mb + k] = f * z[k];
  }
  return bc;
}

// --- instance interface -------------------------------------------------------

struct EtaBlock {
  double eta = 0.0;  // constant eigenvalue
  int mult = 1;      // complex multiplicity = complex base dimension
  double c = 0.0;    // base space form curvature
};

class Instance {
 public:
  virtual ~Instance() = default;
  virtual int dim() const = 0;
  virtual Chart chart(const Eigen::VectorXd& p) const = 0;
  virtual std::vector<Eigen::VectorXd> sample(int count, std::uint64_t seed) const = 0;
  virtual Flags classify() const = 0;
  virtual std::string name() const = 0;
  virtual int n_nonconstant() const { return 0; }
  virtual std::vector<Polynomial> thetas() const { return {}; }
  virtual std::vector<EtaBlock> etas() const { return {}; }
  // Upper bound for eigenvalues of A over the domain.
  virtual double spectrum_upper() const = 0;
};

using InstancePtr = std::shared_ptr<const Instance>;

namespace detail {

// Low-discrepancy points mapped into per-coordinate intervals.
inline std::vector<Eigen::VectorXd> box_sample(const std::vector<std::pair<double, double>>& box,
                                               double margin_frac, int count,
                                               std::uint64_t seed) {
  const int n = static_cast<int>(box.size());
  for (const auto& [lo, hi] : box)
    if (hi - lo <= 2.0 * margin_frac * (hi - lo) || hi <= lo)
      throw EmptyDomain("sampling box collapses under the margin");
  auto raw = halton_points(count, n, seed);
  for (auto& p : raw)
    for (int k = 0; k < n; ++k) {
      const double w = box[k].second - box[k].first;
      p(k) = box[k].first + margin_frac * w + p(k) * w * (1.0 - 2.0 * margin_frac);
    }
  return raw;
}

}  // namespace detail

// --- space form instance ------------------------------------------------------

class SpaceFormInstance : public Instance {
 public:
  SpaceFormInstance(int m, double c, double half_width = 0.5)
      : m_(m), c_(c), half_(half_width) {
    if (m < 1) throw ConstructionError("space form: complex dimension must be >= 1");
    if (c != 0.0 && half_ * half_ * 2 * m >= 4.0 / std::abs(c))
      throw ConstructionError("space form: chart box exceeds the model ball");
  }

  int dim() const override { return 2 * m_; }
  double curvature() const { return c_; }
  int complex_dim() const { return m_; }

  Chart chart(const Eigen::VectorXd& p) const override {
    const int n = dim();
    if (p.size() != n) throw DomainViolation("space form: wrong point dimension");
    std::vector<Jet2> z(n);
    for (int k = 0; k < n; ++k) z[k] = Jet2::variable(p(k), k, n);
    BaseChart bc = spaceform_block(m_, c_, z, n);
    Chart c;
    c.point = p;
    c.g = bc.g;
    c.J = bc.Jm;
    c.tau = bc.tau;
    c.phi = bc.Jm.transpose() * bc.g;  // phi = omega gives A = Id
    detail::check_positive(c.g.values());
    detail::finish_chart(c);
    return c;
  }

  std::vector<Eigen::VectorXd> sample(int count, std::uint64_t seed) const override {
    std::vector<std::pair<double, double>> box(dim(), {-half_, half_});
    return detail::box_sample(box, 0.05, count, seed);
  }

  Flags classify() const override {
    Flags f;
    f.bochner_flat = f.weakly_bochner_flat = f.chsc = f.kahler_einstein = true;
    f.ccb_B = c_ / 4.0;
    return f;
  }

  std::string name() const override {
    return "space_form(m=" + std::to_string(m_) + ",c=" + std::to_string(c_) + ")";
  }

  double spectrum_upper() const override { return 1.0; }

 private:
  int m_;
  double c_;
  double half_;
};

// --- hamiltonian bundle (covers the orthotoric case: no constant blocks) -------

class BundleInstance : public Instance {
 public:
  BundleInstance(std::vector<Polynomial> thetas, std::vector<EtaBlock> etas,
                 std::vector<std::pair<double, double>> xi_boxes, double delta,
                 std::string label)
      : thetas_(std::move(thetas)),
        etas_(std::move(etas)),
        xi_boxes_(std::move(xi_boxes)),
        delta_(delta),
        label_(std::move(label)) {
    ell_ = static_cast<int>(thetas_.size());
    if (ell_ < 1) throw ConstructionError(label_ + ": needs at least one profile polynomial");
    if (static_cast<int>(xi_boxes_.size()) != ell_)
      throw ConstructionError(label_ + ": one eigenvalue interval per profile required");
    for (int j = 0; j + 1 < ell_; ++j)
      if (xi_boxes_[j].second >= xi_boxes_[j + 1].first)
        throw ConstructionError(label_ + ": eigenvalue intervals must be disjoint and ordered");
    for (const auto& e : etas_)
      for (const auto& [lo, hi] : xi_boxes_)
        if (e.eta >= lo - delta_ && e.eta <= hi + delta_)
          throw ConstructionError(label_ + ": constant eigenvalue too close to an interval");
  }

  int dim() const override {
    int n = 2 * ell_;
    for (const auto& e : etas_) n += 2 * e.mult;
    return n;
  }

  int n_nonconstant() const override { return ell_; }
  std::vector<Polynomial> thetas() const override { return thetas_; }
  std::vector<EtaBlock> etas() const override { return etas_; }

  Chart chart(const Eigen::VectorXd& p) const override {
    const int n = dim();
    if (p.size() != n) throw DomainViolation(label_ + ": wrong point dimension");
    for (int j = 0; j < ell_; ++j)
      if (p(j) < xi_boxes_[j].first - 1e-12 || p(j) > xi_boxes_[j].second + 1e-12)
        throw DomainViolation(label_ + ": eigenvalue coordinate outside its interval");
    for (int j = 0; j < ell_; ++j)
      for (int k = j + 1; k < ell_; ++k)
        if (std::abs(p(j) - p(k)) < delta_)
          throw DomainViolation(label_ + ": eigenvalue coordinates too close");
    for (const auto& e : etas_)
      for (int j = 0; j < ell_; ++j)
        if (std::abs(p(j) - e.eta) < delta_)
          throw DomainViolation(label_ + ": eigenvalue too close to a constant eigenvalue");

    Chart c;
    c.point = p;
    c.ell = ell_;
    c.xi.resize(ell_);
    for (int j = 0; j < ell_; ++j) c.xi[j] = Jet2::variable(p(j), j, n);

    // base blocks with their offsets
    std::vector<BaseChart> base;
    std::vector<int> off;
    {
      int o = 2 * ell_;
      for (const auto& e : etas_) {
        std::vector<Jet2> z(2 * e.mult);
        for (int k = 0; k < 2 * e.mult; ++k) z[k] = Jet2::variable(p(o + k), o + k, n);
        base.push_back(spaceform_block(e.mult, e.c, z, n));
        off.push_back(o);
        o += 2 * e.mult;
      }
    }

    const auto sig = elementary_symmetric(c.xi, n);
    std::vector<std::vector<Jet2>> sighat(ell_);
    for (int j = 0; j < ell_; ++j) {
      std::vector<Jet2> others;
      for (int k = 0; k < ell_; ++k)
        if (k != j) others.push_back(c.xi[k]);
      sighat[j] = elementary_symmetric(others, n);
    }

    // theta_r = dt_r + 1/2 sum_eta (-1)^r eta^{l-r} tau_eta  (so that
    // d theta_r = sum_eta (-1)^r eta^{l-r} omega_eta), r = 1..l.
    std::vector<std::vector<Jet2>> theta(ell_, std::vector<Jet2>(n, Jet2(n)));
    for (int r = 1; r <= ell_; ++r) {
      theta[r - 1][ell_ + r - 1] = Jet2::constant(1.0, n);
      for (size_t b = 0; b < etas_.size(); ++b) {
        const double coef =
            0.5 * (r % 2 ? -1.0 : 1.0) * std::pow(etas_[b].eta, ell_ - r);
        if (coef == 0.0) continue;
        for (int k = 0; k < 2 * etas_[b].mult; ++k)
          theta[r - 1][off[b] + k] += coef * base[b].tau[k];
      }
    }

    // u_j = sum_r sigma_{r-1}(xi-hat_j) theta_r
    std::vector<std::vector<Jet2>> u(ell_, std::vector<Jet2>(n, Jet2(n)));
    for (int j = 0; j < ell_; ++j)
      for (int r = 1; r <= ell_; ++r)
        for (int a = 0; a < n; ++a) u[j][a] += sighat[j][r - 1] * theta[r - 1][a];

    // Delta_j, Theta_j(xi_j), p_nc(eta)
    std::vector<Jet2> Delta(ell_), Th(ell_);
    for (int j = 0; j < ell_; ++j) {
      Jet2 d = Jet2::constant(1.0, n);
      for (int k = 0; k < ell_; ++k)
        if (k != j) d = d * (c.xi[j] - c.xi[k]);
      Delta[j] = d;
      Th[j] = thetas_[j](c.xi[j]);
      if (Th[j].v == 0.0 || Delta[j].v / Th[j].v <= 0.0)
        throw DomainViolation(label_ + ": fibre metric coefficient not positive");
    }
    std::vector<Jet2> pnc(etas_.size());
    for (size_t b = 0; b < etas_.size(); ++b) {
      Jet2 q = Jet2::constant(1.0, n);
      for (int i = 0; i < ell_; ++i) q = q * (Jet2::constant(etas_[b].eta, n) - c.xi[i]);
      pnc[b] = q;
      if (q.v <= 0.0)
        throw DomainViolation(label_ + ": base metric weight not positive");
    }

    // metric
    c.g = JetMat(n, n, n);
    for (int j = 0; j < ell_; ++j) {
      const Jet2 cd = Delta[j] / Th[j];
      c.g(j, j) += cd;
      const Jet2 cu = Th[j] / Delta[j];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) c.g(a, b) += cu * u[j][a] * u[j][b];
    }
    for (size_t b = 0; b < etas_.size(); ++b) {
      const int nb = 2 * etas_[b].mult;
      for (int a = 0; a < nb; ++a)
        for (int bb = 0; bb < nb; ++bb)
          c.g(off[b] + a, off[b] + bb) += pnc[b] * base[b].g(a, bb);
    }
    detail::check_positive(c.g.values());

    // J from its coframe action: rows of P are (dxi_j, theta_r, base covectors).
    JetMat P(n, n, n), C(n, n, n);
    for (int j = 0; j < ell_; ++j) P(j, j) = Jet2::constant(1.0, n);
    for (int r = 0; r < ell_; ++r)
      for (int a = 0; a < n; ++a) P(ell_ + r, a) = theta[r][a];
    for (size_t b = 0; b < etas_.size(); ++b)
      for (int k = 0; k < 2 * etas_[b].mult; ++k)
        P(off[b] + k, off[b] + k) = Jet2::constant(1.0, n);
    for (int j = 0; j < ell_; ++j)
      for (int r = 1; r <= ell_; ++r) {
        C(j, ell_ + r - 1) = (Th[j] / Delta[j]) * sighat[j][r - 1];
        // forced by J^2 = -Id together with the dxi_j action:
        // J theta_r = (-1)^r sum_j (xi_j^{l-r} / Theta_j(xi_j)) dxi_j
        C(ell_ + r - 1, j) =
            (r % 2 ? -1.0 : 1.0) * (powi(c.xi[j], ell_ - r) / Th[j]);
      }
    for (size_t b = 0; b < etas_.size(); ++b) {
      const int nb = 2 * etas_[b].mult;
      for (int a = 0; a < nb; ++a)
        for (int bb = 0; bb < nb; ++bb)
          C(off[b] + a, off[b] + bb) = -1.0 * base[b].Jm(a, bb);
    }
    c.J = -1.0 * (P.inverse() * (C * P));

    // potential: tau = 2 sum_r sigma_r theta_r + sum_eta eta^l tau_eta
    c.tau.assign(n, Jet2(n));
    for (int r = 1; r <= ell_; ++r)
      for (int a = 0; a < n; ++a) c.tau[a] += 2.0 * (sig[r] * theta[r - 1][a]);
    for (size_t b = 0; b < etas_.size(); ++b) {
      const double coef = std::pow(etas_[b].eta, ell_);
      for (int k = 0; k < 2 * etas_[b].mult; ++k)
        c.tau[off[b] + k] += coef * base[b].tau[k];
    }

    // hamiltonian form: phi = sum_eta eta p_nc(eta) omega_eta
    //                       + sum_j xi_j dxi_j wedge u_j
    c.phi = JetMat(n, n, n);
    for (size_t b = 0; b < etas_.size(); ++b) {
      const int nb = 2 * etas_[b].mult;
      const JetMat om = base[b].Jm.transpose() * base[b].g;
      Eigen::MatrixXd omv = Eigen::MatrixXd::Zero(n, n);
      for (int a = 0; a < nb; ++a)
        for (int bb = 0; bb < nb; ++bb) omv(off[b] + a, off[b] + bb) = om(a, bb).v;
      c.base_omegas.push_back(omv);
      for (int a = 0; a < nb; ++a)
        for (int bb = 0; bb < nb; ++bb)
          c.phi(off[b] + a, off[b] + bb) += etas_[b].eta * (pnc[b] * om(a, bb));
    }
    for (int j = 0; j < ell_; ++j)
      for (int a = 0; a < n; ++a) {
        if (a == j) continue;
        c.phi(j, a) += c.xi[j] * u[j][a];
        c.phi(a, j) -= c.xi[j] * u[j][a];
      }

    detail::finish_chart(c);
    return c;
  }

  std::vector<Eigen::VectorXd> sample(int count, std::uint64_t seed) const override {
    std::vector<std::pair<double, double>> box = xi_boxes_;
    for (int r = 0; r < ell_; ++r) box.push_back({-0.3, 0.3});
    for (const auto& e : etas_)
      for (int k = 0; k < 2 * e.mult; ++k) box.push_back({-0.4, 0.4});
    return detail::box_sample(box, delta_, count, seed);
  }

  Flags classify() const override {
    Flags f;
    const Polynomial& T0 = thetas_[0];
    bool common = true;
    for (const auto& t : thetas_) common = common && t.almost_equal(T0, 1e-10);
    bool roots_ok = true;
    for (const auto& e : etas_) roots_ok = roots_ok && std::abs(T0(e.eta)) < 1e-9;
    bool base_chsc_match = true;
    const Polynomial dT0 = T0.derivative();
    for (const auto& e : etas_)
      base_chsc_match = base_chsc_match && std::abs(e.c + dT0(e.eta)) < 1e-9;
    f.bochner_flat = common && T0.degree() <= ell_ + 2 && roots_ok && base_chsc_match;
    f.chsc = f.bochner_flat && T0.degree() <= ell_ + 1;

    // weakly Bochner-flat: (p_c Theta_j)'/p_c a common polynomial Psi of
    // degree <= l+1 with base Einstein constants -Psi(eta)
    Polynomial pc({1.0});
    for (const auto& e : etas_)
      for (int k = 0; k < e.mult; ++k) pc = pc * Polynomial({-e.eta, 1.0});
    bool wbf = true;
    Polynomial psi;
    for (size_t j = 0; j < thetas_.size(); ++j) {
      auto [q, rem] = (pc * thetas_[j]).derivative().divmod(pc);
      if (!rem.almost_equal(Polynomial(), 1e-9)) wbf = false;
      if (j == 0)
        psi = q;
      else
        wbf = wbf && q.almost_equal(psi, 1e-9);
    }
    wbf = wbf && psi.degree() <= ell_ + 1;
    for (const auto& e : etas_)
      wbf = wbf && std::abs((e.mult + 1) * e.c + psi(e.eta)) < 1e-9;
    f.weakly_bochner_flat = wbf;
    f.kahler_einstein = wbf && psi.degree() <= ell_;

    if (common && T0.degree() <= ell_ + 1 && roots_ok)
      f.ccb_B = -T0.lead() / 4.0;
    return f;
  }

  std::string name() const override { return label_; }

  double spectrum_upper() const override {
    double s = xi_boxes_.back().second;
    for (const auto& e : etas_) s = std::max(s, e.eta);
    return s;
  }

 private:
  std::vector<Polynomial> thetas_;
  std::vector<EtaBlock> etas_;
  std::vector<std::pair<double, double>> xi_boxes_;
  double delta_;
  std::string label_;
  int ell_;
};

inline InstancePtr make_orthotoric4d(const Polynomial& F1, const Polynomial& F2,
                                     std::pair<double, double> box1,
                                     std::pair<double, double> box2, double delta) {
  return std::make_shared<BundleInstance>(std::vector<Polynomial>{F1, F2},
                                          std::vector<EtaBlock>{},
                                          std::vector<std::pair<double, double>>{box1, box2},
                                          delta, "orthotoric4d");
}

// --- product instance (parallel A) --------------------------------------------

class ProductInstance : public Instance {
 public:
  ProductInstance(std::vector<std::pair<int, double>> factors, std::vector<double> consts,
                  double half_width = 0.4)
      : factors_(std::move(factors)), consts_(std::move(consts)), half_(half_width) {
    if (factors_.size() != consts_.size() || factors_.empty())
      throw ConstructionError("product: one parallel eigenvalue per factor required");
    for (size_t i = 0; i < consts_.size(); ++i)
      for (size_t j = i + 1; j < consts_.size(); ++j)
        if (consts_[i] == consts_[j])
          throw ConstructionError("product: parallel eigenvalues must be distinct");
  }

  int dim() const override {
    int n = 0;
    for (const auto& [m, c] : factors_) n += 2 * m;
    return n;
  }

  Chart chart(const Eigen::VectorXd& p) const override {
    const int n = dim();
    if (p.size() != n) throw DomainViolation("product: wrong point dimension");
    Chart c;
    c.point = p;
    c.g = JetMat(n, n, n);
    c.J = JetMat(n, n, n);
    c.tau.assign(n, Jet2(n));
    c.A = JetMat(n, n, n);
    int o = 0;
    for (size_t f = 0; f < factors_.size(); ++f) {
      const auto [m, cc] = factors_[f];
      const int nb = 2 * m;
      std::vector<Jet2> z(nb);
      for (int k = 0; k < nb; ++k) z[k] = Jet2::variable(p(o + k), o + k, n);
      BaseChart bc = spaceform_block(m, cc, z, n);
      for (int a = 0; a < nb; ++a) {
        c.tau[o + a] = bc.tau[a];
        c.A(o + a, o + a) = Jet2::constant(consts_[f], n);
        for (int b = 0; b < nb; ++b) {
          c.g(o + a, o + b) = bc.g(a, b);
          c.J(o + a, o + b) = bc.Jm(a, b);
        }
      }
      o += nb;
    }
    detail::check_positive(c.g.values());
    // phi from the dictionary with the parallel A: phi = -g A J
    c.phi = -1.0 * ((c.g * c.A) * c.J);
    c.omega = c.J.transpose() * c.g;
    c.lambda.assign(n, Jet2(n));
    return c;
  }

  std::vector<Eigen::VectorXd> sample(int count, std::uint64_t seed) const override {
    std::vector<std::pair<double, double>> box(dim(), {-half_, half_});
    return detail::box_sample(box, 0.05, count, seed);
  }

  Flags classify() const override { return Flags{}; }

  std::string name() const override { return "product"; }

  double spectrum_upper() const override {
    double s = consts_[0];
    for (double c : consts_) s = std::max(s, c);
    return s;
  }

 private:
  std::vector<std::pair<int, double>> factors_;  // (complex dim, curvature)
  std::vector<double> consts_;
  double half_;
};

// --- metric rescaling g -> s g (A unchanged, Lambda -> Lambda/s) ----------------

class ScaledInstance : public Instance {
 public:
  ScaledInstance(InstancePtr base, double s) : base_(std::move(base)), s_(s) {
    if (s <= 0.0) throw ConstructionError("scaling factor must be positive");
  }

  int dim() const override { return base_->dim(); }
  int n_nonconstant() const override { return base_->n_nonconstant(); }
  std::vector<EtaBlock> etas() const override { return base_->etas(); }
  double spectrum_upper() const override { return base_->spectrum_upper(); }

  std::vector<Polynomial> thetas() const override {
    std::vector<Polynomial> t = base_->thetas();
    for (auto& p : t) p = (1.0 / s_) * p;
    return t;
  }

  Chart chart(const Eigen::VectorXd& p) const override {
    Chart c = base_->chart(p);
    c.g = s_ * c.g;
    c.phi = s_ * c.phi;
    c.omega = s_ * c.omega;
    for (auto& e : c.tau) e = s_ * e;
    for (auto& e : c.lambda) e = (1.0 / s_) * e;
    return c;
  }

  std::vector<Eigen::VectorXd> sample(int count, std::uint64_t seed) const override {
    return base_->sample(count, seed);
  }

  Flags classify() const override {
    Flags f = base_->classify();
    if (f.ccb_B) f.ccb_B = *f.ccb_B / s_;
    return f;
  }

  std::string name() const override {
    return base_->name() + "*scale(" + std::to_string(s_) + ")";
  }

 private:
  InstancePtr base_;
  double s_;
};

// --- chart + frame bundle ------------------------------------------------------

struct Eval {
  Chart chart;
  PointFrame frame;
};

inline Eval evaluate(const Instance& inst, const Eigen::VectorXd& p) {
  Eval e;
  e.chart = inst.chart(p);
  e.frame = make_frame(p, e.chart.g, e.chart.J);
  return e;
}

// Fibration second fundamental form of the horizontal distribution:
// 2 C(X,Y) = sum_r ( Omega_r(X,Y) J Lambda_r - Omega_r(JX,Y) Lambda_r ),
// Omega_r = sum_eta (-1)^r eta^{l-r} omega_eta, Lambda_r = grad sigma_r.
// X, Y must be horizontal: annihilated by every d xi_j and d xi_j (J .).
inline Eigen::VectorXd gray_oneill(const Eval& ev,
                                   const std::vector<EtaBlock>& etas,
                                   const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
  const int n = ev.frame.dim();
  const int ell = ev.chart.ell;
  const Eigen::MatrixXd Jv = ev.frame.J.values();
  const Eigen::VectorXd JX = Jv * X, JY = Jv * Y;
  const double scale = std::max({1.0, X.norm(), Y.norm()});
  for (int j = 0; j < ell; ++j)
    if (std::abs(X(j)) > 1e-8 * scale || std::abs(JX(j)) > 1e-8 * scale ||
        std::abs(Y(j)) > 1e-8 * scale || std::abs(JY(j)) > 1e-8 * scale)
      throw NonHorizontalInput("gray_oneill: input not orthogonal to the fibres");
  Eigen::VectorXd C = Eigen::VectorXd::Zero(n);
  if (ell == 0) return C;

  const auto sig = elementary_symmetric(ev.chart.xi, n);
  const Eigen::MatrixXd ginv = ev.frame.g_inv.values();
  for (int r = 1; r <= ell; ++r) {
    double oXY = 0.0, oJXY = 0.0;
    for (size_t b = 0; b < etas.size(); ++b) {
      const double w = (r % 2 ? -1.0 : 1.0) * std::pow(etas[b].eta, ell - r);
      oXY += w * X.dot(ev.chart.base_omegas[b] * Y);
      oJXY += w * JX.dot(ev.chart.base_omegas[b] * Y);
    }
    const Eigen::VectorXd lam_r = ginv * sig[r].g;
    // overall sign fixed against the vertical projection of the Levi-Civita
    // connection, which this tensor must reproduce on horizontal fields
    C -= 0.5 * (oXY * (Jv * lam_r) - oJXY * lam_r);
  }
  return C;
}

// Horizontal projection (jets): subtracts the component along the span of
// the fibre gradients and their J images.
inline std::vector<Jet2> horizontal_projection(const Chart& c, const PointFrame& f,
                                               const std::vector<Jet2>& X) {
  const int n = f.dim();
  const int ell = c.ell;
  if (ell == 0) return X;
  std::vector<std::vector<Jet2>> V;
  for (int j = 0; j < ell; ++j) {
    std::vector<Jet2> dxi(n);
    for (int a = 0; a < n; ++a) dxi[a] = c.xi[j].dpartial(a);
    V.push_back(f.g_inv * dxi);
    V.push_back(c.J * V.back());
  }
  const int k = 2 * ell;
  JetMat gram(k, k, n);
  std::vector<Jet2> rhs(k, Jet2(n));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) gram(i, j) += V[i][a] * (c.g(a, b) * V[j][b]);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) rhs[i] += V[i][a] * (c.g(a, b) * X[b]);
  }
  const std::vector<Jet2> coef = gram.inverse() * rhs;
  std::vector<Jet2> out = X;
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a) out[a] -= coef[i] * V[i][a];
  return out;
}

// --- nonparallel solution on a space form --------------------------------------

namespace detail {

// Quadratic polynomial in the chart coordinates with exact jets for itself
// and its first partials (so rational combinations carry third derivatives).
struct QuadPoly {
  double a0 = 0.0;
  Eigen::VectorXd lin;
  Eigen::MatrixXd quad;  // symmetric

  Jet2 eval(const std::vector<Jet2>& z, int n) const {
    Jet2 r = Jet2::constant(a0, n);
    for (size_t k = 0; k < z.size(); ++k) {
      if (lin(k) != 0.0) r += lin(k) * z[k];
      for (size_t l = 0; l < z.size(); ++l)
        if (quad(k, l) != 0.0) r += quad(k, l) * (z[k] * z[l]);
    }
    return r;
  }

  Jet2 partial(int k, const std::vector<Jet2>& z, int n) const {
    Jet2 r = Jet2::constant(lin(k), n);
    for (size_t l = 0; l < z.size(); ++l)
      if (quad(k, l) != 0.0) r += 2.0 * quad(k, l) * z[l];
    return r;
  }
};

}  // namespace detail

// A nonparallel element of the solution space on SpaceForm(m, c), c != 0,
// built from the rotation potential mu = x_1 / (1 + c|z|^2/4): the extended
// system constant is B = -c/4 and
//   Lambda = (1/2B) grad_g mu,   A = (1/2B^2) Hess_g mu - (mu/B) Id.
// Returns the solution together with a pointwise evaluator of mu.
struct SpaceFormSolution {
  Solution sol;
  double mu;
  double B;
};

inline SpaceFormSolution spaceform_extra_solution(const SpaceFormInstance& sf,
                                                  const Eval& ev) {
  const double c = sf.curvature();
  if (c == 0.0) throw ConstructionError("nonparallel generator needs nonzero curvature");
  const double B = -c / 4.0;
  const int n = sf.dim();
  const Eigen::VectorXd& p = ev.chart.point;
  std::vector<Jet2> z(n);
  for (int k = 0; k < n; ++k) z[k] = Jet2::variable(p(k), k, n);

  detail::QuadPoly N;
  N.a0 = 0.0;
  N.lin = Eigen::VectorXd::Zero(n);
  N.lin(0) = 1.0;
  N.quad = Eigen::MatrixXd::Zero(n, n);
  detail::QuadPoly D;
  D.a0 = 1.0;
  D.lin = Eigen::VectorXd::Zero(n);
  D.quad = (c / 4.0) * Eigen::MatrixXd::Identity(n, n);

  const Jet2 Nj = N.eval(z, n), Dj = D.eval(z, n);
  const Jet2 mu = Nj / Dj;
  // first partials as closed forms: exact up to third derivatives of mu
  std::vector<Jet2> dmu(n);
  for (int k = 0; k < n; ++k)
    dmu[k] = (N.partial(k, z, n) * Dj - Nj * D.partial(k, z, n)) / (Dj * Dj);

  SpaceFormSolution out;
  out.mu = mu.v;
  out.B = B;
  out.sol.lambda = ev.chart.g.inverse() * dmu;
  for (auto& e : out.sol.lambda) e = (1.0 / (2.0 * B)) * e;

  // Hess mu_{ab} = d_a dmu_b - Gamma^c_{ab} dmu_c, raised by g^{-1}
  JetMat hess(n, n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet2 v = dmu[b].dpartial(a);
      for (int cidx = 0; cidx < n; ++cidx)
        v -= ev.frame.gamma[cidx](a, b) * dmu[cidx];
      hess(a, b) = v;
    }
  JetMat A = ev.chart.g.inverse() * hess;
  A = (1.0 / (2.0 * B * B)) * A;
  for (int i = 0; i < n; ++i) A(i, i) -= (1.0 / B) * mu;
  out.sol.A = A;
  return out;
}

}  // namespace kmob
