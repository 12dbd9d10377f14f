// Acceptance battery: one line per criterion, nonzero exit if any fails.
// Each criterion aggregates over the constructed metric families at
// deterministic sample points.

#include <iostream>
#include <vector>

#include "kmob/run.hpp"

using namespace kmob;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& what) {
  std::cout << (ok ? "PASS" : "FAIL") << " " << idx << ": " << what << '\n';
  if (!ok) ++failures;
}

InstancePtr sf() { return std::make_shared<SpaceFormInstance>(2, 1.3, 0.4); }

InstancePtr t3() {
  return make_orthotoric4d(Polynomial({0, 0, 0, 1}), Polynomial({0, 0, 0, 1}),
                           {-0.8, -0.2}, {0.2, 0.8}, 0.02);
}

InstancePtr cone4d() {
  const Polynomial theta({0, -8, 12, -4});
  return make_orthotoric4d(theta, theta, {0.1, 0.9}, {1.1, 1.9}, 0.02);
}

InstancePtr bundle6d() {
  const Polynomial theta({0, -12, 16, -4});
  return std::make_shared<BundleInstance>(
      std::vector<Polynomial>{theta, theta}, std::vector<EtaBlock>{{3.0, 1, 1.0}},
      std::vector<std::pair<double, double>>{{0.15, 0.85}, {1.3, 2.5}}, 0.02,
      "bundle6d");
}

InstancePtr ccb4d() {
  const Polynomial theta({8, 4, -4});
  return std::make_shared<BundleInstance>(
      std::vector<Polynomial>{theta}, std::vector<EtaBlock>{{2.0, 1, 1.0}},
      std::vector<std::pair<double, double>>{{0.1, 0.9}}, 0.02, "ccb4d");
}

InstancePtr product3() {
  return std::make_shared<ProductInstance>(
      std::vector<std::pair<int, double>>{{1, 1.0}, {1, -1.0}, {1, 2.0}},
      std::vector<double>{0.0, 1.0, 3.0}, 0.3);
}

InstancePtr negative_control() {
  return make_orthotoric4d(Polynomial({0, 0, 0, 1}), Polynomial({0, 0, 0.1, 1}),
                           {-0.8, -0.2}, {0.2, 0.8}, 0.02);
}

std::vector<InstancePtr> all_instances() {
  return {sf(), t3(), cone4d(), bundle6d(), ccb4d(), product3()};
}

std::vector<InstancePtr> cc_instances() {
  return {t3(), cone4d(), bundle6d(), ccb4d()};
}

}  // namespace

int main() {
  // 1: complex structure and form are parallel; the potential 1-form
  //    differentiates to twice the Kahler form under finite differences
  {
    double jet_res = 0.0, fd_res = 0.0;
    const FdStencil st(1e-4, FdOrder::Central4, false);
    for (const auto& inst : all_instances()) {
      for (const auto& p : inst->sample(6, 1)) {
        const Eval ev = evaluate(*inst, p);
        jet_res = std::max(jet_res, frob(cov_endo(ev.chart.J, ev.frame.gamma)));
        jet_res = std::max(jet_res, frob(cov_bilinear(ev.chart.omega, ev.frame.gamma)));
      }
      for (const auto& p : inst->sample(2, 2)) {
        const Eval ev = evaluate(*inst, p);
        const int n = inst->dim();
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) {
            auto tb = [&](const Eigen::VectorXd& q) { return inst->chart(q).tau[b].v; };
            auto ta = [&](const Eigen::VectorXd& q) { return inst->chart(q).tau[a].v; };
            const double d = fd_directional(tb, p, Eigen::VectorXd::Unit(n, a), st) -
                             fd_directional(ta, p, Eigen::VectorXd::Unit(n, b), st);
            fd_res = std::max(fd_res, std::abs(d - 2.0 * ev.frame.omega(a, b)));
          }
      }
    }
    report(1, jet_res < 1e-8 && fd_res < 1e-4, "chart audit: parallel structure, potential 1-form");
  }

  // 2: membership of every constructed endomorphism; the rotated gradient
  //    field is Killing; the commutator compatibility holds
  {
    double main_res = 0.0, killing = 0.0, intc = 0.0;
    for (const auto& inst : all_instances()) {
      for (const auto& sp : solve_points(instance_field(inst), inst->sample(6, 1))) {
        main_res = std::max(main_res, main_equation_residual(sp));
        const std::vector<Jet2> Jlam = sp.ev.chart.J * sp.sol.lambda;
        killing = std::max(killing, killing_residual(Jlam, sp.ev.frame));
        intc = std::max(intc, integrability_residual(sp));
      }
    }
    report(2, main_res < 1e-7 && killing < 1e-8 && intc < 1e-7,
           "solution membership, Killing field, compatibility");
  }

  // 3: the constant fits with negligible spread and the three-line system
  //    holds; the mismatched-profile control is rejected
  {
    bool ok = true;
    for (const auto& inst : cc_instances()) {
      const SolField field = instance_field(inst);
      const auto pts = inst->sample(6, 1);
      const BmuEstimate est = estimate_B_mu(solve_points(field, pts));
      const ExtendedResiduals r = extended_system_residual(field, est.B, pts);
      ok = ok && est.B_spread < 1e-7 && r.res_main < 1e-7 && r.res_lambda < 1e-7 &&
           r.res_mu < 1e-4;
    }
    const InstancePtr bad = negative_control();
    const BmuEstimate bb = estimate_B_mu(solve_points(instance_field(bad), bad->sample(6, 1)));
    ok = ok && std::max(bb.B_spread, bb.fit_residual) > 1e-3;
    report(3, ok, "constant-coefficient system with negative control");
  }

  // 4: constant-curvature benchmark and the isolated nullity constant
  {
    const double c = 1.3;
    SpaceFormInstance inst(2, c, 0.4);
    bool ok = true;
    XorShift rng(7);
    for (const auto& p : inst.sample(5, 3)) {
      const Eval ev = evaluate(inst, p);
      for (int trial = 0; trial < 4; ++trial)
        ok = ok && std::abs(holomorphic_sectional_curvature(ev.frame, rng.vector(4)) - c) <
                       1e-8;
      const Eigen::MatrixXd E = unitary_frame(ev.frame);
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          ok = ok && (ev.frame.R.endo(E.col(i), E.col(j)) -
                      c * K_tensor(ev.frame, E.col(i), E.col(j)))
                             .lpNorm<Eigen::Infinity>() < 1e-8;
    }
    const Eval ev = evaluate(inst, inst.sample(1, 3)[0]);
    const auto grid = b_grid(-c / 4.0, c / 2.0, 41);
    const auto dims = nullity_scan(ev.frame, grid);
    int full = 0;
    for (size_t i = 0; i < dims.size(); ++i) {
      if (dims[i] == 4) {
        ++full;
        ok = ok && std::abs(std::abs(grid[i]) - c / 4.0) < 1e-12;
      } else {
        ok = ok && dims[i] == 0;
      }
    }
    ok = ok && full == 1;
    report(4, ok, "benchmark curvature and isolated nullity constant");
  }

  // 5: closed-form constant in 4D agrees with the fit; sign relations are
  //    mutually consistent across all instances
  {
    bool ok = true;
    const InstancePtr inst = t3();
    const auto pts = inst->sample(8, 1);
    const BmuEstimate est = estimate_B_mu(solve_points(instance_field(inst), pts));
    double lo = 1e300, hi = -1e300;
    for (const auto& p : pts) {
      const BExplicit be = b_explicit_4d(Polynomial({0, 0, 0, 1}), Polynomial({0, 0, 0, 1}),
                                         p(0), p(1));
      lo = std::min(lo, be.B);
      hi = std::max(hi, be.B);
      ok = ok && be.derivB_residual < 1e-10;
    }
    ok = ok && hi - lo < 1e-10 && std::abs(hi - 0.25) < 1e-10;
    ok = ok && std::abs(std::abs(est.B) - 0.25) < 1e-6;
    const BExplicit quad = b_explicit_4d(Polynomial({1, 2, 3}), Polynomial({1, 2, 3}), -0.4, 0.6);
    ok = ok && quad.B == 0.0;
    // one consistent sign convention: fitted constant = -(profile criterion),
    // and the explicit 4D value matches the fitted one directly
    for (const auto& cc : cc_instances()) {
      const auto sps = solve_points(instance_field(cc), cc->sample(6, 1));
      const BmuEstimate e = estimate_B_mu(sps);
      const Flags f = cc->classify();
      ok = ok && f.ccb_B.has_value() && std::abs(e.B + *f.ccb_B) < 1e-6;
      if (cc->dim() == 4 && cc->n_nonconstant() == 2) {
        const auto th = cc->thetas();
        const Eigen::VectorXd p0 = cc->sample(1, 1)[0];
        ok = ok && std::abs(b_explicit_4d(th[0], th[1], p0(0), p0(1)).B - e.B) < 1e-6;
      }
    }
    report(5, ok, "explicit 4D constant and consistent sign relations");
  }

  // 6: mobility certificates: rank at least three in six dimensions, rank
  //    exactly two for the non-benchmark 4D family
  {
    const MobilityCertificate six = mobility_lower_bound(bundle6d(), 6, 1);
    const MobilityCertificate four = mobility_lower_bound(ccb4d(), 6, 1);
    report(6,
           six.rank >= 3 && six.max_main_eq_residual < 1e-6 && four.rank == 2 &&
               four.max_main_eq_residual < 1e-6,
           "mobility lower bounds (rank 3 in 6D, rank 2 in 4D)");
  }

  // 7: the invariant polynomial has point-independent coefficients, and the
  //    negative control does not
  {
    bool ok = true;
    for (const auto& inst : cc_instances()) {
      const auto sps = solve_points(instance_field(inst), inst->sample(6, 1));
      const BmuEstimate est = estimate_B_mu(sps);
      ok = ok && f_polynomial(sps, est.B).spread < 1e-6;
    }
    const InstancePtr bad = negative_control();
    const auto bsp = solve_points(instance_field(bad), bad->sample(6, 1));
    ok = ok && f_polynomial(bsp, estimate_B_mu(bsp).B).spread > 1e-3;
    report(7, ok, "invariant polynomial constancy with negative control");
  }

  // 8: nullity containment in six dimensions and the fibre-plane curvature
  {
    const InstancePtr inst = bundle6d();
    const auto sps = solve_points(instance_field(inst), inst->sample(4, 1));
    const BmuEstimate est = estimate_B_mu(sps);
    bool ok = true;
    for (const auto& sp : sps) {
      const NullityResult nr = nullity_space(sp.ev.frame, est.B);
      ok = ok && nr.dimension >= 4;
      const Eigen::MatrixXd ginv = sp.ev.frame.g_inv.values();
      const Eigen::MatrixXd Jv = sp.ev.frame.J.values();
      for (const auto& x : sp.ev.chart.xi) {
        Eigen::VectorXd v = ginv * x.g;
        for (int rep = 0; rep < 2; ++rep) {
          const Eigen::VectorXd u = v / v.norm();
          ok = ok && (u - nr.basis * (nr.basis.transpose() * u)).norm() < 1e-6;
          v = Jv * v;
        }
        const Eigen::VectorXd grad = ginv * x.g;
        ok = ok && std::abs(std::abs(holomorphic_sectional_curvature(sp.ev.frame, grad)) -
                            4.0 * std::abs(est.B)) < 1e-6;
      }
    }
    report(8, ok, "nullity containment and fibre-plane curvature");
  }

  // 9: cone correspondence over the compatible 4D family
  {
    const InstancePtr base = cone4d();
    ConeInstance cone{base};
    const std::vector<double> C{0.0, 1.0, 2.0};
    bool ok = true;
    std::vector<std::pair<ConeEval, JetMat>> hat;
    for (const auto& p : cone.sample(3, 1)) {
      ConeEval ce = cone.eval(p);
      JetMat hatA = hatA_from_solution(ce, ce.base.chart.solution(), -1.0);
      const std::vector<double> xi{ce.point(2), ce.point(3)};
      ok = ok && interlacing_check(C, xi);
      const auto r = r_from_xi(C, xi);
      const auto back = xi_from_r(C, r);
      for (size_t i = 0; i < xi.size(); ++i) ok = ok && std::abs(back[i] - xi[i]) < 1e-10;
      hat.push_back({std::move(ce), std::move(hatA)});
    }
    const ParallelReport pr = parallel_residual(hat);
    ok = ok && pr.nabla_residual < 1e-6 && pr.eigenvalue_spread < 1e-7;
    ok = ok && theta_from_cone(C).almost_equal(base->thetas()[0], 1e-12);
    report(9, ok, "cone correspondence and quotient round trips");
  }

  // 10: algebraic identity suite
  {
    bool ok = true;
    XorShift rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      const int l = 2 + static_cast<int>(rng.uniform(0.0, 3.0));
      std::vector<double> C;
      double base = rng.uniform(-2.0, 0.0);
      for (int i = 0; i <= l; ++i) {
        base += rng.uniform(0.3, 1.5);
        C.push_back(base);
      }
      for (int k = 0; k < l; ++k) ok = ok && std::abs(vandermonde_sum(C, k)) < 1e-10;
      ok = ok && std::abs(vandermonde_sum(C, l) - 1.0) < 1e-10;
    }
    for (int seed = 0; seed < 20; ++seed) {
      std::vector<double> C{0.0, 1.0, 2.0, 3.0};
      std::vector<double> xi{rng.uniform(0.1, 0.9), rng.uniform(1.1, 1.9),
                             rng.uniform(2.1, 2.9)};
      const auto r = r_from_xi(C, xi);
      std::vector<Eigen::VectorXd> phis, vecs;
      for (size_t i = 0; i < C.size(); ++i) phis.push_back(rng.vector(5));
      for (int i = 0; i < 3; ++i) vecs.push_back(rng.vector(5));
      ok = ok && quotient_identity(r, phis, vecs) < 1e-12;
    }
    const InstancePtr inst = bundle6d();
    for (const auto& sp : solve_points(instance_field(inst), inst->sample(2, 1)))
      for (int trial = 0; trial < 5; ++trial)
        ok = ok && second_identity_residual(sp, rng.uniform(-2.0, 2.0),
                                            rng.uniform(-2.0, 2.0)) < 1e-7;
    report(10, ok, "algebraic identity suite");
  }

  // 11: jets against finite differences for connection and curvature
  {
    bool ok = true;
    const FdStencil st(1e-4, FdOrder::Central4, true);
    for (const auto& inst : all_instances()) {
      const Eigen::VectorXd p = inst->sample(1, 5)[0];
      const int n = inst->dim();
      const Chart c = inst->chart(p);
      const auto gamma = christoffel(c.g, c.g.inverse());
      const Curvature R = riemann(c.g, gamma);
      auto gamma_at = [&](const Eigen::VectorXd& q) {
        const Chart cq = inst->chart(q);
        return christoffel(cq.g, cq.g.inverse());
      };
      double scale = 1.0, worst = 0.0;
      // FD first derivatives of every connection component in one sweep
      std::vector<std::vector<Eigen::MatrixXd>> dgam(
          n, std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n)));
      const double h = 1e-4;
      for (int a = 0; a < n; ++a) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, a);
        const auto gp2 = gamma_at(p + 2 * h * e), gp1 = gamma_at(p + h * e);
        const auto gm1 = gamma_at(p - h * e), gm2 = gamma_at(p - 2 * h * e);
        for (int d = 0; d < n; ++d)
          dgam[a][d] =
              (-gp2[d].values() + 8.0 * gp1[d].values() - 8.0 * gm1[d].values() +
               gm2[d].values()) /
              (12.0 * h);
      }
      for (int d = 0; d < n; ++d)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            scale = std::max(scale, std::abs(gamma[d](a, b).v));
            worst = std::max(worst, std::abs(gamma[d](a, b).g(a) - dgam[a][d](a, b)));
          }
      // curvature from the FD connection derivatives
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int d = 0; d < n; ++d)
            for (int cc = 0; cc < n; ++cc) {
              double v = dgam[a][d](b, cc) - dgam[b][d](a, cc);
              for (int e = 0; e < n; ++e)
                v += gamma[d](a, e).v * gamma[e](b, cc).v -
                     gamma[d](b, e).v * gamma[e](a, cc).v;
              scale = std::max(scale, std::abs(R.up(a, b, d, cc)));
              worst = std::max(worst, std::abs(v - R.up(a, b, d, cc)));
            }
      ok = ok && worst / scale < 1e-5;
    }
    report(11, ok, "differentiation oracle: jets vs finite differences");
  }

  // 12: deterministic report bodies
  {
    const json cfg_json = json::parse(R"({
      "instance": {"kind": "orthotoric4d", "F1": [0,0,0,1], "F2": [0,0,0,1],
                   "box1": [-0.8,-0.2], "box2": [0.2,0.8], "delta": 0.02},
      "points": {"count": 5, "seed": 2},
      "checks": ["all"]})");
    const RunConfig cfg = parse_config(cfg_json);
    const std::string a = run(cfg).report.dump();
    const std::string b = run(cfg).report.dump();
    report(12, !a.empty() && a == b, "byte-identical reports across reruns");
  }

  std::cout << (failures == 0 ? "acceptance battery passed\n" : "acceptance battery FAILED\n");
  return failures == 0 ? 0 : 1;
}
