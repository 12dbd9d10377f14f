#include <catch2/catch_amalgamated.hpp>

#include "kmob/mobility.hpp"

using namespace kmob;

namespace {

InstancePtr orthotoric_t3() {
  return make_orthotoric4d(Polynomial({0, 0, 0, 1}), Polynomial({0, 0, 0, 1}),
                           {-0.8, -0.2}, {0.2, 0.8}, 0.02);
}

InstancePtr bundle6d() {
  const Polynomial theta({0, -12, 16, -4});  // -4 t (t-1) (t-3)
  return std::make_shared<BundleInstance>(
      std::vector<Polynomial>{theta, theta}, std::vector<EtaBlock>{{3.0, 1, 1.0}},
      std::vector<std::pair<double, double>>{{0.15, 0.85}, {1.3, 2.5}}, 0.02,
      "bundle6d");
}

// l = 1 over one base block, tuned so every classification flag holds
InstancePtr ccb4d(double base_c) {
  const Polynomial theta({8, 4, -4});  // -4 (t-2) (t+1)
  return std::make_shared<BundleInstance>(
      std::vector<Polynomial>{theta}, std::vector<EtaBlock>{{2.0, 1, base_c}},
      std::vector<std::pair<double, double>>{{0.1, 0.9}}, 0.02, "ccb4d");
}

}  // namespace

TEST_CASE("classification flags") {
  const Flags sf = SpaceFormInstance(2, 1.5).classify();
  CHECK(sf.bochner_flat);
  CHECK(sf.weakly_bochner_flat);
  CHECK(sf.chsc);
  CHECK(sf.kahler_einstein);
  REQUIRE(sf.ccb_B.has_value());
  CHECK(*sf.ccb_B == 0.375);

  // base curvature 12 matches both polynomial criteria for this profile
  const Flags good = ccb4d(12.0)->classify();
  CHECK(good.bochner_flat);
  CHECK(good.weakly_bochner_flat);
  CHECK(good.chsc);
  CHECK(good.kahler_einstein);
  REQUIRE(good.ccb_B.has_value());
  CHECK(std::abs(*good.ccb_B - 1.0) < 1e-12);

  const Flags off = ccb4d(1.0)->classify();
  CHECK_FALSE(off.bochner_flat);
  CHECK_FALSE(off.weakly_bochner_flat);
  CHECK_FALSE(off.kahler_einstein);
  REQUIRE(off.ccb_B.has_value());

  const Flags b6 = bundle6d()->classify();
  REQUIRE(b6.ccb_B.has_value());
  CHECK(std::abs(*b6.ccb_B - 1.0) < 1e-12);

  const Flags t3 = orthotoric_t3()->classify();
  REQUIRE(t3.ccb_B.has_value());
  CHECK(std::abs(*t3.ccb_B + 0.25) < 1e-12);
}

TEST_CASE("potential one-form differentiates to twice the Kahler form") {
  for (const InstancePtr inst :
       {InstancePtr(std::make_shared<SpaceFormInstance>(2, 0.9, 0.4)), orthotoric_t3(),
        bundle6d()}) {
    for (const auto& p : inst->sample(3, 2)) {
      const Eval ev = evaluate(*inst, p);
      const int n = inst->dim();
      double worst = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          worst = std::max(worst, std::abs(ev.chart.tau[b].g(a) - ev.chart.tau[a].g(b) -
                                           2.0 * ev.frame.omega(a, b)));
      CHECK(worst < 1e-11);
    }
  }
}

TEST_CASE("chart solution data is consistent") {
  const InstancePtr inst = bundle6d();
  for (const auto& p : inst->sample(3, 4)) {
    const Eval ev = evaluate(*inst, p);
    // A is hermitian and its eigenvalue coordinates are among the spectrum
    const auto [sym, com] = hermitian_residual(ev.chart.A, ev.frame);
    CHECK(sym < 1e-11);
    CHECK(com < 1e-11);
    Eigen::VectorXcd eig = ev.chart.A.values().eigenvalues();
    for (int j = 0; j < 2; ++j) {
      double best = 1e300;
      for (int i = 0; i < eig.size(); ++i)
        best = std::min(best, std::abs(eig(i).real() - p(j)));
      CHECK(best < 1e-10);
    }
    // Lambda is a quarter of the metric gradient of tr A
    const Jet2 tr = ev.chart.A.trace();
    const Eigen::VectorXd lam =
        0.25 * ev.frame.g_inv.values() * tr.g;
    CHECK((lam - values_of(ev.chart.lambda)).norm() < 1e-11);
  }
}

TEST_CASE("sampling is deterministic and respects the domain") {
  const InstancePtr inst = orthotoric_t3();
  const auto a = inst->sample(5, 3);
  const auto b = inst->sample(5, 3);
  for (size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
  for (const auto& p : a) {
    CHECK(p(0) >= -0.8);
    CHECK(p(0) <= -0.2);
    CHECK(p(1) >= 0.2);
    CHECK(p(1) <= 0.8);
  }
  const auto c = inst->sample(5, 4);
  double diff = 0.0;
  for (size_t i = 0; i < a.size(); ++i) diff += (a[i] - c[i]).norm();
  CHECK(diff > 0.0);
}

TEST_CASE("fibration tensor matches the vertical part of the connection") {
  const InstancePtr inst = ccb4d(1.0);
  const auto etas = inst->etas();
  for (const auto& p : inst->sample(2, 6)) {
    const Eval ev = evaluate(*inst, p);
    const int n = inst->dim();
    // horizontal lifts of the two base coordinate fields
    std::vector<Jet2> e2(n, Jet2(n)), e3(n, Jet2(n));
    e2[2] = Jet2::constant(1.0, n);
    e3[3] = Jet2::constant(1.0, n);
    const std::vector<Jet2> X = horizontal_projection(ev.chart, ev.frame, e2);
    const std::vector<Jet2> Y = horizontal_projection(ev.chart, ev.frame, e3);

    const Eigen::VectorXd Xv = values_of(X), Yv = values_of(Y);
    const Eigen::VectorXd C = gray_oneill(ev, etas, Xv, Yv);

    // oracle: vertical projection of nabla_X Y
    const Eigen::MatrixXd dY = cov_vector(Y, ev.frame.gamma);
    Eigen::VectorXd W = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < n; ++a) W += Xv(a) * dY.row(a).transpose();
    // vertical span: grad xi and J grad xi
    const Eigen::MatrixXd ginv = ev.frame.g_inv.values();
    const Eigen::MatrixXd gv = ev.frame.g.values();
    const Eigen::MatrixXd Jv = ev.frame.J.values();
    Eigen::MatrixXd V(n, 2);
    V.col(0) = ginv * ev.chart.xi[0].g;
    V.col(1) = Jv * V.col(0);
    const Eigen::MatrixXd gram = V.transpose() * gv * V;
    const Eigen::VectorXd vert = V * gram.ldlt().solve(V.transpose() * gv * W);
    CHECK((C - vert).norm() < 1e-9);
  }
}

TEST_CASE("fibration tensor rejects non-horizontal input") {
  const InstancePtr inst = ccb4d(1.0);
  const Eval ev = evaluate(*inst, inst->sample(1, 1)[0]);
  const int n = inst->dim();
  CHECK_THROWS_AS(
      gray_oneill(ev, inst->etas(), Eigen::VectorXd::Unit(n, 0), Eigen::VectorXd::Unit(n, 2)),
      NonHorizontalInput);
}

TEST_CASE("nonparallel space form solution satisfies the system") {
  SpaceFormInstance sf(2, 2.0, 0.4);
  std::vector<SolvedPoint> sps;
  for (const auto& p : sf.sample(4, 8)) {
    const Eval ev = evaluate(sf, p);
    const SpaceFormSolution s = spaceform_extra_solution(sf, ev);
    CHECK(s.B == -0.5);
    sps.push_back({ev, s.sol});
    CHECK(main_equation_residual(sps.back()) < 1e-10);
  }
  const BmuEstimate est = estimate_B_mu(sps);
  CHECK(std::abs(est.B + 0.5) < 1e-9);
  CHECK(est.fit_residual < 1e-9);
}

TEST_CASE("metric rescaling transforms the fitted constant") {
  const InstancePtr base = orthotoric_t3();
  const InstancePtr scaled = std::make_shared<ScaledInstance>(base, 2.0);
  const auto pts = base->sample(4, 1);
  const BmuEstimate b0 = estimate_B_mu(solve_points(instance_field(base), pts));
  const BmuEstimate b1 = estimate_B_mu(solve_points(instance_field(scaled), pts));
  CHECK(std::abs(b0.B - 0.25) < 1e-10);
  CHECK(std::abs(b1.B - 0.125) < 1e-10);
}

TEST_CASE("construction and domain errors") {
  CHECK_THROWS_AS(SpaceFormInstance(0, 1.0), ConstructionError);
  CHECK_THROWS_AS(SpaceFormInstance(2, 8.0, 1.0), ConstructionError);
  // overlapping eigenvalue intervals
  CHECK_THROWS_AS(make_orthotoric4d(Polynomial({0, 0, 0, 1}), Polynomial({0, 0, 0, 1}),
                                    {-0.5, 0.3}, {0.2, 0.8}, 0.02),
                  ConstructionError);
  // constant eigenvalue inside an interval
  CHECK_THROWS_AS(std::make_shared<BundleInstance>(
                      std::vector<Polynomial>{Polynomial({0, 0, 0, 1})},
                      std::vector<EtaBlock>{{0.5, 1, 1.0}},
                      std::vector<std::pair<double, double>>{{0.2, 0.8}}, 0.02, "bad"),
                  ConstructionError);
  const InstancePtr inst = orthotoric_t3();
  Eigen::VectorXd p(4);
  p << -0.5, 1.5, 0.0, 0.0;  // second eigenvalue outside its interval
  CHECK_THROWS_AS(inst->chart(p), DomainViolation);
  CHECK_THROWS_AS(ProductInstance({{1, 1.0}}, {0.5, 0.7}), ConstructionError);
  CHECK_THROWS_AS(ProductInstance({{1, 1.0}, {1, 2.0}}, {0.5, 0.5}), ConstructionError);
}
