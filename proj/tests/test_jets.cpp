#include <catch2/catch_amalgamated.hpp>

#include "kmob/fd.hpp"
#include "kmob/jet.hpp"
#include "kmob/jet_linalg.hpp"
#include "kmob/polynomial.hpp"
#include "kmob/sampling.hpp"

using namespace kmob;

TEST_CASE("frozen univariate jet values") {
  const Jet2 x3 = Jet2::variable(3.0, 0, 1);
  const Jet2 sq = x3 * x3;
  CHECK(sq.v == 9.0);
  CHECK(sq.g(0) == 6.0);
  CHECK(sq.h(0, 0) == 2.0);

  const Jet2 x2 = Jet2::variable(2.0, 0, 1);
  const Jet2 inv = x2.reciprocal();
  CHECK(inv.v == 0.5);
  CHECK(inv.g(0) == -0.25);
  CHECK(inv.h(0, 0) == 0.25);

  const Jet2 x4 = Jet2::variable(4.0, 0, 1);
  const Jet2 rt = sqrt(x4);
  CHECK(rt.v == 2.0);
  CHECK(rt.g(0) == 0.25);
  CHECK(rt.h(0, 0) == -0.03125);

  const Jet2 cb = powi(x2, 3);
  CHECK(cb.v == 8.0);
  CHECK(cb.g(0) == 12.0);
  CHECK(cb.h(0, 0) == 12.0);

  const Jet2 x1 = Jet2::variable(1.0, 0, 1);
  const Jet2 lg = log(x1);
  CHECK(lg.v == 0.0);
  CHECK(lg.g(0) == 1.0);
  CHECK(lg.h(0, 0) == -1.0);

  const Jet2 ex = exp(Jet2::variable(0.0, 0, 1));
  CHECK(ex.v == 1.0);
  CHECK(ex.g(0) == 1.0);
  CHECK(ex.h(0, 0) == 1.0);
}

TEST_CASE("partial derivative jets") {
  // f = x^2 y at (2, 3): d_x f = 2xy with gradient (2y, 2x)
  const Jet2 x = Jet2::variable(2.0, 0, 2);
  const Jet2 y = Jet2::variable(3.0, 1, 2);
  const Jet2 f = x * x * y;
  const Jet2 fx = f.dpartial(0);
  CHECK(fx.v == 12.0);
  CHECK(fx.g(0) == 6.0);
  CHECK(fx.g(1) == 4.0);
}

TEST_CASE("rational expression matches finite differences") {
  XorShift rng(11);
  const FdStencil st(1e-4, FdOrder::Central4, true);
  auto f = [](const Eigen::VectorXd& p) {
    return (p(0) * p(0) * p(1) + 2.0) / (1.0 + p(1) * p(1)) + std::exp(p(0) * 0.3);
  };
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd p = rng.vector(2, -0.8, 0.8);
    const Jet2 x = Jet2::variable(p(0), 0, 2);
    const Jet2 y = Jet2::variable(p(1), 1, 2);
    const Jet2 j = (x * x * y + 2.0) / (1.0 + y * y) + exp(0.3 * x);
    CHECK(std::abs(j.v - f(p)) < 1e-14);
    const Eigen::VectorXd g = fd_gradient(f, p, st);
    const Eigen::MatrixXd h = fd_hessian(f, p, st);
    CHECK((j.g - g).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((j.h - h).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("elementary symmetric jets") {
  const Jet2 x = Jet2::variable(1.5, 0, 2);
  const Jet2 y = Jet2::variable(-0.5, 1, 2);
  const auto s = elementary_symmetric({x, y}, 2);
  CHECK(s[0].v == 1.0);
  CHECK(s[1].v == 1.0);
  CHECK(s[1].g(0) == 1.0);
  CHECK(s[1].g(1) == 1.0);
  CHECK(s[2].v == -0.75);
  CHECK(s[2].g(0) == -0.5);
  CHECK(s[2].g(1) == 1.5);
}

TEST_CASE("jet matrix inverse and determinant") {
  const int n = 3;
  XorShift rng(5);
  JetMat M(n, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet2 e(n);
      e.v = rng.uniform(-1.0, 1.0) + (i == j ? 3.0 : 0.0);
      e.g = rng.vector(n, -0.5, 0.5);
      Eigen::MatrixXd h = Eigen::MatrixXd::Random(n, n);
      e.h = 0.5 * (h + h.transpose());
      M(i, j) = e;
    }
  const JetMat I = M * M.inverse();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CHECK(std::abs(I(i, j).v - (i == j ? 1.0 : 0.0)) < 1e-12);
      CHECK(I(i, j).g.lpNorm<Eigen::Infinity>() < 1e-11);
      CHECK(I(i, j).h.lpNorm<Eigen::Infinity>() < 1e-10);
    }

  // diagonal 2x2: det = x y
  JetMat D(2, 2, 2);
  D(0, 0) = Jet2::variable(2.0, 0, 2);
  D(1, 1) = Jet2::variable(5.0, 1, 2);
  const Jet2 d = D.det();
  CHECK(std::abs(d.v - 10.0) < 1e-14);
  CHECK(std::abs(d.g(0) - 5.0) < 1e-13);
  CHECK(std::abs(d.g(1) - 2.0) < 1e-13);
  CHECK(std::abs(d.h(0, 1) - 1.0) < 1e-12);
}

TEST_CASE("polynomial arithmetic") {
  const Polynomial p({1.0, 2.0, 3.0});  // 1 + 2t + 3t^2
  CHECK(p(2.0) == 17.0);
  CHECK(p.derivative()(2.0) == 14.0);
  const Polynomial q = Polynomial::from_roots({1.0, -2.0});
  CHECK(q(1.0) == 0.0);
  CHECK(q(-2.0) == 0.0);
  CHECK(q.lead() == 1.0);
  const auto [quo, rem] = (p * q).divmod(q);
  CHECK(quo.almost_equal(p));
  CHECK(rem.zero());
}

TEST_CASE("jet domain errors") {
  CHECK_THROWS_AS(Jet2::constant(0.0, 1).reciprocal(), DegenerateEvaluation);
  CHECK_THROWS_AS(sqrt(Jet2::constant(-1.0, 1)), OutOfDomain);
  CHECK_THROWS_AS(log(Jet2::constant(0.0, 1)), OutOfDomain);
}

TEST_CASE("sampling determinism") {
  const auto a = halton_points(6, 3, 42);
  const auto b = halton_points(6, 3, 42);
  const auto c = halton_points(6, 3, 43);
  for (int i = 0; i < 6; ++i) CHECK((a[i] - b[i]).norm() == 0.0);
  double diff = 0.0;
  for (int i = 0; i < 6; ++i) diff += (a[i] - c[i]).norm();
  CHECK(diff > 0.0);
}
