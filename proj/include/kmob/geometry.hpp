#pragma once

// Chart-based Kahler tensor calculus. All fields arrive as Jet2 matrices in
// coordinates; the Levi-Civita connection keeps exact first derivatives (from
// the metric Hessian), so curvature components are exact up to roundoff.
//
// Curvature sign convention: R(X,Y)Z = (grad_X grad_Y - grad_Y grad_X -
// grad_[X,Y]) Z, lowered as R(a,b,c,d) = g(R(e_a,e_b)e_c, e_d).

#include <Eigen/Dense>
#include <vector>

#include "kmob/errors.hpp"
#include "kmob/jet_linalg.hpp"

namespace kmob {

class Tensor4 {
 public:
  Tensor4() : n_(0) {}
  explicit Tensor4(int n) : n_(n), d_(static_cast<size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int e) {
    return d_[((static_cast<size_t>(a) * n_ + b) * n_ + c) * n_ + e];
  }
  double operator()(int a, int b, int c, int e) const {
    return d_[((static_cast<size_t>(a) * n_ + b) * n_ + c) * n_ + e];
  }

 private:
  int n_;
  std::vector<double> d_;
};

// Christoffel symbols Gamma[c](a,b) with exact value and gradient.
inline std::vector<JetMat> christoffel(const JetMat& g, const JetMat& g_inv) {
  const int n = g.rows();
  if (std::abs(g.values().determinant()) < 1e-12)
    throw SingularMetric("christoffel: metric determinant below 1e-12");
  std::vector<JetMat> gamma(n, JetMat(n, n, n));
  // dg[d](a,b) = partial_d g_{ab}
  std::vector<JetMat> dg(n, JetMat(n, n, n));
  for (int d = 0; d < n; ++d)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dg[d](a, b) = g(a, b).dpartial(d);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        Jet2 s(n);
        for (int d = 0; d < n; ++d)
          s += g_inv(c, d) * (dg[a](d, b) + dg[b](d, a) - dg[d](a, b));
        gamma[c](a, b) = 0.5 * s;
        gamma[c](b, a) = gamma[c](a, b);
      }
  return gamma;
}

// R^d_{cab} stored as riem_up(a,b,d,c); lowered tensor R(a,b,c,d).
struct Curvature {
  Tensor4 up;   // up(a,b,d,c) = R^d_{cab}
  Tensor4 low;  // low(a,b,c,d) = g(R(e_a,e_b)e_c, e_d)

  // Endomorphism R(X,Y) for value vectors X, Y.
  Eigen::MatrixXd endo(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const {
    const int n = up.dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
      if (X(a) == 0.0) continue;
      for (int b = 0; b < n; ++b) {
        if (Y(b) == 0.0) continue;
        const double w = X(a) * Y(b);
        for (int d = 0; d < n; ++d)
          for (int c = 0; c < n; ++c) m(d, c) += w * up(a, b, d, c);
      }
    }
    return m;
  }
};

inline Curvature riemann(const JetMat& g, const std::vector<JetMat>& gamma) {
  const int n = g.rows();
  Curvature R{Tensor4(n), Tensor4(n)};
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int d = 0; d < n; ++d)
        for (int c = 0; c < n; ++c) {
          double v = gamma[d](b, c).g(a) - gamma[d](a, c).g(b);
          for (int e = 0; e < n; ++e)
            v += gamma[d](a, e).v * gamma[e](b, c).v - gamma[d](b, e).v * gamma[e](a, c).v;
          R.up(a, b, d, c) = v;
          R.up(b, a, d, c) = -v;
        }
  const Eigen::MatrixXd gv = g.values();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int e = 0; e < n; ++e) v += R.up(a, b, e, c) * gv(e, d);
          R.low(a, b, c, d) = v;
        }
  return R;
}

// All tensors at one point of one chart.
struct PointFrame {
  Eigen::VectorXd point;
  JetMat g, g_inv, J;
  Eigen::MatrixXd omega;  // omega_{ab} = g(J e_a, e_b), values
  std::vector<JetMat> gamma;
  Curvature R;

  int dim() const { return g.rows(); }

  double ip(const Eigen::VectorXd& X, const Eigen::VectorXd& Y) const {
    return X.dot(g.values() * Y);
  }
};

inline PointFrame make_frame(const Eigen::VectorXd& point, const JetMat& g, const JetMat& J) {
  PointFrame f;
  f.point = point;
  f.g = g;
  f.J = J;
  f.g_inv = g.inverse();
  const Eigen::MatrixXd gv = g.values(), Jv = J.values();
  f.omega = Jv.transpose() * gv;  // omega_{ab} = g(J e_a, e_b) = J^e_a g_{eb}
  f.gamma = christoffel(g, f.g_inv);
  f.R = riemann(g, f.gamma);
  return f;
}

// --- covariant derivatives (values) -----------------------------------------

// (1,1) endomorphism: out[a](b,c) = nabla_a T^b_c.
inline std::vector<Eigen::MatrixXd> cov_endo(const JetMat& T, const std::vector<JetMat>& gamma) {
  const int n = T.rows();
  std::vector<Eigen::MatrixXd> out(n, Eigen::MatrixXd::Zero(n, n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double v = T(b, c).g(a);
        for (int e = 0; e < n; ++e)
          v += gamma[b](a, e).v * T(e, c).v - gamma[e](a, c).v * T(b, e).v;
        out[a](b, c) = v;
      }
  return out;
}

// vector: out(a,b) = nabla_a V^b.
inline Eigen::MatrixXd cov_vector(const std::vector<Jet2>& V, const std::vector<JetMat>& gamma) {
  const int n = static_cast<int>(V.size());
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double v = V[b].g(a);
      for (int e = 0; e < n; ++e) v += gamma[b](a, e).v * V[e].v;
      out(a, b) = v;
    }
  return out;
}

// covector: out(a,b) = nabla_a alpha_b.
inline Eigen::MatrixXd cov_covector(const std::vector<Jet2>& alpha,
                                    const std::vector<JetMat>& gamma) {
  const int n = static_cast<int>(alpha.size());
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double v = alpha[b].g(a);
      for (int e = 0; e < n; ++e) v -= gamma[e](a, b).v * alpha[e].v;
      out(a, b) = v;
    }
  return out;
}

// (0,2) bilinear: out[a](b,c) = nabla_a T_{bc}.
inline std::vector<Eigen::MatrixXd> cov_bilinear(const JetMat& T,
                                                 const std::vector<JetMat>& gamma) {
  const int n = T.rows();
  std::vector<Eigen::MatrixXd> out(n, Eigen::MatrixXd::Zero(n, n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double v = T(b, c).g(a);
        for (int e = 0; e < n; ++e)
          v -= gamma[e](a, b).v * T(e, c).v + gamma[e](a, c).v * T(b, e).v;
        out[a](b, c) = v;
      }
  return out;
}

inline double frob(const std::vector<Eigen::MatrixXd>& t) {
  double s = 0.0;
  for (const auto& m : t) s += m.squaredNorm();
  return std::sqrt(s);
}

// --- pointwise diagnostics ---------------------------------------------------

inline double holomorphic_sectional_curvature(const PointFrame& f, const Eigen::VectorXd& X) {
  const int n = f.dim();
  if (X.norm() == 0.0) throw ZeroVector("holomorphic sectional curvature of zero vector");
  const Eigen::VectorXd JX = f.J.values() * X;
  double num = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          num += X(a) * JX(b) * JX(c) * X(d) * f.R.low(a, b, c, d);
  const double nx = f.ip(X, X);
  return num / (nx * nx);
}

// Frobenius norm of sym(nabla V^flat); zero iff V is Killing at the point.
inline double killing_residual(const std::vector<Jet2>& V, const PointFrame& f) {
  const int n = f.dim();
  std::vector<Jet2> Vflat(n, Jet2(n));
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < n; ++c) Vflat[b] += f.g(b, c) * V[c];
  const Eigen::MatrixXd dV = cov_covector(Vflat, f.gamma);
  return (0.5 * (dV + dV.transpose())).norm();
}

// (g-symmetry residual, J-commutation residual) of an endomorphism.
inline std::pair<double, double> hermitian_residual(const JetMat& Q, const PointFrame& f) {
  const Eigen::MatrixXd gv = f.g.values(), Qv = Q.values(), Jv = f.J.values();
  const Eigen::MatrixXd gQ = gv * Qv;
  return {(gQ - gQ.transpose()).norm(), (Qv * Jv - Jv * Qv).norm()};
}

// g-orthonormal frame adapted to J: columns ordered e_1..e_m, J e_1..J e_m.
// Deterministic pivoting over the coordinate basis.
inline Eigen::MatrixXd unitary_frame(const PointFrame& f) {
  const int n = f.dim();
  const int m = n / 2;
  const Eigen::MatrixXd gv = f.g.values(), Jv = f.J.values();
  Eigen::MatrixXd E(n, n);
  std::vector<Eigen::VectorXd> accepted;
  auto proj_off = [&](Eigen::VectorXd v) {
    for (const auto& u : accepted) v -= (u.dot(gv * v)) * u;
    return v;
  };
  int count = 0;
  for (int k = 0; k < n && count < m; ++k) {
    Eigen::VectorXd v = proj_off(Eigen::VectorXd::Unit(n, k));
    const double nv = std::sqrt(v.dot(gv * v));
    if (nv < 1e-8) continue;
    v /= nv;
    Eigen::VectorXd jv = Jv * v;
    jv /= std::sqrt(jv.dot(gv * jv));
    E.col(count) = v;
    E.col(m + count) = jv;
    accepted.push_back(v);
    accepted.push_back(jv);
    ++count;
  }
  if (count < m) throw Error("unitary_frame: Gram-Schmidt failed to complete");
  return E;
}

}  // namespace kmob
