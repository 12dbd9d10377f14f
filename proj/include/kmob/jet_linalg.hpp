#pragma once

// Dense matrices with Jet2 entries and the small set of operations the
// tensor calculus needs: products, inversion, determinant, trace.

#include <Eigen/Dense>
#include <vector>

#include "kmob/errors.hpp"
#include "kmob/jet.hpp"

namespace kmob {

class JetMat {
 public:
  JetMat() : rows_(0), cols_(0), n_(0) {}
  JetMat(int rows, int cols, int n)
      : rows_(rows), cols_(cols), n_(n), data_(rows * cols, Jet2(n)) {}

  static JetMat identity(int m, int n) {
    JetMat r(m, m, n);
    for (int i = 0; i < m; ++i) r(i, i) = Jet2::constant(1.0, n);
    return r;
  }

  static JetMat zero(int m, int n) { return JetMat(m, m, n); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nvars() const { return n_; }

  Jet2& operator()(int i, int j) { return data_[i * cols_ + j]; }
  const Jet2& operator()(int i, int j) const { return data_[i * cols_ + j]; }

  Eigen::MatrixXd values() const {
    Eigen::MatrixXd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).v;
    return m;
  }

  // Values of the k-th coordinate derivative of every entry.
  Eigen::MatrixXd dvalues(int k) const {
    Eigen::MatrixXd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).g(k);
    return m;
  }

  JetMat transpose() const {
    JetMat r(cols_, rows_, n_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  Jet2 trace() const {
    Jet2 t(n_);
    for (int i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }

  JetMat operator+(const JetMat& o) const {
    JetMat r = *this;
    for (size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }
  JetMat operator-(const JetMat& o) const {
    JetMat r = *this;
    for (size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }
  JetMat operator*(const JetMat& o) const {
    JetMat r(rows_, o.cols_, n_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const Jet2& a = (*this)(i, k);
        if (a.v == 0.0 && a.g.isZero(0) && a.h.isZero(0)) continue;
        for (int j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }
  friend JetMat operator*(const Jet2& s, const JetMat& m) {
    JetMat r = m;
    for (auto& e : r.data_) e = s * e;
    return r;
  }
  friend JetMat operator*(double s, const JetMat& m) {
    JetMat r = m;
    for (auto& e : r.data_) e = s * e;
    return r;
  }

  std::vector<Jet2> operator*(const std::vector<Jet2>& x) const {
    std::vector<Jet2> r(rows_, Jet2(n_));
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r[i] += (*this)(i, j) * x[j];
    return r;
  }

  // Gauss-Jordan with partial pivoting on the value part.
  JetMat inverse() const {
    const int m = rows_;
    JetMat a = *this;
    JetMat inv = identity(m, n_);
    for (int col = 0; col < m; ++col) {
      int piv = col;
      for (int i = col + 1; i < m; ++i)
        if (std::abs(a(i, col).v) > std::abs(a(piv, col).v)) piv = i;
      if (std::abs(a(piv, col).v) < 1e-14)
        throw SingularMetric("jet matrix inversion: pivot below 1e-14");
      if (piv != col) {
        for (int j = 0; j < m; ++j) {
          std::swap(a(col, j), a(piv, j));
          std::swap(inv(col, j), inv(piv, j));
        }
      }
      const Jet2 d = a(col, col).reciprocal();
      for (int j = 0; j < m; ++j) {
        a(col, j) = d * a(col, j);
        inv(col, j) = d * inv(col, j);
      }
      for (int i = 0; i < m; ++i) {
        if (i == col) continue;
        const Jet2 f = a(i, col);
        if (f.v == 0.0 && f.g.isZero(0) && f.h.isZero(0)) continue;
        for (int j = 0; j < m; ++j) {
          a(i, j) -= f * a(col, j);
          inv(i, j) -= f * inv(col, j);
        }
      }
    }
    return inv;
  }

  // LU-style determinant with value-part pivoting.
  Jet2 det() const {
    const int m = rows_;
    JetMat a = *this;
    Jet2 d = Jet2::constant(1.0, n_);
    for (int col = 0; col < m; ++col) {
      int piv = col;
      for (int i = col + 1; i < m; ++i)
        if (std::abs(a(i, col).v) > std::abs(a(piv, col).v)) piv = i;
      if (piv != col) {
        for (int j = 0; j < m; ++j) std::swap(a(col, j), a(piv, j));
        d = -1.0 * d;
      }
      if (a(col, col).v == 0.0) return Jet2(n_);
      d = d * a(col, col);
      const Jet2 r = a(col, col).reciprocal();
      for (int i = col + 1; i < m; ++i) {
        const Jet2 f = a(i, col) * r;
        for (int j = col; j < m; ++j) a(i, j) -= f * a(col, j);
      }
    }
    return d;
  }

 private:
  int rows_, cols_, n_;
  std::vector<Jet2> data_;
};

inline JetMat from_values(const Eigen::MatrixXd& m, int n) {
  JetMat r(static_cast<int>(m.rows()), static_cast<int>(m.cols()), n);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = Jet2::constant(m(i, j), n);
  return r;
}

inline Eigen::VectorXd values_of(const std::vector<Jet2>& v) {
  Eigen::VectorXd r(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) r(static_cast<int>(i)) = v[i].v;
  return r;
}

}  // namespace kmob
