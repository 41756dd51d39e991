#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfising {

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(double pivot, const std::string& what) : std::runtime_error(what), pivot_(pivot) {}
  double pivot() const { return pivot_; }

 private:
  double pivot_;
};

// Dense antisymmetric matrix. Only the strict upper triangle is ever written by callers;
// the lower one is its exact negation.
template <typename Scalar>
class SkewMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Real = typename Eigen::NumTraits<Scalar>::Real;

  SkewMatrix() = default;
  explicit SkewMatrix(Eigen::Index n) : a_(Matrix::Zero(n, n)) {}

  template <typename Derived>
  static SkewMatrix from_upper(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("SkewMatrix: square input required");
    SkewMatrix s(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < j; ++i) s.set(i, j, m(i, j));
    return s;
  }

  // Takes (m - m^T)/2; useful for numerically computed inverses.
  template <typename Derived>
  static SkewMatrix from_antisymmetric_part(const Eigen::MatrixBase<Derived>& m) {
    Matrix half = (m - m.transpose()) / Scalar(2);
    return from_upper(half);
  }

  Eigen::Index size() const { return a_.rows(); }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }

  void set(Eigen::Index i, Eigen::Index j, Scalar v) {
    if (i == j) {
      if (v != Scalar(0)) throw std::invalid_argument("SkewMatrix: nonzero diagonal");
      return;
    }
    a_(i, j) = v;
    a_(j, i) = -v;
  }
  // a_ij += c, a_ji -= c
  void add(Eigen::Index i, Eigen::Index j, Scalar c) { set(i, j, a_(i, j) + c); }

  const Matrix& dense() const { return a_; }

 private:
  Matrix a_;
};

template <typename Scalar>
struct PfaffianLog {
  double log_abs = 0.0;  // -inf for an exactly zero Pfaffian
  Scalar phase{1};       // unit modulus (±1 for real input)
  Scalar value() const { return phase * Scalar(std::exp(log_abs)); }
};

namespace detail {

// Parlett-Reid: reduces in place to tridiagonal form with partial pivoting.
// Returns the product of the superdiagonal pivots in log form; smallest pivot magnitude in min_pivot.
template <typename Scalar>
PfaffianLog<Scalar> parlett_reid(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a, double* min_pivot = nullptr) {
  using std::abs;
  const Eigen::Index n = a.rows();
  if (n % 2 != 0) throw std::invalid_argument("pfaffian: odd dimension");
  PfaffianLog<Scalar> out;
  double minp = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index kp;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      out.phase = -out.phase;
    }
    const Scalar piv = a(k, k + 1);
    minp = std::min(minp, double(abs(piv)));
    if (piv == Scalar(0)) {
      out.log_abs = -std::numeric_limits<double>::infinity();
      out.phase = Scalar(0);
      if (min_pivot) *min_pivot = 0.0;
      return out;
    }
    out.log_abs += std::log(double(abs(piv)));
    out.phase *= piv / Scalar(abs(piv));
    const Eigen::Index r = n - k - 2;
    if (r > 0) {
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tau = a.row(k).tail(r).transpose() / piv;
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c = a.col(k + 1).tail(r);
      a.bottomRightCorner(r, r) += tau * c.transpose() - c * tau.transpose();
    }
  }
  if (min_pivot) *min_pivot = minp;
  return out;
}

template <typename Scalar>
Scalar expand(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a, std::vector<int>& idx) {
  if (idx.empty()) return Scalar(1);
  const int first = idx.front();
  Scalar total(0);
  for (std::size_t j = 1; j < idx.size(); ++j) {
    std::vector<int> rest;
    rest.reserve(idx.size() - 2);
    for (std::size_t k = 1; k < idx.size(); ++k)
      if (k != j) rest.push_back(idx[k]);
    const Scalar term = a(first, idx[j]) * expand(a, rest);
    total += (j % 2 == 1) ? term : -term;
  }
  return total;
}

}  // namespace detail

template <typename Scalar>
PfaffianLog<Scalar> pfaffian_log(const SkewMatrix<Scalar>& m) {
  if (m.size() == 0) return {};
  return detail::parlett_reid<Scalar>(m.dense());
}

template <typename Scalar>
Scalar pfaffian(const SkewMatrix<Scalar>& m) {
  auto p = pfaffian_log(m);
  if (p.phase == Scalar(0)) return Scalar(0);
  return p.value();
}

// Pfaffian of a raw square block assumed antisymmetric (used for small Wick minors).
template <typename Derived>
typename Derived::Scalar pfaffian_dense(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() == 0) return Scalar(1);
  auto p = detail::parlett_reid<Scalar>(a.eval());
  if (p.phase == Scalar(0)) return Scalar(0);
  return p.value();
}

// Exact combinatorial expansion along the first row; n <= 8 only.
template <typename Scalar>
Scalar pfaffian_by_expansion(const SkewMatrix<Scalar>& m) {
  if (m.size() % 2 != 0) throw std::invalid_argument("pfaffian: odd dimension");
  if (m.size() > 8) throw std::invalid_argument("pfaffian_by_expansion: n > 8");
  std::vector<int> idx(m.size());
  for (int i = 0; i < int(m.size()); ++i) idx[i] = i;
  return detail::expand<Scalar>(m.dense(), idx);
}

template <typename Scalar>
SkewMatrix<Scalar> principal_submatrix(const SkewMatrix<Scalar>& m, const std::vector<int>& indices) {
  const int k = int(indices.size());
  for (int i = 0; i < k; ++i) {
    if (indices[i] < 0 || indices[i] >= m.size()) throw std::out_of_range("index outside matrix");
    for (int j = 0; j < i; ++j)
      if (indices[i] == indices[j]) throw std::invalid_argument("repeated index");
  }
  SkewMatrix<Scalar> s(k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) s.set(i, j, m(indices[i], indices[j]));
  return s;
}

template <typename Scalar>
Scalar pfaffian_minor(const SkewMatrix<Scalar>& m, const std::vector<int>& indices) {
  if (indices.size() % 2 != 0) throw std::invalid_argument("pfaffian_minor: odd index count");
  return pfaffian(principal_submatrix(m, indices));
}

// Inverse of a nonsingular skew matrix. The pivot check uses the Parlett-Reid pivots relative
// to the largest entry; the result is re-antisymmetrized.
template <typename Scalar>
SkewMatrix<Scalar> skew_inverse(const SkewMatrix<Scalar>& m, double rel_threshold = 1e-12) {
  using Matrix = typename SkewMatrix<Scalar>::Matrix;
  const Eigen::Index n = m.size();
  if (n % 2 != 0) throw SingularMatrixError(0.0, "skew_inverse: odd dimension is always singular");
  const double scale = n ? double(m.dense().cwiseAbs().maxCoeff()) : 0.0;
  double min_pivot = 0.0;
  detail::parlett_reid<Scalar>(m.dense(), &min_pivot);
  if (!(min_pivot > rel_threshold * scale))
    throw SingularMatrixError(min_pivot, "skew_inverse: pivot " + std::to_string(min_pivot) + " below threshold");
  Eigen::PartialPivLU<Matrix> lu(m.dense());
  Matrix inv = lu.inverse();
  const double asym = double((inv + inv.transpose()).cwiseAbs().maxCoeff()) / 2;
  const double norm = double(inv.cwiseAbs().maxCoeff());
  if (asym > 1e-10 * norm)
    throw SingularMatrixError(min_pivot, "skew_inverse: symmetrization residual too large");
  return SkewMatrix<Scalar>::from_antisymmetric_part(inv);
}

}  // namespace pfising
