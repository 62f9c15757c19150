#pragma once

#include <Eigen/Dense>
#include <vector>

#include "errors.hpp"
#include "fourier_scalar.hpp"
#include "multivector.hpp"

namespace twistor_forge {

using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

/// Default relative singular-value threshold for rank decisions.
inline constexpr double kRankTolerance = 1e-9;

template <class Matrix>
int numerical_rank(const Matrix& a, double rel_tol = kRankTolerance) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

/// Orthonormal basis (columns) of the right nullspace, rank decided with
/// threshold rel_tol * largest singular value.
template <class Matrix>
Matrix nullspace(const Matrix& a, double rel_tol = kRankTolerance) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int r = 0;
  if (s.size() > 0 && s(0) > 0.0)
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > rel_tol * s(0)) ++r;
  const Eigen::Index n = a.cols();
  return svd.matrixV().rightCols(n - r);
}

/// Orthonormal basis of the column space.
template <class Matrix>
Matrix column_space(const Matrix& a, double rel_tol = kRankTolerance) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(numerical_rank(a, rel_tol));
}

/// Sine of the largest principal angle between two column spans (0 when
/// the spans coincide).
inline double subspace_distance(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.cols()) return 1.0;
  const CMatrix qa = column_space(a);
  const CMatrix qb = column_space(b);
  if (qa.cols() != qb.cols()) return 1.0;
  const CMatrix residual = qb - qa * (qa.adjoint() * qb);
  return residual.norm() == 0.0 ? 0.0 : Eigen::JacobiSVD<CMatrix>(residual).singularValues()(0);
}

/// Antisymmetric coefficient matrix M_ab = alpha(e_a, e_b) of a 2-vector.
inline CMatrix two_form_matrix(const Multivector<complex>& alpha) {
  if (alpha.degree() != 2) throw DegreeError("expected a 2-form");
  const int d = alpha.generators();
  CMatrix m = CMatrix::Zero(d, d);
  for (const auto& [mask, c] : alpha.terms()) {
    const auto idx = mask_indices(mask);
    m(idx[0], idx[1]) = c;
    m(idx[1], idx[0]) = -c;
  }
  return m;
}

/// Inverse of two_form_matrix: sum_{a<b} M_ab e_a ^ e_b.
inline Multivector<complex> two_form_from_matrix(const CMatrix& m) {
  const int d = static_cast<int>(m.rows());
  Multivector<complex> out(d, 2);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (m(a, b) != complex{}) out.set(indices_mask({a, b}), m(a, b));
  return out;
}

/// Substitutes every generator e_i by sum_j sub(i, j) e_j.
inline Multivector<complex> substitute(const Multivector<complex>& alpha, const CMatrix& sub) {
  const int d = alpha.generators();
  if (sub.rows() != d || sub.cols() != d) throw DimensionError("substitution matrix shape");
  std::vector<Multivector<complex>> images;
  images.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    Multivector<complex> e(d, 1);
    for (int j = 0; j < d; ++j)
      if (sub(i, j) != complex{}) e.set(Mask{1} << j, sub(i, j));
    images.push_back(std::move(e));
  }
  Multivector<complex> out(d, alpha.degree());
  for (const auto& [mask, c] : alpha.terms()) {
    Multivector<complex> term = Multivector<complex>::one(d);
    term *= c;
    for (int i : mask_indices(mask)) term = wedge(term, images[static_cast<std::size_t>(i)]);
    out += term;
  }
  return out;
}

/// Matrix of FourierScalars, row-major.
struct ScalarMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<FourierScalar> entries;

  ScalarMatrix() = default;
  ScalarMatrix(int r, int c, int scalar_dim)
      : rows(r), cols(c), entries(static_cast<std::size_t>(r * c), FourierScalar(scalar_dim)) {}

  FourierScalar& operator()(int i, int j) { return entries[static_cast<std::size_t>(i * cols + j)]; }
  const FourierScalar& operator()(int i, int j) const {
    return entries[static_cast<std::size_t>(i * cols + j)];
  }

  static ScalarMatrix identity(int n, int scalar_dim, complex diag = {1.0, 0.0}) {
    ScalarMatrix m(n, n, scalar_dim);
    for (int i = 0; i < n; ++i) m(i, i) = FourierScalar::constant(scalar_dim, diag);
    return m;
  }

  friend ScalarMatrix operator*(const ScalarMatrix& a, const ScalarMatrix& b) {
    if (a.cols != b.rows) throw DimensionError("matrix product shape");
    const int sd = a.entries.empty() ? 0 : a.entries.front().dim();
    ScalarMatrix out(a.rows, b.cols, sd);
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < b.cols; ++j) {
        FourierScalar acc(sd);
        double scale = 0.0;
        for (int k = 0; k < a.cols; ++k) {
          const auto& x = a(i, k);
          const auto& y = b(k, j);
          if (x.is_zero() || y.is_zero()) continue;
          acc.add_raw(FourierScalar::multiply_raw(x, y));
          scale = std::max(scale, x.max_abs() * y.max_abs());
        }
        acc.prune(kPruneTolerance * scale);
        out(i, j) = std::move(acc);
      }
    return out;
  }

  CMatrix at(std::span<const double> x) const {
    CMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = (*this)(i, j).evaluate(x);
    return m;
  }

  bool is_constant() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const FourierScalar& s) { return s.is_constant(); });
  }
};

/// Adjugate and determinant of a square scalar matrix by the
/// Faddeev-LeVerrier recursion (division only by integers).
inline std::pair<ScalarMatrix, FourierScalar> adjugate_and_determinant(const ScalarMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("adjugate of a non-square matrix");
  const int n = a.rows;
  const int sd = a.entries.empty() ? 0 : a.entries.front().dim();
  ScalarMatrix m(n, n, sd);  // M_0 = 0
  FourierScalar c = FourierScalar::constant(sd, 1.0);  // c_n
  for (int k = 1; k <= n; ++k) {
    ScalarMatrix next = a * m;
    for (int i = 0; i < n; ++i) next(i, i) += c;
    m = std::move(next);
    const ScalarMatrix am = a * m;
    FourierScalar trace(sd);
    for (int i = 0; i < n; ++i) trace += am(i, i);
    c = trace * complex{-1.0 / k, 0.0};
  }
  // c now holds c_0 = (-1)^n det(a); adj(a) = (-1)^(n+1) M_n.
  FourierScalar det = (n % 2 == 0) ? c : -c;
  if (n % 2 == 0)
    for (auto& e : m.entries) e *= complex{-1.0, 0.0};
  return {std::move(m), std::move(det)};
}

}  // namespace twistor_forge
