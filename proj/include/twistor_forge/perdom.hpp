#pragma once

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "bbf.hpp"
#include "form.hpp"
#include "linalg.hpp"

namespace twistor_forge {


inline constexpr double kPeriodTolerance = 1e-10;
inline constexpr double kSignificance = 1e-12;

/// Complex bilinear extension of q.
inline complex q_complex(const QuadraticSpace& s, const CVector& x, const CVector& y) {
  if (x.size() != s.b || y.size() != s.b) throw DimensionError("vector length does not match b");
  return (x.transpose() * s.gram.cast<complex>() * y)(0, 0);
}

/// Unit Euclidean norm, first coordinate above 1e-12 made positive real.
inline CVector normalize_projective(const CVector& l) {
  const double norm = l.norm();
  if (!(norm > 0.0)) throw ZeroVectorError("zero vector has no projective class");
  CVector v = l / norm;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > kSignificance) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      break;
    }
  return v;
}

/// Distance between projective classes: min over phases of |a - e^{i th} b| for unit a, b.
inline double projective_distance(const CVector& a, const CVector& b) {
  const CVector u = a.normalized(), v = b.normalized();
  const complex overlap = v.dot(u);
  const complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : complex{1.0, 0.0};
  return (u - phase * v).norm();
}

struct PeriodPoint {
  QuadraticSpace space;
  CVector rep;

  static PeriodPoint from(const QuadraticSpace& s, const CVector& l) { return PeriodPoint{s, normalize_projective(l)}; }

  complex q_ll() const { return q_complex(space, rep, rep); }
  double q_llbar() const { return q_complex(space, rep, rep.conjugate()).real(); }
};

inline bool is_period_point(const QuadraticSpace& s, const CVector& l) {
  if (l.size() != s.b) throw DimensionError("vector length does not match b");
  if (!(l.norm() > 0.0)) throw ZeroVectorError("zero vector is not a period point");
  const double qlb = q_complex(s, l, l.conjugate()).real();
  return qlb > 0.0 && std::abs(q_complex(s, l, l)) <= kPeriodTolerance * qlb;
}

inline bool is_period_point(const PeriodPoint& p) { return is_period_point(p.space, p.rep); }

/// Eigenvalue counts (positive, null, negative) of q restricted to span(basis).
inline Signature signature(const QuadraticSpace& s, const RMatrix& basis) {
  if (basis.rows() != s.b) throw DimensionError("basis vectors must have length b");
  if (numerical_rank(basis) < basis.cols()) throw RankError("basis vectors are linearly dependent");
  const RMatrix g = basis.transpose() * s.gram * basis;
  return QuadraticSpace(0.5 * (g + g.transpose())).signature(kPeriodTolerance);
}

/// Oriented k-plane: Euclidean-orthonormal basis columns plus a sign; the
/// orientation of the plane is that of (basis columns) times `orientation`.
struct Plane {
  QuadraticSpace space;
  RMatrix basis;
  int orientation = 1;
  Signature q_signature;

  int k() const { return static_cast<int>(basis.cols()); }

  /// Orthonormalizes `vectors` without changing their orientation.
  static Plane from_vectors(const QuadraticSpace& s, const RMatrix& vectors, int orientation = 1) {
    if (vectors.cols() < 1 || vectors.cols() > 3) throw DimensionError("planes have dimension 1 to 3");
    const Signature sig = signature(s, vectors);
    Eigen::HouseholderQR<RMatrix> qr(vectors);
    RMatrix q = qr.householderQ() * RMatrix::Identity(vectors.rows(), vectors.cols());
    const RMatrix r = qr.matrixQR().topRows(vectors.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    return Plane{s, q, orientation >= 0 ? 1 : -1, sig};
  }

  /// Basis in the stored orientation (last vector negated when reversed).
  RMatrix oriented_basis() const {
    RMatrix b = basis;
    if (orientation < 0) b.col(b.cols() - 1) = -b.col(b.cols() - 1);
    return b;
  }

  bool positive() const { return q_signature.positive == k(); }
};

/// Orientation-preserving q-orthonormalization of a q-positive basis.
inline RMatrix q_orthonormalize(const QuadraticSpace& s, const RMatrix& basis) {
  RMatrix u = basis;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) u.col(j) -= s.q(u.col(j), u.col(i)) * u.col(i);
    const double n2 = s.q(u.col(j), u.col(j));
    if (!(n2 > 0.0)) throw SignatureError("subspace is not q-positive");
    u.col(j) /= std::sqrt(n2);
  }
  return u;
}

/// (Re l, Im l) with the positive orientation.
inline Plane line_to_plane(const PeriodPoint& p) {
  if (!is_period_point(p)) throw SignatureError("not a period point");
  RMatrix v(p.space.b, 2);
  v.col(0) = p.rep.real();
  v.col(1) = p.rep.imag();
  return Plane::from_vectors(p.space, v, 1);
}

/// u_1 + i u_2 for an oriented q-orthonormal basis (u_1, u_2) of the plane.
inline PeriodPoint plane_to_line(const Plane& v) {
  if (v.k() != 2) throw DimensionError("plane_to_line needs a 2-plane");
  if (!v.positive()) throw SignatureError("plane is not q-positive");
  const RMatrix u = q_orthonormalize(v.space, v.oriented_basis());
  const CVector l = u.col(0).cast<complex>() + complex{0.0, 1.0} * u.col(1).cast<complex>();
  return PeriodPoint::from(v.space, l);
}

/// Period point of the oriented 2-plane in W normal (in q-orthonormal
/// coordinates of W) to the unit vector `normal`.
inline PeriodPoint twistor_line_point(const Plane& w, const Eigen::Vector3d& normal) {
  if (w.k() != 3 || w.q_signature.positive != 3) throw SignatureError("twistor_line needs a q-positive 3-plane");
  if (!(normal.norm() > 0.0)) throw ZeroVectorError("normal must be non-zero");
  const Eigen::Vector3d nu = normal.normalized();
  const Eigen::Vector3d ref = std::abs(nu(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d a = nu.cross(ref).normalized();
  const Eigen::Vector3d b = nu.cross(a);  // a x b = nu
  const RMatrix f = q_orthonormalize(w.space, w.oriented_basis());
  const CVector l = (f * a).cast<complex>() + complex{0.0, 1.0} * (f * b).cast<complex>();
  return PeriodPoint::from(w.space, l);
}

struct TwistorSample {
  Eigen::Vector3d normal;
  PeriodPoint point;
};

/// Fibonacci points on the unit sphere.
inline std::vector<Eigen::Vector3d> sphere_samples(int samples) {
  std::vector<Eigen::Vector3d> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < samples; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / samples;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
  }
  return out;
}

inline std::vector<TwistorSample> twistor_line(const Plane& w, int samples) {
  if (samples < 0) throw RangeError("negative sample count");
  std::vector<TwistorSample> out;
  for (const auto& nu : sphere_samples(samples)) out.push_back({nu, twistor_line_point(w, nu)});
  return out;
}

namespace detail {

inline void check_degenerate_basis(const QuadraticSpace& s, const RMatrix& w) {
  if (w.rows() != s.b || w.cols() != 3) throw DimensionError("degenerate line needs a basis (w1, w2, w3)");
  const RMatrix g = w.transpose() * s.gram * w;
  const double scale = std::max(1.0, (s.gram.cwiseAbs().maxCoeff() * w.colwise().squaredNorm()).maxCoeff());
  RMatrix expected = RMatrix::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 1.0;
  if ((g - expected).cwiseAbs().maxCoeff() > kPeriodTolerance * scale)
    throw SignatureError("basis is not (q-orthonormal, q-orthonormal, null and orthogonal)");
  if (numerical_rank(w) < 3) throw RankError("degenerate basis is linearly dependent");
}

}  // namespace detail

/// (w1 + i w2) + t w3, not normalized; affine in t.
inline CVector degenerate_representative(const QuadraticSpace& s, const RMatrix& w, complex t) {
  detail::check_degenerate_basis(s, w);
  return w.col(0).cast<complex>() + complex{0.0, 1.0} * w.col(1).cast<complex>() + t * w.col(2).cast<complex>();
}

inline PeriodPoint degenerate_twistor_line(const QuadraticSpace& s, const RMatrix& w, complex t) {
  return PeriodPoint::from(s, degenerate_representative(s, w, t));
}

/// span{w1 + Re(t) w3, w2 + Im(t) w3}.
inline Plane degenerate_plane(const QuadraticSpace& s, const RMatrix& w, complex t) {
  detail::check_degenerate_basis(s, w);
  RMatrix v(s.b, 2);
  v.col(0) = w.col(0) + t.real() * w.col(2);
  v.col(1) = w.col(1) + t.imag() * w.col(2);
  return Plane::from_vectors(s, v, 1);
}

// ---------------------------------------------------------------------------
// Cohomology classes of constant forms on tori.

/// Gram matrix of the wedge pairing (a, b) -> int a ^ b over the unit torus
/// for forms of complementary degree.
inline RMatrix wedge_pairing_gram(const std::vector<Form>& basis) {
  const auto m = static_cast<Eigen::Index>(basis.size());
  RMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      g(i, j) = wedge(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]).integrate().real();
  return g;
}

/// Coordinates of the cohomology class of `a` in the span of the classes of
/// `basis`; RangeError when it does not lie in that span.
inline CVector class_coordinates(const Form& a, const std::vector<Form>& basis) {
  const Form ca = a.cohomology_class();
  std::vector<Form> cb;
  std::vector<Mask> masks;
  auto collect = [&](const Form& f) {
    for (const auto& [mask, c] : f.terms())
      if (std::find(masks.begin(), masks.end(), mask) == masks.end()) masks.push_back(mask);
  };
  collect(ca);
  for (const auto& f : basis) {
    cb.push_back(f.cohomology_class());
    collect(cb.back());
  }
  const auto rows = static_cast<Eigen::Index>(masks.size());
  auto column = [&](const Form& f) {
    CVector v = CVector::Zero(rows);
    for (Eigen::Index r = 0; r < rows; ++r)
      if (const FourierScalar* c = f.find(masks[static_cast<std::size_t>(r)])) v(r) = c->constant_term();
    return v;
  };
  CMatrix m(rows, static_cast<Eigen::Index>(cb.size()));
  for (std::size_t j = 0; j < cb.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = column(cb[j]);
  const CVector target = column(ca);
  const CVector x = m.completeOrthogonalDecomposition().solve(target);
  if ((m * x - target).norm() > 1e-12 * std::max(1.0, target.norm()))
    throw RangeError("class is not in the span of the basis");
  return x;
}

/// CSV of twistor-line samples: nu_x, nu_y, nu_z, rep re/im interleaved,
/// q_ll_residual, q_llbar.
inline void write_twistor_csv(std::ostream& os, const std::vector<TwistorSample>& samples) {
  if (samples.empty()) return;
  const auto b = samples.front().point.rep.size();
  os << "nu_x,nu_y,nu_z";
  for (Eigen::Index i = 0; i < b; ++i) os << ",l" << i + 1 << "_re,l" << i + 1 << "_im";
  os << ",q_ll_residual,q_llbar\n";
  os.precision(17);
  for (const auto& s : samples) {
    os << s.normal(0) << ',' << s.normal(1) << ',' << s.normal(2);
    for (Eigen::Index i = 0; i < b; ++i) os << ',' << s.point.rep(i).real() << ',' << s.point.rep(i).imag();
    os << ',' << std::abs(s.point.q_ll()) << ',' << s.point.q_llbar() << '\n';
  }
}

/// CSV of degenerate-line samples: t_re, t_im, rep re/im interleaved,
/// q_ll_residual, q_llbar.
inline void write_degenerate_csv(std::ostream& os, const std::vector<std::pair<complex, PeriodPoint>>& samples) {
  if (samples.empty()) return;
  const auto b = samples.front().second.rep.size();
  os << "t_re,t_im";
  for (Eigen::Index i = 0; i < b; ++i) os << ",l" << i + 1 << "_re,l" << i + 1 << "_im";
  os << ",q_ll_residual,q_llbar\n";
  os.precision(17);
  for (const auto& [t, p] : samples) {
    os << t.real() << ',' << t.imag();
    for (Eigen::Index i = 0; i < b; ++i) os << ',' << p.rep(i).real() << ',' << p.rep(i).imag();
    os << ',' << std::abs(p.q_ll()) << ',' << p.q_llbar() << '\n';
  }
}

}  // namespace twistor_forge
