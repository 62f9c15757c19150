#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "form.hpp"
#include "grid.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace twistor_forge {

/// Tolerance on J^2 = -Id at every sample point.
inline constexpr double kStructureTolerance = 1e-9;

/// Almost complex structure J acting on tangent vectors, (J v)^a = J_ab v^b.
/// Stored as a numerator matrix of FourierScalars over a common scalar
/// denominator so that structures built from non-constant data stay exact;
/// the denominator is the constant 1 for polynomial/trigonometric fields.
class ComplexStructureField {
 public:
  ComplexStructureField() = default;

  static ComplexStructureField constant(const RMatrix& m) {
    const int d = static_cast<int>(m.rows());
    ScalarMatrix n(d, d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) n(i, j) = FourierScalar::constant(d, m(i, j));
    return ComplexStructureField(std::move(n), FourierScalar::constant(d, 1.0));
  }

  /// Builds J = numerator / denominator and validates J^2 = -Id on the
  /// evaluation grid (StructureError otherwise).
  static ComplexStructureField from_fields(ScalarMatrix numerator, FourierScalar denominator,
                                           const GridOptions& grid = {}) {
    ComplexStructureField out(std::move(numerator), std::move(denominator));
    out.validate(grid);
    return out;
  }

  static ComplexStructureField from_fields(ScalarMatrix numerator, const GridOptions& grid = {}) {
    const int d = numerator.rows;
    return from_fields(std::move(numerator), FourierScalar::constant(d, 1.0), grid);
  }

  int dim() const { return numerator_.rows; }
  const ScalarMatrix& numerator() const { return numerator_; }
  const FourierScalar& denominator() const { return denominator_; }

  bool is_constant() const { return numerator_.is_constant() && denominator_.is_constant(); }

  CoordinateProfile profile() const {
    CoordinateProfile p(dim());
    for (const auto& e : numerator_.entries) p.add(e);
    p.add(denominator_);
    return p;
  }

  /// Pointwise complex matrix N(x)/D(x) (its imaginary part vanishes for a
  /// valid field).
  CMatrix complex_at(std::span<const double> x) const {
    return numerator_.at(x) / denominator_.evaluate(x);
  }

  RMatrix at(std::span<const double> x) const { return complex_at(x).real(); }

  /// d_k J at x for every coordinate k, by the quotient rule.
  std::vector<CMatrix> derivatives_at(std::span<const double> x) const {
    if (numerator_derivs_.empty())
      return std::vector<CMatrix>(static_cast<std::size_t>(dim()), CMatrix::Zero(dim(), dim()));
    const complex dval = denominator_.evaluate(x);
    const CMatrix nval = numerator_.at(x);
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(dim()));
    for (int k = 0; k < dim(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const CMatrix dn = numerator_derivs_[kk].at(x);
      const complex dd = denominator_derivs_[kk].evaluate(x);
      out.push_back((dn * dval - nval * dd) / (dval * dval));
    }
    return out;
  }

  /// Largest entry of J^2 + Id over the grid, together with the largest
  /// imaginary residue of N/D.
  double square_defect(const GridOptions& grid = {}) const {
    double worst = 0.0;
    for (const auto& x : evaluation_grid(profile(), grid)) {
      const CMatrix j = complex_at(x);
      worst = std::max(worst, j.imag().cwiseAbs().maxCoeff());
      const RMatrix jr = j.real();
      worst = std::max(worst, (jr * jr + RMatrix::Identity(dim(), dim())).cwiseAbs().maxCoeff());
    }
    return worst;
  }

  void validate(const GridOptions& grid = {}) const {
    if (dim() % 2 != 0) throw StructureError("odd-dimensional structure");
    const double defect = square_defect(grid);
    if (!(defect < kStructureTolerance)) {
      std::ostringstream os;
      os << "J^2 + Id reaches " << defect;
      throw StructureError(os.str());
    }
  }

 private:
  ComplexStructureField(ScalarMatrix n, FourierScalar d) : numerator_(std::move(n)), denominator_(std::move(d)) {
    if (numerator_.rows != numerator_.cols) throw DimensionError("structure matrix must be square");
    if (!is_constant()) compute_derivatives();
  }

  void compute_derivatives() {
    for (int k = 0; k < dim(); ++k) {
      ScalarMatrix dn(dim(), dim(), dim());
      for (std::size_t e = 0; e < dn.entries.size(); ++e)
        dn.entries[e] = numerator_.entries[e].derivative(k);
      numerator_derivs_.push_back(std::move(dn));
      denominator_derivs_.push_back(denominator_.derivative(k));
    }
  }

  ScalarMatrix numerator_;
  FourierScalar denominator_;
  std::vector<ScalarMatrix> numerator_derivs_;
  std::vector<FourierScalar> denominator_derivs_;
};

/// Pointwise basis of a complex sub-bundle of TM (x) C.
class SubBundleBasis {
 public:
  SubBundleBasis(int dim, std::vector<VectorField> vectors) : dim_(dim), vectors_(std::move(vectors)) {
    for (const auto& v : vectors_)
      if (v.dim() != dim_) throw DimensionError("basis vector dimension mismatch");
  }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(vectors_.size()); }
  const std::vector<VectorField>& vectors() const { return vectors_; }

  bool is_constant() const {
    for (const auto& v : vectors_)
      for (const auto& c : v.components())
        if (!c.is_constant()) return false;
    return true;
  }

  CoordinateProfile profile() const {
    CoordinateProfile p(dim_);
    for (const auto& v : vectors_)
      for (const auto& c : v.components()) p.add(c);
    return p;
  }

  /// dim x rank matrix of the basis at x.
  CMatrix at(std::span<const double> x) const {
    CMatrix b(dim_, rank());
    for (int c = 0; c < rank(); ++c) {
      const auto v = vectors_[static_cast<std::size_t>(c)].at(x);
      for (int r = 0; r < dim_; ++r) b(r, c) = v[static_cast<std::size_t>(r)];
    }
    return b;
  }

  static SubBundleBasis constant(const CMatrix& b) {
    const int d = static_cast<int>(b.rows());
    std::vector<VectorField> vs;
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      std::vector<complex> v(static_cast<std::size_t>(d));
      for (int r = 0; r < d; ++r) v[static_cast<std::size_t>(r)] = b(r, c);
      vs.push_back(VectorField::constant(v));
    }
    return SubBundleBasis(d, std::move(vs));
  }

 private:
  int dim_;
  std::vector<VectorField> vectors_;
};

/// Complex structure whose -i eigenbundle (T^{0,1}) is the span of `t01`.
/// Requires 2 rank = dim and no real vectors in the span (RankError,
/// RealKernelError).
inline ComplexStructureField structure_from_antiholomorphic(const SubBundleBasis& t01,
                                                            const GridOptions& grid = {}) {
  const int d = t01.dim();
  const int r = t01.rank();
  if (2 * r != d) throw RankError("antiholomorphic bundle must have rank dim/2");
  for (const auto& x : evaluation_grid(t01.profile(), grid)) {
    const CMatrix b = t01.at(x);
    if (numerical_rank(b) != r) throw RankError("basis is pointwise rank-deficient");
    RMatrix stacked(d, 2 * r);
    stacked << b.real(), b.imag();
    if (numerical_rank(stacked) < d) throw RealKernelError("span contains a real tangent vector");
  }
  if (t01.is_constant()) {
    const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
    const CMatrix b = t01.at(origin);
    CMatrix p(d, d);
    p << b, b.conjugate();
    CVector eig(d);
    eig.head(r).setConstant(complex{0.0, -1.0});
    eig.tail(r).setConstant(complex{0.0, 1.0});
    const CMatrix j = p * eig.asDiagonal() * p.inverse();
    auto out = ComplexStructureField::constant(j.real());
    out.validate(grid);
    return out;
  }
  // Non-constant basis: J = P diag(-i, +i) adj(P) / det(P), exact.
  ScalarMatrix p(d, d, d);
  ScalarMatrix pd(d, d, d);
  for (int c = 0; c < r; ++c) {
    const auto& v = t01.vectors()[static_cast<std::size_t>(c)];
    for (int row = 0; row < d; ++row) {
      const auto rr = static_cast<std::size_t>(row);
      p(row, c) = v[rr];
      p(row, c + r) = v[rr].conj();
      pd(row, c) = v[rr] * complex{0.0, -1.0};
      pd(row, c + r) = v[rr].conj() * complex{0.0, 1.0};
    }
  }
  auto [adj, det] = adjugate_and_determinant(p);
  return ComplexStructureField::from_fields(pd * adj, det, grid);
}

/// Basis of the -i eigenbundle of a constant structure.
inline SubBundleBasis antiholomorphic_bundle(const ComplexStructureField& j) {
  if (!j.is_constant()) throw StructureError("antiholomorphic_bundle needs a constant structure");
  const int d = j.dim();
  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  const CMatrix projector = 0.5 * (CMatrix::Identity(d, d) + complex{0.0, 1.0} * j.complex_at(origin));
  return SubBundleBasis::constant(column_space(projector));
}

/// Constant flat hyperkahler structure on R^{4n} with quaternionic I, J, K
/// and metric g.
struct HyperkahlerTriple {
  RMatrix I, J, K, g;

  int dim() const { return static_cast<int>(g.rows()); }

  /// Standard model: I multiplies z_j = x_{2j-1} + i x_{2j} by i, and
  /// omega_J + i omega_K = sum_j dz_j ^ dz_{n+j}.
  static HyperkahlerTriple standard(int n) {
    if (n < 1) throw RangeError("quaternionic dimension must be positive");
    const int d = 4 * n;
    HyperkahlerTriple h{RMatrix::Zero(d, d), RMatrix::Zero(d, d), RMatrix::Zero(d, d),
                        RMatrix::Identity(d, d)};
    for (int j = 0; j < n; ++j) {
      const int x1 = 2 * j, x2 = 2 * j + 1, x3 = 2 * (n + j), x4 = 2 * (n + j) + 1;
      h.I(x2, x1) = 1;  h.I(x1, x2) = -1;  h.I(x4, x3) = 1;  h.I(x3, x4) = -1;
      h.J(x3, x1) = -1; h.J(x1, x3) = 1;   h.J(x4, x2) = 1;  h.J(x2, x4) = -1;
      h.K(x4, x1) = -1; h.K(x1, x4) = 1;   h.K(x3, x2) = -1; h.K(x2, x3) = 1;
    }
    return h;
  }

  /// Standard triple transported by a random well-conditioned linear map.
  static HyperkahlerTriple random(int n, std::uint64_t seed) {
    const int d = 4 * n;
    Rng rng(seed);
    RMatrix a(d, d), b(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        a(i, k) = rng.normal();
        b(i, k) = rng.normal();
      }
    const RMatrix q1 = Eigen::HouseholderQR<RMatrix>(a).householderQ();
    const RMatrix q2 = Eigen::HouseholderQR<RMatrix>(b).householderQ();
    RVector s(d);
    for (int i = 0; i < d; ++i) s(i) = rng.uniform(0.5, 2.0);
    const RMatrix t = q1 * s.asDiagonal() * q2;
    const RMatrix ti = t.inverse();
    const HyperkahlerTriple base = standard(n);
    return HyperkahlerTriple{t * base.I * ti, t * base.J * ti, t * base.K * ti,
                             ti.transpose() * base.g * ti};
  }

  /// Largest violation of the quaternion relations, metric compatibility
  /// and symmetry of g.
  double defect() const {
    const int d = dim();
    const RMatrix id = RMatrix::Identity(d, d);
    double w = 0.0;
    auto upd = [&](const RMatrix& m) { w = std::max(w, m.cwiseAbs().maxCoeff()); };
    upd(I * I + id);
    upd(J * J + id);
    upd(K * K + id);
    upd(I * J * K + id);
    upd(g - g.transpose());
    for (const RMatrix* l : {&I, &J, &K}) upd(l->transpose() * g * *l - g);
    return w;
  }

  void validate() const {
    if (dim() % 4 != 0) throw DimensionError("hyperkahler dimension must be divisible by 4");
    if (defect() > 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff()))
      throw StructureError("quaternionic relations violated");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(g);
    if (es.eigenvalues().minCoeff() <= 0.0) throw StructureError("metric is not positive definite");
  }
};

/// Matrix of the 2-form g(., L .).
inline Form constant_two_form(const RMatrix& m) {
  const int d = static_cast<int>(m.rows());
  Form out(d, 2);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (m(a, b) != 0.0) out.set(indices_mask({a, b}), FourierScalar::constant(d, m(a, b)));
  return out;
}

inline void check_sphere(double a, double b, double c) {
  if (std::abs(a * a + b * b + c * c - 1.0) > 1e-12) throw SphereError("(a,b,c) is not on the unit sphere");
}

/// L = aI + bJ + cK for a^2 + b^2 + c^2 = 1.
inline ComplexStructureField induced_structure(const HyperkahlerTriple& h, double a, double b, double c) {
  check_sphere(a, b, c);
  return ComplexStructureField::constant(a * h.I + b * h.J + c * h.K);
}

/// omega_L(., .) = g(., L .) for L = aI + bJ + cK.
inline Form hermitian_form(const HyperkahlerTriple& h, double a, double b, double c) {
  check_sphere(a, b, c);
  return constant_two_form(h.g * (a * h.I + b * h.J + c * h.K));
}

/// The Kahler form g(I., .) = -omega_I, positive on (x, Ix).
inline Form kahler_form(const HyperkahlerTriple& h) { return constant_two_form(-(h.g * h.I)); }

/// Omega = omega_J + i omega_K.
inline Form holomorphic_symplectic_form(const HyperkahlerTriple& h) {
  Form omega = hermitian_form(h, 0, 1, 0);
  omega += Form(hermitian_form(h, 0, 0, 1) * complex{0.0, 1.0});
  return omega;
}

}  // namespace twistor_forge
