#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "form.hpp"
#include "grid.hpp"
#include "hodge.hpp"
#include "linalg.hpp"
#include "structure.hpp"

namespace twistor_forge {

namespace detail {

inline std::string point_string(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

/// Real and imaginary parts of the coefficient matrix of (phase * omega).
inline std::pair<ScalarMatrix, ScalarMatrix> real_imag_matrices(const Form& omega, complex phase) {
  const int d = omega.dim();
  ScalarMatrix re(d, d, d), im(d, d, d);
  for (const auto& [mask, c] : omega.terms()) {
    const auto idx = mask_indices(mask);
    const FourierScalar v = c * phase;
    const FourierScalar vc = v.conj();
    const FourierScalar r = (v + vc) * complex{0.5, 0.0};
    const FourierScalar i = (v - vc) * complex{0.0, -0.5};
    re(idx[0], idx[1]) = r;
    re(idx[1], idx[0]) = -r;
    im(idx[0], idx[1]) = i;
    im(idx[1], idx[0]) = -i;
  }
  return {std::move(re), std::move(im)};
}

}  // namespace detail

/// Almost complex structure whose T^{0,1} is the kernel {v : Omega(v, .) = 0}
/// of a non-degenerate complex 2-form with Omega^{n+1} = 0 on R^{4n}.
///
/// Constant forms go through a rank-revealing nullspace solve. Non-constant
/// forms use J = -Re(v Omega)^{-1} Im(v Omega) for a global phase v, computed
/// exactly as adjugate / determinant and checked pointwise against the
/// nullspace.
inline ComplexStructureField kernel_structure(const Form& omega, const GridOptions& grid = {}) {
  if (omega.degree() != 2) throw DegreeError("kernel_structure expects a 2-form");
  const int d = omega.dim();
  if (d % 4 != 0) throw DimensionError("kernel_structure expects real dimension 4n");
  const int n = d / 4;
  {
    const Form top = power(omega, n + 1);
    if (!top.is_zero()) {
      std::ostringstream os;
      os << "Omega^" << n + 1 << " != 0 (" << top.terms().size() << " nonzero coefficients)";
      throw PowerConditionViolated(os.str());
    }
  }
  const auto points = evaluation_grid(CoordinateProfile(d).add(omega), grid);
  std::vector<CMatrix> kernels;
  kernels.reserve(points.size());
  for (const auto& x : points) {
    const CMatrix m = two_form_matrix(omega.at(x));
    RMatrix stacked(2 * d, d);
    stacked << m.real(), m.imag();
    const RMatrix real_kernel = nullspace(stacked);
    if (real_kernel.cols() > 0 || m.norm() == 0.0) {
      RVector v = real_kernel.cols() > 0 ? RVector(real_kernel.col(0)) : RVector(RVector::Unit(d, 0));
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0) v = -v;
      NotNonDegenerate err("real vector in the kernel at x = " + detail::point_string(x));
      err.witness_point = x;
      err.witness_vector.assign(v.data(), v.data() + v.size());
      throw err;
    }
    CMatrix k = nullspace(m);
    if (k.cols() != 2 * n) {
      std::ostringstream os;
      os << "kernel has complex dimension " << k.cols() << " != " << 2 * n << " at x = "
         << detail::point_string(x);
      PowerConditionViolated err(os.str());
      err.witness_point = x;
      throw err;
    }
    kernels.push_back(std::move(k));
  }
  if (omega.is_constant())
    return structure_from_antiholomorphic(SubBundleBasis::constant(kernels.front()), grid);

  // Pick the phase that keeps Re(v Omega) best conditioned over the grid.
  const std::array<complex, 8> phases = {
      complex{1.0, 0.0}, complex{0.0, 1.0}, std::polar(1.0, std::numbers::pi / 4),
      std::polar(1.0, -std::numbers::pi / 4), std::polar(1.0, std::numbers::pi / 8),
      std::polar(1.0, 3 * std::numbers::pi / 8), std::polar(1.0, -std::numbers::pi / 8),
      std::polar(1.0, -3 * std::numbers::pi / 8)};
  complex best_phase{1.0, 0.0};
  double best_score = -1.0;
  for (const complex& v : phases) {
    double score = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
      const RMatrix a = (v * two_form_matrix(omega.at(x))).real();
      const double norm = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
      score = std::min(score, std::abs((a / norm).determinant()));
    }
    if (score > best_score) {
      best_score = score;
      best_phase = v;
    }
    if (score > 1e-3) break;
  }
  if (best_score < 1e-10)
    throw StructureError("no global phase with invertible real part; form too degenerate for exact reconstruction");
  auto [re, im] = detail::real_imag_matrices(omega, best_phase);
  auto [adj, det] = adjugate_and_determinant(re);
  ScalarMatrix num = adj * im;
  for (auto& e : num.entries) e *= complex{-1.0, 0.0};
  if (det.is_constant()) {
    const complex c = det.constant_term();
    for (auto& e : num.entries) e *= 1.0 / c;
    det = FourierScalar::constant(d, 1.0);
  }
  ComplexStructureField j = ComplexStructureField::from_fields(std::move(num), std::move(det), grid);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const CMatrix jm = j.complex_at(points[p]);
    const CMatrix& k = kernels[p];
    const double err = (jm * k + complex{0.0, 1.0} * k).cwiseAbs().maxCoeff();
    if (err > kStructureTolerance)
      throw StructureError("exact reconstruction disagrees with the pointwise kernel at x = " +
                           detail::point_string(points[p]));
  }
  return j;
}

/// max over the grid and over pairs of (0,1)-projected coordinate fields
/// Y_a, Y_b of |(1,0)-part of [Y_a, Y_b]|_max / (|Y_a| |Y_b|).
inline double integrability_defect(const ComplexStructureField& j, const GridOptions& grid = {}) {
  if (j.is_constant()) return 0.0;
  const int d = j.dim();
  const CMatrix id = CMatrix::Identity(d, d);
  const complex i1{0.0, 1.0};
  double worst = 0.0;
  for (const auto& x : evaluation_grid(j.profile(), grid)) {
    const CMatrix jm = j.at(x).cast<complex>();
    const auto dj = j.derivatives_at(x);
    const CMatrix p01 = 0.5 * (id + i1 * jm);
    const CMatrix p10 = 0.5 * (id - i1 * jm);
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) {
        CVector br = CVector::Zero(d);
        for (int k = 0; k < d; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          br += p01(k, a) * (0.5 * i1) * dj[kk].col(b) - p01(k, b) * (0.5 * i1) * dj[kk].col(a);
        }
        const double norm = p01.col(a).norm() * p01.col(b).norm();
        if (norm == 0.0) continue;
        worst = std::max(worst, (p10 * br).cwiseAbs().maxCoeff() / norm);
      }
  }
  return worst;
}

/// Largest coefficient of the parts of a 3-form of type (p, q) with p < 2,
/// i.e. the (1,2) + (0,3) components, over the grid.
inline double low_type_norm(const Form& beta, const ComplexStructureField& j, const GridOptions& grid = {},
                            int min_holomorphic = 2) {
  const int d = beta.dim();
  CoordinateProfile profile = j.profile();
  profile.add(beta);
  double worst = 0.0;
  for (const auto& x : evaluation_grid(profile, grid)) {
    Multivector<complex> low(d, beta.degree());
    for (const auto& [key, part] : hodge_components_at(beta.at(x), j.at(x)))
      if (key.first < min_holomorphic) low += part;
    worst = std::max(worst, low.max_abs());
  }
  return worst;
}

/// Size of the Lambda^{0,3} + Lambda^{1,2} part of d Omega with respect to J.
/// Zero certifies d Omega in Lambda^{3,0} + Lambda^{2,1}.
inline double cartan_defect(const Form& omega, const ComplexStructureField& j, const GridOptions& grid = {}) {
  if (omega.degree() != 2) throw DegreeError("cartan_defect expects a 2-form");
  if (omega.dim() != j.dim()) throw DimensionError("form and structure dimensions differ");
  const Form domega = ext_d(omega);
  if (domega.is_zero()) return 0.0;
  return low_type_norm(domega, j, grid);
}

}  // namespace twistor_forge
