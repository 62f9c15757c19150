#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "fourier_scalar.hpp"
#include "multivector.hpp"

namespace twistor_forge {

/// Complex-valued differential form on the flat torus R^d / Z^d with
/// trigonometric-polynomial coefficients. Generator i is dx_{i+1}; complex
/// coordinates pair consecutive real ones, z_j = x_{2j-1} + i x_{2j}.
class Form : public Multivector<FourierScalar> {
 public:
  using Base = Multivector<FourierScalar>;

  Form() = default;
  Form(int dim, int degree) : Base(dim, degree, dim) {}
  Form(Base b) : Base(std::move(b)) {  // NOLINT: implicit by design of the algebra
    if (generators() != scalar_dim()) throw DimensionError("form over mismatched torus");
  }

  int dim() const { return generators(); }

  static Form zero(int dim, int degree) { return Form(dim, degree); }

  static Form scalar(const FourierScalar& f) {
    Form out(f.dim(), 0);
    out.set(0, f);
    return out;
  }

  static Form constant_scalar(int dim, complex c) {
    return scalar(FourierScalar::constant(dim, c));
  }

  /// dx_{i+1} (0-based generator index i).
  static Form dx(int dim, int i) {
    Form out(dim, 1);
    out.add_term({i}, FourierScalar::constant(dim, 1.0));
    return out;
  }

  /// dz_{j+1} = dx_{2j+1} + i dx_{2j+2} (0-based complex index j).
  static Form dz(int dim, int j) {
    Form out(dim, 1);
    out.add_term({2 * j}, FourierScalar::constant(dim, 1.0));
    out.add_term({2 * j + 1}, FourierScalar::constant(dim, complex{0.0, 1.0}));
    return out;
  }

  static Form dzbar(int dim, int j) { return Form(dz(dim, j).conj()); }

  /// f * (this)
  Form times(const FourierScalar& f) const { return wedge(scalar(f), *this); }

  bool is_constant() const {
    for (const auto& [m, c] : terms())
      if (!c.is_constant()) return false;
    return true;
  }

  bool has_polynomial() const {
    for (const auto& [m, c] : terms())
      if (c.has_polynomial()) return true;
    return false;
  }

  /// Coordinates on which some coefficient depends.
  std::vector<bool> active_coordinates() const {
    std::vector<bool> active(static_cast<std::size_t>(dim()), false);
    for (const auto& [m, c] : terms()) {
      auto a = c.active_coordinates();
      for (std::size_t j = 0; j < a.size(); ++j) active[j] = active[j] || a[j];
    }
    return active;
  }

  /// Pointwise value as a constant multivector with complex coefficients.
  Multivector<complex> at(std::span<const double> x) const {
    Multivector<complex> out(dim(), degree());
    for (const auto& [m, c] : terms()) out.set(m, c.evaluate(x));
    return out;
  }

  /// Zero-frequency part of every coefficient (the de Rham class of a form
  /// with purely periodic coefficients).
  Form cohomology_class() const {
    Form out(dim(), degree());
    for (const auto& [m, c] : terms()) {
      const complex c0 = c.constant_term();
      if (c0 != complex{}) out.set(m, FourierScalar::constant(dim(), c0));
    }
    return out;
  }

  /// Integral over the torus fundamental class: zero-frequency coefficient
  /// of the top-degree coefficient.
  complex integrate() const {
    if (degree() != dim()) return {};
    const auto* c = find((dim() == 32) ? ~Mask{0} : ((Mask{1} << dim()) - 1));
    return c ? c->constant_term() : complex{};
  }

  /// Exact equality of coefficient maps up to `rel_tol` of the larger form.
  bool approx_equal(const Form& o, double rel_tol = 1e-12) const {
    if (dim() != o.dim() || degree() != o.degree()) return false;
    const double scale = std::max({max_abs(), o.max_abs(), 1e-300});
    Form diff = *this;
    for (const auto& [m, c] : o.terms()) diff.entry(m).add_raw(c, complex{-1.0, 0.0});
    return diff.max_abs() <= rel_tol * scale;
  }
};

/// Complexified vector field: one FourierScalar component per coordinate.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(int dim)
      : components_(static_cast<std::size_t>(dim), FourierScalar(dim)) {}
  explicit VectorField(std::vector<FourierScalar> components) : components_(std::move(components)) {
    for (const auto& c : components_)
      if (c.dim() != dim()) throw DimensionError("vector field component dimension mismatch");
  }

  static VectorField constant(const std::vector<complex>& v) {
    const int d = static_cast<int>(v.size());
    VectorField out(d);
    for (int i = 0; i < d; ++i) out.components_[static_cast<std::size_t>(i)] = FourierScalar::constant(d, v[static_cast<std::size_t>(i)]);
    return out;
  }

  /// d/dx_{i+1}
  static VectorField d_dx(int dim, int i) {
    std::vector<complex> v(static_cast<std::size_t>(dim));
    v[static_cast<std::size_t>(i)] = 1.0;
    return constant(v);
  }
  /// d/dz_{j+1} = (d/dx - i d/dy) / 2
  static VectorField d_dz(int dim, int j) {
    std::vector<complex> v(static_cast<std::size_t>(dim));
    v[static_cast<std::size_t>(2 * j)] = 0.5;
    v[static_cast<std::size_t>(2 * j + 1)] = complex{0.0, -0.5};
    return constant(v);
  }
  /// d/dzbar_{j+1} = (d/dx + i d/dy) / 2
  static VectorField d_dzbar(int dim, int j) {
    std::vector<complex> v(static_cast<std::size_t>(dim));
    v[static_cast<std::size_t>(2 * j)] = 0.5;
    v[static_cast<std::size_t>(2 * j + 1)] = complex{0.0, 0.5};
    return constant(v);
  }

  int dim() const { return static_cast<int>(components_.size()); }
  const std::vector<FourierScalar>& components() const { return components_; }
  const FourierScalar& operator[](std::size_t i) const { return components_[i]; }

  VectorField& operator+=(const VectorField& o) {
    check(o);
    for (std::size_t i = 0; i < components_.size(); ++i) components_[i] += o.components_[i];
    return *this;
  }
  VectorField& operator*=(complex f) {
    for (auto& c : components_) c *= f;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator*(complex f, VectorField a) { return a *= f; }

  std::vector<complex> at(std::span<const double> x) const {
    std::vector<complex> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c.evaluate(x));
    return out;
  }

  bool is_zero() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const FourierScalar& c) { return c.is_zero(); });
  }

  /// Lie bracket [X, Y]^j = X^i d_i Y^j - Y^i d_i X^j, exact.
  friend VectorField bracket(const VectorField& X, const VectorField& Y) {
    X.check(Y);
    const int d = X.dim();
    VectorField out(d);
    for (int j = 0; j < d; ++j) {
      FourierScalar acc(d);
      double scale = 0.0;
      for (int i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const auto jj = static_cast<std::size_t>(j);
        const FourierScalar dy = Y.components_[jj].derivative(i);
        const FourierScalar dxj = X.components_[jj].derivative(i);
        if (!X.components_[ii].is_zero() && !dy.is_zero()) {
          acc.add_raw(FourierScalar::multiply_raw(X.components_[ii], dy));
          scale = std::max(scale, X.components_[ii].max_abs() * dy.max_abs());
        }
        if (!Y.components_[ii].is_zero() && !dxj.is_zero()) {
          acc.add_raw(FourierScalar::multiply_raw(Y.components_[ii], dxj), complex{-1.0, 0.0});
          scale = std::max(scale, Y.components_[ii].max_abs() * dxj.max_abs());
        }
      }
      acc.prune(kPruneTolerance * scale);
      out.components_[static_cast<std::size_t>(j)] = std::move(acc);
    }
    return out;
  }

 private:
  void check(const VectorField& o) const {
    if (o.dim() != dim()) throw DimensionError("vector field dimension mismatch");
  }
  std::vector<FourierScalar> components_;
};

/// Exterior product of forms.
inline Form wedge(const Form& a, const Form& b) {
  if (a.dim() != b.dim()) throw DimensionError("wedge of forms of different dimension");
  return Form(wedge(static_cast<const Form::Base&>(a), static_cast<const Form::Base&>(b)));
}

/// a^k (k-fold exterior power).
inline Form power(const Form& a, int k) { return Form(a.power(k)); }

/// Interior product a(v, ...). Degree-0 input raises DegreeError.
inline Form contract(const Form& a, const VectorField& v) {
  if (a.dim() != v.dim()) throw DimensionError("contraction of mismatched dimensions");
  if (a.degree() == 0) throw DegreeError("contraction of a 0-form");
  return Form(a.interior(v.components()));
}

/// Exact de Rham differential through Fourier / polynomial differentiation.
inline Form ext_d(const Form& a) {
  const int d = a.dim();
  if (a.degree() == d) return Form(d, d);
  Form out(d, a.degree() + 1);
  double scale = 0.0;
  for (const auto& [m, c] : a.terms()) {
    for (int j = 0; j < d; ++j) {
      const Mask bit = Mask{1} << j;
      if (m & bit) continue;
      const FourierScalar dc = c.derivative(j);
      if (dc.is_zero()) continue;
      scale = std::max(scale, dc.max_abs());
      out.entry(m | bit).add_raw(dc, complex{static_cast<double>(wedge_sign(bit, m)), 0.0});
    }
  }
  out.prune(kPruneTolerance * scale);
  return out;
}

}  // namespace twistor_forge
