#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace twistor_forge {

using complex = std::complex<double>;

/// Relative pruning threshold applied after every coefficient operation.
inline constexpr double kPruneTolerance = 1e-12;

/// One basis function x^powers * exp(2 pi i <freq, x>) on R^d.
/// Correctly rounded sum of doubles (Shewchuk partials). The result does
/// not depend on the order of the summands, which keeps products exactly
/// commutative.
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t i = partials_.size() - 1;
    double hi = partials_[i];
    double lo = 0.0;
    while (i > 0) {
      const double x = hi;
      const double y = partials_[--i];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (i > 0 && ((lo < 0.0 && partials_[i - 1] < 0.0) || (lo > 0.0 && partials_[i - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

/// Accumulates sign * a * b over many complex pairs, order-independently.
struct ComplexSum {
  ExactSum re, im;
  void add_product(complex a, complex b, double sign) {
    re.add(sign * (a.real() * b.real()));
    re.add(-sign * (a.imag() * b.imag()));
    im.add(sign * (a.real() * b.imag()));
    im.add(sign * (a.imag() * b.real()));
  }
  complex value() const { return {re.value(), im.value()}; }
};

struct Mode {
  std::vector<int> freq;
  std::vector<int> powers;

  auto operator<=>(const Mode&) const = default;
  bool operator==(const Mode&) const = default;

  bool is_constant() const {
    return std::all_of(freq.begin(), freq.end(), [](int k) { return k == 0; }) &&
           std::all_of(powers.begin(), powers.end(), [](int e) { return e == 0; });
  }
  bool has_polynomial() const {
    return std::any_of(powers.begin(), powers.end(), [](int e) { return e != 0; });
  }
};

/// Exact trigonometric polynomial on the torus R^d / Z^d, optionally with a
/// polynomial layer in some coordinates (used for affine parameters such as
/// the twistor coordinate t). Terms with |c| below kPruneTolerance times the
/// operation scale are dropped.
class FourierScalar {
 public:
  using TermMap = std::map<Mode, complex>;

  FourierScalar() = default;
  explicit FourierScalar(int dim) : dim_(dim) {
    if (dim < 0) throw DimensionError("negative dimension");
  }

  static FourierScalar constant(int dim, complex c) {
    FourierScalar s(dim);
    if (c != complex{}) s.terms_.emplace(s.zero_mode(), c);
    return s;
  }

  /// c * exp(2 pi i <freq, x>)
  static FourierScalar wave(std::span<const int> freq, complex c) {
    FourierScalar s(static_cast<int>(freq.size()));
    Mode m = s.zero_mode();
    std::copy(freq.begin(), freq.end(), m.freq.begin());
    if (c != complex{}) s.terms_.emplace(std::move(m), c);
    return s;
  }

  /// The coordinate function x_j (polynomial layer).
  static FourierScalar coordinate(int dim, int j) {
    FourierScalar s(dim);
    Mode m = s.zero_mode();
    m.powers.at(static_cast<std::size_t>(j)) = 1;
    s.terms_.emplace(std::move(m), complex{1.0, 0.0});
    return s;
  }

  /// sin(2 pi k x_j) and cos(2 pi k x_j) as two-term Fourier sums.
  static FourierScalar sin_mode(int dim, int j, int k) {
    std::vector<int> f(static_cast<std::size_t>(dim), 0);
    f[static_cast<std::size_t>(j)] = k;
    FourierScalar s = wave(f, complex{0.0, -0.5});
    f[static_cast<std::size_t>(j)] = -k;
    s.add_raw(wave(f, complex{0.0, 0.5}));
    return s;
  }
  static FourierScalar cos_mode(int dim, int j, int k) {
    std::vector<int> f(static_cast<std::size_t>(dim), 0);
    f[static_cast<std::size_t>(j)] = k;
    FourierScalar s = wave(f, complex{0.5, 0.0});
    f[static_cast<std::size_t>(j)] = -k;
    s.add_raw(wave(f, complex{0.5, 0.0}));
    return s;
  }

  int dim() const { return dim_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  bool is_constant() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const auto& t) { return t.first.is_constant(); });
  }
  bool has_polynomial() const {
    return std::any_of(terms_.begin(), terms_.end(),
                       [](const auto& t) { return t.first.has_polynomial(); });
  }

  /// Coefficient of the constant mode (the torus average when no polynomial
  /// layer is present).
  complex constant_term() const {
    auto it = terms_.find(zero_mode());
    return it == terms_.end() ? complex{} : it->second;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [mode, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }
  double l1_norm() const {
    double s = 0.0;
    for (const auto& [mode, c] : terms_) s += std::abs(c);
    return s;
  }

  /// Coordinates on which some term depends.
  std::vector<bool> active_coordinates() const {
    std::vector<bool> active(static_cast<std::size_t>(dim_), false);
    for (const auto& [mode, c] : terms_)
      for (std::size_t j = 0; j < active.size(); ++j)
        if (mode.freq[j] != 0 || mode.powers[j] != 0) active[j] = true;
    return active;
  }

  complex evaluate(std::span<const double> x) const {
    check_point(x);
    complex sum{};
    for (const auto& [mode, c] : terms_) sum += c * mode_value(mode, x);
    return sum;
  }

  /// d/dx_j, exact.
  FourierScalar derivative(int j) const {
    FourierScalar out(dim_);
    const auto jj = static_cast<std::size_t>(j);
    if (j < 0 || j >= dim_) throw DimensionError("derivative index out of range");
    double scale = 0.0;
    for (const auto& [mode, c] : terms_) {
      if (mode.freq[jj] != 0) {
        const complex f = c * complex{0.0, 2.0 * std::numbers::pi * mode.freq[jj]};
        out.terms_[mode] += f;
        scale = std::max(scale, std::abs(f));
      }
      if (mode.powers[jj] != 0) {
        Mode lowered = mode;
        lowered.powers[jj] -= 1;
        const complex f = c * static_cast<double>(mode.powers[jj]);
        out.terms_[lowered] += f;
        scale = std::max(scale, std::abs(f));
      }
    }
    out.prune(kPruneTolerance * scale);
    return out;
  }

  /// Pointwise complex conjugate, valid for real x.
  FourierScalar conj() const {
    FourierScalar out(dim_);
    for (const auto& [mode, c] : terms_) {
      Mode m = mode;
      for (auto& k : m.freq) k = -k;
      out.terms_.emplace(std::move(m), std::conj(c));
    }
    return out;
  }

  /// Real-valued on R^d: c_{-k,e} = conj(c_{k,e}) up to `tol` relative.
  bool is_real(double tol = 1e-12) const {
    const double scale = std::max(max_abs(), 1e-300);
    for (const auto& [mode, c] : terms_) {
      Mode m = mode;
      for (auto& k : m.freq) k = -k;
      auto it = terms_.find(m);
      const complex partner = it == terms_.end() ? complex{} : it->second;
      if (std::abs(partner - std::conj(c)) > tol * scale) return false;
    }
    return true;
  }

  // Raw accumulation (no pruning); callers prune once with a global scale.
  void add_raw(const FourierScalar& other, complex factor = {1.0, 0.0}) {
    check_dim(other);
    for (const auto& [mode, c] : other.terms_) terms_[mode] += factor * c;
  }

  using ProductSum = std::map<Mode, ComplexSum>;

  /// acc += sign * a * b, mode by mode, with order-independent rounding.
  static void accumulate_product(ProductSum& acc, const FourierScalar& a, const FourierScalar& b,
                                 double sign) {
    a.check_dim(b);
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) {
        Mode m = ma;
        for (std::size_t j = 0; j < m.freq.size(); ++j) {
          m.freq[j] += mb.freq[j];
          m.powers[j] += mb.powers[j];
        }
        acc[m].add_product(ca, cb, sign);
      }
    }
  }

  static FourierScalar from_sum(int dim, const ProductSum& acc) {
    FourierScalar out(dim);
    for (const auto& [m, c] : acc) {
      const complex v = c.value();
      if (v != complex{}) out.terms_.emplace_hint(out.terms_.end(), m, v);
    }
    return out;
  }

  static FourierScalar multiply_raw(const FourierScalar& a, const FourierScalar& b) {
    ProductSum acc;
    accumulate_product(acc, a, b, 1.0);
    return from_sum(a.dim_, acc);
  }

  void prune(double abs_threshold) {
    std::erase_if(terms_, [&](const auto& t) { return std::abs(t.second) <= abs_threshold; });
  }

  FourierScalar& operator+=(const FourierScalar& o) {
    const double scale = std::max(max_abs(), o.max_abs());
    add_raw(o);
    prune(kPruneTolerance * scale);
    return *this;
  }
  FourierScalar& operator-=(const FourierScalar& o) {
    const double scale = std::max(max_abs(), o.max_abs());
    add_raw(o, complex{-1.0, 0.0});
    prune(kPruneTolerance * scale);
    return *this;
  }
  FourierScalar& operator*=(complex f) {
    if (f == complex{}) {
      terms_.clear();
      return *this;
    }
    for (auto& [mode, c] : terms_) c *= f;
    return *this;
  }
  friend FourierScalar operator+(FourierScalar a, const FourierScalar& b) { return a += b; }
  friend FourierScalar operator-(FourierScalar a, const FourierScalar& b) { return a -= b; }
  friend FourierScalar operator-(FourierScalar a) { return a *= complex{-1.0, 0.0}; }
  friend FourierScalar operator*(FourierScalar a, complex f) { return a *= f; }
  friend FourierScalar operator*(complex f, FourierScalar a) { return a *= f; }
  friend FourierScalar operator*(const FourierScalar& a, const FourierScalar& b) {
    FourierScalar out = multiply_raw(a, b);
    out.prune(kPruneTolerance * a.max_abs() * b.max_abs());
    return out;
  }

  /// Exact equality of the term maps.
  bool operator==(const FourierScalar& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

  /// Same support and coefficients within `rel_tol` of the larger magnitude.
  bool approx_equal(const FourierScalar& o, double rel_tol = 1e-12) const {
    if (dim_ != o.dim_) return false;
    const double scale = std::max({max_abs(), o.max_abs(), 1e-300});
    FourierScalar diff = *this;
    diff.add_raw(o, complex{-1.0, 0.0});
    return diff.max_abs() <= rel_tol * scale;
  }

  /// Builds a scalar directly from a term map (used by deserialisation).
  void set_term(const Mode& m, complex c) {
    if (m.freq.size() != static_cast<std::size_t>(dim_) ||
        m.powers.size() != static_cast<std::size_t>(dim_))
      throw DimensionError("mode dimension mismatch");
    if (c == complex{})
      terms_.erase(m);
    else
      terms_[m] = c;
  }

  Mode zero_mode() const {
    return Mode{std::vector<int>(static_cast<std::size_t>(dim_), 0),
                std::vector<int>(static_cast<std::size_t>(dim_), 0)};
  }

  static complex mode_value(const Mode& mode, std::span<const double> x) {
    double phase = 0.0;
    double poly = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      phase += mode.freq[j] * x[j];
      for (int e = 0; e < mode.powers[j]; ++e) poly *= x[j];
    }
    return poly * std::polar(1.0, 2.0 * std::numbers::pi * phase);
  }

 private:
  void check_dim(const FourierScalar& o) const {
    if (o.dim_ != dim_) throw DimensionError("scalar dimension mismatch");
  }
  void check_point(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(dim_))
      throw DimensionError("evaluation point has wrong dimension");
  }

  int dim_ = 0;
  TermMap terms_;
};

}  // namespace twistor_forge
