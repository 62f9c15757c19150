#pragma once

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "fourier_scalar.hpp"

namespace twistor_forge {

/// Index set i1 < ... < ip of a decomposable p-vector, one bit per generator.
using Mask = std::uint32_t;
inline constexpr int kMaxGenerators = 30;

inline int mask_size(Mask m) { return std::popcount(m); }

inline std::vector<int> mask_indices(Mask m) {
  std::vector<int> out;
  for (int i = 0; m != 0; ++i, m >>= 1)
    if (m & 1u) out.push_back(i);
  return out;
}

inline Mask indices_mask(const std::vector<int>& idx) {
  Mask m = 0;
  for (int i : idx) m |= Mask{1} << i;
  return m;
}

/// Sign of sorting the concatenation (a, b) of two disjoint index sets.
inline int wedge_sign(Mask a, Mask b) {
  int swaps = 0;
  for (Mask rest = b; rest != 0; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    const Mask above = j + 1 >= 32 ? 0 : (~Mask{0} << (j + 1));
    swaps += std::popcount(a & above);
  }
  return (swaps & 1) ? -1 : 1;
}

/// Coefficient ring adaptor for Multivector.
template <class Coeff>
struct CoeffTraits;

template <>
struct CoeffTraits<complex> {
  static complex zero(int) { return {}; }
  static double max_abs(const complex& c) { return std::abs(c); }
  static double l1(const complex& c) { return std::abs(c); }
  static void add_raw(complex& acc, const complex& x, complex f) { acc += f * x; }
  static complex multiply_raw(const complex& a, const complex& b) { return a * b; }
  using Accumulator = ComplexSum;
  static void accumulate_product(Accumulator& acc, const complex& a, const complex& b, double sign) {
    acc.add_product(a, b, sign);
  }
  static complex finish(const Accumulator& acc, int) { return acc.value(); }
  static void prune(complex& c, double thr) {
    if (std::abs(c) <= thr) c = {};
  }
  static bool is_zero(const complex& c) { return c == complex{}; }
  static complex conj(const complex& c) { return std::conj(c); }
  static void scale(complex& c, complex f) { c *= f; }
};

template <>
struct CoeffTraits<FourierScalar> {
  static FourierScalar zero(int dim) { return FourierScalar(dim); }
  static double max_abs(const FourierScalar& c) { return c.max_abs(); }
  static double l1(const FourierScalar& c) { return c.l1_norm(); }
  static void add_raw(FourierScalar& acc, const FourierScalar& x, complex f) { acc.add_raw(x, f); }
  static FourierScalar multiply_raw(const FourierScalar& a, const FourierScalar& b) {
    return FourierScalar::multiply_raw(a, b);
  }
  static void prune(FourierScalar& c, double thr) { c.prune(thr); }
  using Accumulator = FourierScalar::ProductSum;
  static void accumulate_product(Accumulator& acc, const FourierScalar& a, const FourierScalar& b,
                                 double sign) {
    FourierScalar::accumulate_product(acc, a, b, sign);
  }
  static FourierScalar finish(const Accumulator& acc, int dim) { return FourierScalar::from_sum(dim, acc); }
  static bool is_zero(const FourierScalar& c) { return c.is_zero(); }
  static FourierScalar conj(const FourierScalar& c) { return c.conj(); }
  static void scale(FourierScalar& c, complex f) { c *= f; }
};

/// Homogeneous element of the exterior algebra on `generators` 1-forms with
/// coefficients in `Coeff`. Storage is canonical: one entry per increasing
/// index tuple, sign of any permutation folded into the coefficient, no zero
/// entries.
template <class Coeff>
class Multivector {
 public:
  using Traits = CoeffTraits<Coeff>;
  using TermMap = std::map<Mask, Coeff>;

  Multivector() = default;
  Multivector(int generators, int degree, int scalar_dim = 0)
      : generators_(generators), degree_(degree), scalar_dim_(scalar_dim) {
    if (generators < 0 || generators > kMaxGenerators)
      throw DimensionError("unsupported number of generators");
    if (degree < 0 || degree > generators) throw DegreeError("degree out of range");
  }

  int generators() const { return generators_; }
  int degree() const { return degree_; }
  int scalar_dim() const { return scalar_dim_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Adds c * e_{indices} where `indices` may be in any order; repeated
  /// indices contribute nothing.
  void add_term(std::vector<int> indices, const Coeff& c) {
    if (static_cast<int>(indices.size()) != degree_) throw DegreeError("index count != degree");
    int sign = 1;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] < 0 || indices[i] >= generators_) throw DimensionError("index out of range");
      for (std::size_t j = i + 1; j < indices.size(); ++j) {
        if (indices[i] == indices[j]) return;
        if (indices[i] > indices[j]) sign = -sign;
      }
    }
    auto& slot = entry(indices_mask(indices));
    Traits::add_raw(slot, c, complex{static_cast<double>(sign), 0.0});
    if (Traits::is_zero(slot)) terms_.erase(indices_mask(indices));
  }

  const Coeff* find(Mask m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? nullptr : &it->second;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [k, c] : terms_) m = std::max(m, Traits::max_abs(c));
    return m;
  }
  double l1_norm() const {
    double s = 0.0;
    for (const auto& [k, c] : terms_) s += Traits::l1(c);
    return s;
  }

  Multivector conj() const {
    Multivector out(generators_, degree_, scalar_dim_);
    for (const auto& [k, c] : terms_) out.terms_.emplace(k, Traits::conj(c));
    return out;
  }

  Multivector& operator*=(complex f) {
    if (f == complex{}) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) Traits::scale(c, f);
    return *this;
  }

  Multivector& operator+=(const Multivector& o) { return accumulate(o, complex{1.0, 0.0}); }
  Multivector& operator-=(const Multivector& o) { return accumulate(o, complex{-1.0, 0.0}); }

  friend Multivector operator+(Multivector a, const Multivector& b) { return a += b; }
  friend Multivector operator-(Multivector a, const Multivector& b) { return a -= b; }
  friend Multivector operator*(Multivector a, complex f) { return a *= f; }
  friend Multivector operator*(complex f, Multivector a) { return a *= f; }

  bool operator==(const Multivector& o) const {
    return generators_ == o.generators_ && degree_ == o.degree_ && terms_ == o.terms_;
  }

  /// Exterior product; zero (of clamped degree) when p + q exceeds the
  /// number of generators.
  friend Multivector wedge(const Multivector& a, const Multivector& b) {
    if (a.generators_ != b.generators_ || a.scalar_dim_ != b.scalar_dim_)
      throw DimensionError("wedge of forms on different spaces");
    const int deg = a.degree_ + b.degree_;
    Multivector out(a.generators_, std::min(deg, a.generators_), a.scalar_dim_);
    if (deg > a.generators_) return out;
    double scale = 0.0;
    std::map<Mask, typename Traits::Accumulator> acc;
    for (const auto& [ma, ca] : a.terms_) {
      const double na = Traits::max_abs(ca);
      for (const auto& [mb, cb] : b.terms_) {
        if (ma & mb) continue;
        scale = std::max(scale, na * Traits::max_abs(cb));
        Traits::accumulate_product(acc[ma | mb], ca, cb, static_cast<double>(wedge_sign(ma, mb)));
      }
    }
    for (const auto& [m, sum] : acc) {
      Coeff c = Traits::finish(sum, a.scalar_dim_);
      if (!Traits::is_zero(c)) out.terms_.emplace_hint(out.terms_.end(), m, std::move(c));
    }
    out.prune(kPruneTolerance * scale);
    return out;
  }

  /// Interior product with a vector whose components are `v[i]`, inserted
  /// in the first slot.
  Multivector interior(const std::vector<Coeff>& v) const {
    if (static_cast<int>(v.size()) != generators_) throw DimensionError("vector length mismatch");
    if (degree_ == 0) throw DegreeError("contraction of a 0-form");
    Multivector out(generators_, degree_ - 1, scalar_dim_);
    double scale = 0.0;
    for (const auto& [m, c] : terms_) {
      int position = 0;
      const double nc = Traits::max_abs(c);
      for (Mask rest = m; rest != 0; rest &= rest - 1, ++position) {
        const int i = std::countr_zero(rest);
        const auto& vi = v[static_cast<std::size_t>(i)];
        if (Traits::is_zero(vi)) continue;
        Coeff prod = Traits::multiply_raw(vi, c);
        scale = std::max(scale, nc * Traits::max_abs(vi));
        Traits::add_raw(out.entry(m & ~(Mask{1} << i)), prod,
                        complex{(position & 1) ? -1.0 : 1.0, 0.0});
      }
    }
    out.prune(kPruneTolerance * scale);
    return out;
  }

  /// p-th exterior power divided by nothing: a ^ a ^ ... ^ a (k factors).
  Multivector power(int k) const {
    if (k < 0) throw DegreeError("negative power");
    Multivector out(generators_, 0, scalar_dim_);
    out.entry(0) = unit();
    for (int i = 0; i < k; ++i) out = wedge(out, *this);
    return out;
  }

  /// Unit 0-form.
  static Multivector one(int generators, int scalar_dim = 0) {
    Multivector out(generators, 0, scalar_dim);
    Multivector tmp(generators, 0, scalar_dim);
    out.entry(0) = tmp.unit();
    return out;
  }

  /// Drops coefficients (or coefficient terms) of magnitude <= threshold.
  void prune(double abs_threshold) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      Traits::prune(it->second, abs_threshold);
      it = Traits::is_zero(it->second) ? terms_.erase(it) : std::next(it);
    }
  }

  Coeff& entry(Mask m) {
    auto it = terms_.find(m);
    if (it == terms_.end()) it = terms_.emplace(m, Traits::zero(scalar_dim_)).first;
    return it->second;
  }

  /// Sets the coefficient of an increasing tuple directly.
  void set(Mask m, const Coeff& c) {
    if (mask_size(m) != degree_) throw DegreeError("mask size != degree");
    if (Traits::is_zero(c))
      terms_.erase(m);
    else
      terms_[m] = c;
  }

 private:
  Coeff unit() const {
    if constexpr (std::is_same_v<Coeff, complex>) {
      return complex{1.0, 0.0};
    } else {
      return Coeff::constant(scalar_dim_, complex{1.0, 0.0});
    }
  }

  Multivector& accumulate(const Multivector& o, complex f) {
    if (o.generators_ != generators_ || o.degree_ != degree_ || o.scalar_dim_ != scalar_dim_)
      throw DimensionError("sum of forms of different shape");
    const double scale = std::max(max_abs(), o.max_abs());
    for (const auto& [m, c] : o.terms_) Traits::add_raw(entry(m), c, f);
    prune(kPruneTolerance * scale);
    return *this;
  }

  int generators_ = 0;
  int degree_ = 0;
  int scalar_dim_ = 0;
  TermMap terms_;
};

}  // namespace twistor_forge
