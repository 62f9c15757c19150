#pragma once

#include <map>
#include <utility>

#include "form.hpp"
#include "linalg.hpp"
#include "structure.hpp"

namespace twistor_forge {

using Bidegree = std::pair<int, int>;

/// Adapted complex frame of a real structure J at a point: columns of
/// `frame` are (u_1..u_m, conj u_1..conj u_m) with u_a spanning T^{1,0};
/// rows of `coframe` = frame^{-1} are the dual (1,0)- and (0,1)-covectors.
struct ComplexFrame {
  CMatrix frame;
  CMatrix coframe;
};

inline ComplexFrame complex_frame(const RMatrix& j) {
  const int d = static_cast<int>(j.rows());
  if (d % 2 != 0) throw StructureError("odd-dimensional structure");
  if ((j * j + RMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > kStructureTolerance)
    throw StructureError("J^2 != -Id at evaluation point");
  const CMatrix p10 = 0.5 * (CMatrix::Identity(d, d) - complex{0.0, 1.0} * j.cast<complex>());
  const CMatrix u = column_space(p10);
  if (u.cols() != d / 2) throw StructureError("(1,0) eigenspace has wrong dimension");
  ComplexFrame f;
  f.frame.resize(d, d);
  f.frame << u, u.conjugate();
  f.coframe = f.frame.inverse();
  return f;
}

/// Bidegree components of a constant multivector (pointwise value of a
/// form) with respect to J. Missing keys are zero components.
inline std::map<Bidegree, Multivector<complex>> hodge_components_at(const Multivector<complex>& alpha,
                                                                    const RMatrix& j) {
  const int d = alpha.generators();
  const int m = d / 2;
  const ComplexFrame f = complex_frame(j);
  // dx_i = sum_a frame(i, a) theta^a
  const Multivector<complex> in_frame = substitute(alpha, f.frame);
  std::map<Bidegree, Multivector<complex>> split;
  const Mask holo = (Mask{1} << m) - 1;
  for (const auto& [mask, c] : in_frame.terms()) {
    const int p = mask_size(mask & holo);
    const Bidegree key{p, alpha.degree() - p};
    auto it = split.try_emplace(key, d, alpha.degree()).first;
    it->second.set(mask, c);
  }
  std::map<Bidegree, Multivector<complex>> out;
  for (auto& [key, part] : split) {
    Multivector<complex> back = substitute(part, f.coframe);  // theta^a = sum_i coframe(a, i) dx_i
    back.prune(1e-14 * std::max(alpha.max_abs(), 1e-300));
    if (!back.is_zero()) out.emplace(key, std::move(back));
  }
  return out;
}

/// Bidegree decomposition of a form with respect to a constant structure,
/// returned as exact Forms (each Fourier mode is split separately).
/// Non-constant structures are handled pointwise by hodge_components_at.
inline std::map<Bidegree, Form> hodge_components(const Form& a, const ComplexStructureField& j) {
  if (!j.is_constant()) throw StructureError("hodge_components needs a constant structure; use hodge_components_at");
  j.validate();
  const int d = a.dim();
  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  const RMatrix jm = j.at(origin);
  std::map<Mode, Multivector<complex>> by_mode;
  for (const auto& [mask, c] : a.terms())
    for (const auto& [mode, value] : c.terms()) {
      auto it = by_mode.try_emplace(mode, d, a.degree()).first;
      it->second.set(mask, value);
    }
  std::map<Bidegree, Form> out;
  for (const auto& [mode, mv] : by_mode) {
    for (const auto& [key, part] : hodge_components_at(mv, jm)) {
      auto it = out.try_emplace(key, d, a.degree()).first;
      for (const auto& [mask, c] : part.terms()) {
        FourierScalar s(d);
        s.set_term(mode, c);
        it->second.entry(mask).add_raw(s);
      }
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    it->second.prune(kPruneTolerance * std::max(a.max_abs(), 1e-300));
    it = it->second.is_zero() ? out.erase(it) : std::next(it);
  }
  return out;
}

}  // namespace twistor_forge
