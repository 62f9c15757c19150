#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "form.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "structure.hpp"

namespace twistor_forge {

/// Flat hyperkahler torus T^{4n} with a Lagrangian coordinate fibration
/// onto the coordinates in `base` and eta the pullback of a base Kahler form.
struct TorusModel {
  std::string name;
  int n = 0;
  HyperkahlerTriple triple;
  Form omega;
  Form eta;
  std::vector<int> base;  // 0-based real coordinates of the base

  int dim() const { return 4 * n; }

  std::vector<int> fiber() const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
      if (std::find(base.begin(), base.end(), i) == base.end()) out.push_back(i);
    return out;
  }

  Json to_json() const {
    Json j;
    j["name"] = name;
    j["n"] = n;
    j["dim"] = dim();
    Json b = Json::array();
    for (int i : base) b.push_back(i + 1);
    j["base_coordinates"] = b;
    return j;
  }

  /// Assembles a model without checking the invariants (negative controls).
  static TorusModel unchecked(std::string name, int n, HyperkahlerTriple triple, Form omega, Form eta,
                              std::vector<int> base) {
    return TorusModel{std::move(name), n, std::move(triple), std::move(omega), std::move(eta), std::move(base)};
  }
};

namespace detail {

inline Mask coordinate_mask(const std::vector<int>& coords) {
  Mask m = 0;
  for (int i : coords) m |= Mask{1} << i;
  return m;
}

/// Real rank of the symmetric part of (x, y) -> eta(x, I y) and its extreme
/// eigenvalues at one point.
struct SemipositiveSpectrum {
  double min_eig = 0.0;
  double max_eig = 0.0;
  int rank = 0;
};

inline SemipositiveSpectrum eta_spectrum(const CMatrix& eta, const RMatrix& i_matrix) {
  const RMatrix q = eta.real() * i_matrix;
  const RMatrix s = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(s);
  const RVector ev = es.eigenvalues();
  SemipositiveSpectrum out;
  out.min_eig = ev.minCoeff();
  out.max_eig = ev.maxCoeff();
  const double scale = std::max(std::abs(out.min_eig), std::abs(out.max_eig));
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (std::abs(ev(k)) > kRankTolerance * scale && scale > 0) ++out.rank;
  return out;
}

}  // namespace detail

/// Checks the TorusModel invariants; StructureError names the first failure.
inline void validate_model(const TorusModel& m, const GridOptions& grid = {}) {
  const int d = m.dim();
  if (m.omega.dim() != d || m.eta.dim() != d) throw DimensionError("model forms have the wrong dimension");
  if (static_cast<int>(m.base.size()) != 2 * m.n) throw StructureError("base must have 2n coordinates");
  m.triple.validate();
  if (!ext_d(m.omega).is_zero()) throw StructureError("Omega is not closed");
  const Mask fiber = detail::coordinate_mask(m.fiber());
  for (const auto& [mask, c] : m.omega.terms())
    if ((mask & ~fiber) == 0) throw StructureError("Omega does not vanish on the fibers");
  for (const auto& [mask, c] : m.eta.terms())
    if (!c.is_real()) throw StructureError("eta is not real");
  if (!ext_d(m.eta).is_zero()) throw StructureError("eta is not closed");
  const Mask base = detail::coordinate_mask(m.base);
  for (const auto& [mask, c] : m.eta.terms()) {
    if (mask & ~base) throw StructureError("eta has components along fiber directions");
    const auto active = c.active_coordinates();
    for (std::size_t i = 0; i < active.size(); ++i)
      if (active[i] && !(base & (Mask{1} << i))) throw StructureError("eta depends on fiber coordinates");
  }
  for (const auto& x : evaluation_grid(CoordinateProfile(d).add(m.eta), grid)) {
    const auto spec = detail::eta_spectrum(two_form_matrix(m.eta.at(x)), m.triple.I);
    if (spec.min_eig < -1e-10 * std::max(1.0, spec.max_eig)) throw StructureError("eta is not semipositive");
    if (spec.rank != 2 * m.n) throw StructureError("eta does not have rank 2n");
  }
}

/// T^{4n} with Omega = sum dz_j ^ dz_{n+j}, fibration onto z_{n+1..2n} and
/// eta = (i/2) sum dz_{n+j} ^ dzbar_{n+j}.
inline TorusModel standard_model(int n) {
  if (n < 1 || n > 3) throw RangeError("standard_model supports 1 <= n <= 3");
  const int d = 4 * n;
  TorusModel m;
  m.name = "standard";
  m.n = n;
  m.triple = HyperkahlerTriple::standard(n);
  m.omega = Form(d, 2);
  m.eta = Form(d, 2);
  for (int j = 0; j < n; ++j) {
    m.omega += wedge(Form::dz(d, j), Form::dz(d, n + j));
    m.eta += wedge(Form::dz(d, n + j), Form::dzbar(d, n + j)) * complex{0.0, 0.5};
  }
  for (int i = 2 * n; i < d; ++i) m.base.push_back(i);
  validate_model(m);
  return m;
}

/// Negative control: eta replaced by the Kahler form of the flat metric.
inline TorusModel kahler_tampered_model(int n) {
  TorusModel m = standard_model(n);
  m.name = "kahler-tampered";
  m.eta = kahler_form(m.triple);
  return m;
}

/// Negative control: eta = (i/2) xi ^ conj(xi) with xi = dz_2 + c dz_1, a
/// closed semipositive form with a dz_1 ^ dzbar_2 component (n = 1).
inline TorusModel fiber_tilted_model(complex c = {0.5, 0.0}) {
  TorusModel m = standard_model(1);
  m.name = "fiber-tilted";
  const Form xi = Form::dz(4, 1) + Form::dz(4, 0) * c;
  m.eta = wedge(xi, Form(xi.conj())) * complex{0.0, 0.5};
  return m;
}

/// Default parameter sample for non-degeneracy certificates.
inline std::vector<complex> default_t_samples() {
  return {complex{0, 0}, complex{1, 0}, complex{0, 1}, complex{3, -2}, complex{0, 10}};
}

inline std::vector<complex> sorted_ts(std::vector<complex> ts) {
  std::sort(ts.begin(), ts.end(), [](complex a, complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

inline Form family_form(const TorusModel& m, complex t) { return m.omega + m.eta * t; }

/// Checks: each coefficient binom(n+1, k) Omega^{n+1-k} ^ eta^k of
/// (Omega + t eta)^{n+1} is the zero form, and Im(v Omega_t) with
/// v = |t|/t is non-degenerate at the grid points for every sample t.
inline Report power_condition_report(const TorusModel& m, const std::vector<complex>& ts = default_t_samples(),
                                     const GridOptions& grid = {}) {
  Report r;
  r.model = m.to_json();
  const int n = m.n;
  std::vector<Form> op{Form::one(m.dim(), m.dim())}, ep{Form::one(m.dim(), m.dim())};
  for (int k = 1; k <= n + 1; ++k) {
    op.push_back(wedge(op.back(), m.omega));
    ep.push_back(wedge(ep.back(), m.eta));
  }
  double binom = 1.0;
  for (int k = 0; k <= n + 1; ++k) {
    Form coef = wedge(op[static_cast<std::size_t>(n + 1 - k)], ep[static_cast<std::size_t>(k)]);
    coef *= complex{binom, 0.0};
    CheckResult c;
    c.name = "power_coefficient";
    c.max_defect = coef.max_abs();
    c.pass = coef.is_zero();
    c.witness = Json{{"k", k}, {"p", k - 1}, {"nonzero_terms", coef.terms().size()}};
    r.checks.push_back(std::move(c));
    binom = binom * (n + 1 - k) / (k + 1);
  }
  for (const complex& t : sorted_ts(ts)) {
    const Form omega_t = family_form(m, t);
    const complex v = std::abs(t) == 0.0 ? complex{1.0, 0.0} : std::abs(t) / t;
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> worst_point;
    for (const auto& x : evaluation_grid(CoordinateProfile(m.dim()).add(omega_t), grid)) {
      const RMatrix im = (v * two_form_matrix(omega_t.at(x))).imag();
      const RVector s = Eigen::JacobiSVD<RMatrix>(im).singularValues();
      const double rel = s(0) > 0 ? s(s.size() - 1) / s(0) : 0.0;
      if (rel < worst) {
        worst = rel;
        worst_point = x;
      }
    }
    CheckResult c;
    c.name = "nondegeneracy";
    c.t = t;
    c.pass = worst > kRankTolerance;
    c.max_defect = c.pass ? 0.0 : 1.0;
    c.witness = Json{{"min_relative_singular_value", worst}, {"point", vector_json(worst_point)}};
    r.checks.push_back(std::move(c));
  }
  return r;
}

/// Throwing form of power_condition_report.
inline Report verify_power_condition(const TorusModel& m, const std::vector<complex>& ts = default_t_samples(),
                                     const GridOptions& grid = {}) {
  Report r = power_condition_report(m, ts, grid);
  for (const auto& c : r.checks) {
    if (c.pass) continue;
    std::ostringstream os;
    if (c.name == "power_coefficient") {
      os << "Omega^" << m.n + 1 - c.witness["k"].get<int>() << " ^ eta^" << c.witness["k"].get<int>()
         << " != 0 (p = " << c.witness["p"].get<int>() << ", " << c.witness["nonzero_terms"].get<std::size_t>()
         << " nonzero coefficients, max " << c.max_defect << ")";
      throw PowerConditionViolated(os.str());
    }
    os << "Omega_t degenerate at t = " << *c.t;
    throw NotNonDegenerate(os.str());
  }
  return r;
}

struct FamilyMember {
  complex t;
  Form omega_t;
  ComplexStructureField structure;
  double integrability = 0.0;
  /// max(|eta ^ Omega_t^n|, |eta ^ conj(Omega_t)^n|): zero iff eta is (1,1) for I_t.
  double eta_type_defect = 0.0;
};

inline FamilyMember family_member(const TorusModel& m, complex t, const GridOptions& grid = {}) {
  FamilyMember f;
  f.t = t;
  f.omega_t = family_form(m, t);
  f.structure = kernel_structure(f.omega_t, grid);
  f.integrability = integrability_defect(f.structure, grid);
  const Form pn = power(f.omega_t, m.n);
  const Form pnc = Form(pn.conj());
  f.eta_type_defect = std::max(wedge(m.eta, pn).max_abs(), wedge(m.eta, pnc).max_abs());
  return f;
}

/// Graph matrix A of T^{0,1} over span{d/dzbar_j}: the (0,1) bundle is
/// spanned by d/dzbar_j + sum_k A_jk d/dz_k. Depends holomorphically on t
/// along the degenerate twistor family.
inline CMatrix antiholomorphic_graph(const RMatrix& j) {
  const int d = static_cast<int>(j.rows());
  const int m = d / 2;
  const CMatrix b = nullspace(CMatrix(j.cast<complex>() + complex{0.0, 1.0} * CMatrix::Identity(d, d)));
  CMatrix c = CMatrix::Zero(d, d);  // real components -> (dz_j, dzbar_j) coefficients
  for (int k = 0; k < m; ++k) {
    c(k, 2 * k) = 1.0;
    c(k, 2 * k + 1) = complex{0.0, 1.0};
    c(m + k, 2 * k) = 1.0;
    c(m + k, 2 * k + 1) = complex{0.0, -1.0};
  }
  const CMatrix bc = c * b;
  const CMatrix bz = bc.topRows(m), bzb = bc.bottomRows(m);
  return (bz * bzb.inverse()).transpose();
}

/// Max entry of the Cauchy-Riemann defect d A / d tbar at t, by central
/// differences of the graph matrix of T^{0,1}_t.
inline double family_holomorphy_defect(const TorusModel& m, complex t, double h = 1e-4) {
  const std::vector<double> origin(static_cast<std::size_t>(m.dim()), 0.0);
  auto graph = [&](complex s) { return antiholomorphic_graph(kernel_structure(family_form(m, s)).at(origin)); };
  const CMatrix dre = (graph(t + h) - graph(t - h)) / (2 * h);
  const CMatrix dim = (graph(t + complex{0, h}) - graph(t - complex{0, h})) / (2 * h);
  return (0.5 * (dre + complex{0.0, 1.0} * dim)).cwiseAbs().maxCoeff();
}

/// Compares I_t with I_0 on the fiber directions and checks that the
/// projection to the base is complex-linear for the fixed base structure.
/// FiberDriftError (with witness) on deviation > tol when `throw_on_failure`.
inline Report fiber_invariance(const TorusModel& m, const std::vector<complex>& ts, const GridOptions& grid = {},
                               bool throw_on_failure = true, double tol = 1e-9) {
  const auto sorted = sorted_ts(ts);
  const FamilyMember base_member = family_member(m, complex{0.0, 0.0}, grid);
  const auto members =
      parallel_map(sorted.size(), [&](std::size_t i) { return family_member(m, sorted[i], grid); });
  const std::vector<int> fiber = m.fiber();
  const int d = m.dim();
  Report r;
  r.model = m.to_json();
  for (const auto& f : members) {
    CoordinateProfile profile = f.structure.profile();
    for (const auto& e : base_member.structure.numerator().entries) profile.add(e);
    CheckResult fib{"fiber_invariance", f.t, 0.0, true, nullptr};
    CheckResult proj{"projection_holomorphic", f.t, 0.0, true, nullptr};
    for (const auto& x : evaluation_grid(profile, grid)) {
      const RMatrix jt = f.structure.at(x);
      const RMatrix j0 = base_member.structure.at(x);
      for (int c : fiber)
        for (int row = 0; row < d; ++row) {
          const double dev = std::abs(jt(row, c) - j0(row, c));
          if (dev > fib.max_defect) {
            fib.max_defect = dev;
            fib.witness = Json{{"point", vector_json(x)}, {"entry", Json::array({row + 1, c + 1})}};
          }
        }
      for (int row : m.base)
        for (int c = 0; c < d; ++c) {
          const bool base_col = std::find(m.base.begin(), m.base.end(), c) != m.base.end();
          const double expected = base_col ? j0(row, c) : 0.0;
          const double dev = std::abs(jt(row, c) - expected);
          if (dev > proj.max_defect) {
            proj.max_defect = dev;
            proj.witness = Json{{"point", vector_json(x)}, {"entry", Json::array({row + 1, c + 1})}};
          }
        }
    }
    fib.pass = fib.max_defect <= tol;
    proj.pass = proj.max_defect <= tol;
    if (fib.pass) fib.witness = nullptr;
    if (proj.pass) proj.witness = nullptr;
    if (throw_on_failure && !fib.pass) {
      std::ostringstream os;
      os << "I_t drifts on fiber directions at t = " << f.t << " by " << fib.max_defect;
      FiberDriftError err(os.str());
      err.witness_point = fib.witness["point"].get<std::vector<double>>();
      throw err;
    }
    r.checks.push_back(std::move(fib));
    r.checks.push_back(std::move(proj));
  }
  return r;
}

namespace detail {

inline FourierScalar embed_scalar(const FourierScalar& s, int dim) {
  FourierScalar out(dim);
  for (const auto& [mode, c] : s.terms()) {
    Mode m = mode;
    m.freq.resize(static_cast<std::size_t>(dim), 0);
    m.powers.resize(static_cast<std::size_t>(dim), 0);
    out.set_term(m, c);
  }
  return out;
}

}  // namespace detail

/// Same form on R^dim (dim >= a.dim()), first coordinates shared.
inline Form embed(const Form& a, int dim) {
  if (dim < a.dim()) throw DimensionError("embedding into a smaller space");
  Form out(dim, a.degree());
  for (const auto& [mask, c] : a.terms()) out.set(mask, detail::embed_scalar(c, dim));
  return out;
}

/// Lifted form Omega~ = Omega + t eta + dt ^ dw on M x C_t x C_w with
/// real coordinates (x_1..x_4n, Re t, Im t, Re w, Im w).
inline Form lifted_form(const TorusModel& m) {
  const int d = m.dim();
  const int big = d + 4;
  const FourierScalar t =
      FourierScalar::coordinate(big, d) + FourierScalar::coordinate(big, d + 1) * complex{0.0, 1.0};
  const int tj = 2 * m.n;  // complex index of t
  Form out = embed(m.omega, big);
  out += embed(m.eta, big).times(t);
  out += wedge(Form::dz(big, tj), Form::dz(big, tj + 1));
  return out;
}

/// Certifies (i) Omega~ is non-degenerate with the power condition,
/// (ii) d Omega~ = eta ^ dt exactly, (iii) d Omega~ is pure (2,1) for the
/// kernel structure of Omega~, (iv) that structure restricts to
/// I_t (+) I_C (+) I_C on every slice. Also reports its integrability.
inline Report lifted_form_certificate(const TorusModel& m, const GridOptions& grid = {},
                                      bool throw_on_failure = true, double tol = 1e-10) {
  const int d = m.dim();
  const int big = d + 4;
  Report r;
  r.model = m.to_json();
  auto fail = [&](const std::string& stage, const std::string& what) {
    if (throw_on_failure) throw LiftError("stage " + stage + ": " + what);
  };
  const Form lifted = lifted_form(m);

  CheckResult c1{"lift_nondegenerate", std::nullopt, 0.0, true, nullptr};
  ComplexStructureField j;
  try {
    j = kernel_structure(lifted, grid);
  } catch (const Error& e) {
    c1.pass = false;
    c1.max_defect = 1.0;
    c1.witness = Json{{"error", e.code()}, {"message", e.what()}};
    r.checks.push_back(c1);
    fail("i", e.what());
    return r;
  }
  r.checks.push_back(c1);

  const Form dt = Form::dz(big, 2 * m.n);
  const Form expected = wedge(embed(m.eta, big), dt);
  const Form dl = ext_d(lifted);
  CheckResult c2{"lift_differential", std::nullopt, (dl - expected).max_abs(), dl == expected, nullptr};
  if (!c2.pass) c2.witness = Json{{"nonzero_terms", (dl - expected).terms().size()}};
  r.checks.push_back(c2);
  if (!c2.pass) fail("ii", "d Omega~ != eta ^ dt");

  CheckResult c3{"lift_hodge_type", std::nullopt, 0.0, true, nullptr};
  if (!dl.is_zero()) {
    CoordinateProfile profile = j.profile();
    profile.add(dl);
    for (const auto& x : evaluation_grid(profile, grid)) {
      for (const auto& [key, part] : hodge_components_at(dl.at(x), j.at(x))) {
        if (key == Bidegree{2, 1}) continue;
        if (part.max_abs() > c3.max_defect) {
          c3.max_defect = part.max_abs();
          c3.witness = Json{{"point", vector_json(x)}, {"bidegree", Json::array({key.first, key.second})}};
        }
      }
    }
  }
  c3.pass = c3.max_defect <= tol;
  if (c3.pass) c3.witness = nullptr;
  r.checks.push_back(c3);
  if (!c3.pass) fail("iii", "d Omega~ is not of type (2,1)");

  CheckResult c4{"lift_slice_structure", std::nullopt, 0.0, true, nullptr};
  RMatrix ic = RMatrix::Zero(2, 2);
  ic(1, 0) = 1.0;
  ic(0, 1) = -1.0;
  CoordinateProfile profile = j.profile();
  profile.add(lifted);
  for (const auto& x : evaluation_grid(profile, grid)) {
    const complex t{x[static_cast<std::size_t>(d)], x[static_cast<std::size_t>(d + 1)]};
    const std::vector<double> xm(x.begin(), x.begin() + d);
    GridOptions single = grid;
    const RMatrix it = kernel_structure(family_form(m, t), single).at(xm);
    RMatrix want = RMatrix::Zero(big, big);
    want.topLeftCorner(d, d) = it;
    want.block(d, d, 2, 2) = ic;
    want.block(d + 2, d + 2, 2, 2) = ic;
    const double dev = (j.at(x) - want).cwiseAbs().maxCoeff();
    if (dev > c4.max_defect) {
      c4.max_defect = dev;
      c4.witness = Json{{"point", vector_json(x)}};
    }
  }
  c4.pass = c4.max_defect <= 1e-9;
  if (c4.pass) c4.witness = nullptr;
  r.checks.push_back(c4);
  if (!c4.pass) fail("iv", "slice structure differs from I_t + I_C");

  CheckResult c5{"lift_integrability", std::nullopt, integrability_defect(j, grid), true, nullptr};
  c5.pass = c5.max_defect <= 1e-9;
  r.checks.push_back(c5);
  if (!c5.pass) fail("integrability", "lifted structure is not integrable");
  return r;
}

}  // namespace twistor_forge
