#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "bbf.hpp"
#include "json_io.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "perdom.hpp"
#include "positivity.hpp"
#include "random.hpp"
#include "report.hpp"
#include "twistor.hpp"

#ifndef TWISTOR_FORGE_VERSION
#define TWISTOR_FORGE_VERSION "0.0.0"
#endif

namespace twistor_forge::cli {

inline constexpr const char* kVersion = TWISTOR_FORGE_VERSION;

/// Raised for invalid invocations; maps to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

// ---------------------------------------------------------------------------
// Value parsing.

namespace detail {

inline double parse_real(std::string_view s, std::string_view whole) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("cannot parse complex number '" + std::string(whole) + "'");
  return v;
}

}  // namespace detail

/// Parses "a", "bi", "a+bi", "a-bi", "i", "-i", "a+i" (exponents allowed).
inline complex parse_complex(std::string_view s) {
  const std::string_view whole = s;
  if (s.empty()) throw ConfigError("empty complex number");
  if (s.back() != 'i') return {detail::parse_real(s, whole), 0.0};
  s.remove_suffix(1);
  // Split at the last sign that is neither leading nor part of an exponent.
  std::size_t split = std::string_view::npos;
  for (std::size_t k = s.size(); k-- > 1;)
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  const std::string_view re = split == std::string_view::npos ? std::string_view{} : s.substr(0, split);
  std::string_view im = split == std::string_view::npos ? s : s.substr(split);
  double imag = 0.0;
  if (im.empty() || im == "+") imag = 1.0;
  else if (im == "-") imag = -1.0;
  else imag = detail::parse_real(im, whole);
  return {re.empty() ? 0.0 : detail::parse_real(re, whole), imag};
}

inline std::vector<complex> parse_complex_list(const std::string& s) {
  std::vector<complex> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    out.push_back(parse_complex(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resolved configuration.

struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::optional<int> n;
  std::optional<int> p;
  std::optional<std::string> t_list;  // raw --t value
  std::optional<int> trials;
  std::optional<int> samples;
  std::optional<double> tolerance;
  std::string lattice;
  std::string line = "twistor";
  std::string output = "-";
  std::string format = "json";
  bool inject_bug = false;

  std::vector<complex> ts(const std::vector<complex>& fallback) const {
    return t_list ? parse_complex_list(*t_list) : fallback;
  }
};

/// What a subcommand hands back: the report plus optional extra JSON
/// sections and, for period-line, the sample CSV.
struct Outcome {
  Json config;
  Report report;
  Json extra = Json::object();
  std::string csv;
};

// ---------------------------------------------------------------------------
// Helpers shared by the subcommands.

namespace detail {

inline Json ts_json(const std::vector<complex>& ts) {
  Json j = Json::array();
  for (complex t : ts) j.push_back(complex_json(t));
  return j;
}

/// Orders checks by name, then t (absent first); ties keep generation order.
inline void sort_checks(std::vector<CheckResult>& checks) {
  std::stable_sort(checks.begin(), checks.end(), [](const CheckResult& a, const CheckResult& b) {
    if (a.name != b.name) return a.name < b.name;
    if (a.t.has_value() != b.t.has_value()) return !a.t.has_value();
    if (!a.t) return false;
    if (a.t->real() != b.t->real()) return a.t->real() < b.t->real();
    return a.t->imag() < b.t->imag();
  });
}

inline CheckResult error_check(const std::string& name, const Error& e) {
  return CheckResult{name, std::nullopt, 1.0, false, Json{{"error", e.code()}, {"message", e.what()}}};
}

/// Running maximum of a per-trial metric that remembers its trial.
struct Worst {
  double value = 0.0;
  int trial = -1;
  void add(double v, int t) {
    if (v > value || trial < 0) {
      value = v;
      trial = t;
    }
  }
};

inline CheckResult worst_check(const std::string& name, const Worst& w, double tol, int count) {
  CheckResult c{name, std::nullopt, w.value, w.value <= tol, nullptr};
  c.witness = Json{{"samples", count}, {"tolerance", tol}};
  if (w.trial >= 0) c.witness["worst_sample"] = w.trial;
  return c;
}

inline RVector random_vector(Rng& rng, Eigen::Index k) {
  RVector v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = rng.normal();
  return v;
}

/// Random class with q(w, w) = 1: dominant positive part, smaller negative tilt.
inline RVector random_positive_class(Rng& rng, const EigenSplit& split) {
  const RVector a = random_vector(rng, split.positive.cols());
  RVector w = split.positive * a;
  double b_norm2 = 0.0;
  if (split.negative.cols() > 0) {
    RVector b = random_vector(rng, split.negative.cols());
    b *= 0.5 * a.norm() / std::max(b.norm(), 1e-300);
    w += split.negative * b;
    b_norm2 = b.squaredNorm();
  }
  w /= std::sqrt(a.squaredNorm() - b_norm2);
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.

inline Outcome family_sweep(const RunConfig& cfg) {
  const int n = cfg.n.value_or(1);
  if (n < 1 || n > 3) throw ConfigError("--n must be 1, 2 or 3");
  const auto ts = sorted_ts(cfg.ts(default_t_samples()));
  const double tol = cfg.tolerance.value_or(1e-9);
  const TorusModel m = cfg.inject_bug ? kahler_tampered_model(n) : standard_model(n);

  Outcome out;
  out.config = Json{{"n", n}, {"t", detail::ts_json(ts)}, {"tolerance", tol}};
  out.report.model = m.to_json();
  try {
    out.report.append(power_condition_report(m, ts));
  } catch (const Error& e) {
    out.report.checks.push_back(detail::error_check("power_condition", e));
  }
  try {
    out.report.append(fiber_invariance(m, ts, {}, false, tol));
  } catch (const Error& e) {
    out.report.checks.push_back(detail::error_check("fiber_invariance", e));
  }
  const auto members = parallel_map(ts.size(), [&](std::size_t i) -> std::optional<FamilyMember> {
    try {
      return family_member(m, ts[i]);
    } catch (const Error&) {
      return std::nullopt;
    }
  });
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& f = members[i];
    if (!f) {
      out.report.checks.push_back(CheckResult{"integrability", ts[i], 1.0, false, Json{{"error", "kernel structure unavailable"}}});
      continue;
    }
    out.report.checks.push_back(CheckResult{"integrability", ts[i], f->integrability, f->integrability <= tol, nullptr});
    const double scale = std::max(1.0, std::pow(std::abs(ts[i]), n));
    out.report.checks.push_back(
        CheckResult{"eta_type", ts[i], f->eta_type_defect, f->eta_type_defect <= tol * scale, nullptr});
  }
  return out;
}

inline Outcome verify_lemmas(const RunConfig& cfg) {
  const int trials = cfg.trials.value_or(500);
  LemmaOptions opt;
  opt.inject_bug = cfg.inject_bug;
  if (cfg.tolerance) opt.zero_tol = *cfg.tolerance;
  std::vector<std::pair<int, int>> cases;
  for (int n = 1; n <= 3; ++n) {
    if (cfg.n && *cfg.n != n) continue;
    for (int p = 0; p <= n; ++p)
      if (!cfg.p || *cfg.p == p) cases.emplace_back(n, p);
  }
  if (cfg.n && (*cfg.n < 1 || *cfg.n > 3)) throw ConfigError("--n must be 1, 2 or 3");
  if (cases.empty()) throw ConfigError("--p must satisfy 0 <= p <= n");

  Outcome out;
  out.config = Json{{"n", cfg.n ? Json(*cfg.n) : Json("all")},
                    {"p", cfg.p ? Json(*cfg.p) : Json("all")},
                    {"trials", trials},
                    {"tolerance", opt.zero_tol}};
  out.report.model = Json{{"campaign", "lemma_pair"}};
  Json campaigns = Json::array();
  for (const auto& [n, p] : cases) {
    const LemmaReport r = verify_lemma_pair(n, p, trials, cfg.seed, opt);
    CheckResult c{"lemma_pair", std::nullopt, static_cast<double>(r.violations.size()), r.passed(), nullptr};
    c.witness = Json{{"n", n}, {"p", p}, {"violations", r.violations.size()}};
    if (!r.passed()) c.witness["first_violation"] = r.violations.front();
    out.report.checks.push_back(std::move(c));
    campaigns.push_back(r.to_json());
  }
  out.extra["campaigns"] = campaigns;
  return out;
}

inline Outcome fujiki(const RunConfig& cfg) {
  const std::string name = cfg.lattice.empty() ? "k3" : cfg.lattice;
  const int trials = cfg.trials.value_or(100);
  FujikiRing ring;
  try {
    ring = resolve_lattice(name);
  } catch (const Error& e) {
    throw ConfigError(std::string("--lattice: ") + e.what());
  }
  const int n = ring.n;
  const int b = ring.b();
  const double tol_exact = cfg.tolerance.value_or(1e-12);
  const double tol_ratio = cfg.tolerance.value_or(1e-9);
  const double tol_fit = cfg.tolerance.value_or(1e-8);

  // The oracle every identity is checked against. The injected bug adds a
  // symmetric multilinear term that is not of Fujiki type.
  const MultilinearOracle oracle = [&](const std::vector<RVector>& x) {
    double v = fujiki_product(ring, x);
    if (cfg.inject_bug) {
      double extra = 1e-3;
      for (const auto& e : x) extra *= e(0);
      v += extra;
    }
    return v;
  };
  const EigenSplit split = eigen_split(ring.space);

  struct TrialResult {
    double symmetry = 0.0, top_power = 0.0, multilinear = 0.0, ratio = -1.0;
    int isotropic_failures = 0;
  };
  bool isotropic_possible = true;
  try {
    Rng probe(cfg.seed);
    random_isotropic_family(ring.space, n + 1, probe);
  } catch (const SignatureError&) {
    isotropic_possible = false;
  }
  const bool kahler_possible = split.positive.cols() > 0;

  const auto results = parallel_map(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    TrialResult r;
    std::vector<RVector> etas;
    for (int i = 0; i < 2 * n; ++i) etas.push_back(detail::random_vector(rng, b));
    const double base = oracle(etas);
    const double scale = std::max(1.0, std::abs(base));
    std::vector<RVector> rev(etas.rbegin(), etas.rend());
    r.symmetry = std::abs(oracle(rev) - base) / scale;

    const RVector x = etas[0];
    const double qx = ring.space.q(x, x);
    const double expected = ring.lambda() * std::pow(qx, n);
    r.top_power = std::abs(oracle(std::vector<RVector>(static_cast<std::size_t>(2 * n), x)) - expected) /
                  std::max(1.0, std::abs(expected));

    const double a = rng.normal(), c = rng.normal();
    const RVector y = detail::random_vector(rng, b);
    std::vector<RVector> mixed = etas, with_y = etas;
    mixed[0] = a * etas[0] + c * y;
    with_y[0] = y;
    const double lhs = oracle(mixed), rhs = a * base + c * oracle(with_y);
    r.multilinear = std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});

    if (isotropic_possible) {
      const auto iso = random_isotropic_family(ring.space, n + 1, rng);
      if (!isotropic_product_vanishes(ring, iso, oracle)) r.isotropic_failures = 1;
    }

    if (kahler_possible) {
      const RVector w = detail::random_positive_class(rng, split);
      const RVector e1 = detail::random_vector(rng, b), e2 = detail::random_vector(rng, b);
      const double q = ring.space.q(e1, e2);
      if (std::abs(q) > 1e-3 * e1.norm() * e2.norm()) {
        const double mu = kahler_mu(ring, w);
        r.ratio = std::abs(bbf_via_kahler(ring, e1, e2, w, kahler_prefactor(n), oracle) / q - mu) / std::abs(mu);
      }
    }
    return r;
  });

  detail::Worst sym, top, lin, ratio;
  int iso_fail = 0, ratio_count = 0;
  for (std::size_t t = 0; t < results.size(); ++t) {
    const int ti = static_cast<int>(t);
    sym.add(results[t].symmetry, ti);
    top.add(results[t].top_power, ti);
    lin.add(results[t].multilinear, ti);
    if (results[t].ratio >= 0) {
      ratio.add(results[t].ratio, ti);
      ++ratio_count;
    }
    iso_fail += results[t].isotropic_failures;
  }

  Outcome out;
  out.config = Json{{"lattice", name}, {"trials", trials}};
  if (cfg.tolerance) out.config["tolerance"] = *cfg.tolerance;
  out.report.model = ring.to_json();
  auto& checks = out.report.checks;
  checks.push_back(detail::worst_check("fujiki_symmetry", sym, tol_exact, trials));
  checks.push_back(detail::worst_check("fujiki_top_power", top, tol_ratio, trials));
  checks.push_back(detail::worst_check("fujiki_multilinear", lin, tol_ratio, trials));
  if (isotropic_possible) {
    checks.push_back(CheckResult{"isotropic_vanishing", std::nullopt, static_cast<double>(iso_fail), iso_fail == 0,
                                 Json{{"samples", trials}, {"failures", iso_fail}}});
  } else {
    checks.push_back(CheckResult{"isotropic_vanishing", std::nullopt, 0.0, true,
                                 Json{{"skipped", "form has too few positive or negative directions"}}});
  }
  if (kahler_possible) checks.push_back(detail::worst_check("kahler_ratio", ratio, tol_ratio, ratio_count));

  if (kahler_possible) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(trials)));
    const RVector h = detail::random_positive_class(rng, split);
    const double qh = ring.space.q(h, h);
    CheckResult c{"bbf_fit_roundtrip", std::nullopt, 0.0, true, nullptr};
    try {
      const BbfFit fit = bbf_fit(n, b, oracle, h, cfg.seed);
      const RMatrix expected = ring.space.gram / qh;
      const double lam = ring.lambda() * std::pow(qh, n);
      const double gram_err = (fit.gram - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff();
      const double lam_err = std::abs(fit.lambda - lam) / lam;
      c.max_defect = std::max(gram_err, lam_err);
      c.pass = c.max_defect <= tol_fit;
      c.witness = Json{{"gram_relative_error", gram_err}, {"lambda_relative_error", lam_err}, {"max_residual", fit.max_residual}};
    } catch (const NotFujikiType& e) {
      c = detail::error_check("bbf_fit_roundtrip", e);
    }
    checks.push_back(std::move(c));
  }
  return out;
}

namespace detail {

/// Standard model n = 1 classes (Re Omega, Im Omega, eta, dx1 ^ dx2) and
/// the degenerate line of their Gram form through W = (Re, Im, eta)/sqrt 2.
inline CheckResult class_match(complex t) {
  const TorusModel m = standard_model(1);
  const Form re = (m.omega + Form(m.omega.conj())) * complex{0.5, 0.0};
  const Form im = (m.omega - Form(m.omega.conj())) * complex{0.0, -0.5};
  Form dual(4, 2);
  dual.add_term({0, 1}, FourierScalar::constant(4, 1.0));
  const std::vector<Form> basis{re, im, m.eta, dual};
  const QuadraticSpace s(wedge_pairing_gram(basis));
  RMatrix w = RMatrix::Identity(4, 3) / std::sqrt(2.0);
  const auto line = degenerate_twistor_line(s, w, t);
  const double d = projective_distance(line.rep, class_coordinates(family_form(m, t), basis));
  return CheckResult{"degenerate_class_match", t, d, d <= 1e-12, nullptr};
}

}  // namespace detail

inline Outcome period_line(const RunConfig& cfg) {
  const std::string name = cfg.lattice.empty() ? "sig34" : cfg.lattice;
  const int samples = cfg.samples.value_or(100);
  const int trials = cfg.trials.value_or(1000);
  const double tol = cfg.tolerance.value_or(kPeriodTolerance);
  std::vector<complex> default_ts = default_t_samples();
  for (complex t : {complex{100.0, 0.0}, complex{0.0, 100.0}, std::polar(100.0, 2.5)}) default_ts.push_back(t);
  const auto ts = sorted_ts(cfg.ts(default_ts));
  if (cfg.line != "twistor" && cfg.line != "degenerate") throw ConfigError("--line must be twistor or degenerate");
  FujikiRing ring;
  try {
    ring = resolve_lattice(name);
  } catch (const Error& e) {
    throw ConfigError(std::string("--lattice: ") + e.what());
  }
  const QuadraticSpace& s = ring.space;
  const EigenSplit split = eigen_split(s);
  if (split.positive.cols() < 3 || split.negative.cols() < 1)
    throw ConfigError("--lattice needs at least three positive and one negative direction");

  Outcome out;
  out.config = Json{{"lattice", name}, {"samples", samples}, {"trials", trials}, {"t", detail::ts_json(ts)}, {"tolerance", tol}};
  if (cfg.format == "csv") out.config["line"] = cfg.line;
  out.report.model = ring.to_json();
  auto& checks = out.report.checks;

  const Plane w = Plane::from_vectors(s, split.positive.leftCols(3));
  const auto line = twistor_line(w, samples);
  detail::Worst member, anti, inside;
  bool all_members = true;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const auto& smp = line[i];
    const int ii = static_cast<int>(i);
    all_members = all_members && is_period_point(smp.point);
    member.add(std::abs(smp.point.q_ll()) / smp.point.q_llbar(), ii);
    anti.add(projective_distance(twistor_line_point(w, -smp.normal).rep, smp.point.rep.conjugate()), ii);
    const Plane v = line_to_plane(smp.point);
    inside.add((w.basis * (w.basis.transpose() * v.basis) - v.basis).norm(), ii);
  }
  CheckResult mc = detail::worst_check("twistor_line_membership", member, tol, samples);
  mc.pass = mc.pass && all_members;
  checks.push_back(mc);
  checks.push_back(detail::worst_check("twistor_line_antipodal", anti, tol, samples));
  checks.push_back(detail::worst_check("twistor_line_inside_w", inside, tol, samples));

  const auto round = parallel_map(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    RMatrix vecs(s.b, 2);
    do {
      for (int j = 0; j < 2; ++j) vecs.col(j) = detail::random_positive_class(rng, split);
    } while (signature(s, vecs).positive != 2);
    const Plane v = Plane::from_vectors(s, vecs, t % 2 ? -1 : 1);
    const PeriodPoint l = plane_to_line(v);
    Plane back = line_to_plane(l);
    if (cfg.inject_bug) back.orientation = -back.orientation;
    const RMatrix change = v.oriented_basis().transpose() * back.oriented_basis();
    return std::max({(plane_to_line(back).rep - l.rep).norm(), std::abs(change.determinant() - 1.0),
                     is_period_point(l) ? 0.0 : 1.0});
  });
  detail::Worst rt;
  for (std::size_t t = 0; t < round.size(); ++t) rt.add(round[t], static_cast<int>(t));
  checks.push_back(detail::worst_check("line_plane_roundtrip", rt, tol, trials));

  RMatrix dw(s.b, 3);
  dw.col(0) = split.positive.col(0);
  dw.col(1) = split.positive.col(1);
  dw.col(2) = split.positive.col(2) + split.negative.col(0);
  std::vector<std::pair<complex, PeriodPoint>> degenerate;
  for (complex t : ts) {
    const Plane v = degenerate_plane(s, dw, t);
    const PeriodPoint p = degenerate_twistor_line(s, dw, t);
    const double residual = std::abs(p.q_ll()) / p.q_llbar();
    checks.push_back(CheckResult{"degenerate_line_positive", t, residual, v.positive() && is_period_point(p), nullptr});
    degenerate.emplace_back(t, p);
    checks.push_back(detail::class_match(t));
  }

  if (cfg.format == "csv") {
    std::ostringstream os;
    if (cfg.line == "twistor") write_twistor_csv(os, line);
    else write_degenerate_csv(os, degenerate);
    out.csv = os.str();
  }
  return out;
}

inline Outcome lift_check(const RunConfig& cfg) {
  const int n = cfg.n.value_or(1);
  if (n < 1 || n > 3) throw ConfigError("--n must be 1, 2 or 3");
  const double tol = cfg.tolerance.value_or(1e-10);
  const TorusModel m = cfg.inject_bug ? kahler_tampered_model(n) : standard_model(n);
  Outcome out;
  out.config = Json{{"n", n}, {"tolerance", tol}};
  out.report = lifted_form_certificate(m, {}, false, tol);
  return out;
}

namespace detail {

inline Form random_form(Rng& rng, int dim, int degree) {
  Form f(dim, degree);
  for (int term = 0; term < 3; ++term) {
    std::vector<int> all(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) all[static_cast<std::size_t>(j)] = j;
    for (int j = dim - 1; j > 0; --j) std::swap(all[static_cast<std::size_t>(j)], all[rng.index(static_cast<std::size_t>(j + 1))]);
    FourierScalar c(dim);
    for (int mode = 0; mode < 3; ++mode) {
      std::vector<int> freq(static_cast<std::size_t>(dim), 0);
      for (auto& k : freq)
        if (rng.uniform() < 0.3) k = static_cast<int>(rng.index(5)) - 2;
      c += FourierScalar::wave(freq, rng.complex_normal());
    }
    if (rng.uniform() < 0.3) c = c * FourierScalar::coordinate(dim, static_cast<int>(rng.index(static_cast<std::size_t>(dim))));
    Form t(dim, degree);
    t.add_term(std::vector<int>(all.begin(), all.begin() + degree), c);
    f += t;
  }
  return f;
}

/// Moves the first coefficient by one ulp.
inline Form corrupt(Form f) {
  if (f.terms().empty()) return f;
  const auto& [mask, c] = *f.terms().begin();
  FourierScalar s = c;
  const auto& [mode, z] = *s.terms().begin();
  s.set_term(mode, complex{std::nextafter(z.real(), HUGE_VAL), z.imag()});
  const Mask m = mask;
  f.set(m, s);
  return f;
}

}  // namespace detail

inline Outcome roundtrip(const RunConfig& cfg) {
  const int trials = cfg.trials.value_or(100);
  Outcome out;
  out.config = Json{{"trials", trials}};
  out.report.model = Json{{"formats", Json::array({"form", "structure", "lattice"})}};

  const auto forms = parallel_map(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    const int dim = 2 + static_cast<int>(rng.index(7));
    const Form f = detail::random_form(rng, dim, static_cast<int>(rng.index(static_cast<std::size_t>(dim + 1))));
    const std::string text = to_json(f).dump();
    Form g = form_from_json(Json::parse(text));
    if (cfg.inject_bug) g = detail::corrupt(g);
    return !(f == g) || to_json(g).dump() != text;
  });
  int form_fail = 0, first = -1;
  for (std::size_t t = 0; t < forms.size(); ++t)
    if (forms[t]) {
      ++form_fail;
      if (first < 0) first = static_cast<int>(t);
    }
  CheckResult fc{"form_roundtrip", std::nullopt, static_cast<double>(form_fail), form_fail == 0,
                 Json{{"samples", trials}, {"failures", form_fail}}};
  if (first >= 0) fc.witness["first_failure"] = first;
  out.report.checks.push_back(fc);

  int structure_fail = 0;
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(trials)));
  const int structures = std::max(1, trials / 20);
  for (int k = 0; k < structures; ++k) {
    const complex t{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const ComplexStructureField j = kernel_structure(family_form(standard_model(1), t));
    const std::string text = to_json(j).dump();
    if (to_json(structure_from_json(Json::parse(text))).dump() != text) ++structure_fail;
  }
  out.report.checks.push_back(CheckResult{"structure_roundtrip", std::nullopt, static_cast<double>(structure_fail),
                                          structure_fail == 0, Json{{"samples", structures}}});

  int lattice_fail = 0;
  for (const auto& name : preset_names()) {
    const FujikiRing r = preset_lattice(name);
    const FujikiRing back = lattice_from_json(Json::parse(r.to_json().dump()));
    if (back.space.gram != r.space.gram || back.n != r.n || back.C != r.C) ++lattice_fail;
  }
  out.report.checks.push_back(CheckResult{"lattice_roundtrip", std::nullopt, static_cast<double>(lattice_fail),
                                          lattice_fail == 0, Json{{"samples", preset_names().size()}}});
  return out;
}

// ---------------------------------------------------------------------------
// Driver.

namespace detail {

inline std::string describe(const CheckResult& c) {
  std::ostringstream os;
  os << c.name;
  if (c.t) os << " t=" << c.t->real() << (c.t->imag() < 0 ? "-" : "+") << std::abs(c.t->imag()) << "i";
  if (c.witness.is_object() && c.witness.contains("k")) os << " k=" << c.witness["k"];
  if (c.witness.is_object() && c.witness.contains("n") && c.witness.contains("p"))
    os << " n=" << c.witness["n"] << " p=" << c.witness["p"];
  return os.str();
}

inline std::string checks_csv(const Report& r) {
  std::ostringstream os;
  os.precision(17);
  os << "name,t_re,t_im,max_defect,pass\n";
  for (const auto& c : r.checks) {
    os << c.name << ',';
    if (c.t) os << c.t->real() << ',' << c.t->imag();
    else os << ',';
    os << ',' << c.max_defect << ',' << (c.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

}  // namespace detail

/// Runs one invocation. Exit codes: 0 all checks pass, 1 a check failed,
/// 2 invalid configuration.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Verification campaigns for degenerate twistor families", "twistor-forge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Base seed (default 0)");
    sub->add_option("--output", cfg.output, "Report path, '-' for stdout");
    sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--inject-bug", cfg.inject_bug, "Corrupt the computation to demonstrate failure detection");
  };
  auto positive_int = [](CLI::App* sub, const char* name, std::optional<int>& dst, const char* help) {
    sub->add_option_function<int>(name, [&dst](const int& v) { dst = v; }, help)
        ->check(CLI::Range(1, std::numeric_limits<int>::max()));
  };
  auto tolerance = [&](CLI::App* sub) {
    sub->add_option_function<double>("--tolerance", [&](const double& v) { cfg.tolerance = v; }, "Override check tolerances")
        ->check(CLI::PositiveNumber);
  };
  auto t_option = [&](CLI::App* sub) {
    sub->add_option_function<std::string>("--t", [&](const std::string& v) { cfg.t_list = v; },
                                          "Comma-separated complex samples, e.g. 0,1,i,5-5i");
  };

  CLI::App* sweep = app.add_subcommand("family-sweep", "Twistor family checks on a standard torus model");
  positive_int(sweep, "--n", cfg.n, "Model dimension parameter (1..3)");
  t_option(sweep);
  tolerance(sweep);
  common(sweep);

  CLI::App* lemmas = app.add_subcommand("verify-lemmas", "Randomized positivity campaigns");
  positive_int(lemmas, "--n", cfg.n, "Restrict to this n (1..3)");
  lemmas->add_option_function<int>("--p", [&](const int& v) { cfg.p = v; }, "Restrict to this p")
      ->check(CLI::Range(0, std::numeric_limits<int>::max()));
  positive_int(lemmas, "--trials", cfg.trials, "Trials per (n, p)");
  tolerance(lemmas);
  common(lemmas);

  CLI::App* fuj = app.add_subcommand("fujiki", "Fujiki relation identities on a lattice");
  fuj->add_option("--lattice", cfg.lattice, "Preset name or JSON path");
  positive_int(fuj, "--trials", cfg.trials, "Random trials");
  tolerance(fuj);
  common(fuj);

  CLI::App* period = app.add_subcommand("period-line", "Twistor and degenerate line sampling");
  period->add_option("--lattice", cfg.lattice, "Preset name or JSON path");
  positive_int(period, "--samples", cfg.samples, "Twistor line samples");
  positive_int(period, "--trials", cfg.trials, "Random planes for the round trip");
  t_option(period);
  period->add_option("--line", cfg.line, "CSV content: twistor or degenerate")
      ->check(CLI::IsMember({"twistor", "degenerate"}));
  tolerance(period);
  common(period);

  CLI::App* lift = app.add_subcommand("lift-check", "Lifted form certificate");
  positive_int(lift, "--n", cfg.n, "Model dimension parameter (1..3)");
  tolerance(lift);
  common(lift);

  CLI::App* rt = app.add_subcommand("roundtrip", "Serialization round trips");
  positive_int(rt, "--trials", cfg.trials, "Random forms");
  common(rt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ConfigError: " << e.what() << '\n';
    return 2;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  Outcome result;
  try {
    if (cfg.subcommand == "family-sweep") result = family_sweep(cfg);
    else if (cfg.subcommand == "verify-lemmas") result = verify_lemmas(cfg);
    else if (cfg.subcommand == "fujiki") result = fujiki(cfg);
    else if (cfg.subcommand == "period-line") result = period_line(cfg);
    else if (cfg.subcommand == "lift-check") result = lift_check(cfg);
    else result = roundtrip(cfg);
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    result.report.checks.push_back(detail::error_check(cfg.subcommand, e));
  }
  detail::sort_checks(result.report.checks);

  Json config;
  config["subcommand"] = cfg.subcommand;
  config["seed"] = cfg.seed;
  for (auto& [k, v] : result.config.items()) config[k] = v;
  config["format"] = cfg.format;
  config["inject_bug"] = cfg.inject_bug;

  std::string payload;
  if (cfg.format == "csv") {
    payload = result.csv.empty() ? detail::checks_csv(result.report) : result.csv;
  } else {
    Json doc;
    doc["tool"] = "twistor-forge";
    doc["version"] = kVersion;
    doc["config"] = config;
    doc["passed"] = result.report.passed();
    const CheckResult* first = result.report.first_failure();
    doc["first_failure"] = first ? Json(detail::describe(*first)) : Json(nullptr);
    const Json body = result.report.to_json();
    doc["model"] = body["model"];
    doc["checks"] = body["checks"];
    for (auto& [k, v] : result.extra.items()) doc[k] = v;
    payload = doc.dump(2) + "\n";
  }

  if (cfg.output == "-") {
    out << payload;
    out.flush();
  } else {
    std::ofstream file(cfg.output, std::ios::binary);
    if (!file) {
      err << "ConfigError: cannot open output file " << cfg.output << '\n';
      return 2;
    }
    file << payload;
  }

  for (const auto& c : result.report.checks)
    err << (c.pass ? "PASS " : "FAIL ") << detail::describe(c) << " max_defect=" << c.max_defect << '\n';
  if (const CheckResult* first = result.report.first_failure()) {
    err << "first failing check: " << detail::describe(*first) << '\n';
    return 1;
  }
  err << "all " << result.report.checks.size() << " checks passed\n";
  return 0;
}

}  // namespace twistor_forge::cli
