// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "test_support.hpp"
#include "twistor_forge/bbf.hpp"
#include "twistor_forge/kernel.hpp"
#include "twistor_forge/perdom.hpp"
#include "twistor_forge/positivity.hpp"
#include "twistor_forge/twistor.hpp"

#ifndef TWISTOR_FORGE_CLI
#error "TWISTOR_FORGE_CLI must name the CLI binary"
#endif

using namespace twistor_forge;

namespace {

const complex I1{0.0, 1.0};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: ";
      else detail << "; ";
      detail << what;
    }
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

/// Distance between column spans: spectral norm of the projector difference.
double subspace_distance(const CMatrix& a, const CMatrix& b) {
  auto projector = [](const CMatrix& m) {
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(m).householderQ() * CMatrix::Identity(m.rows(), m.cols());
    return CMatrix(q * q.adjoint());
  };
  return Eigen::JacobiSVD<CMatrix>(projector(a) - projector(b)).singularValues()(0);
}

/// Dense Omega(X, Y) = X^T M Y from the constant coefficients of a 2-form.
CMatrix dense_two_form(const Form& f, const std::vector<double>& x) {
  CMatrix m = CMatrix::Zero(f.dim(), f.dim());
  for (const auto& [mask, c] : f.terms()) {
    const auto idx = mask_indices(mask);
    const complex v = c.evaluate(x);
    m(idx[0], idx[1]) += v;
    m(idx[1], idx[0]) -= v;
  }
  return m;
}

void criterion1(Outcome& o) {
  const auto start = Clock::now();
  const TorusModel m = standard_model(1);
  const std::vector<double> origin(4, 0.0);
  double worst = 0.0;
  for (complex t : {complex{0, 0}, complex{1, 0}, I1, complex{2, 0}, complex{5, -5}, complex{0, 10}}) {
    const Form omega_t = family_form(m, t);
    const RMatrix j = kernel_structure(omega_t).at(origin);
    const CMatrix p01 = 0.5 * (CMatrix::Identity(4, 4) + I1 * j.cast<complex>());
    const CMatrix library = Eigen::FullPivLU<CMatrix>(p01).image(p01);

    Eigen::FullPivLU<CMatrix> lu(dense_two_form(omega_t, origin));
    lu.setThreshold(1e-12);
    const CMatrix oracle = lu.kernel();

    // d/dzbar_1 and d/dzbar_2 + (i t / 2) d/dz_1 in real coordinates.
    CMatrix analytic = CMatrix::Zero(4, 2);
    analytic(0, 0) = 0.5;
    analytic(1, 0) = 0.5 * I1;
    analytic(2, 1) = 0.5;
    analytic(3, 1) = 0.5 * I1;
    analytic(0, 1) += 0.25 * I1 * t;
    analytic(1, 1) += 0.25 * t;  // (i t / 2) * (-i / 2)

    o.require(library.cols() == 2 && oracle.cols() == 2, "wrong kernel dimension");
    if (library.cols() != 2 || oracle.cols() != 2) return;
    const double d1 = subspace_distance(library, analytic), d2 = subspace_distance(oracle, analytic);
    worst = std::max({worst, d1, d2});
  }
  const double elapsed = seconds_since(start);
  o.require(worst < 1e-10, "subspace distance too large");
  o.require(elapsed < 1.0, "runtime above 1 s");
  o.detail << (o.pass ? "" : "; ") << "max subspace distance " << worst << ", " << elapsed << " s";
}

void criterion2(Outcome& o) {
  double worst = 0.0;
  for (int n = 1; n <= 2; ++n) {
    const TorusModel m = standard_model(n);
    for (complex t : default_t_samples()) worst = std::max(worst, integrability_defect(kernel_structure(family_form(m, t))));
  }
  const Form perturbed = wedge(Form::dz(4, 0), Form::dz(4, 1)) +
                         wedge(Form::dzbar(4, 0), Form::dzbar(4, 1)).times(FourierScalar::sin_mode(4, 0, 1));
  const double cartan = cartan_defect(perturbed, ComplexStructureField::constant(HyperkahlerTriple::standard(1).I));
  o.require(worst <= 1e-9, "integrability defect above 1e-9");
  o.require(cartan > 0.1, "perturbation not detected");
  o.detail << (o.pass ? "" : "; ") << "max integrability defect " << worst << ", perturbed cartan defect " << cartan;
}

void criterion3(Outcome& o) {
  double n3_time = 0.0;
  for (int n = 1; n <= 3; ++n) {
    const auto start = Clock::now();
    const TorusModel m = standard_model(n);
    Report r;
    try {
      r = verify_power_condition(m);
    } catch (const Error& e) {
      o.require(false, std::string("n=") + std::to_string(n) + ": " + e.what());
      continue;
    }
    for (const auto& c : r.checks)
      if (c.name == "power_coefficient")
        o.require(c.witness["nonzero_terms"].get<std::size_t>() == 0, "nonzero coefficient map at n=" + std::to_string(n));
    if (n == 3) n3_time = seconds_since(start);
  }
  o.require(n3_time < 10.0, "n=3 runtime above 10 s");
  o.detail << (o.pass ? "" : "; ") << "all coefficient maps empty, n=3 in " << n3_time << " s";
}

void criterion4(Outcome& o) {
  double worst = 0.0;
  for (int n = 1; n <= 2; ++n) {
    const Report r = fiber_invariance(standard_model(n), default_t_samples(), {}, false, 1e-10);
    for (const auto& c : r.checks)
      if (c.name == "fiber_invariance") worst = std::max(worst, c.max_defect);
  }
  bool caught = false;
  try {
    fiber_invariance(fiber_tilted_model(), default_t_samples());
  } catch (const FiberDriftError&) {
    caught = true;
  }
  o.require(worst < 1e-10, "fiber deviation above 1e-10");
  o.require(caught, "tilted eta did not raise FiberDriftError");
  o.detail << (o.pass ? "" : "; ") << "max fiber deviation " << worst << ", negative control raised";
}

void criterion5(Outcome& o) {
  double worst_type = 0.0;
  for (int n = 1; n <= 2; ++n) {
    const Report r = lifted_form_certificate(standard_model(n), {}, false, 1e-10);
    for (const auto& c : r.checks) {
      if (c.name == "lift_differential") o.require(c.pass && c.max_defect == 0.0, "d Omega~ != eta ^ dt");
      if (c.name == "lift_hodge_type") worst_type = std::max(worst_type, c.max_defect);
    }
    o.require(r.passed(), "certificate failed at n=" + std::to_string(n));
  }
  o.require(worst_type < 1e-10, "(0,3)+(1,2) components above 1e-10");
  o.detail << (o.pass ? "" : "; ") << "differential exact, max low-type component " << worst_type;
}

void criterion6(Outcome& o) {
  const auto start = Clock::now();
  int violations = 0, campaigns = 0;
  for (int n = 1; n <= 3; ++n)
    for (int p = 0; p <= n; ++p) {
      const LemmaReport r = verify_lemma_pair(n, p, 500, 20260101);
      violations += static_cast<int>(r.violations.size());
      ++campaigns;
    }
  const double elapsed = seconds_since(start);
  o.require(violations == 0, std::to_string(violations) + " violations");
  o.require(elapsed < 60.0, "runtime above 60 s");
  o.detail << (o.pass ? "" : "; ") << campaigns << " campaigns x 500 trials, " << violations << " violations, "
           << elapsed << " s";
}

RVector random_vector(Rng& rng, int b) {
  RVector v(b);
  for (int i = 0; i < b; ++i) v(i) = rng.normal();
  return v;
}

FujikiRing diagonal_ring(std::vector<double> d, int n) {
  RVector v = Eigen::Map<RVector>(d.data(), static_cast<Eigen::Index>(d.size()));
  return FujikiRing(QuadraticSpace(RMatrix(v.asDiagonal())), n, 1.0);
}

/// q(w, w) > 0 from the q-orthonormal eigen split, negative part at half weight.
RVector random_positive(Rng& rng, const EigenSplit& split) {
  const RVector a = random_vector(rng, static_cast<int>(split.positive.cols()));
  RVector b = random_vector(rng, static_cast<int>(split.negative.cols()));
  b *= 0.5 * a.norm() / std::max(b.norm(), 1e-300);
  return split.positive * a + split.negative * b;
}

void criterion7(Outcome& o) {
  Rng rng(77);
  // Exact agreement with the permutation oracle.
  int exact_trials = 0;
  for (int n = 1; n <= 3; ++n) {
    const FujikiRing ring = n == 1 ? preset_lattice("k3") : n == 2 ? preset_lattice("sig34")
                                                                   : diagonal_ring({1, 1, 1, 1, -1, -1, -1, -1}, 3);
    for (int t = 0; t < 50; ++t) {
      std::vector<RVector> etas;
      for (int i = 0; i < 2 * n; ++i) etas.push_back(random_vector(rng, ring.b()));
      o.require(fujiki_product(ring, etas) == tf_test::naive_fujiki(ring, etas), "matching sum differs from oracle");
      ++exact_trials;
    }
  }
  // Isotropic vanishing.
  const FujikiRing iso_rings[] = {preset_lattice("k3"), preset_lattice("sig34"),
                                  diagonal_ring({1, 1, 1, 1, -1, -1, -1, -1}, 3)};
  int iso = 0;
  for (int t = 0; t < 1000; ++t) {
    const FujikiRing& ring = iso_rings[t % 3];
    const auto etas = random_isotropic_family(ring.space, ring.n + 1, rng);
    o.require(isotropic_product_vanishes(ring, etas), "isotropic product nonzero");
    ++iso;
  }
  // Kahler-class formula ratio.
  const FujikiRing sig = preset_lattice("sig34");
  const EigenSplit split = eigen_split(sig.space);
  double spread = 0.0;
  int triples = 0;
  while (triples < 200) {
    RVector w = random_positive(rng, split);
    w /= std::sqrt(sig.space.q(w, w));
    const RVector e1 = random_vector(rng, sig.b()), e2 = random_vector(rng, sig.b());
    const double q = sig.space.q(e1, e2);
    if (std::abs(q) < 1e-3 * e1.norm() * e2.norm()) continue;
    const double ratio = bbf_via_kahler(sig, e1, e2, w) / q;
    spread = std::max(spread, std::abs(ratio / kahler_mu(sig, w) - 1.0));
    ++triples;
  }
  o.require(spread < 1e-9, "Kahler ratio not constant");
  // Fit round trip modulo gauge.
  double fit_err = 0.0;
  for (const std::string name : {"toy4", "k3", "sig34"}) {
    const FujikiRing base = preset_lattice(name);
    const FujikiRing ring(base.space, base.n, 2.5, name);
    const RVector h = random_positive(rng, eigen_split(ring.space));
    const double qh = ring.space.q(h, h);
    const BbfFit fit = bbf_fit(ring.n, ring.b(), [&](const std::vector<RVector>& x) { return fujiki_product(ring, x); }, h);
    const RMatrix expected = ring.space.gram / qh;
    fit_err = std::max(fit_err, (fit.gram - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff());
    const double lam = ring.lambda() * std::pow(qh, ring.n);
    fit_err = std::max(fit_err, std::abs(fit.lambda - lam) / lam);
  }
  o.require(fit_err < 1e-8, "bbf_fit relative error above 1e-8");
  o.detail << (o.pass ? "" : "; ") << exact_trials << " exact oracle matches, " << iso << " isotropic instances, ratio spread "
           << spread << " over " << triples << " triples, fit error " << fit_err;
}

void criterion8(Outcome& o) {
  const QuadraticSpace s = preset_lattice("sig34").space;
  const EigenSplit split = eigen_split(s);
  Rng rng(88);
  double round = 0.0;
  for (int t = 0; t < 1000; ++t) {
    RMatrix v(s.b, 2);
    do {
      v.col(0) = random_positive(rng, split);
      v.col(1) = random_positive(rng, split);
    } while (signature(s, v).positive != 2);
    const Plane plane = Plane::from_vectors(s, v, t % 2 ? -1 : 1);
    const PeriodPoint l = plane_to_line(plane);
    const Plane back = line_to_plane(l);
    const RMatrix change = plane.oriented_basis().transpose() * back.oriented_basis();
    round = std::max({round, (plane_to_line(back).rep - l.rep).norm(), std::abs(change.determinant() - 1.0)});
  }
  o.require(round < 1e-10, "line/plane round trip above 1e-10");

  const Plane w = Plane::from_vectors(s, split.positive);
  int members = 0;
  for (const auto& smp : twistor_line(w, 500)) members += is_period_point(smp.point) ? 1 : 0;
  o.require(members == 500, "twistor sample outside the period domain");

  RMatrix dw(s.b, 3);
  dw << split.positive.col(0), split.positive.col(1), RVector(split.positive.col(2) + split.negative.col(0));
  int positive = 0, degenerate_samples = 0;
  for (int t = 0; t < 500; ++t) {
    const complex z = t < 4 ? std::polar(100.0, t * 1.5707963267948966) : std::polar(rng.uniform(0.0, 100.0), rng.uniform(0.0, 6.283185307179586));
    positive += degenerate_plane(s, dw, z).positive() && is_period_point(degenerate_twistor_line(s, dw, z)) ? 1 : 0;
    ++degenerate_samples;
  }
  o.require(positive == degenerate_samples, "degenerate plane not q-positive");

  // Classes of the standard model n = 1 against the degenerate line.
  const TorusModel m = standard_model(1);
  const Form re = (m.omega + Form(m.omega.conj())) * complex{0.5, 0.0};
  const Form im = (m.omega - Form(m.omega.conj())) * complex{0.0, -0.5};
  Form dual(4, 2);
  dual.add_term({0, 1}, FourierScalar::constant(4, 1.0));
  const std::vector<Form> basis{re, im, m.eta, dual};
  const QuadraticSpace cs(wedge_pairing_gram(basis));
  const RMatrix cw = RMatrix::Identity(4, 3) / std::sqrt(2.0);
  double cross = 0.0;
  for (complex t : default_t_samples())
    cross = std::max(cross, projective_distance(degenerate_twistor_line(cs, cw, t).rep, class_coordinates(family_form(m, t), basis)));
  o.require(cross < 1e-12, "class identity above 1e-12");
  o.detail << (o.pass ? "" : "; ") << "round trip " << round << ", " << members << "/500 twistor samples in Per, "
           << positive << "/" << degenerate_samples << " degenerate planes positive, class identity " << cross;
}

void criterion9(Outcome& o) {
  for (int n = 1; n <= 3; ++n) {
    const TorusModel m = standard_model(n);
    const std::vector<double> x(static_cast<std::size_t>(m.dim()), 0.3);
    const auto r = semipositive_rank(to_point_form(m.eta, m.triple.I, x));
    o.require(r.rank == 2 * n && r.classification == "degenerate-semipositive", "eta rank wrong at n=" + std::to_string(n));
    const auto k = semipositive_rank(to_point_form(kahler_form(m.triple), m.triple.I, x));
    o.require(k.classification == "strictly-positive", "Kahler form not strictly positive at n=" + std::to_string(n));
  }
  const auto z = semipositive_rank(PointForm::zero(2, 1, 1));
  o.require(z.rank == 0 && z.classification == "zero", "zero form misclassified");
  o.detail << (o.pass ? "" : "; ") << "eta ranks 2n for n=1..3, zero form rank 0, Kahler forms strictly positive";
}

std::string capture(const std::string& cmd, int& status) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  status = pclose(pipe);
  return out;
}

void criterion10(Outcome& o) {
  const std::vector<std::string> campaigns = {
      "family-sweep --n 2 --seed 3",
      "verify-lemmas --n 2 --trials 50 --seed 3",
      "fujiki --lattice k3 --trials 100 --seed 7",
      "period-line --lattice sig34 --trials 200 --seed 3",
      "period-line --format csv --line degenerate --seed 3",
      "lift-check --n 1 --seed 3",
      "roundtrip --trials 50 --seed 3"};
  int identical = 0;
  for (const auto& args : campaigns) {
    int s1 = 0, s8 = 0;
    const std::string base = std::string(TWISTOR_FORGE_CLI) + " " + args + " 2>/dev/null";
    const std::string one = capture("TWISTOR_FORGE_THREADS=1 " + base, s1);
    const std::string eight = capture("TWISTOR_FORGE_THREADS=8 " + base, s8);
    const bool same = s1 == 0 && s8 == 0 && !one.empty() && one == eight;
    o.require(same, "'" + args + "' differs or failed");
    identical += same ? 1 : 0;
  }
  o.detail << (o.pass ? "" : "; ") << identical << "/" << campaigns.size() << " campaigns byte-identical for 1 and 8 threads";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"kernel construction", criterion1}, {"integrability", criterion2},     {"power condition", criterion3},
      {"fiber invariance", criterion4},    {"lifted form", criterion5},       {"positivity lemmas", criterion6},
      {"Fujiki algebra", criterion7},      {"period geometry", criterion8},   {"semipositive rank", criterion9},
      {"determinism", criterion10}};
  int failed = 0;
  std::cout << std::setprecision(3);
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto start = Clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(start);
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << k + 1 << "] " << criteria[k].first << " (" << elapsed
              << " s): " << o.detail.str() << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
