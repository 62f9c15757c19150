#include <gtest/gtest.h>

#include "test_support.hpp"
#include "twistor_forge/twistor.hpp"

using namespace twistor_forge;

namespace {

const complex I1{0.0, 1.0};

Form dxdx(int d, int i, int j) { return wedge(Form::dx(d, i), Form::dx(d, j)); }

CMatrix t01_of(const ComplexStructureField& j) {
  const int d = j.dim();
  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  return nullspace(CMatrix(j.complex_at(origin) + I1 * CMatrix::Identity(d, d)));
}

CMatrix analytic_t01(complex t) {
  CMatrix b = CMatrix::Zero(4, 2);
  // d/dzbar1 = (e1 + i e2)/2, d/dzbar2 + (it/2) d/dz1
  b(0, 0) = 0.5;
  b(1, 0) = 0.5 * I1;
  b(2, 1) = 0.5;
  b(3, 1) = 0.5 * I1;
  b(0, 1) = I1 * t / 4.0;
  b(1, 1) = -I1 * I1 * t / 4.0;
  return b;
}

}  // namespace

TEST(StandardModel, DimensionOne) {
  const auto m = standard_model(1);
  EXPECT_EQ(m.omega, wedge(Form::dz(4, 0), Form::dz(4, 1)));
  EXPECT_EQ(m.eta, dxdx(4, 2, 3));
  EXPECT_EQ(m.base, (std::vector<int>{2, 3}));
  EXPECT_EQ(m.fiber(), (std::vector<int>{0, 1}));
}

TEST(StandardModel, EtaVanishesOnFiber) {
  const auto m = standard_model(1);
  for (const auto& [mask, c] : m.eta.terms()) EXPECT_EQ(mask & 0b0011u, 0u);
}

TEST(StandardModel, DimensionTwoPowers) {
  const auto m = standard_model(2);
  const int d = 8;
  Form expected = wedge(wedge(Form::dz(d, 0), Form::dz(d, 2)), wedge(Form::dz(d, 1), Form::dz(d, 3)));
  expected *= complex{2.0, 0.0};
  EXPECT_TRUE(power(m.omega, 2).approx_equal(expected, 1e-15));
  EXPECT_FALSE(power(m.eta, 2).is_zero());
  EXPECT_TRUE(power(m.eta, 3).is_zero());
}

TEST(StandardModel, RangeChecked) {
  EXPECT_THROW(standard_model(0), RangeError);
  EXPECT_THROW(standard_model(4), RangeError);
  for (int n = 1; n <= 3; ++n) EXPECT_NO_THROW(validate_model(standard_model(n)));
}

TEST(StandardModel, InvalidModelsRejected) {
  auto bad = standard_model(1);
  bad.eta = dxdx(4, 0, 3);
  EXPECT_THROW(validate_model(bad), StructureError);
  bad = standard_model(1);
  bad.eta = dxdx(4, 2, 3).times(FourierScalar::constant(4, 1.0) + FourierScalar::cos_mode(4, 0, 1) * complex{0.5, 0});
  EXPECT_THROW(validate_model(bad), StructureError);
  bad = standard_model(1);
  bad.omega = wedge(Form::dz(4, 0), Form::dzbar(4, 0));
  EXPECT_THROW(validate_model(bad), StructureError);
}

TEST(PowerCondition, StandardModelsPassExactly) {
  for (int n = 1; n <= 3; ++n) {
    const Report r = verify_power_condition(standard_model(n));
    EXPECT_TRUE(r.passed());
    int coefficients = 0;
    for (const auto& c : r.checks)
      if (c.name == "power_coefficient") {
        ++coefficients;
        EXPECT_EQ(c.max_defect, 0.0);
      }
    EXPECT_EQ(coefficients, n + 2);
  }
}

TEST(PowerCondition, KahlerTamperedFailsAtEtaSquared) {
  const auto m = kahler_tampered_model(1);
  EXPECT_TRUE(wedge(m.omega, m.eta).is_zero());
  EXPECT_FALSE(power(m.eta, 2).is_zero());
  const Report r = power_condition_report(m);
  EXPECT_FALSE(r.passed());
  ASSERT_NE(r.first_failure(), nullptr);
  EXPECT_EQ(r.first_failure()->witness["k"], 2);
  try {
    verify_power_condition(m);
    FAIL();
  } catch (const PowerConditionViolated& e) {
    EXPECT_NE(std::string(e.what()).find("eta^2"), std::string::npos);
  }
}

TEST(PowerCondition, TamperedHigherDimensionHasCrossTerm) {
  // On T^8 the Kahler form gives Omega ^ eta^2 != 0.
  const auto m = kahler_tampered_model(2);
  EXPECT_FALSE(wedge(m.omega, power(m.eta, 2)).is_zero());
  EXPECT_THROW(verify_power_condition(m), PowerConditionViolated);
}

TEST(FamilyMember, ZeroParameterGivesI) {
  const auto m = standard_model(1);
  const auto f = family_member(m, 0.0);
  const std::vector<double> origin(4, 0.0);
  EXPECT_LT((f.structure.at(origin) - m.triple.I).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FamilyMember, ParameterTwo) {
  const auto m = standard_model(1);
  const auto f = family_member(m, 2.0);
  EXPECT_LT(subspace_distance(t01_of(f.structure), analytic_t01(2.0)), 1e-12);
  EXPECT_TRUE(wedge(m.eta, f.omega_t).is_zero());
  EXPECT_TRUE(wedge(m.eta, Form(f.omega_t.conj())).is_zero());
  EXPECT_EQ(f.eta_type_defect, 0.0);
  EXPECT_LE(f.integrability, 1e-9);
}

TEST(FamilyMember, EtaIsOneOneForEveryMember) {
  for (int n = 1; n <= 2; ++n) {
    const auto m = standard_model(n);
    for (complex t : {complex{1, 0}, complex{0, 1}, complex{3, -2}, complex{0, 10}}) {
      const auto f = family_member(m, t);
      const auto parts = hodge_components(m.eta, f.structure);
      for (const auto& [key, part] : parts)
        if (key != Bidegree{1, 1}) EXPECT_LT(part.max_abs(), 1e-10);
      EXPECT_EQ(f.eta_type_defect, 0.0);
    }
  }
}

TEST(FiberInvariance, StandardModelPasses) {
  const auto m = standard_model(1);
  const Report r = fiber_invariance(m, {1.0, I1, complex{5, -5}});
  EXPECT_TRUE(r.passed());
  for (const auto& c : r.checks) EXPECT_LT(c.max_defect, 1e-10);
  EXPECT_EQ(r.checks.size(), 6u);
}

TEST(FiberInvariance, ZeroParameterTrivial) {
  const Report r = fiber_invariance(standard_model(2), {0.0});
  EXPECT_TRUE(r.passed());
  for (const auto& c : r.checks) EXPECT_EQ(c.max_defect, 0.0);
}

TEST(FiberInvariance, ChecksSortedByParameter) {
  const Report r = fiber_invariance(standard_model(1), {complex{5, -5}, I1, 1.0, I1});
  ASSERT_EQ(r.checks.size(), 6u);
  EXPECT_EQ(*r.checks[0].t, I1);
  EXPECT_EQ(*r.checks[2].t, complex(1.0));
  EXPECT_EQ(*r.checks[4].t, complex(5, -5));
}

TEST(FiberInvariance, TiltedEtaDrifts) {
  const auto m = fiber_tilted_model();
  EXPECT_TRUE(verify_power_condition(m).passed());
  EXPECT_THROW(fiber_invariance(m, {1.0, I1}), FiberDriftError);
  const Report r = fiber_invariance(m, {1.0}, {}, false);
  EXPECT_FALSE(r.passed());
  EXPECT_GT(r.checks.front().max_defect, 0.1);
  EXPECT_FALSE(r.checks.front().witness.is_null());
}

TEST(LiftedForm, DifferentialIsEtaWedgeDt) {
  const auto m = standard_model(1);
  const Form lifted = lifted_form(m);
  const Form expected = wedge(embed(m.eta, 8), Form::dz(8, 2));
  EXPECT_EQ(ext_d(lifted), expected);
}

TEST(LiftedForm, CertificatePasses) {
  const Report r = lifted_form_certificate(standard_model(1));
  EXPECT_TRUE(r.passed());
  for (const auto& c : r.checks) EXPECT_LE(c.max_defect, 1e-10) << c.name;
  EXPECT_EQ(r.checks.size(), 5u);
}

TEST(LiftedForm, CertificatePassesInDimensionEight) {
  GridOptions g;
  g.random_points = 8;
  const Report r = lifted_form_certificate(standard_model(2), g);
  EXPECT_TRUE(r.passed());
}

TEST(LiftedForm, LiftedStructureHasNoLowTypes) {
  const auto m = standard_model(1);
  const Form lifted = lifted_form(m);
  const auto j = kernel_structure(lifted);
  EXPECT_LE(cartan_defect(lifted, j), 1e-10);
}

TEST(LiftedForm, ZeroEtaGivesProductStructure) {
  auto m = standard_model(1);
  m.eta = Form(4, 2);
  const Form lifted = lifted_form(m);
  EXPECT_TRUE(ext_d(lifted).is_zero());
  const auto j = kernel_structure(lifted);
  EXPECT_TRUE(j.is_constant());
  EXPECT_EQ(integrability_defect(j), 0.0);
  EXPECT_TRUE(lifted_form_certificate(m).passed());
}

TEST(LiftedForm, TamperedModelFailsStageOne) {
  const auto m = kahler_tampered_model(1);
  EXPECT_THROW(lifted_form_certificate(m), LiftError);
  const Report r = lifted_form_certificate(m, {}, false);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.first_failure()->name, "lift_nondegenerate");
}

TEST(FamilyProperty, AffineRebasing) {
  const auto m = standard_model(2);
  const std::vector<double> origin(8, 0.0);
  Rng rng(12);
  for (int k = 0; k < 10; ++k) {
    const complex t = 3.0 * rng.complex_normal(), s = 3.0 * rng.complex_normal();
    const auto direct = kernel_structure(family_form(m, t + s)).at(origin);
    const Form rebased = family_form(m, t) + m.eta * s;
    const auto via = kernel_structure(rebased).at(origin);
    EXPECT_LT((direct - via).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FamilyProperty, CohomologyClassIsAffine) {
  const auto m = standard_model(1);
  for (complex t : {complex{1, 0}, complex{0, 1}, complex{3, -2}}) {
    const Form cls = family_form(m, t).cohomology_class();
    EXPECT_EQ(cls, Form(m.omega.cohomology_class() + m.eta.cohomology_class() * t));
  }
}

TEST(FamilyProperty, EtaRankConstantAlongFamily) {
  for (int n = 1; n <= 3; ++n) {
    const auto m = standard_model(n);
    const std::vector<double> origin(static_cast<std::size_t>(4 * n), 0.0);
    for (complex t : {complex{0, 0}, complex{1, 0}, complex{0, 1}, complex{3, -2}, complex{0, 10}}) {
      const RMatrix it = kernel_structure(family_form(m, t)).at(origin);
      const auto spec = detail::eta_spectrum(two_form_matrix(m.eta.at(origin)), it);
      EXPECT_EQ(spec.rank, 2 * n);
      EXPECT_GE(spec.min_eig, -1e-10);
    }
  }
}

TEST(FamilyProperty, HolomorphicInParameter) {
  for (int n = 1; n <= 2; ++n) {
    const auto m = standard_model(n);
    for (complex t : {complex{0, 0}, complex{1, 0}, complex{0, 1}, complex{3, -2}, complex{0, 10}})
      EXPECT_LT(family_holomorphy_defect(m, t), 1e-6);
  }
}

TEST(FamilyProperty, GraphMatrixMatchesAnalyticFamily) {
  const auto m = standard_model(1);
  const std::vector<double> origin(4, 0.0);
  const complex t{1.5, -0.5};
  const CMatrix a = antiholomorphic_graph(kernel_structure(family_form(m, t)).at(origin));
  EXPECT_LT(std::abs(a(1, 0) - I1 * t / 2.0), 1e-12);
  EXPECT_LT(std::abs(a(0, 0)) + std::abs(a(0, 1)) + std::abs(a(1, 1)), 1e-12);
}

TEST(FamilyProperty, ConjugateParameterIsNotHolomorphic) {
  // Sensitivity check of the holomorphy test: the graph of the conjugate
  // family depends on conj(t).
  const auto m = standard_model(1);
  const std::vector<double> origin(4, 0.0);
  const double h = 1e-4;
  auto graph = [&](complex s) {
    return antiholomorphic_graph(kernel_structure(family_form(m, std::conj(s))).at(origin));
  };
  const complex t{1.0, 1.0};
  const CMatrix dre = (graph(t + h) - graph(t - h)) / (2 * h);
  const CMatrix dim = (graph(t + complex{0, h}) - graph(t - complex{0, h})) / (2 * h);
  EXPECT_GT((0.5 * (dre + I1 * dim)).cwiseAbs().maxCoeff(), 0.4);
}
