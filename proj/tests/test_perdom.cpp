#include <gtest/gtest.h>

#include <sstream>

#include "twistor_forge/perdom.hpp"
#include "twistor_forge/twistor.hpp"

using namespace twistor_forge;

namespace {

const complex I1{0.0, 1.0};

CVector cvec(std::initializer_list<complex> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (complex x : xs) v(i++) = x;
  return v;
}

RMatrix columns(std::initializer_list<RVector> cols) {
  RMatrix m(cols.begin()->size(), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto& c : cols) m.col(j++) = c;
  return m;
}

RVector e(int b, int i) { return RVector::Unit(b, i); }

/// Random q-positive 2-plane in sig34: positive block plus a small negative tilt.
RMatrix random_positive_pair(Rng& rng, const QuadraticSpace& s) {
  while (true) {
    RMatrix v(s.b, 2);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (int j = 0; j < 2; ++j) v(i, j) = rng.normal() * (i < 3 ? 1.0 : 0.3);
    if (signature(s, v).positive == 2) return v;
  }
}

}  // namespace

TEST(PeriodPoint, Membership) {
  const QuadraticSpace toy = preset_lattice("toy4").space;
  EXPECT_TRUE(is_period_point(toy, cvec({1, I1, 0, 0})));
  EXPECT_NEAR(q_complex(toy, cvec({1, I1, 0, 0}), cvec({1, -I1, 0, 0})).real(), 2.0, 1e-15);
  EXPECT_FALSE(is_period_point(toy, cvec({1, 0, 0, 1})));
  EXPECT_FALSE(is_period_point(toy, cvec({1, 0, 0, 0})));
  EXPECT_THROW(is_period_point(toy, CVector::Zero(4)), ZeroVectorError);
}

TEST(PeriodPoint, Normalization) {
  const CVector v = normalize_projective(cvec({0, complex{0, 2}, complex{1, 1}, 0}));
  EXPECT_NEAR(v.norm(), 1.0, 1e-15);
  EXPECT_EQ(v(0), complex{});
  EXPECT_GT(v(1).real(), 0.0);
  EXPECT_EQ(v(1).imag(), 0.0);
  EXPECT_LT((normalize_projective(v * std::polar(3.0, 1.2)) - v).norm(), 1e-15);
}

TEST(Signature, Examples) {
  const QuadraticSpace toy = preset_lattice("toy4").space;
  EXPECT_EQ(signature(toy, RMatrix::Identity(4, 4)), (Signature{3, 0, 1}));
  EXPECT_EQ(signature(toy, columns({e(4, 0) + e(4, 3)})), (Signature{0, 1, 0}));
  // e1 + e4 is null but pairs with e1: the restricted Gram [[1,0,1],[0,1,0],[1,0,0]]
  // has eigenvalues 1 and (1 +- sqrt 5) / 2.
  EXPECT_EQ(signature(toy, columns({e(4, 0), e(4, 1), e(4, 0) + e(4, 3)})), (Signature{2, 0, 1}));
  EXPECT_EQ(signature(toy, columns({e(4, 1), e(4, 2), e(4, 0) + e(4, 3)})), (Signature{2, 1, 0}));
  EXPECT_THROW(signature(toy, columns({e(4, 0), e(4, 1), e(4, 0) + e(4, 1)})), RankError);
}

TEST(LinePlane, Examples) {
  const QuadraticSpace toy = preset_lattice("toy4").space;
  const auto p = PeriodPoint::from(toy, cvec({1, I1, 0, 0}));
  const Plane v = line_to_plane(p);
  EXPECT_LT((v.basis - columns({e(4, 0), e(4, 1)})).norm(), 1e-15);
  EXPECT_EQ(v.orientation, 1);
  Plane rev = v;
  rev.orientation = -1;
  EXPECT_LT(projective_distance(plane_to_line(rev).rep, cvec({1, -I1, 0, 0})), 1e-15);
  const Plane neg = Plane::from_vectors(toy, columns({e(4, 0), e(4, 3)}));
  EXPECT_THROW(plane_to_line(neg), SignatureError);
}

TEST(LinePlane, RoundTrips) {
  const QuadraticSpace s = preset_lattice("sig34").space;
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Plane v = Plane::from_vectors(s, random_positive_pair(rng, s), trial % 2 ? 1 : -1);
    const PeriodPoint l = plane_to_line(v);
    ASSERT_TRUE(is_period_point(l));
    const Plane back = line_to_plane(l);
    // Same oriented plane: orthogonal change of basis with determinant matching orientation.
    const RMatrix change = v.oriented_basis().transpose() * back.oriented_basis();
    EXPECT_NEAR(std::abs(change.determinant()), 1.0, 1e-10);
    EXPECT_GT(change.determinant(), 0.0);
    EXPECT_LT((plane_to_line(back).rep - l.rep).norm(), 1e-10);
  }
}

TEST(TwistorLine, Examples) {
  const QuadraticSpace toy = preset_lattice("toy4").space;
  const Plane w = Plane::from_vectors(toy, RMatrix::Identity(4, 3));
  EXPECT_LT((twistor_line_point(w, Eigen::Vector3d::UnitZ()).rep - normalize_projective(cvec({1, I1, 0, 0}))).norm(), 1e-15);
  EXPECT_LT((twistor_line_point(w, -Eigen::Vector3d::UnitZ()).rep - normalize_projective(cvec({1, -I1, 0, 0}))).norm(), 1e-15);
  const Plane bad = Plane::from_vectors(toy, columns({e(4, 0), e(4, 1), e(4, 3)}));
  EXPECT_THROW(twistor_line(bad, 4), SignatureError);
}

TEST(TwistorLine, SamplesLieInPerAndAntipodesConjugate) {
  const QuadraticSpace s = preset_lattice("sig34").space;
  Rng rng(2);
  RMatrix wv(7, 3);
  for (Eigen::Index i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) wv(i, j) = (i == j ? 2.0 : 0.0) + 0.2 * rng.normal();
  const Plane w = Plane::from_vectors(s, wv);
  ASSERT_EQ(w.q_signature, (Signature{3, 0, 0}));
  const auto samples = twistor_line(w, 100);
  ASSERT_EQ(samples.size(), 100u);
  for (const auto& smp : samples) {
    EXPECT_TRUE(is_period_point(smp.point));
    const Plane v = line_to_plane(smp.point);
    // Inside W: projection residual vanishes.
    const RMatrix proj = w.basis * (w.basis.transpose() * v.basis);
    EXPECT_LT((proj - v.basis).norm(), 1e-10);
    const auto anti = twistor_line_point(w, -smp.normal);
    EXPECT_LT(projective_distance(anti.rep, smp.point.rep.conjugate()), 1e-10);
  }
}

TEST(DegenerateLine, PositiveForAllTestedT) {
  const QuadraticSpace s = preset_lattice("sig34").space;
  const RMatrix w = columns({e(7, 0), e(7, 1), (e(7, 2) + e(7, 3)) / std::sqrt(2.0)});
  const auto p0 = degenerate_twistor_line(s, w, 0.0);
  EXPECT_TRUE(is_period_point(p0));
  EXPECT_NEAR(q_complex(s, degenerate_representative(s, w, 0.0), degenerate_representative(s, w, 0.0).conjugate()).real(), 2.0, 1e-15);
  Rng rng(3);
  std::vector<CVector> seen;
  for (int trial = 0; trial < 200; ++trial) {
    const complex t = trial == 0 ? complex{100.0, -100.0} / std::sqrt(2.0) : std::polar(rng.uniform(0.0, 100.0), rng.uniform(0.0, 6.3));
    const Plane v = degenerate_plane(s, w, t);
    EXPECT_EQ(v.q_signature, (Signature{2, 0, 0}));
    const RMatrix raw = columns({RVector(w.col(0) + t.real() * w.col(2)), RVector(w.col(1) + t.imag() * w.col(2))});
    EXPECT_LT((raw.transpose() * s.gram * raw - RMatrix::Identity(2, 2)).norm(), 1e-12 * (1 + std::norm(t)));
    const auto p = degenerate_twistor_line(s, w, t);
    EXPECT_TRUE(is_period_point(p));
    for (const auto& q : seen) EXPECT_GT(projective_distance(q, p.rep), 1e-12);
    seen.push_back(p.rep);
  }
}

TEST(DegenerateLine, AffineInT) {
  const QuadraticSpace s = preset_lattice("sig34").space;
  const RMatrix w = columns({e(7, 0), e(7, 1), e(7, 2) + e(7, 3)});
  const complex a{1.5, -2.0}, b{-0.25, 3.0};
  const CVector ra = degenerate_representative(s, w, a), rb = degenerate_representative(s, w, b);
  const CVector r0 = degenerate_representative(s, w, 0.0);
  EXPECT_EQ(rb - r0, (b / a) * (ra - r0));
}

TEST(DegenerateLine, RejectsBadBases) {
  const QuadraticSpace s = preset_lattice("sig34").space;
  EXPECT_THROW(degenerate_twistor_line(s, columns({e(7, 0), e(7, 1), e(7, 2)}), 1.0), SignatureError);
  EXPECT_THROW(degenerate_twistor_line(s, columns({e(7, 0), e(7, 1), e(7, 0) + e(7, 3)}), 1.0), SignatureError);
}

TEST(DegenerateLine, MatchesTwistorFamilyClasses) {
  // Standard model n = 1: classes in Lambda^2 R^4 spanned by Re Omega, Im Omega,
  // eta = dx3 ^ dx4 and dx1 ^ dx2.
  const TorusModel m = standard_model(1);
  const Form re = (m.omega + Form(m.omega.conj())) * complex{0.5, 0.0};
  const Form im = (m.omega - Form(m.omega.conj())) * complex{0.0, -0.5};
  Form dual(4, 2);
  dual.add_term({0, 1}, FourierScalar::constant(4, 1.0));
  const std::vector<Form> basis{re, im, m.eta, dual};
  const RMatrix gram = wedge_pairing_gram(basis);
  RMatrix expected = RMatrix::Zero(4, 4);
  expected(0, 0) = expected(1, 1) = 2.0;
  expected(2, 3) = expected(3, 2) = 1.0;
  ASSERT_LT((gram - expected).norm(), 1e-14);
  const QuadraticSpace s(gram);
  ASSERT_EQ(s.signature(), (Signature{3, 0, 1}));
  const double r = std::sqrt(2.0);
  const RMatrix w = columns({e(4, 0) / r, e(4, 1) / r, e(4, 2) / r});
  for (complex t : default_t_samples()) {
    const CVector cls = class_coordinates(family_form(m, t), basis);
    const auto line = degenerate_twistor_line(s, w, t);
    EXPECT_LT(projective_distance(line.rep, cls), 1e-12) << t;
    EXPECT_LT((normalize_projective(cls) - line.rep).norm(), 1e-12) << t;
  }
}

TEST(Csv, Headers) {
  const QuadraticSpace toy = preset_lattice("toy4").space;
  const Plane w = Plane::from_vectors(toy, RMatrix::Identity(4, 3));
  std::ostringstream os;
  write_twistor_csv(os, twistor_line(w, 3));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "nu_x,nu_y,nu_z,l1_re,l1_im,l2_re,l2_im,l3_re,l3_im,l4_re,l4_im,q_ll_residual,q_llbar");
  std::ostringstream od;
  write_degenerate_csv(od, {{complex{1, 2}, PeriodPoint::from(toy, cvec({1, I1, 0, 0}))}});
  EXPECT_EQ(od.str().substr(0, 10), "t_re,t_im,");
}
