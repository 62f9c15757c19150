#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_support.hpp"
#include "twistor_forge/bbf.hpp"

using namespace twistor_forge;

namespace {

std::vector<RVector> random_classes(Rng& rng, int b, int k) {
  std::vector<RVector> out;
  for (int i = 0; i < k; ++i) {
    RVector v(b);
    for (int j = 0; j < b; ++j) v(j) = rng.normal();
    out.push_back(v);
  }
  return out;
}

FujikiRing ring_with(const RVector& diag, int n, double c = 1.0) {
  return FujikiRing(QuadraticSpace(RMatrix(diag.asDiagonal())), n, c);
}

RVector vec(std::initializer_list<double> xs) {
  RVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// Positive class for sig34 and toy4-like diagonal forms.
RVector random_positive(Rng& rng, const FujikiRing& ring) {
  while (true) {
    RVector w = random_classes(rng, ring.b(), 1)[0];
    w.head(3) *= 3.0;
    if (ring.space.q(w, w) > 0.5) return w;
  }
}

}  // namespace

TEST(Presets, SignaturesAndFiles) {
  const Signature expected[] = {{3, 0, 1}, {3, 0, 19}, {3, 0, 4}};
  int i = 0;
  for (const auto& name : preset_names()) {
    const FujikiRing ring = preset_lattice(name);
    EXPECT_EQ(ring.space.signature(), expected[i++]) << name;
    const FujikiRing file = load_lattice(std::string(TWISTOR_FORGE_DATA_DIR) + "/lattices/" + name + ".json");
    EXPECT_EQ(file.space.gram, ring.space.gram) << name;
    EXPECT_EQ(file.n, ring.n);
    EXPECT_EQ(file.C, ring.C);
    EXPECT_EQ(file.name, name);
    EXPECT_EQ(lattice_from_json(ring.to_json()).space.gram, ring.space.gram);
  }
  EXPECT_NEAR(detail::e8().determinant(), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(preset_lattice("k3").space.gram.determinant()), 1.0, 1e-6);
}

TEST(Presets, Errors) {
  EXPECT_THROW(preset_lattice("e7"), ParseError);
  EXPECT_THROW(load_lattice("/nonexistent/lattice.json"), ParseError);
  EXPECT_THROW(lattice_from_json(Json{{"b", 2}, {"gram", {{1, 0}}}, {"n", 1}, {"C", 1.0}}), ParseError);
  EXPECT_THROW(lattice_from_json(Json{{"b", 1}}), ParseError);
  RMatrix asym(2, 2);
  asym << 1, 2, 0, 1;
  EXPECT_THROW(QuadraticSpace{asym}, SignatureError);
  EXPECT_THROW(FujikiRing(preset_lattice("toy4").space, 1, 0.0), RangeError);
}

TEST(FujikiProduct, Examples) {
  const FujikiRing toy = preset_lattice("toy4");
  Rng rng(1);
  const auto e = random_classes(rng, 4, 2);
  EXPECT_DOUBLE_EQ(fujiki_product(toy, e), toy.space.q(e[0], e[1]));
  const RVector iso = vec({1, 0, 0, 1});
  EXPECT_EQ(fujiki_product(toy, {iso, iso}), 0.0);
  EXPECT_EQ(top_power(toy, vec({1, 0, 0, 0})), 1.0);
  const FujikiRing s = preset_lattice("sig34");
  const RVector eta = random_classes(rng, 7, 1)[0];
  const double q = s.space.q(eta, eta);
  EXPECT_NEAR(top_power(s, eta), q * q, 1e-13 * q * q);
  const FujikiRing s3 = FujikiRing(s.space, 2, 3.0);
  EXPECT_NEAR(top_power(s3, eta), q * q / 3.0, 1e-13 * q * q);
  EXPECT_THROW(fujiki_product(s, {eta, eta}), ArityError);
}

TEST(FujikiProduct, AgreesExactlyWithAllPermutations) {
  Rng rng(2);
  for (int n = 1; n <= 3; ++n) {
    RVector d(6);
    d << 1, 2, 1, -1, -3, -1;
    const FujikiRing ring = ring_with(d, n, 1.0 + n);
    for (int trial = 0; trial < 20; ++trial) {
      auto etas = random_classes(rng, 6, 2 * n);
      if (trial % 4 == 0) etas[1] = etas[0];
      EXPECT_EQ(fujiki_product(ring, etas), tf_test::naive_fujiki(ring, etas)) << "n=" << n << " trial " << trial;
    }
  }
}

TEST(FujikiProduct, SymmetricAndMultilinear) {
  const FujikiRing ring = preset_lattice("sig34");
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto etas = random_classes(rng, 7, 4);
    const double base = fujiki_product(ring, etas);
    auto shuffled = etas;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[0], shuffled[2]);
    EXPECT_EQ(fujiki_product(ring, shuffled), base);
    const RVector extra = random_classes(rng, 7, 1)[0];
    auto sum = etas, other = etas;
    sum[1] = 2.0 * etas[1] + extra;
    other[1] = extra;
    EXPECT_NEAR(fujiki_product(ring, sum), 2.0 * base + fujiki_product(ring, other),
                1e-12 * (std::abs(base) + 1.0) * 10);
  }
}

TEST(FujikiProduct, DifferentiatedRelation) {
  for (const std::string name : {"toy4", "k3", "sig34"}) {
    const FujikiRing ring = preset_lattice(name);
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      const auto v = random_classes(rng, ring.b(), 2);
      std::vector<RVector> args(static_cast<std::size_t>(2 * ring.n), v[0]);
      args.back() = v[1];
      const double lhs = fujiki_product(ring, args);
      const double rhs = ring.lambda() * std::pow(ring.space.q(v[0], v[0]), ring.n - 1) * ring.space.q(v[0], v[1]);
      const double scale = std::pow(v[0].squaredNorm(), ring.n - 0.5) * v[1].norm() * 2;
      EXPECT_NEAR(lhs, rhs, 1e-10 * scale) << name;
    }
  }
}

TEST(Isotropic, Examples) {
  const FujikiRing toy = preset_lattice("toy4");
  EXPECT_THROW(isotropic_product_vanishes(toy, {vec({1, 0, 0, 1}), vec({0, 1, 0, 0})}), NotIsotropic);
  const FujikiRing split = ring_with(vec({1, 1, -1, -1}), 1);
  EXPECT_TRUE(isotropic_product_vanishes(split, {vec({1, 0, 1, 0}), vec({0, 1, 0, 1})}));
  EXPECT_THROW(isotropic_product_vanishes(split, {vec({1, 0, 1, 0})}), ArityError);
}

TEST(Isotropic, RandomValidInstances) {
  const FujikiRing rings[] = {preset_lattice("k3"), preset_lattice("sig34"),
                              ring_with(vec({1, 1, 1, 1, -1, -1, -1, -1}), 3)};
  for (const auto& ring : rings) {
    Rng rng(5);
    for (int seed = 0; seed < 200; ++seed) {
      const auto etas = random_isotropic_family(ring.space, ring.n + 1, rng);
      ASSERT_TRUE(isotropic_product_vanishes(ring, etas)) << "seed " << seed;
    }
  }
  Rng rng(6);
  EXPECT_THROW(random_isotropic_family(preset_lattice("toy4").space, 2, rng), SignatureError);
}

TEST(BbfViaKahler, NEqualsOneGivesQ) {
  const FujikiRing k3 = preset_lattice("k3");
  Rng rng(7);
  RVector w = RVector::Zero(22);
  w(0) = w(1) = 1.0;  // q(w, w) = 2
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = random_classes(rng, 22, 2);
    EXPECT_NEAR(bbf_via_kahler(k3, e[0], e[1], w), k3.space.q(e[0], e[1]), 1e-12 * e[0].norm() * e[1].norm() * 4);
  }
  EXPECT_EQ(kahler_mu(k3, w), 1.0);
  EXPECT_GT(bbf_via_kahler(k3, w, w, w), 0.0);
  EXPECT_THROW(bbf_via_kahler(k3, w, w, RVector::Unit(22, 0)), ConeError);
}

TEST(BbfViaKahler, RatioIsConstantAtNEqualsTwo) {
  const FujikiRing ring = preset_lattice("sig34");
  Rng rng(8);
  double ratio0 = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    RVector w = random_positive(rng, ring);
    w /= std::sqrt(ring.space.q(w, w));
    const auto e = random_classes(rng, 7, 2);
    const double q = ring.space.q(e[0], e[1]);
    if (std::abs(q) < 1e-3) continue;
    const double ratio = bbf_via_kahler(ring, e[0], e[1], w) / q;
    if (trial == 0) ratio0 = ratio;
    EXPECT_NEAR(ratio, ratio0, 1e-9 * ratio0);
    EXPECT_NEAR(ratio, kahler_mu(ring, w), 1e-9);
  }
  EXPECT_NEAR(ratio0, 1.0 / 3.0, 1e-12);
}

TEST(BbfViaKahler, VariantPrefactorIsNotProportional) {
  const FujikiRing ring = preset_lattice("sig34");
  Rng rng(9);
  double lo = 1e300, hi = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    RVector w = random_positive(rng, ring);
    w /= std::sqrt(ring.space.q(w, w));
    const auto e = random_classes(rng, 7, 2);
    const double q = ring.space.q(e[0], e[1]);
    if (std::abs(q) < 1e-2) continue;
    const double r = bbf_via_kahler(ring, e[0], e[1], w, printed_kahler_prefactor(2)) / q;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_GT(hi - lo, 1e-3);
}

TEST(BbfFit, RoundTripsPresetsModuloGauge) {
  for (const std::string name : {"toy4", "k3", "sig34"}) {
    const FujikiRing ring = FujikiRing(preset_lattice(name).space, preset_lattice(name).n, 2.5);
    RVector h = RVector::Unit(ring.b(), 0);
    if (name == "k3") h(1) = 1.0;  // e_1 is isotropic in U
    const auto fit = bbf_fit(ring.n, ring.b(), [&](const std::vector<RVector>& x) { return fujiki_product(ring, x); }, h, 11);
    const double qh = ring.space.q(h, h);
    ASSERT_GT(qh, 0.0);
    const RMatrix expected = ring.space.gram / qh;
    EXPECT_LE((fit.gram - expected).cwiseAbs().maxCoeff(), 1e-8 * expected.cwiseAbs().maxCoeff()) << name;
    const double expected_lambda = ring.lambda() * std::pow(qh, ring.n);
    EXPECT_NEAR(fit.lambda, expected_lambda, 1e-8 * expected_lambda) << name;
    EXPECT_LE(fit.max_residual, 1e-10);
  }
}

TEST(BbfFit, SignFollowsDesignatedClass) {
  const FujikiRing toy = preset_lattice("toy4");
  const RVector h = vec({0.5, 0.2, 0.1, 0.3});
  const auto fit = bbf_fit(1, 4, [&](const std::vector<RVector>& x) { return -fujiki_product(toy, x); }, h);
  EXPECT_GT(h.dot(fit.gram * h), 0.0);
  EXPECT_NEAR(h.dot(fit.gram * h), 1.0, 1e-12);
  EXPECT_EQ(QuadraticSpace(fit.gram).signature(), (Signature{3, 0, 1}));
}

TEST(BbfFit, QuarticPerturbationIsRejected) {
  const FujikiRing ring = preset_lattice("sig34");
  // Symmetrized eps * x_1 x_2 x_3 x_4-style quartic added to the Fujiki form.
  const auto oracle = [&](const std::vector<RVector>& x) {
    double sym = 0.0;
    std::vector<int> perm{0, 1, 2, 3};
    do {
      sym += x[static_cast<std::size_t>(perm[0])](0) * x[static_cast<std::size_t>(perm[1])](0) *
             x[static_cast<std::size_t>(perm[2])](0) * x[static_cast<std::size_t>(perm[3])](0);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return fujiki_product(ring, x) + 1e-3 * sym / 24.0;
  };
  EXPECT_THROW(bbf_fit(2, 7, oracle, RVector::Unit(7, 1)), NotFujikiType);
}
