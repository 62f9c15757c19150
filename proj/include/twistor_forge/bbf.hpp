#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "fourier_scalar.hpp"
#include "random.hpp"
#include "report.hpp"

namespace twistor_forge {

using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Eigenvalue counts (positive, null, negative).
struct Signature {
  int positive = 0;
  int zero = 0;
  int negative = 0;

  bool operator==(const Signature&) const = default;
};

/// Real symmetric bilinear form q on R^b.
struct QuadraticSpace {
  int b = 0;
  RMatrix gram;

  QuadraticSpace() = default;
  explicit QuadraticSpace(RMatrix g) : b(static_cast<int>(g.rows())), gram(std::move(g)) {
    if (gram.rows() != gram.cols() || b == 0) throw DimensionError("Gram matrix must be square and non-empty");
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, gram.cwiseAbs().maxCoeff()))
      throw SignatureError("Gram matrix is not symmetric");
  }

  double q(const RVector& x, const RVector& y) const {
    check(x);
    check(y);
    return x.dot(gram * y);
  }

  Signature signature(double rel_tol = 1e-10) const {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
    const RVector ev = es.eigenvalues();
    const double tol = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Signature s;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) > tol) ++s.positive;
      else if (ev(i) < -tol) ++s.negative;
      else ++s.zero;
    }
    return s;
  }

  void check(const RVector& x) const {
    if (x.size() != b) throw DimensionError("vector length does not match b");
  }
};

/// Top intersection form (1/C) * symmetrized prod q on 2n classes.
struct FujikiRing {
  QuadraticSpace space;
  int n = 1;
  double C = 1.0;
  std::string name;

  FujikiRing() = default;
  FujikiRing(QuadraticSpace s, int n_, double c, std::string nm = {})
      : space(std::move(s)), n(n_), C(c), name(std::move(nm)) {
    if (n < 1) throw RangeError("n must be positive");
    if (!(C > 0.0)) throw RangeError("Fujiki constant must be positive");
  }

  int b() const { return space.b; }
  /// BBF scale in the gauge lambda = 1 / C.
  double lambda() const { return 1.0 / C; }

  Json to_json() const {
    Json g = Json::array();
    for (int i = 0; i < b(); ++i) {
      Json row = Json::array();
      for (int j = 0; j < b(); ++j) row.push_back(space.gram(i, j));
      g.push_back(row);
    }
    Json j;
    j["b"] = b();
    j["gram"] = g;
    j["n"] = n;
    j["C"] = C;
    j["name"] = name;
    return j;
  }
};

namespace detail {

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Pairwise values q(eta_i, eta_j), computed once per unordered pair.
inline RMatrix pair_values(const QuadraticSpace& s, const std::vector<RVector>& etas) {
  const auto m = static_cast<Eigen::Index>(etas.size());
  RMatrix p(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) p(i, j) = p(j, i) = s.q(etas[static_cast<std::size_t>(i)], etas[static_cast<std::size_t>(j)]);
  return p;
}

/// Product of the factors in ascending order, so equal multisets of
/// factors give bitwise equal products.
inline double canonical_product(std::vector<double> factors) {
  std::sort(factors.begin(), factors.end());
  double prod = 1.0;
  for (double f : factors) prod *= f;
  return prod;
}

inline void sum_matchings(const RMatrix& p, std::vector<int>& free, std::vector<double>& factors,
                          const std::function<void(double)>& emit) {
  if (free.empty()) {
    emit(canonical_product(factors));
    return;
  }
  const int first = free.front();
  for (std::size_t k = 1; k < free.size(); ++k) {
    const int partner = free[k];
    std::vector<int> rest;
    rest.reserve(free.size() - 2);
    for (std::size_t r = 1; r < free.size(); ++r)
      if (r != k) rest.push_back(free[r]);
    factors.push_back(p(first, partner));
    sum_matchings(p, rest, factors, emit);
    factors.pop_back();
  }
}

}  // namespace detail

/// (1/C) (1/(2n)!) sum over permutations of prod_i q(eta_s(2i-1), eta_s(2i)),
/// evaluated over the (2n-1)!! perfect matchings, each counted 2^n n! times
/// in a correctly rounded sum.
inline double fujiki_product(const FujikiRing& ring, const std::vector<RVector>& etas) {
  if (static_cast<int>(etas.size()) != 2 * ring.n) throw ArityError("fujiki_product needs exactly 2n classes");
  const RMatrix p = detail::pair_values(ring.space, etas);
  const int multiplicity = static_cast<int>(std::ldexp(detail::factorial(ring.n), ring.n));
  ExactSum sum;
  std::vector<int> free(etas.size());
  for (std::size_t i = 0; i < free.size(); ++i) free[i] = static_cast<int>(i);
  std::vector<double> factors;
  detail::sum_matchings(p, free, factors, [&](double v) {
    for (int m = 0; m < multiplicity; ++m) sum.add(v);
  });
  return sum.value() / detail::factorial(2 * ring.n) / ring.C;
}

inline double top_power(const FujikiRing& ring, const RVector& eta) {
  return fujiki_product(ring, std::vector<RVector>(static_cast<std::size_t>(2 * ring.n), eta));
}

/// Symmetric 2n-multilinear form on classes, such as a top intersection product.
using MultilinearOracle = std::function<double(const std::vector<RVector>&)>;

inline constexpr double kIsotropicTolerance = 1e-12;

/// Checks that n+1 pairwise q-orthogonal isotropic classes multiply to zero
/// against every completion by n-1 basis vectors. `product` defaults to the
/// ring's Fujiki product; isotropy is always judged by the ring's q.
inline bool isotropic_product_vanishes(const FujikiRing& ring, const std::vector<RVector>& etas,
                                       const MultilinearOracle& product) {
  const int n = ring.n;
  if (static_cast<int>(etas.size()) != n + 1) throw ArityError("need exactly n+1 classes");
  const double gnorm = ring.space.gram.cwiseAbs().maxCoeff();
  double scale = 1.0 / ring.C;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    for (std::size_t j = i; j < etas.size(); ++j) {
      const double v = ring.space.q(etas[i], etas[j]);
      if (std::abs(v) > kIsotropicTolerance * gnorm * etas[i].norm() * etas[j].norm())
        throw NotIsotropic("q(eta_" + std::to_string(i + 1) + ", eta_" + std::to_string(j + 1) +
                           ") = " + std::to_string(v));
    }
    scale *= gnorm * etas[i].norm();
  }
  // All multisets of n-1 basis indices.
  std::vector<int> idx(static_cast<std::size_t>(n - 1), 0);
  const int b = ring.b();
  while (true) {
    std::vector<RVector> args = etas;
    for (int i : idx) args.push_back(RVector::Unit(b, i));
    if (std::abs(product(args)) > 1e-10 * std::max(scale, 1e-300)) return false;
    int pos = n - 2;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == b - 1) --pos;
    if (pos < 0) break;
    const int v = idx[static_cast<std::size_t>(pos)] + 1;
    for (int k = pos; k < n - 1; ++k) idx[static_cast<std::size_t>(k)] = v;
  }
  return true;
}

inline bool isotropic_product_vanishes(const FujikiRing& ring, const std::vector<RVector>& etas) {
  return isotropic_product_vanishes(ring, etas, [&](const std::vector<RVector>& x) { return fujiki_product(ring, x); });
}

/// Prefactor of the omega-direction correction that makes the right-hand
/// side proportional to q for the polarized top intersection form.
inline double kahler_prefactor(int n) { return (2.0 * n - 2.0) / (2.0 * n - 1.0); }

/// The variant (2n-2)/(2n-1)^2 of the prefactor. Agrees with
/// kahler_prefactor only for n = 1; the result is then not proportional to q.
inline double printed_kahler_prefactor(int n) { return (2.0 * n - 2.0) / ((2.0 * n - 1.0) * (2.0 * n - 1.0)); }

/// int w^{2n-2} e1 e2 - k (int w^{2n-1} e1)(int w^{2n-1} e2) / int w^{2n}
/// = mu q(e1, e2) with mu = q(w,w)^{n-1} / (C (2n-1)). `product` replaces
/// the ring's Fujiki product when given.
inline double bbf_via_kahler(const FujikiRing& ring, const RVector& eta1, const RVector& eta2, const RVector& omega,
                             double prefactor, const MultilinearOracle& product = {}) {
  const double qw = ring.space.q(omega, omega);
  if (!(qw > 0.0)) throw ConeError("omega must satisfy q(omega, omega) > 0");
  const auto m = static_cast<std::size_t>(2 * ring.n);
  std::vector<RVector> a(m, omega), b1(m, omega), b2(m, omega);
  a[m - 2] = eta1;
  a[m - 1] = eta2;
  b1[m - 1] = eta1;
  b2[m - 1] = eta2;
  auto f = [&](const std::vector<RVector>& x) { return product ? product(x) : fujiki_product(ring, x); };
  const double vol = f(std::vector<RVector>(m, omega));
  return f(a) - prefactor * f(b1) * f(b2) / vol;
}

inline double bbf_via_kahler(const FujikiRing& ring, const RVector& eta1, const RVector& eta2, const RVector& omega) {
  return bbf_via_kahler(ring, eta1, eta2, omega, kahler_prefactor(ring.n));
}

/// The constant mu in bbf_via_kahler for a given omega.
inline double kahler_mu(const FujikiRing& ring, const RVector& omega) {
  return std::pow(ring.space.q(omega, omega), ring.n - 1) / (ring.C * (2.0 * ring.n - 1.0));
}

struct BbfFit {
  RMatrix gram;  // normalized so that q(h, h) = 1 for the designated class h
  double lambda = 0.0;
  double max_residual = 0.0;
};

/// Recovers (q, lambda) with oracle(eta^{2n}) = lambda q(eta, eta)^n from a
/// symmetric 2n-multilinear oracle. Polarizing twice around the designated
/// class h gives (2n-1) F(e_i, e_j, h..) - (2n-2) F(e_i, h..) F(e_j, h..) / F(h..)
/// proportional to q_ij; the gauge is fixed by q(h, h) = 1.
inline BbfFit bbf_fit(int n, int b, const MultilinearOracle& oracle, const RVector& designated,
                      std::uint64_t seed = 0, int test_vectors = 100, double rel_tol = 1e-8) {
  if (n < 1) throw RangeError("n must be positive");
  if (designated.size() != b) throw DimensionError("designated class has the wrong length");
  const auto m = static_cast<std::size_t>(2 * n);
  const double fh = oracle(std::vector<RVector>(m, designated));
  if (!(std::abs(fh) > 0.0)) throw NotFujikiType("oracle vanishes on the designated class");
  std::vector<double> lin(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) {
    std::vector<RVector> args(m, designated);
    args[m - 1] = RVector::Unit(b, i);
    lin[static_cast<std::size_t>(i)] = oracle(args);
  }
  RMatrix g(b, b);
  for (int i = 0; i < b; ++i)
    for (int j = i; j < b; ++j) {
      std::vector<RVector> args(m, designated);
      args[m - 2] = RVector::Unit(b, i);
      args[m - 1] = RVector::Unit(b, j);
      const double v = (2.0 * n - 1.0) * oracle(args) -
                       (2.0 * n - 2.0) * lin[static_cast<std::size_t>(i)] * lin[static_cast<std::size_t>(j)] / fh;
      g(i, j) = g(j, i) = v;
    }
  const double gh = designated.dot(g * designated);
  if (!(std::abs(gh) > 0.0)) throw NotFujikiType("designated class is isotropic for the fitted form");
  BbfFit fit;
  fit.gram = g / gh;
  fit.lambda = fh;  // q(h, h) = 1

  Rng rng(derive_seed(seed, 0x626266));
  const double gnorm = fit.gram.cwiseAbs().maxCoeff();
  for (int t = 0; t < test_vectors; ++t) {
    RVector eta(b);
    for (int i = 0; i < b; ++i) eta(i) = rng.normal();
    const double lhs = oracle(std::vector<RVector>(m, eta));
    const double rhs = fit.lambda * std::pow(eta.dot(fit.gram * eta), n);
    const double scale = std::abs(fit.lambda) * std::pow(gnorm * eta.squaredNorm(), n);
    const double residual = std::abs(lhs - rhs) / std::max(scale, 1e-300);
    fit.max_residual = std::max(fit.max_residual, residual);
    if (residual > rel_tol)
      throw NotFujikiType("oracle is not a power of a quadratic form (relative residual " +
                          std::to_string(residual) + " on test vector " + std::to_string(t) + ")");
  }
  return fit;
}

/// Eigenvectors of the Gram matrix rescaled to q = +1 (columns of
/// `positive`) and q = -1 (columns of `negative`), ascending eigenvalue order.
struct EigenSplit {
  RMatrix positive;
  RMatrix negative;
};

inline EigenSplit eigen_split(const QuadraticSpace& s, double rel_tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(s.gram);
  const RVector ev = es.eigenvalues();
  const double tol = rel_tol * ev.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > tol) pos.push_back(i);
    if (ev(i) < -tol) neg.push_back(i);
  }
  EigenSplit out{RMatrix(s.b, static_cast<Eigen::Index>(pos.size())), RMatrix(s.b, static_cast<Eigen::Index>(neg.size()))};
  for (std::size_t j = 0; j < pos.size(); ++j)
    out.positive.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(pos[j]) / std::sqrt(ev(pos[j]));
  for (std::size_t j = 0; j < neg.size(); ++j)
    out.negative.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(neg[j]) / std::sqrt(-ev(neg[j]));
  return out;
}

/// k pairwise orthogonal isotropic classes, generic inside their span.
/// SignatureError when the form has fewer than k positive or negative
/// directions.
inline std::vector<RVector> random_isotropic_family(const QuadraticSpace& s, int k, Rng& rng) {
  const EigenSplit split = eigen_split(s);
  std::vector<RVector> pos, neg;
  for (Eigen::Index j = 0; j < split.positive.cols(); ++j) pos.push_back(split.positive.col(j));
  for (Eigen::Index j = 0; j < split.negative.cols(); ++j) neg.push_back(split.negative.col(j));
  if (static_cast<int>(std::min(pos.size(), neg.size())) < k)
    throw SignatureError("not enough positive and negative directions for " + std::to_string(k) + " isotropic classes");
  auto orthonormal = [&](std::size_t dim) {
    RMatrix a(static_cast<Eigen::Index>(dim), k);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (int j = 0; j < k; ++j) a(i, j) = rng.normal();
    return RMatrix(Eigen::HouseholderQR<RMatrix>(a).householderQ() * RMatrix::Identity(a.rows(), k));
  };
  const RMatrix a = orthonormal(pos.size());
  const RMatrix c = orthonormal(neg.size());
  std::vector<RVector> basis;
  for (int j = 0; j < k; ++j) {
    RVector v = RVector::Zero(s.b);
    for (std::size_t i = 0; i < pos.size(); ++i) v += a(static_cast<Eigen::Index>(i), j) * pos[i];
    for (std::size_t i = 0; i < neg.size(); ++i) v += c(static_cast<Eigen::Index>(i), j) * neg[i];
    basis.push_back(v);
  }
  std::vector<RVector> out;
  for (int j = 0; j < k; ++j) {
    RVector v = RVector::Zero(s.b);
    for (int i = 0; i < k; ++i) v += rng.uniform(0.5, 1.5) * (i == j ? 2.0 : 0.3) * basis[static_cast<std::size_t>(i)];
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lattice presets.

namespace detail {

inline RMatrix hyperbolic_plane() {
  RMatrix u(2, 2);
  u << 0, 1, 1, 0;
  return u;
}

/// Cartan matrix of E8: chain 0-1-2-3-4-5-6 with node 7 attached to node 4.
inline RMatrix e8() {
  RMatrix e = 2.0 * RMatrix::Identity(8, 8);
  for (int i = 0; i + 1 < 7; ++i) e(i, i + 1) = e(i + 1, i) = -1.0;
  e(4, 7) = e(7, 4) = -1.0;
  return e;
}

inline RMatrix block_diagonal(const std::vector<RMatrix>& blocks) {
  Eigen::Index size = 0;
  for (const auto& b : blocks) size += b.rows();
  RMatrix out = RMatrix::Zero(size, size);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

}  // namespace detail

inline FujikiRing preset_lattice(const std::string& name) {
  if (name == "toy4") {
    RVector d(4);
    d << 1, 1, 1, -1;
    return FujikiRing(QuadraticSpace(d.asDiagonal()), 1, 1.0, "toy4");
  }
  if (name == "k3") {
    const RMatrix u = detail::hyperbolic_plane();
    const RMatrix e = -detail::e8();
    return FujikiRing(QuadraticSpace(detail::block_diagonal({u, u, u, e, e})), 1, 1.0, "k3");
  }
  if (name == "sig34") {
    RVector d(7);
    d << 1, 1, 1, -1, -1, -1, -1;
    return FujikiRing(QuadraticSpace(d.asDiagonal()), 2, 1.0, "sig34");
  }
  throw ParseError("unknown lattice preset '" + name + "'");
}

inline std::vector<std::string> preset_names() { return {"toy4", "k3", "sig34"}; }

inline FujikiRing lattice_from_json(const Json& j) {
  try {
    const int b = j.at("b").get<int>();
    const auto& rows = j.at("gram");
    if (!rows.is_array() || static_cast<int>(rows.size()) != b) throw ParseError("gram must have b rows");
    RMatrix g(b, b);
    for (int i = 0; i < b; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != b) throw ParseError("gram rows must have b entries");
      for (int k = 0; k < b; ++k) g(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return FujikiRing(QuadraticSpace(std::move(g)), j.at("n").get<int>(), j.at("C").get<double>(),
                      j.value("name", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed lattice JSON: ") + e.what());
  }
}

inline FujikiRing load_lattice(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lattice file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
  return lattice_from_json(j);
}

/// Preset name or path to a lattice JSON file.
inline FujikiRing resolve_lattice(const std::string& name_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return preset_lattice(name_or_path);
  return load_lattice(name_or_path);
}

}  // namespace twistor_forge
