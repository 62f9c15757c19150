#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "form.hpp"
#include "hodge.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "report.hpp"

namespace twistor_forge {

/// Constant form on C^n in the frame (dz_1..dz_n, dzbar_1..dzbar_n):
/// generator j < n is dz_{j+1}, generator n + j is dzbar_{j+1}.
struct PointForm {
  int n = 0;
  int p = 0;
  int q = 0;
  Multivector<complex> coeffs;

  PointForm() = default;
  PointForm(int n_, int p_, int q_) : n(n_), p(p_), q(q_), coeffs(2 * n_, std::min(p_ + q_, 2 * n_)) {}

  static PointForm zero(int n, int p, int q) { return PointForm(n, p, q); }

  /// Wraps a constant multivector, inferring and checking the bidegree.
  static PointForm from_multivector(int n, const Multivector<complex>& mv) {
    if (mv.generators() != 2 * n) throw DimensionError("multivector does not live on C^n");
    const Mask low = (Mask{1} << n) - 1;
    int p = -1;
    for (const auto& [mask, c] : mv.terms()) {
      const int pm = mask_size(mask & low);
      if (p >= 0 && pm != p) throw BidegreeError("form is not of pure bidegree");
      p = pm;
    }
    if (p < 0) p = mv.degree() / 2;
    PointForm out(n, p, mv.degree() - p);
    out.coeffs = mv;
    return out;
  }

  /// (1,0)-covector sum_j a_j dz_j.
  static PointForm covector(const CVector& a) {
    const int n = static_cast<int>(a.size());
    PointForm out(n, 1, 0);
    for (int j = 0; j < n; ++j)
      if (a(j) != complex{}) out.coeffs.set(Mask{1} << j, a(j));
    return out;
  }

  int degree() const { return p + q; }
  bool is_zero() const { return coeffs.is_zero(); }
  double max_abs() const { return coeffs.max_abs(); }
  double l1_norm() const { return coeffs.l1_norm(); }

  /// Complex conjugate: dz_j <-> dzbar_j, coefficients conjugated.
  PointForm conj() const {
    CMatrix swap = CMatrix::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
      swap(j, n + j) = 1.0;
      swap(n + j, j) = 1.0;
    }
    PointForm out(n, q, p);
    out.coeffs = substitute(coeffs, swap).conj();
    return out;
  }

  bool is_real(double rel_tol = 1e-10) const {
    Multivector<complex> diff = coeffs;
    diff -= conj().coeffs;
    return diff.max_abs() <= rel_tol * std::max(max_abs(), 1e-300);
  }

  PointForm& operator+=(const PointForm& o) {
    check_same(o);
    coeffs += o.coeffs;
    return *this;
  }
  PointForm& operator*=(complex f) {
    coeffs *= f;
    return *this;
  }
  friend PointForm operator+(PointForm a, const PointForm& b) { return a += b; }
  friend PointForm operator*(PointForm a, complex f) { return a *= f; }

  friend PointForm wedge(const PointForm& a, const PointForm& b) {
    if (a.n != b.n) throw DimensionError("point forms on different spaces");
    PointForm out(a.n, a.p + b.p, a.q + b.q);
    if (out.p > a.n || out.q > a.n) return out;
    out.coeffs = wedge(a.coeffs, b.coeffs);
    return out;
  }

  Json to_json() const {
    Json j;
    j["n"] = n;
    j["bidegree"] = Json::array({p, q});
    Json terms = Json::array();
    for (const auto& [mask, c] : coeffs.terms()) {
      Json idx = Json::array();
      for (int i : mask_indices(mask)) idx.push_back(i + 1);
      terms.push_back(Json{{"indices", idx}, {"re", c.real()}, {"im", c.imag()}});
    }
    j["terms"] = terms;
    return j;
  }

 private:
  void check_same(const PointForm& o) const {
    if (o.n != n || o.p != p || o.q != q) throw BidegreeError("sum of point forms of different bidegree");
  }
};

inline PointForm power(const PointForm& a, int k) {
  PointForm out(a.n, 0, 0);
  out.coeffs.set(0, 1.0);
  for (int i = 0; i < k; ++i) out = wedge(out, a);
  return out;
}

namespace detail {

inline const std::vector<Mask>& k_subsets(int n, int k) {
  thread_local std::map<std::pair<int, int>, std::vector<Mask>> cache;
  auto [it, inserted] = cache.try_emplace({n, k});
  if (inserted)
    for (Mask m = 0; m < (Mask{1} << n); ++m)
      if (mask_size(m) == k) it->second.push_back(m);
  return it->second;
}

/// i^k (-1)^{k(k-1)/2}: coefficient of dz_I ^ dzbar_I in the monomial
/// i^k xi_1 ^ xibar_1 ^ ... ^ xi_k ^ xibar_k with xi_1 ^ ... ^ xi_k = dz_I.
inline complex monomial_phase(int k) {
  const complex ik = std::pow(complex{0.0, 1.0}, k);
  return ((k * (k - 1) / 2) % 2) ? -ik : ik;
}

/// Determinant of the row-major k x k matrix in `a` (destroyed), k <= 8.
inline complex small_det(std::array<complex, 64>& a, int k) {
  complex det{1.0, 0.0};
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int r = c + 1; r < k; ++r)
      if (std::abs(a[static_cast<std::size_t>(r * k + c)]) > std::abs(a[static_cast<std::size_t>(piv * k + c)])) piv = r;
    if (a[static_cast<std::size_t>(piv * k + c)] == complex{}) return {};
    if (piv != c) {
      for (int j = 0; j < k; ++j) std::swap(a[static_cast<std::size_t>(piv * k + j)], a[static_cast<std::size_t>(c * k + j)]);
      det = -det;
    }
    const complex d = a[static_cast<std::size_t>(c * k + c)];
    det *= d;
    for (int r = c + 1; r < k; ++r) {
      const complex f = a[static_cast<std::size_t>(r * k + c)] / d;
      for (int j = c + 1; j < k; ++j) a[static_cast<std::size_t>(r * k + j)] -= f * a[static_cast<std::size_t>(c * k + j)];
    }
  }
  return det;
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace detail

/// Hermitian matrix R of a real (k,k)-form in Plucker coordinates:
/// rho = monomial_phase(k) sum_{I,J} R_IJ dz_I ^ dzbar_J. Evaluated on
/// (x_1, xbar_1, ..., x_k, xbar_k) with the sign (-i)^k the form equals
/// u^* R u with u_I = conj(det X_I).
inline CMatrix plucker_matrix(const PointForm& a) {
  if (a.p != a.q) throw BidegreeError("expected a (k,k)-form");
  const int k = a.p;
  const auto& subsets = detail::k_subsets(a.n, k);
  std::map<Mask, int> index;
  for (std::size_t i = 0; i < subsets.size(); ++i) index[subsets[i]] = static_cast<int>(i);
  const int m = static_cast<int>(subsets.size());
  CMatrix r = CMatrix::Zero(m, m);
  const Mask low = (Mask{1} << a.n) - 1;
  const complex phase = detail::monomial_phase(k);
  for (const auto& [mask, c] : a.coeffs.terms()) {
    const Mask i = mask & low;
    const Mask j = mask >> a.n;
    r(index.at(i), index.at(j)) = c / phase;
  }
  return r;
}

/// (-i)^k rho(x_1, xbar_1, ..., x_k, xbar_k) for a (k,k)-form.
inline double evaluate_weak(const PointForm& a, const std::vector<CVector>& xs) {
  if (a.p != a.q || static_cast<int>(xs.size()) != a.p) throw BidegreeError("need k vectors for a (k,k)-form");
  const int k = a.p;
  const CMatrix r = plucker_matrix(a);
  const auto& subsets = detail::k_subsets(a.n, k);
  CVector u(static_cast<Eigen::Index>(subsets.size()));
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const auto rows = mask_indices(subsets[s]);
    CMatrix sub(k, k);
    for (int a_ = 0; a_ < k; ++a_)
      for (int b = 0; b < k; ++b) sub(a_, b) = xs[static_cast<std::size_t>(b)](rows[static_cast<std::size_t>(a_)]);
    u(static_cast<Eigen::Index>(s)) = std::conj(k == 0 ? complex{1.0} : sub.determinant());
  }
  return (u.adjoint() * r * u)(0, 0).real();
}

/// Sum of k_terms monomials c i^p xi_1 ^ xibar_1 ^ ... ^ xi_p ^ xibar_p with
/// c >= 0 and random (1,0)-covectors xi.
inline PointForm strong_monomial(double c, const std::vector<CVector>& xis) {
  if (xis.empty()) throw DegreeError("monomial needs at least one covector");
  const int n = static_cast<int>(xis.front().size());
  PointForm out(n, 0, 0);
  out.coeffs.set(0, c);
  for (const auto& xi : xis) {
    const PointForm f = PointForm::covector(xi);
    out = wedge(wedge(out, f), f.conj());
  }
  out *= std::pow(complex{0.0, 1.0}, static_cast<int>(xis.size()));
  return out;
}

inline PointForm random_strongly_positive(int n, int p, int k_terms, std::uint64_t seed) {
  if (p < 1 || p > n) throw RangeError("random_strongly_positive needs 1 <= p <= n");
  Rng rng(seed);
  PointForm out(n, p, p);
  for (int t = 0; t < k_terms; ++t) {
    std::vector<CVector> xis;
    for (int j = 0; j < p; ++j) {
      CVector xi(n);
      for (int a = 0; a < n; ++a) xi(a) = rng.complex_normal();
      xis.push_back(xi);
    }
    out += strong_monomial(rng.uniform(), xis);
  }
  return out;
}

namespace detail {

/// Factors a decomposable w in Lambda^k (C^n)^* as mu * xi_1 ^ ... ^ xi_k.
inline std::pair<std::vector<CVector>, complex> factor_decomposable(const CVector& w, int n, int k) {
  const auto& subsets = k_subsets(n, k);
  Multivector<complex> wm(n, k);
  for (std::size_t s = 0; s < subsets.size(); ++s)
    if (std::abs(w(static_cast<Eigen::Index>(s))) > 0) wm.set(subsets[s], w(static_cast<Eigen::Index>(s)));
  std::vector<CVector> xis;
  if (k == n) {
    for (int j = 0; j < n; ++j) xis.push_back(CVector::Unit(n, j));
  } else {
    const auto& up = k_subsets(n, k + 1);
    std::map<Mask, int> index;
    for (std::size_t i = 0; i < up.size(); ++i) index[up[i]] = static_cast<int>(i);
    CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(up.size()), n);
    for (int j = 0; j < n; ++j) {
      Multivector<complex> e(n, 1);
      e.set(Mask{1} << j, 1.0);
      const Multivector<complex> ew = wedge(e, wm);
      for (const auto& [mask, c] : ew.terms()) a(index.at(mask), j) = c;
    }
    const CMatrix ker = nullspace(a);
    if (ker.cols() != k) throw ConeError("eigenvector is not decomposable");
    for (int j = 0; j < k; ++j) xis.push_back(ker.col(j));
  }
  Multivector<complex> prod = Multivector<complex>::one(n);
  for (const auto& xi : xis) {
    Multivector<complex> f(n, 1);
    for (int j = 0; j < n; ++j)
      if (xi(j) != complex{}) f.set(Mask{1} << j, xi(j));
    prod = wedge(prod, f);
  }
  Eigen::Index imax = 0;
  w.cwiseAbs().maxCoeff(&imax);
  const complex* pc = prod.find(subsets[static_cast<std::size_t>(imax)]);
  if (!pc || std::abs(*pc) == 0.0) throw ConeError("factorization failed");
  return {xis, w(imax) / *pc};
}

}  // namespace detail

struct WeakBudget {
  int restarts = 100;
  int steps = 200;
  double step = 0.1;
  std::uint64_t seed = 0;
};

struct PositivityVerdict {
  enum class Status { violated, no_violation_found };
  Status status = Status::no_violation_found;
  std::vector<CVector> witness;
  double value = 0.0;  // smallest value found
  int trials = 0;
  std::uint64_t seed = 0;

  bool violated() const { return status == Status::violated; }

  Json to_json() const {
    Json j;
    j["status"] = violated() ? "violated" : "no_violation_found";
    j["value"] = value;
    j["trials"] = trials;
    j["seed"] = seed;
    Json w = Json::array();
    for (const auto& x : witness) {
      Json v = Json::array();
      for (Eigen::Index i = 0; i < x.size(); ++i) v.push_back(Json::array({x(i).real(), x(i).imag()}));
      w.push_back(v);
    }
    j["witness"] = violated() ? w : Json(nullptr);
    return j;
  }
};

inline constexpr double kWeakViolation = 1e-10;

/// Falsification search for weak positivity: projected gradient descent of
/// (-i)^p a(x_1, xbar_1, ...) over unit (1,0)-vectors from random starts.
inline PositivityVerdict check_weak_positivity(const PointForm& a, const WeakBudget& budget = {}) {
  if (a.p != a.q) throw BidegreeError("weak positivity needs a (p,p)-form");
  if (!a.is_real()) throw BidegreeError("weak positivity needs a real form");
  const int n = a.n;
  const int k = a.p;
  PositivityVerdict verdict;
  verdict.seed = budget.seed;
  verdict.trials = budget.restarts;
  if (k == 0) {
    verdict.value = a.is_zero() ? 0.0 : a.coeffs.terms().begin()->second.real();
    if (verdict.value < -kWeakViolation) verdict.status = PositivityVerdict::Status::violated;
    return verdict;
  }
  const CMatrix r_raw = plucker_matrix(a);
  const double scale = r_raw.cwiseAbs().maxCoeff();
  if (scale == 0.0) return verdict;
  const CMatrix rt = (r_raw / scale).transpose();
  const auto& subsets = detail::k_subsets(n, k);
  std::vector<std::vector<int>> rows;
  for (Mask s : subsets) rows.push_back(mask_indices(s));
  const auto m = static_cast<Eigen::Index>(subsets.size());

  // Every k-vector is decomposable in these degrees, so weak positivity is
  // positivity of R and the bottom eigenvector gives the witness.
  if (k == 1 || k >= n - 1) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r_raw + r_raw.adjoint()));
    verdict.trials = 0;
    verdict.value = es.eigenvalues()(0);
    if (verdict.value >= -kWeakViolation) return verdict;
    const CVector d = es.eigenvectors().col(0).conjugate();
    auto [xis, mu] = detail::factor_decomposable(d, n, k);
    CMatrix x(n, k);
    for (int j = 0; j < k; ++j) x.col(j) = xis[static_cast<std::size_t>(j)];
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(x).householderQ() * CMatrix::Identity(n, k);
    for (int j = 0; j < k; ++j) verdict.witness.push_back(q.col(j));
    verdict.value = evaluate_weak(a, verdict.witness);
    verdict.status = PositivityVerdict::Status::violated;
    return verdict;
  }

  // Block Hermitian matrices H_j with f = x_j^* H_j x_j for every j. Column
  // j of the cofactor matrix of X_I gives d det(X_I) / d x_j.
  std::vector<CMatrix> dmat(static_cast<std::size_t>(k), CMatrix::Zero(m, n));
  auto blocks = [&](const std::vector<CVector>& xs, std::vector<CMatrix>& hs) {
    std::array<complex, 64> sub{}, minor{};
    for (Eigen::Index s = 0; s < m; ++s) {
      const auto& rs = rows[static_cast<std::size_t>(s)];
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          sub[static_cast<std::size_t>(i * k + j)] = xs[static_cast<std::size_t>(j)](rs[static_cast<std::size_t>(i)]);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          int pos = 0;
          for (int a_ = 0; a_ < k; ++a_) {
            if (a_ == i) continue;
            for (int b = 0; b < k; ++b)
              if (b != j) minor[static_cast<std::size_t>(pos++)] = sub[static_cast<std::size_t>(a_ * k + b)];
          }
          complex cof = detail::small_det(minor, k - 1);
          if ((i + j) % 2) cof = -cof;
          dmat[static_cast<std::size_t>(j)](s, rs[static_cast<std::size_t>(i)]) = cof;
        }
    }
    for (int j = 0; j < k; ++j) {
      const CMatrix& dj = dmat[static_cast<std::size_t>(j)];
      CMatrix h = dj.adjoint() * rt * dj;
      hs[static_cast<std::size_t>(j)] = 0.5 * (h + h.adjoint());
    }
  };

  Rng rng(derive_seed(budget.seed, 0x77656b));
  double best = std::numeric_limits<double>::infinity();
  std::vector<CVector> best_x;
  std::vector<CMatrix> hs(static_cast<std::size_t>(k));
  for (int restart = 0; restart < budget.restarts; ++restart) {
    std::vector<CVector> xs;
    for (int j = 0; j < k; ++j) {
      CVector x(n);
      for (int a_ = 0; a_ < n; ++a_) x(a_) = rng.complex_normal();
      xs.push_back(x.normalized());
    }
    blocks(xs, hs);
    double f = (xs[0].adjoint() * hs[0] * xs[0])(0, 0).real();
    double step = budget.step;
    for (int it = 0; it < budget.steps && step > 1e-8; ++it) {
      std::vector<CVector> trial(xs.size());
      for (int j = 0; j < k; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const CVector g = hs[jj] * xs[jj] - f * xs[jj];
        trial[jj] = (xs[jj] - step * g).normalized();
      }
      std::vector<CMatrix> ht(static_cast<std::size_t>(k));
      blocks(trial, ht);
      const double ft = (trial[0].adjoint() * ht[0] * trial[0])(0, 0).real();
      if (ft < f) {
        const bool stalled = f - ft < 1e-13;
        xs = std::move(trial);
        hs = std::move(ht);
        f = ft;
        if (stalled) break;
      } else {
        step *= 0.5;
      }
      if (f * scale < -kWeakViolation) break;
    }
    if (f < best) {
      best = f;
      best_x = xs;
    }
    if (best * scale < -kWeakViolation) {
      verdict.trials = restart + 1;
      break;
    }
  }
  if (best_x.empty()) return verdict;
  verdict.value = evaluate_weak(a, best_x);
  verdict.witness = best_x;
  if (verdict.value < -kWeakViolation) verdict.status = PositivityVerdict::Status::violated;
  else verdict.witness.clear();
  return verdict;
}

/// Coefficient of weak ^ strong against the volume form prod_j (i dz_j ^ dzbar_j).
inline double cone_pairing(const PointForm& weak, const PointForm& strong) {
  if (weak.n != strong.n) throw DimensionError("point forms on different spaces");
  if (weak.p != weak.q || strong.p != strong.q || weak.p + strong.p != weak.n)
    throw BidegreeError("cone_pairing needs complementary (p,p) and (n-p,n-p) forms");
  if (!weak.is_real() || !strong.is_real()) throw BidegreeError("cone_pairing needs real forms");
  const PointForm top = wedge(weak, strong);
  const Mask all = (Mask{1} << (2 * weak.n)) - 1;
  const complex* c = top.coeffs.find(all);
  return c ? (*c / detail::monomial_phase(weak.n)).real() : 0.0;
}

/// Monomial c i^k xi_1 ^ xibar_1 ^ ... with c >= 0.
struct StrongMonomial {
  double coefficient = 0.0;
  std::vector<CVector> covectors;
};


/// Decomposes a weakly positive (k,k)-form with k in {0, 1, n-1, n} into
/// strong monomials via the eigendecomposition of its Plucker matrix
/// (every k-vector is decomposable in these degrees). ConeError when the
/// form is not positive or the degree is not covered.
inline std::vector<StrongMonomial> strong_decomposition(const PointForm& a, double rel_tol = 1e-10) {
  if (a.p != a.q) throw BidegreeError("expected a (k,k)-form");
  const int k = a.p;
  const int n = a.n;
  if (!(k <= 1 || k >= n - 1)) throw ConeError("decomposition only covers bidegrees (1,1), (n-1,n-1), (n,n)");
  if (k == 0) throw ConeError("nothing to decompose in degree 0");
  const CMatrix r = plucker_matrix(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
  const RVector ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.minCoeff() < -rel_tol * scale) throw ConeError("form is not weakly positive");
  std::vector<StrongMonomial> out;
  for (Eigen::Index e = 0; e < ev.size(); ++e) {
    if (ev(e) <= rel_tol * scale) continue;
    // R = sum lambda u u^*, and rho_IJ carries w_I conj(w_J) with w = u.
    const CVector w = es.eigenvectors().col(e);
    auto [xis, mu] = detail::factor_decomposable(w, n, k);
    out.push_back(StrongMonomial{ev(e) * std::norm(mu), xis});
  }
  return out;
}

inline PointForm assemble(int n, int k, const std::vector<StrongMonomial>& ms) {
  PointForm out(n, k, k);
  for (const auto& m : ms) out += strong_monomial(m.coefficient, m.covectors);
  return out;
}

/// Rank and type of a real (1,1)-form.
struct SemipositiveRank {
  int rank = 0;
  std::string classification;  // zero | degenerate-semipositive | strictly-positive
};

inline SemipositiveRank semipositive_rank(const PointForm& eta, double rel_tol = 1e-9) {
  if (eta.p != 1 || eta.q != 1) throw BidegreeError("semipositive_rank needs a (1,1)-form");
  if (!eta.is_real()) throw BidegreeError("semipositive_rank needs a real form");
  const CMatrix r = plucker_matrix(eta);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
  const RVector ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-10 * std::max(top, 1.0)) {
    NotSemipositive err("negative eigenvalue " + std::to_string(ev.minCoeff()));
    const CVector v = es.eigenvectors().col(0).conjugate();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      err.witness_vector.push_back(v(i).real());
      err.witness_vector.push_back(v(i).imag());
    }
    throw err;
  }
  SemipositiveRank out;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (top > 0 && ev(i) > rel_tol * top) out.rank += 2;
  if (out.rank == 0) out.classification = "zero";
  else if (out.rank == 2 * eta.n) out.classification = "strictly-positive";
  else out.classification = "degenerate-semipositive";
  return out;
}

/// Value of a real-coordinate form at x in the complex frame of J.
inline PointForm to_point_form(const Form& a, const RMatrix& j, std::span<const double> x) {
  const ComplexFrame f = complex_frame(j);
  Multivector<complex> mv = substitute(a.at(x), f.frame);
  mv.prune(1e-14 * std::max(mv.max_abs(), 1e-300));
  return PointForm::from_multivector(a.dim() / 2, mv);
}

// ---------------------------------------------------------------------------
// Randomized verification of the positivity lemmas on V = C^{2n}.

struct LemmaReport {
  std::string lemma;
  int n = 0;
  int p = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  Json violations = Json::array();
  int zero_instances = 0;
  int nonzero_instances = 0;
  int sublemma_checks = 0;

  bool passed() const { return violations.empty(); }

  Json to_json() const {
    Json j;
    j["lemma"] = lemma;
    j["n"] = n;
    j["p"] = p;
    j["trials"] = trials;
    j["violations"] = violations;
    j["seed"] = seed;
    j["statistics"] = Json{{"zero_instances", zero_instances},
                           {"nonzero_instances", nonzero_instances},
                           {"sublemma_checks", sublemma_checks}};
    return j;
  }
};

struct LemmaOptions {
  WeakBudget budget{10, 80, 0.1, 0};
  double zero_tol = 1e-10;
  /// Replaces conj(Omega) by Omega (failure-path demonstration).
  bool inject_bug = false;
};

namespace detail {

struct LemmaTrial {
  Json violation;  // null when the trial passed
  bool zero_case = false;
  int sublemma_checks = 0;
};

/// Well-conditioned random complex matrix Q1 diag(s) Q2, s in [0.5, 2].
inline CMatrix random_frame(Rng& rng, int d) {
  CMatrix a(d, d), b(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      a(i, k) = rng.complex_normal();
      b(i, k) = rng.complex_normal();
    }
  const CMatrix q1 = Eigen::HouseholderQR<CMatrix>(a).householderQ();
  const CMatrix q2 = Eigen::HouseholderQR<CMatrix>(b).householderQ();
  CVector s(d);
  for (int i = 0; i < d; ++i) s(i) = rng.uniform(0.5, 2.0);
  return q1 * s.asDiagonal() * q2;
}

inline Json instance_json(const PointForm& omega, const std::vector<StrongMonomial>& ms) {
  Json mono = Json::array();
  for (const auto& m : ms) {
    Json xis = Json::array();
    for (const auto& xi : m.covectors) {
      Json v = Json::array();
      for (Eigen::Index i = 0; i < xi.size(); ++i) v.push_back(Json::array({xi(i).real(), xi(i).imag()}));
      xis.push_back(v);
    }
    mono.push_back(Json{{"coefficient", m.coefficient}, {"covectors", xis}});
  }
  return Json{{"omega", omega.to_json()}, {"rho_monomials", mono}};
}

inline LemmaTrial lemma_trial(int n, int p, std::uint64_t seed, const LemmaOptions& opt) {
  Rng rng(seed);
  const int dim = 2 * n;
  // theta^a = sum_b A_ab dz_b; Omega = sum_j theta^j ^ theta^{n+j}
  const CMatrix a = random_frame(rng, dim);
  std::vector<PointForm> theta;
  for (int r = 0; r < dim; ++r) theta.push_back(PointForm::covector(a.row(r).transpose()));
  PointForm omega(dim, 2, 0);
  for (int j = 0; j < n; ++j) omega += wedge(theta[static_cast<std::size_t>(j)], theta[static_cast<std::size_t>(n + j)]);

  // rho: generic, isotropic (covectors inside span{theta^1..theta^{p+1}}),
  // or a sum of both kinds.
  const int kind = static_cast<int>(rng.index(3));
  const int terms = 1 + static_cast<int>(rng.index(3));
  const bool isotropic_possible = p + 1 <= n;
  std::vector<StrongMonomial> monomials;
  for (int t = 0; t < terms; ++t) {
    const bool iso = isotropic_possible && (kind == 1 || (kind == 2 && t == 0));
    StrongMonomial m;
    m.coefficient = rng.uniform(0.1, 1.0);
    for (int c = 0; c < p + 1; ++c) {
      CVector xi = CVector::Zero(dim);
      if (iso) {
        for (int b = 0; b <= p; ++b) xi += rng.complex_normal() * a.row(b).transpose();
      } else {
        for (int b = 0; b < dim; ++b) xi(b) = rng.complex_normal();
      }
      m.covectors.push_back(xi);
    }
    monomials.push_back(std::move(m));
  }
  const PointForm rho = assemble(dim, p + 1, monomials);

  const PointForm op = power(omega, n - p);
  const PointForm opbar = opt.inject_bug ? op : op.conj();
  const PointForm both = wedge(op, opbar);
  const double on = std::pow(omega.l1_norm(), n - p);

  LemmaTrial out;
  auto vanishes = [&](const PointForm& f, double scale) { return f.max_abs() <= opt.zero_tol * scale; };
  const PointForm lhs = wedge(op, rho);
  const PointForm rhs = wedge(both, rho);
  const bool lhs_zero = vanishes(lhs, on * rho.l1_norm());
  const bool rhs_zero = vanishes(rhs, on * on * rho.l1_norm());
  out.zero_case = lhs_zero;
  if (lhs_zero != rhs_zero) {
    out.violation = instance_json(omega, monomials);
    out.violation["reason"] = lhs_zero ? "Omega^(n-p)^rho = 0 but the conjugate product is not"
                                       : "Omega^(n-p)^rho != 0 but the conjugate product vanishes";
    return out;
  }
  for (std::size_t i = 0; i < monomials.size(); ++i) {
    const PointForm mono = strong_monomial(monomials[i].coefficient, monomials[i].covectors);
    const PointForm single = wedge(op, mono);
    if (vanishes(single, on * mono.l1_norm())) continue;
    PointForm triple = wedge(both, mono);
    ++out.sublemma_checks;
    if (vanishes(triple, on * on * mono.l1_norm())) {
      out.violation = instance_json(omega, monomials);
      out.violation["reason"] = "sublemma: triple product vanishes";
      out.violation["monomial"] = i;
      return out;
    }
    triple *= 1.0 / triple.max_abs();
    WeakBudget b = opt.budget;
    b.seed = derive_seed(seed, i);
    const auto verdict = check_weak_positivity(triple, b);
    if (verdict.violated()) {
      out.violation = instance_json(omega, monomials);
      out.violation["reason"] = "sublemma: triple product is not weakly positive";
      out.violation["monomial"] = i;
      out.violation["verdict"] = verdict.to_json();
      return out;
    }
  }
  return out;
}

}  // namespace detail

/// Randomized check of (Omega^{n-p} ^ rho = 0) <=> (Omega^{n-p} ^ conj(Omega)^{n-p} ^ rho = 0)
/// for random non-degenerate (2,0)-forms Omega on C^{2n} and strongly
/// positive (p+1,p+1)-forms rho, plus the sublemma on each monomial.
/// LemmaViolation on any counterexample when `throw_on_violation`.
inline LemmaReport verify_lemma_pair(int n, int p, int trials, std::uint64_t seed, const LemmaOptions& opt = {},
                                     bool throw_on_violation = false) {
  if (n < 1 || n > 3) throw RangeError("verify_lemma_pair needs 1 <= n <= 3");
  if (p < 0 || p > n) throw RangeError("verify_lemma_pair needs 0 <= p <= n");
  if (trials < 0) throw RangeError("negative trial count");
  LemmaReport report;
  report.lemma = "positivity-lemma-pair";
  report.n = n;
  report.p = p;
  report.trials = trials;
  report.seed = seed;
  const auto results = parallel_map(static_cast<std::size_t>(trials), [&](std::size_t t) {
    return detail::lemma_trial(n, p, derive_seed(seed, t), opt);
  });
  for (std::size_t t = 0; t < results.size(); ++t) {
    const auto& r = results[t];
    (r.zero_case ? report.zero_instances : report.nonzero_instances)++;
    report.sublemma_checks += r.sublemma_checks;
    if (!r.violation.is_null()) {
      Json v = r.violation;
      v["trial"] = t;
      report.violations.push_back(v);
    }
  }
  if (throw_on_violation && !report.passed())
    throw LemmaViolation("counterexample in trial " + report.violations[0]["trial"].dump() + ": " +
                         report.violations[0]["reason"].get<std::string>());
  return report;
}

}  // namespace twistor_forge
