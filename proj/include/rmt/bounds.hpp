#pragma once

#include "core.hpp"
#include "numlin.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace rmt {

using BigInt = boost::multiprecision::cpp_int;

inline std::string to_string(const BigInt& v) { return v.str(); }

// Free parameters of the bound formulas. gamma_eps and c_eps are not fixed
// numerically anywhere; defaults come from calibrate_gamma.
struct BoundParams {
  double epsilon = 0.1;
  double gamma_eps = 1.0;
  double c_eps = 1.0;
};

// (1 + eps) (2 + gamma ((ln k + 1) / N)^(1/2)), to be multiplied by rc.
inline double ht_bound(double k, double N, double eps, double gamma_eps) {
  require(k >= 1 && N >= 1, "ht_bound: need k >= 1 and N >= 1");
  return (1.0 + eps) * (2.0 + gamma_eps * std::sqrt((std::log(k) + 1.0) / N));
}

inline double subexp_bound_eq10(double K, double N, double eps, double gamma_eps, double C) {
  require(K >= 1, "subexp_bound_eq10: K must be >= 1");
  return C * ht_bound(K, N, eps, gamma_eps);
}

inline double tail_bound(double N, double t) {
  require(t >= 0, "tail_bound: t must be non-negative");
  return std::min(1.0, 2.0 * std::exp(-N * t * t));
}

// Exact dyadic rational value of a finite positive double: num / den.
inline std::pair<BigInt, BigInt> exact_rational(double x) {
  require(std::isfinite(x) && x > 0, "exact_rational: positive finite value required");
  int e = 0;
  const double m = std::frexp(x, &e);
  BigInt num = static_cast<std::uint64_t>(std::ldexp(m, 53));
  BigInt den = 1;
  e -= 53;
  if (e >= 0)
    num <<= e;
  else
    den <<= -e;
  const BigInt g = boost::multiprecision::gcd(num, den);
  return {num / g, den / g};
}

inline double log_net_cardinality_bound(double delta, double n, double k) {
  require(delta > 0, "net_cardinality_bound: delta must be positive");
  return 2.0 * n * k * k * std::log1p(2.0 / delta);
}

// ceil((1 + 2/delta)^(2 n k^2)) in exact integer arithmetic (delta read as the exact
// binary value of the double).
inline BigInt net_cardinality_bound(double delta, unsigned n, unsigned k, double max_bits = 2e7) {
  require(delta > 0, "net_cardinality_bound: delta must be positive");
  require(n >= 1 && k >= 1, "net_cardinality_bound: n, k must be positive");
  const auto [dn, dd] = exact_rational(delta);
  BigInt num = dn + 2 * dd, den = dn;  // (delta + 2) / delta
  const BigInt g = boost::multiprecision::gcd(num, den);
  num /= g;
  den /= g;
  const std::uint64_t e = 2ull * n * k * k;
  const double bits = static_cast<double>(e) * static_cast<double>(boost::multiprecision::msb(num) + 1);
  if (bits > max_bits) throw CapacityError("net_cardinality_bound: result too large", static_cast<std::size_t>(bits / 8));
  const BigInt pn = boost::multiprecision::pow(num, static_cast<unsigned>(e));
  const BigInt pd = boost::multiprecision::pow(den, static_cast<unsigned>(e));
  return (pn + pd - 1) / pd;
}

// floor(sqrt(N / (c_eps n))), corrected against rounding.
inline std::int64_t lemcon_kmax(double N, double n, double c_eps) {
  require(N > 0 && n > 0 && c_eps > 0, "lemcon_kmax: arguments must be positive");
  const double q = N / (c_eps * n);
  auto k = static_cast<std::int64_t>(std::floor(std::sqrt(q)));
  while (static_cast<double>(k + 1) * static_cast<double>(k + 1) * c_eps * n <= N) ++k;
  while (k > 0 && static_cast<double>(k) * static_cast<double>(k) * c_eps * n > N) --k;
  return k;
}

// N(m) = a^(2^m - 1), m = 0..count-1, via N(m+1) = a N(m)^2.
inline std::vector<BigInt> lacunary_sequence(unsigned a, unsigned count) {
  require(a >= 2, "lacunary_sequence: a must be >= 2");
  require(count >= 1, "lacunary_sequence: count must be >= 1");
  require(count <= 30, "lacunary_sequence: count too large for exact storage");
  std::vector<BigInt> out;
  out.reserve(count);
  BigInt cur = 1;
  for (unsigned m = 0; m < count; ++m) {
    out.push_back(cur);
    cur = a * cur * cur;
  }
  return out;
}

// sum of alpha members below a N^D, plus K_tail.
inline BigInt ke_ledger_e11(const std::vector<BigInt>& alpha, const BigInt& a, unsigned D, std::uint64_t N,
                            const BigInt& K_tail = 0) {
  require(std::is_sorted(alpha.begin(), alpha.end()), "ke_ledger_e11: alpha must be sorted");
  const BigInt threshold = a * boost::multiprecision::pow(BigInt(N), D);
  BigInt s = K_tail;
  for (const auto& m : alpha) {
    if (m >= threshold) break;
    s += m;
  }
  return s;
}

// sup over q of (N(0) + ... + N(q)) / N(q): the geometric-sum constant of a lacunary
// sequence.
inline double lacunary_sum_constant(const std::vector<BigInt>& seq) {
  double best = 0.0;
  BigInt partial = 0;
  for (const auto& v : seq) {
    partial += v;
    best = std::max(best, static_cast<double>(partial) / static_cast<double>(v));
  }
  return best;
}

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

struct ConstantsTable {
  int n = 0;
  Bracket oh;                 // C(OH_n)
  Bracket r_plus_c;           // C(R_n + C_n)
  double max_space_lower = 0; // lower bound for C of max spaces
  double universal_upper = 0; // upper bound valid for every n-dimensional space
};

inline ConstantsTable constants_table(int n) {
  require(n >= 1, "constants_table: n must be >= 1");
  const double r = std::sqrt(static_cast<double>(n));
  ConstantsTable t;
  t.n = n;
  t.oh = {std::pow(n, 0.25) / 2.0, std::pow(n, 0.25)};
  t.r_plus_c = {r / 2.0, r};
  t.max_space_lower = r / 4.0;
  t.universal_upper = r;
  return t;
}

struct Pi2Result {
  double value = 0.0;   // sqrt of the primal value (certified lower bound)
  double upper = 0.0;   // sqrt of the dual value (certified upper bound)
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;     // (dual - primal) / dual
  int sweeps = 0;
  bool converged = false;
};

// 2-summing norm of u : l_inf^n -> l_2 from max{tr(u*u M) : M >= 0, M_ii <= 1} and its
// dual min{sum lambda_i : diag(lambda) >= u*u}. The primal runs coordinate ascent over
// unit columns v_i of M = V*V; the dual certificate is lambda_i = Re (Q M)_ii shifted
// up by the most negative eigenvalue of diag(lambda) - Q.
inline Pi2Result pi2_norm(const Matrix& u, double tol = 1e-6, int max_sweeps = 200000) {
  require(u.size() > 0 && u.norm() > 0.0, "pi2_norm: u must be non-zero");
  const Matrix Q = u.adjoint() * u;
  const Index n = Q.rows();
  Matrix V = Matrix::Identity(n, n);
  Pi2Result r;
  Vector g(n);
  const double target = std::min(tol, 1e-9);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (Index i = 0; i < n; ++i) {
      g.noalias() = V * Q.col(i);
      g -= Q(i, i) * V.col(i);
      const double gn = g.norm();
      if (gn > 0.0) V.col(i) = g / gn;
    }
    r.sweeps = sweep;
    if (sweep % 10 != 0 && sweep != 1) continue;
    const Matrix M = V.adjoint() * V;
    const Matrix QM = Q * M;
    r.primal = QM.trace().real();
    Eigen::VectorXd lam(n);
    for (Index i = 0; i < n; ++i) lam(i) = QM(i, i).real();
    Matrix S = -Q;
    S.diagonal() += lam.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    const double mu = es.eigenvalues()(0);
    if (mu < 0) lam.array() -= mu;
    r.dual = lam.sum();
    r.gap = r.dual > 0 ? (r.dual - r.primal) / r.dual : 0.0;
    if (r.gap <= target) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged && r.gap <= tol) r.converged = true;
  r.value = std::sqrt(std::max(0.0, r.primal));
  r.upper = std::sqrt(std::max(0.0, r.dual));
  if (!r.converged) throw ConvergenceError("pi2_norm: duality gap above tolerance", r.gap);
  return r;
}

struct L22Bounds {
  double l1_of_row_norms = 0.0;
  double frobenius = 0.0;
  double s4 = 0.0;
  Bracket sandwich_i;
  Bracket sandwich_ii;
};

inline L22Bounds l22_bounds(const Matrix& a) {
  L22Bounds b;
  for (Index i = 0; i < a.rows(); ++i) b.l1_of_row_norms += a.row(i).norm();
  b.frobenius = a.norm();
  b.s4 = schatten_norm(a, 4);
  b.sandwich_i = {b.l1_of_row_norms / 2.0, 2.0 * b.l1_of_row_norms};
  b.sandwich_ii = {b.frobenius, 2.0 * b.frobenius};
  return b;
}

struct FactorizationPiece {
  double w_norm = 0.0;
  double v_images_rc = 0.0;
  double K = 1.0;
};

inline double eq303_factorization_bound(const std::vector<FactorizationPiece>& pieces, double N, double eps,
                                        double gamma_eps) {
  double s = 0.0;
  for (const auto& p : pieces) {
    require(p.K >= 1, "factorization piece: K must be >= 1");
    s += (2.0 + gamma_eps * std::sqrt((std::log(p.K) + 1.0) / N)) * p.w_norm * p.v_images_rc;
  }
  return (1.0 + eps) * s;
}

// E|g|^p = Gamma(1 + p/2) for a complex Gaussian with E|g|^2 = 1.
inline double complex_gaussian_abs_moment(double p) {
  require(p > 0, "complex_gaussian_abs_moment: p must be positive");
  return std::tgamma(1.0 + 0.5 * p);
}

inline double complex_gaussian_lp_norm(double p) { return std::pow(complex_gaussian_abs_moment(p), 1.0 / p); }

// (E|g|^p)^(1/p) for a real standard Gaussian, E|g|^p = 2^(p/2) Gamma((p+1)/2) / sqrt(pi).
inline double real_gaussian_lp_norm(double p) {
  require(p > 0, "real_gaussian_lp_norm: p must be positive");
  const double m = std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) / std::sqrt(std::numbers::pi);
  return std::pow(m, 1.0 / p);
}

// gamma(1) = E|g| for the L2-normalised complex Gaussian.
inline double gaussian_gamma_one() {
  static const double value = complex_gaussian_abs_moment(1.0);
  return value;
}

}  // namespace rmt
