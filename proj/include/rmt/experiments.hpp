#pragma once

#include "bounds.hpp"
#include "concentration.hpp"
#include "core.hpp"
#include "ensembles.hpp"
#include "fock.hpp"
#include "ncpoly.hpp"
#include "numlin.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "stats.hpp"
#include "wick.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace rmt {

struct RunContext {
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
};

namespace detail {

inline Json index_list(const std::vector<Index>& v) {
  Json j = Json::array();
  for (auto x : v) j.push_back(x);
  return j;
}

inline void require_grid(const std::vector<Index>& grid) {
  require(!grid.empty(), "N grid must be non-empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 1, "N grid entries must be positive");
    if (i) require(grid[i] > grid[i - 1], "N grid must be strictly increasing");
  }
}

inline int count_increases(const std::vector<double>& v) {
  int c = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) ++c;
  return c;
}

inline std::int64_t factorial(int m) {
  std::int64_t f = 1;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

}  // namespace detail

// a_j = e_{j1} / sqrt(n) in M_n: rc = 1 with row norm 1/sqrt(n).
inline MatrixTuple normalized_column_tuple(std::size_t n) {
  std::vector<Matrix> out;
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) out.push_back(s * matrix_unit(static_cast<Index>(n), static_cast<Index>(j), 0));
  return MatrixTuple(std::move(out));
}

// ---------------------------------------------------------------------------
// moments

struct MomentsConfig {
  std::vector<int> p_list{2, 4, 6};
  Index N = 16;
  int trials = 2000;
  std::optional<MatrixTuple> coefficients;
  double z_limit = 4.0;
};

inline Report run_moments(const MomentsConfig& cfg, const RunContext& ctx) {
  Stopwatch clock;
  require(cfg.trials >= 2, "moments: need at least two trials");
  require(!cfg.p_list.empty(), "moments: p list is empty");
  int pmax = 0;
  for (int p : cfg.p_list) {
    require(p >= 2 && p % 2 == 0 && p <= kMaxPairingOrder, "moments: p must be even and <= 12");
    pmax = std::max(pmax, p);
  }
  if (cfg.coefficients) require(pmax <= 8, "moments: coefficient moments need p <= 8");
  Report rep;
  rep.experiment = "moments";
  rep.config = {{"seed", ctx.seed}, {"N", cfg.N}, {"trials", cfg.trials}, {"p", cfg.p_list}, {"z_limit", cfg.z_limit}};
  if (cfg.coefficients)
    rep.config["coefficients"] = {{"n", cfg.coefficients->size()}, {"k", cfg.coefficients->dim()}};

  const std::size_t n = cfg.coefficients ? cfg.coefficients->size() : 1;
  const SeededStream stream{ctx.seed};
  struct TrialMoments {
    std::vector<double> scalar, coeff;
  };
  const auto samples = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
    const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, cfg.N, n}, stream.with_stream(i));
    TrialMoments t;
    auto traces = [&](const Matrix& s, double norm) {
      const Matrix h = s.adjoint() * s;
      std::vector<double> out;
      Matrix acc = h;
      int have = 2;
      for (int p : cfg.p_list) {
        while (have < p) {
          acc = acc * h;
          have += 2;
        }
        out.push_back(acc.trace().real() / norm);
      }
      return out;
    };
    std::vector<int> sorted = cfg.p_list;
    t.scalar = traces(y[0], static_cast<double>(cfg.N));
    if (cfg.coefficients) t.coeff = traces(kron_dense(*cfg.coefficients, y), static_cast<double>(cfg.N));
    return t;
  });

  Json rows = Json::array();
  bool all_within = true, factorial_ok = true;
  for (std::size_t q = 0; q < cfg.p_list.size(); ++q) {
    const int p = cfg.p_list[q];
    std::vector<double> xs;
    for (const auto& s : samples) xs.push_back(s.scalar[q]);
    const auto st = summarize(xs);
    const auto series = exact_moment_scalar_series(p);
    const double exact = series.evaluate(static_cast<double>(cfg.N));
    const double z = st.stderr_ > 0 ? (st.mean - exact) / st.stderr_ : 0.0;
    const bool ok = std::abs(z) <= cfg.z_limit;
    all_within = all_within && ok;
    const bool fact = series.total() == detail::factorial(p / 2);
    factorial_ok = factorial_ok && fact;
    rows.push_back({{"p", p},
                    {"reference", {{"exact_series", series.to_string()}, {"exact", exact}, {"planar", series.coefficient(0)}}},
                    {"measured", {{"mean", st.mean}, {"stderr", st.stderr_}, {"z", z}}}});
    rep.csv_rows.push_back({{"kind", "scalar"}, {"p", p}, {"N", cfg.N}, {"exact", exact}, {"mean", st.mean}, {"stderr", st.stderr_}, {"z", z}});
  }
  rep.results["scalar"] = rows;

  if (cfg.coefficients) {
    Json crow = Json::array();
    for (std::size_t q = 0; q < cfg.p_list.size(); ++q) {
      const int p = cfg.p_list[q];
      std::vector<double> xs;
      for (const auto& s : samples) xs.push_back(s.coeff[q]);
      const auto st = summarize(xs);
      const double exact = exact_moment_coeffs(*cfg.coefficients, p, static_cast<double>(cfg.N));
      const double z = st.stderr_ > 0 ? (st.mean - exact) / st.stderr_ : 0.0;
      const bool ok = std::abs(z) <= cfg.z_limit;
      all_within = all_within && ok;
      crow.push_back({{"p", p}, {"reference", {{"exact", exact}}}, {"measured", {{"mean", st.mean}, {"stderr", st.stderr_}, {"z", z}}}});
      rep.csv_rows.push_back({{"kind", "coefficients"}, {"p", p}, {"N", cfg.N}, {"exact", exact}, {"mean", st.mean}, {"stderr", st.stderr_}, {"z", z}});
    }
    rep.results["coefficients"] = crow;
  }
  rep.add_verdict("monte_carlo_agreement", "|mean - exact| <= z_limit * stderr for every p", all_within);
  rep.add_verdict("factorial_identity", "sum of pairing weights at N = 1 equals (p/2)!", factorial_ok);
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// concentration

struct ConcentrationConfig {
  Index N = 256;
  double t = 0.25;
  int trials = 500;
  MatrixTuple coefficients = normalized_column_tuple(2);
  Index moment_N = 128;
  std::vector<int> moment_p{2, 4};
  int moment_trials = 500;
  bool lemcon = false;
  std::size_t lemcon_n = 2;
  Index lemcon_k = 2;
  Index lemcon_N = 64;
  double lemcon_eps = 0.2;
  int lemcon_samples = 10;
  int lemcon_trials = 40;
};

inline Report run_concentration(const ConcentrationConfig& cfg, const RunContext& ctx) {
  Stopwatch clock;
  Report rep;
  rep.experiment = "concentration";
  rep.config = {{"seed", ctx.seed}, {"N", cfg.N}, {"t", cfg.t}, {"trials", cfg.trials},
                {"coefficients", {{"n", cfg.coefficients.size()}, {"k", cfg.coefficients.dim()}}},
                {"moment_N", cfg.moment_N}, {"moment_p", cfg.moment_p}, {"moment_trials", cfg.moment_trials},
                {"uniform_event", cfg.lemcon}};
  MonteCarloOptions mc;
  mc.workers = ctx.workers;
  const SeededStream base{ctx.seed};

  const auto tail = deviation_tail(cfg.coefficients, cfg.N, cfg.t, cfg.trials, base.fork("tail"), mc);
  rep.results["tail"] = {
      {"measured", {{"mean_estimate", tail.mean_estimate}, {"pilot_trials", tail.pilot_trials}, {"evaluated", tail.evaluated},
                    {"exceedances", tail.exceedances}, {"empirical_fraction", tail.empirical_fraction}}},
      {"bound", {{"tail_bound", tail.bound}, {"allowed_fraction", tail.allowed_fraction}, {"zero_required", tail.zero_required}}}};
  rep.add_verdict("tail_bound", "empirical fraction <= bound + 3 sqrt(bound/trials) + 2/trials; zero exceedances when bound < 1/(10 trials)",
                  tail.pass);

  const auto mom = moment_concentration_check(cfg.moment_N, cfg.moment_p, cfg.moment_trials, base.fork("moments"), mc);
  Json mrows = Json::array();
  for (const auto& r : mom.rows)
    mrows.push_back({{"p", r.p},
                     {"measured", {{"lp_norm", r.lhs}, {"mean_norm", r.mean_norm}, {"slack", r.slack}}},
                     {"bound", {{"rhs", r.rhs}, {"gaussian_lp", r.gaussian_lp}}},
                     {"holds", r.holds}});
  rep.results["moments"] = mrows;
  rep.add_verdict("moment_concentration", "(E||X||^p)^(1/p) <= E||X|| + (pi/2) N^(-1/2) ||g||_p + 3 stderr", mom.pass);

  if (cfg.lemcon) {
    const auto lc = lemcon_event_frequency(cfg.lemcon_n, cfg.lemcon_k, cfg.lemcon_N, cfg.lemcon_eps, cfg.lemcon_samples,
                                           cfg.lemcon_trials, base.fork("uniform-event"), 20, mc);
    rep.results["uniform_event"] = {
        {"sampled_relaxation", true},
        {"measured", {{"event_fraction", lc.event_fraction}, {"event_stderr", lc.event_stderr},
                      {"worst_relative_deviation", lc.worst_relative_deviation}, {"fitted_c_prime", lc.fitted_c_prime}}},
        {"bound", {{"kmax", lc.kmax}, {"precondition_met", lc.precondition_met}}},
        {"n", lc.n}, {"k", lc.k}, {"N", lc.N}, {"eps", lc.eps}, {"samples", lc.samples}, {"trials", lc.trials}};
  }
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// converge

enum class MatrixModel { ginibre, gue };

struct ConvergeConfig {
  StarPolynomial polynomial = StarPolynomial::variable(1, 1);
  std::vector<Index> N_grid{64, 128, 256, 512};
  int trials = 10;
  int depth = 0;  // 0: deepest truncation within the cap
  std::size_t cap = kDefaultBasisCap;
  MatrixModel model = MatrixModel::ginibre;
  bool selfadjoint = false;
  int max_inversions = 1;
  double scalar_tolerance = 0.05;
  double chi_floor = 0.95;
};

inline Report run_strong_convergence(const ConvergeConfig& cfg, const RunContext& ctx) {
  Stopwatch clock;
  detail::require_grid(cfg.N_grid);
  require(cfg.trials >= 1, "converge: trials must be >= 1");
  const StarPolynomial P = cfg.selfadjoint ? selfadjointize(cfg.polynomial) : cfg.polynomial;
  require(P.degree() <= 8, "converge: polynomial degree over cap");
  const FamilyKind kind = cfg.model == MatrixModel::gue ? FamilyKind::semicircular : FamilyKind::circular;
  const int n = P.num_vars();
  const int depth = cfg.depth > 0 ? cfg.depth : std::max(1, max_depth_within_cap(kind, n, cfg.cap, P.degree()));

  Report rep;
  rep.experiment = "converge";
  rep.config = {{"seed", ctx.seed},
                {"polynomial", to_text(cfg.polynomial)},
                {"N_grid", detail::index_list(cfg.N_grid)},
                {"trials", cfg.trials},
                {"model", cfg.model == MatrixModel::gue ? "gue" : "ginibre"},
                {"selfadjointize", cfg.selfadjoint},
                {"depth", depth},
                {"cap", cfg.cap}};

  FockOptions fo;
  fo.cap = cfg.cap;
  const auto ref = free_poly_norm(P, FreeFamily(kind, n, depth, cfg.cap), fo);
  rep.results["reference"] = {{"reference", {{"free_norm", ref.value}, {"previous_depth_value", ref.previous},
                                             {"relative_gap", ref.relative_gap}, {"depth", ref.depth},
                                             {"basis_size", ref.basis_size}, {"converged", ref.converged},
                                             {"family", to_string(kind)}}}};

  const SeededStream base{ctx.seed};
  const NormOptions norm = monte_carlo_norm_options();
  Json rows = Json::array();
  std::vector<double> gaps, chis;
  for (std::size_t g = 0; g < cfg.N_grid.size(); ++g) {
    const Index N = cfg.N_grid[g];
    const auto values = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
      const SeededStream s = base.with_stream((static_cast<std::uint64_t>(g) << 32) | i);
      const MatrixTuple x = sample_tuple(
          {cfg.model == MatrixModel::gue ? EnsembleKind::gue : EnsembleKind::ginibre, N, static_cast<std::size_t>(n)}, s);
      return estimate_spectral_norm(evaluate(P, x, 1 << 14), norm).value;
    });
    const auto st = summarize(values);
    const double chi = st.mean / ref.value;
    const double gap = std::abs(st.median - ref.value) / ref.value;
    gaps.push_back(gap);
    chis.push_back(chi);
    rows.push_back({{"N", N}, {"measured", stats_json(st)}, {"chi", chi}, {"median_gap", gap}});
    rep.csv_rows.push_back({{"N", N}, {"mean", st.mean}, {"stderr", st.stderr_}, {"median", st.median},
                            {"reference", ref.value}, {"chi", chi}, {"median_gap", gap}});
  }
  rep.results["per_N"] = rows;
  const int inversions = detail::count_increases(gaps);
  rep.results["gap_increases"] = inversions;

  auto& trend = rep.add_verdict("gap_trend", "median gap to the reference decreases along the grid with at most " +
                                                 std::to_string(cfg.max_inversions) + " inversion(s)",
                                inversions <= cfg.max_inversions);
  trend.withheld = !ref.converged;
  auto& floor = rep.add_verdict("chi_floor", "mean / reference >= " + std::to_string(cfg.chi_floor) + " at every N",
                                *std::min_element(chis.begin(), chis.end()) >= cfg.chi_floor);
  floor.withheld = !ref.converged;
  if (cfg.polynomial.coeff_dim() == 1) {
    auto& sc = rep.add_verdict("scalar_accuracy", "|mean / reference - 1| <= scalar_tolerance at the largest N",
                               std::abs(chis.back() - 1.0) <= cfg.scalar_tolerance);
    sc.withheld = !ref.converged;
  }
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// tightness

struct TightnessConfig {
  MatrixTuple coefficients = normalized_column_tuple(4);
  std::vector<Index> N_grid{64, 128, 256, 512};
  int trials = 4;
  int depth = 0;
  std::size_t cap = 150000;
  double ceiling = 2.2;
  double fock_fraction = 0.95;
};

struct TightnessSummary {
  std::vector<double> c_hat;
  double proxy = 0.0;
  double fock_ratio = 0.0;
};

inline Report estimate_tightness(const TightnessConfig& cfg, const RunContext& ctx, TightnessSummary* summary = nullptr) {
  Stopwatch clock;
  detail::require_grid(cfg.N_grid);
  const MatrixTuple& a = cfg.coefficients;
  const RCNorms rc = rc_norms(a);
  require(rc.rc > 0, "tightness: coefficients must be non-zero");
  const int n = static_cast<int>(a.size());
  const int depth = cfg.depth > 0 ? cfg.depth : default_depth(FamilyKind::circular, n, cfg.cap);

  Report rep;
  rep.experiment = "tightness";
  rep.config = {{"seed", ctx.seed}, {"N_grid", detail::index_list(cfg.N_grid)}, {"trials", cfg.trials},
                {"coefficients", {{"n", a.size()}, {"k", a.dim()}}}, {"depth", depth}, {"cap", cfg.cap}};

  const SeededStream base{ctx.seed};
  const NormOptions norm = monte_carlo_norm_options();
  Json rows = Json::array();
  std::vector<double> c_hat;
  for (std::size_t g = 0; g < cfg.N_grid.size(); ++g) {
    const Index N = cfg.N_grid[g];
    const auto values = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
      return sample_sa_norm(a, N, base.with_stream((static_cast<std::uint64_t>(g) << 32) | i), norm);
    });
    const auto st = summarize(values);
    c_hat.push_back(st.mean / rc.rc);
    rows.push_back({{"N", N}, {"measured", stats_json(st)}, {"c_hat", st.mean / rc.rc}});
    rep.csv_rows.push_back({{"N", N}, {"mean", st.mean}, {"stderr", st.stderr_}, {"c_hat", st.mean / rc.rc}});
  }
  double proxy = 0.0;
  for (std::size_t g = cfg.N_grid.size() / 2; g < cfg.N_grid.size(); ++g) proxy = std::max(proxy, c_hat[g]);

  FockOptions fo;
  fo.cap = cfg.cap;
  const auto fock = free_norm(a, FreeFamily(FamilyKind::circular, n, depth, cfg.cap), fo);
  const double fock_ratio = fock.value / rc.rc;
  rep.results["per_N"] = rows;
  rep.results["measured"] = {{"limsup_proxy", proxy}, {"c_hat_largest_N", c_hat.back()}};
  rep.results["reference"] = {{"rc", rc.rc}, {"row", rc.row}, {"col", rc.col}, {"free_norm", fock.value},
                              {"free_norm_over_rc", fock_ratio}, {"previous_depth_value", fock.previous},
                              {"relative_gap", fock.relative_gap}, {"converged", fock.converged}};
  rep.results["bound"] = {{"s2_envelope", 2.0}, {"ceiling", cfg.ceiling}};
  rep.add_verdict("ceiling", "c_hat at the largest N <= ceiling", c_hat.back() <= cfg.ceiling);
  rep.add_verdict("fock_floor", "c_hat at the largest N >= fock_fraction * free_norm / rc",
                  c_hat.back() >= cfg.fock_fraction * fock_ratio);
  if (summary) *summary = {c_hat, proxy, fock_ratio};
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// growth

enum class GrowthSpace { l1_max, oh, rc_sum, l2_max };

inline std::string to_string(GrowthSpace s) {
  switch (s) {
    case GrowthSpace::l1_max: return "l1_max";
    case GrowthSpace::oh: return "oh";
    case GrowthSpace::rc_sum: return "rc_sum";
    case GrowthSpace::l2_max: return "l2_max";
  }
  return "unknown";
}

inline GrowthSpace parse_growth_space(const std::string& s) {
  if (s == "l1_max") return GrowthSpace::l1_max;
  if (s == "oh") return GrowthSpace::oh;
  if (s == "rc_sum") return GrowthSpace::rc_sum;
  if (s == "l2_max") return GrowthSpace::l2_max;
  throw InvalidArgument("unknown growth space: " + s);
}

struct GrowthConfig {
  GrowthSpace space = GrowthSpace::oh;
  int n = 16;
  Index N = 512;
  int trials = 1;
  int radius = 0;                   // ball radius for the Haar-unitary models, 0: automatic
  std::size_t dim_cap = 1500000;    // N * ball size for the Haar-unitary models
};

// X -> sum_j Y_j X Y_j^*, which is sum_j Y_j (x) conj(Y_j) on row-major vec(X).
inline LinearOperator oh_operator(const MatrixTuple& y) {
  const Index N = y.dim();
  auto ys = std::make_shared<const MatrixTuple>(y);
  auto fwd = [ys, N](const Vector& in, Vector& out) {
    Eigen::Map<const RowMajorMatrix> X(in.data(), N, N);
    Eigen::Map<RowMajorMatrix> W(out.data(), N, N);
    W.setZero();
    Matrix T(N, N);
    for (const auto& Y : *ys) {
      T.noalias() = X * Y.adjoint();
      W.noalias() += Y * T;
    }
  };
  auto adj = [ys, N](const Vector& in, Vector& out) {
    Eigen::Map<const RowMajorMatrix> X(in.data(), N, N);
    Eigen::Map<RowMajorMatrix> W(out.data(), N, N);
    W.setZero();
    Matrix T(N, N);
    for (const auto& Y : *ys) {
      T.noalias() = X * Y;
      W.noalias() += Y.adjoint() * T;
    }
  };
  return LinearOperator(N * N, fwd, adj, "sum Y (x) conj(Y)");
}

inline Matrix dft_matrix(int n) {
  Matrix h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = std::polar(1.0 / std::sqrt(static_cast<double>(n)), 2.0 * std::numbers::pi * i * j / n);
  return h;
}

inline Report run_growth_witness(const GrowthConfig& cfg, const RunContext& ctx) {
  Stopwatch clock;
  require(cfg.n >= 1 && cfg.N >= 1 && cfg.trials >= 1, "growth: n, N and trials must be positive");
  Report rep;
  rep.experiment = "growth";
  rep.config = {{"seed", ctx.seed}, {"space", to_string(cfg.space)}, {"n", cfg.n}, {"N", cfg.N}, {"trials", cfg.trials}};
  const SeededStream base{ctx.seed};
  const double n = cfg.n, sn = std::sqrt(n), qn = std::pow(n, 0.25);
  const auto ct = constants_table(cfg.n);

  if (cfg.space == GrowthSpace::oh) {
    struct Row {
      double phi, sum_tau;
      bool converged;
    };
    const auto rows = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
      const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, cfg.N, static_cast<std::size_t>(cfg.n)}, base.with_stream(i));
      NormOptions o;
      o.restarts = 1;
      o.tol = 1e-8;
      o.max_iterations = 400;
      o.start = Vector(Vector::Zero(cfg.N * cfg.N));
      for (Index d = 0; d < cfg.N; ++d) (*o.start)(d * cfg.N + d) = 1.0 / std::sqrt(static_cast<double>(cfg.N));
      const auto est = estimate_spectral_norm(oh_operator(y), o);
      double tau = 0.0;
      for (const auto& Y : y) tau += Y.squaredNorm() / static_cast<double>(cfg.N);
      return Row{est.value, tau, est.converged};
    });
    std::vector<double> phi, s, tau;
    bool conv = true;
    for (const auto& r : rows) {
      phi.push_back(r.phi);
      s.push_back(std::sqrt(r.phi));
      tau.push_back(r.sum_tau);
      conv = conv && r.converged;
    }
    const auto ps = summarize(phi), ss = summarize(s);
    const double ratio = ss.mean / qn;
    rep.results["measured"] = {{"sum_Y_tensor_conjY", stats_json(ps)}, {"norm_S", stats_json(ss)},
                               {"sum_tau_abs_sq", stats_json(summarize(tau))}, {"ratio_norm_over_rc", ratio},
                               {"converged", conv}};
    rep.results["reference"] = {{"rc", qn}, {"law_of_large_numbers_floor", n}};
    rep.results["bound"] = {{"constant_lower", ct.oh.lower}, {"constant_upper", ct.oh.upper}};
    rep.add_verdict("lln_floor", "min over trials of ||sum Y_j (x) conj(Y_j)|| >= 0.95 n", ps.min >= 0.95 * n);
    rep.add_verdict("ratio", "mean ||S|| / n^(1/4) >= n^(1/4) / 2", ratio >= ct.oh.lower);
  } else if (cfg.space == GrowthSpace::rc_sum) {
    struct Row {
      double lower, upper, intersection;
    };
    const auto rows = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
      const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, cfg.N, static_cast<std::size_t>(cfg.n)}, base.with_stream(i));
      const RCNorms r = rc_norms(y);
      double tau = 0.0;
      for (const auto& Y : y) tau += Y.squaredNorm() / static_cast<double>(cfg.N);
      return Row{std::sqrt(tau), std::min(r.row, r.col), r.rc};
    });
    std::vector<double> lo, up, in;
    for (const auto& r : rows) {
      lo.push_back(r.lower);
      up.push_back(r.upper);
      in.push_back(r.intersection);
    }
    const auto ls = summarize(lo);
    rep.results["measured"] = {{"norm_S_lower", stats_json(ls)}, {"norm_S_upper", stats_json(summarize(up))},
                               {"intersection_norm", stats_json(summarize(in))}, {"ratio_norm_over_rc", ls.mean}};
    rep.results["reference"] = {{"rc", 1.0}, {"intersection_rc", sn}};
    rep.results["bound"] = {{"constant_lower", ct.r_plus_c.lower}, {"constant_upper", ct.r_plus_c.upper}};
    rep.add_verdict("sqrt_n_floor", "mean certified lower bound of ||S|| >= 0.9 sqrt(n)", ls.mean >= 0.9 * sn);
  } else {
    const bool l2 = cfg.space == GrowthSpace::l2_max;
    int radius = cfg.radius;
    if (radius <= 0) {
      radius = 1;
      while (static_cast<double>(free_group_ball_size(cfg.n, radius + 1)) * cfg.N <= static_cast<double>(cfg.dim_cap) &&
             free_group_ball_size(cfg.n, radius + 1) <= kDefaultBasisCap)
        ++radius;
    }
    const FreeFamily fam(FamilyKind::haar_unitary, cfg.n, radius);
    const Matrix h = l2 ? dft_matrix(cfg.n) : Matrix(Matrix::Identity(cfg.n, cfg.n));
    struct Row {
      double value, previous, rc;
      bool converged;
    };
    const auto rows = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
      const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, cfg.N, static_cast<std::size_t>(cfg.n)}, base.with_stream(i));
      std::vector<Matrix> mixed;
      for (int r = 0; r < cfg.n; ++r) {
        Matrix m = Matrix::Zero(cfg.N, cfg.N);
        for (int j = 0; j < cfg.n; ++j) m += h(r, j) * y[j];
        mixed.push_back(std::move(m));
      }
      const MatrixTuple ym(std::move(mixed));
      FockOptions fo;
      fo.norm = monte_carlo_norm_options();
      const auto fr = free_norm(ym, fam, fo);
      return Row{fr.value, fr.previous, rc_norms(ym).rc, fr.converged};
    });
    std::vector<double> v, prev, rcs;
    bool conv = true;
    for (const auto& r : rows) {
      v.push_back(r.value);
      prev.push_back(r.previous);
      rcs.push_back(r.rc);
      conv = conv && r.converged;
    }
    const auto vs = summarize(v), rs = summarize(rcs);
    rep.config["radius"] = radius;
    rep.results["measured"] = {{"norm_S", stats_json(vs)}, {"previous_radius", stats_json(summarize(prev))},
                               {"rc_of_Y", stats_json(rs)}, {"converged", conv}, {"model", "reduced free group algebra"}};
    Json ref = {{"n", n}, {"sqrt_n", sn}, {"rc_coefficients", sn}};
    if (l2) {
      const auto lb = l22_bounds(h);
      ref["l22_sandwich_i"] = {lb.sandwich_i.lower, lb.sandwich_i.upper};
      ref["l22_sandwich_ii"] = {lb.sandwich_ii.lower, lb.sandwich_ii.upper};
    }
    rep.results["reference"] = ref;
    rep.results["bound"] = {{"max_space_lower", ct.max_space_lower}, {"universal_upper", ct.universal_upper}};
    bool env = true;
    for (const auto& r : rows) env = env && r.value >= r.rc * (1 - 1e-6) && r.value <= 2.0 * r.rc * 1.03;
    rep.add_verdict("haagerup_envelope", "rc(Y) <= ||sum Y_j (x) z_j|| <= 2 rc(Y) (1.03) in every trial", env);
  }
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// blocksum

struct BlocksumConfig {
  int n = 25;
  std::vector<Index> alpha{8, 16, 32, 64};
  int trials = 100;
  int depth = 0;  // > 0: also compute a truncated free lower bound on the smallest block
  double required_fraction = 0.95;
};

inline Report run_blocksum_witness(const BlocksumConfig& cfg, const RunContext& ctx) {
  Stopwatch clock;
  require(cfg.n >= 1 && cfg.trials >= 1, "blocksum: n and trials must be positive");
  Report rep;
  rep.experiment = "blocksum";
  rep.config = {{"seed", ctx.seed}, {"n", cfg.n}, {"alpha", detail::index_list(cfg.alpha)}, {"trials", cfg.trials},
                {"depth", cfg.depth}, {"required_fraction", cfg.required_fraction}};
  const SeededStream base{ctx.seed};
  struct Row {
    double rc;
    double fock_lower;
  };
  const int depth = cfg.depth > 0 ? std::min(cfg.depth, max_depth_within_cap(FamilyKind::circular, cfg.n, 20000)) : 0;
  const auto rows = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
    const BlockFamily fam = sample_block_family(cfg.alpha, static_cast<std::size_t>(cfg.n), base.with_stream(i));
    double rc = 0.0;
    for (const auto& [m, t] : fam.blocks) rc = std::max(rc, rc_norms(t).rc);
    double lower = 0.0;
    if (depth >= 1) {
      FockOptions fo;
      fo.norm = monte_carlo_norm_options();
      fo.compare_previous = false;
      lower = free_norm(fam.blocks.begin()->second, FreeFamily(FamilyKind::circular, cfg.n, depth), fo).value;
    }
    return Row{rc, lower};
  });
  std::vector<double> up, lo;
  int holds = 0;
  for (const auto& r : rows) {
    up.push_back(2.0 * r.rc);
    lo.push_back(r.fock_lower);
    if (2.0 * r.rc < cfg.n) ++holds;
    rep.csv_rows.push_back({{"upper_bound", 2.0 * r.rc}, {"n", cfg.n}, {"holds", 2.0 * r.rc < cfg.n}});
  }
  const double frac = static_cast<double>(holds) / cfg.trials;
  rep.results["measured"] = {{"witness_fraction", frac}};
  rep.results["bound"] = {{"two_rc_u", stats_json(summarize(up))}};
  if (depth >= 1) rep.results["bound"]["truncated_free_lower_smallest_block"] = stats_json(summarize(lo));
  rep.results["reference"] = {{"sum_tau_abs_c_sq", static_cast<double>(cfg.n)},
                              {"free_haar_sum_value", 2.0 * std::sqrt(static_cast<double>(cfg.n) - 1.0)}};
  rep.add_verdict("witness", "2 rc(u) < n in at least required_fraction of trials", frac >= cfg.required_fraction);
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateConfig {
  double eps = 0.1;
  std::vector<Index> k_grid{2, 4, 8};
  std::vector<Index> N_grid{8, 16, 32, 64};
  int trials = 20;
  int samples = 4;
  double coverage_required = 0.99;
};

struct CalibrationResult {
  double gamma = 0.0;
  double coverage = 0.0;
  std::vector<double> excess;
  std::vector<double> x;
};

// Fits gamma in worst/rc - 2 ~ gamma ((ln k + 1)/N)^(1/2) over sampled tuples:
// diagonal units (the block-diagonal extreme case), the identity and random tuples.
// The worst case over samples is a heuristic lower bound on the true supremum.
inline Report calibrate_gamma(const CalibrateConfig& cfg, const RunContext& ctx, CalibrationResult* out = nullptr) {
  Stopwatch clock;
  detail::require_grid(cfg.k_grid);
  detail::require_grid(cfg.N_grid);
  require(cfg.k_grid.size() * cfg.N_grid.size() >= 2, "calibrate: grids must give at least two points");
  Report rep;
  rep.experiment = "calibrate";
  rep.config = {{"seed", ctx.seed}, {"eps", cfg.eps}, {"k_grid", detail::index_list(cfg.k_grid)},
                {"N_grid", detail::index_list(cfg.N_grid)}, {"trials", cfg.trials}, {"samples", cfg.samples}};
  const SeededStream base{ctx.seed};
  const NormOptions norm = monte_carlo_norm_options();
  std::vector<double> xs, es, worst_all;
  Json rows = Json::array();
  std::uint64_t cell = 0;
  for (Index k : cfg.k_grid) {
    std::vector<std::pair<std::string, MatrixTuple>> cands;
    {
      std::vector<Matrix> d;
      for (Index j = 0; j < k; ++j) d.push_back(matrix_unit(k, j, j));
      cands.emplace_back("diagonal_units", MatrixTuple(std::move(d)));
      cands.emplace_back("identity", MatrixTuple{Matrix(Matrix::Identity(k, k))});
      for (int s = 0; s < cfg.samples; ++s)
        cands.emplace_back("random", sample_coefficient_tuple(2, k, base.fork("coefficients").with_stream((k << 16) | s)));
    }
    for (Index N : cfg.N_grid) {
      ++cell;
      double worst = 0.0;
      std::string worst_name;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const auto& a = cands[c].second;
        const double rc = rc_norms(a).rc;
        const auto vals = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t i) {
          return sample_sa_norm(a, N, base.with_stream((cell << 40) | (c << 20) | i), norm);
        });
        const double m = summarize(vals).mean / rc;
        if (m > worst) {
          worst = m;
          worst_name = cands[c].first;
        }
      }
      const double x = std::sqrt((std::log(static_cast<double>(k)) + 1.0) / static_cast<double>(N));
      const double e = std::max(0.0, worst - 2.0);
      xs.push_back(x);
      es.push_back(e);
      worst_all.push_back(worst);
      rows.push_back({{"k", k}, {"N", N}, {"measured", {{"worst_ratio", worst}, {"excess", e}, {"worst_candidate", worst_name}}}, {"x", x}});
      rep.csv_rows.push_back({{"k", k}, {"N", N}, {"worst_ratio", worst}, {"excess", e}, {"x", x}});
    }
  }
  double sxx = 0.0, sxe = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += xs[i] * xs[i];
    sxe += xs[i] * es[i];
  }
  if (!(sxx > 0)) throw std::runtime_error("calibrate: degenerate fit");
  const double gamma = sxe / sxx;
  int covered = 0;
  Json resid = Json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    resid.push_back(es[i] - gamma * xs[i]);
    if (worst_all[i] <= ht_bound(1.0, 1.0, cfg.eps, 0.0) / 2.0 * (2.0 + gamma * xs[i]) + 1e-12) ++covered;
  }
  const double coverage = static_cast<double>(covered) / xs.size();
  rep.results["per_cell"] = rows;
  rep.results["measured"] = {{"fitted_gamma", gamma}, {"residuals", resid}, {"coverage", coverage}, {"heuristic_supremum", true}};
  rep.add_verdict("fit_positive", "fitted gamma > 0", gamma > 0);
  rep.add_verdict("coverage", "(1 + eps)(2 + gamma x) covers at least the required fraction of cells",
                  coverage >= cfg.coverage_required);
  if (out) *out = {gamma, coverage, es, xs};
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// ealpha

struct EalphaConfig {
  int n = 3;
  double c_eps = 4.0;
  unsigned count = 4;
  std::vector<Index> k_grid{1, 2};
  int samples = 5;
  int trials = 3;
  double eps = 0.5;
  Index max_block = 2048;
  double floor_fraction = 0.95;
};

inline Report run_ealpha_sandwich(const EalphaConfig& cfg, const RunContext& ctx) {
  Stopwatch clock;
  require(cfg.n >= 1 && cfg.c_eps >= 1 && cfg.samples >= 1 && cfg.trials >= 1, "ealpha: invalid parameters");
  const unsigned a = static_cast<unsigned>(std::llround(cfg.c_eps * cfg.n));
  const auto seq = lacunary_sequence(a, cfg.count);
  std::vector<Index> alpha;
  for (const auto& v : seq)
    if (v <= cfg.max_block) alpha.push_back(static_cast<Index>(v));
  Report rep;
  rep.experiment = "ealpha";
  Json seq_json = Json::array();
  for (const auto& v : seq) seq_json.push_back(v.str());
  rep.config = {{"seed", ctx.seed}, {"n", cfg.n}, {"c_eps", cfg.c_eps}, {"a", a}, {"lacunary", seq_json},
                {"blocks_used", detail::index_list(alpha)}, {"k_grid", detail::index_list(cfg.k_grid)},
                {"samples", cfg.samples}, {"trials", cfg.trials}, {"eps", cfg.eps}};
  const SeededStream base{ctx.seed};
  const NormOptions norm = monte_carlo_norm_options();
  Json rows = Json::array();
  bool upper_ok = true, lower_ok = true, any = false;
  for (Index k : cfg.k_grid) {
    std::vector<Index> blocks;
    for (Index m : alpha)
      if (static_cast<double>(m) >= cfg.c_eps * cfg.n * static_cast<double>(k * k)) blocks.push_back(m);
    if (blocks.empty()) {
      rows.push_back({{"k", k}, {"admissible_blocks", Json::array()}});
      continue;
    }
    any = true;
    std::vector<MatrixTuple> ys;
    for (int s = 0; s < cfg.samples; ++s)
      ys.push_back(sample_coefficient_tuple(static_cast<std::size_t>(cfg.n), k, base.fork("coefficients").with_stream((k << 16) | s)));
    const auto ratios = parallel_map(static_cast<std::size_t>(cfg.trials), ctx.workers, [&](std::size_t t) {
      const BlockFamily fam = sample_block_family(blocks, static_cast<std::size_t>(cfg.n), base.with_stream((k << 32) | t));
      std::vector<double> r;
      for (const auto& y : ys) {
        double sup = 0.0;
        for (const auto& [m, x] : fam.blocks) sup = std::max(sup, estimate_spectral_norm(kron_apply(y, x), norm).value);
        r.push_back(sup / rc_norms(y).rc);
      }
      return r;
    });
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (const auto& v : ratios)
      for (double x : v) {
        hi = std::max(hi, x);
        lo = std::min(lo, x);
      }
    upper_ok = upper_ok && hi <= 2.0 + cfg.eps;
    lower_ok = lower_ok && lo >= cfg.floor_fraction;
    rows.push_back({{"k", k}, {"admissible_blocks", detail::index_list(blocks)},
                    {"measured", {{"worst_ratio", hi}, {"least_ratio", lo}}}, {"bound", {{"upper", 2.0 + cfg.eps}, {"lower", 1.0}}}});
    rep.csv_rows.push_back({{"k", k}, {"worst_ratio", hi}, {"least_ratio", lo}});
  }
  rep.results["per_k"] = rows;
  rep.results["sampled_relaxation"] = true;
  auto& up = rep.add_verdict("upper", "sup over admissible blocks of ||sum x_j (x) y_j|| / rc <= 2 + eps", upper_ok);
  up.withheld = !any;
  auto& lo = rep.add_verdict("lower", "the same supremum >= floor_fraction * rc", lower_ok);
  lo.withheld = !any;
  rep.wall_seconds = clock.seconds();
  return rep;
}

}  // namespace rmt
