#pragma once

#include "bounds.hpp"
#include "core.hpp"
#include "ensembles.hpp"
#include "numlin.hpp"
#include "parallel.hpp"
#include "stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace rmt {

// Norm settings for Monte Carlo loops: a single seeded start is enough because every
// trial is already an independent random instance. Lanczos beats a dense eigensolve
// from a few hundred dimensions on, so the dense path is kept for small operators only.
inline NormOptions monte_carlo_norm_options() {
  NormOptions o;
  o.tol = 1e-7;
  o.restarts = 1;
  o.exact_threshold = 128;
  return o;
}

struct MonteCarloOptions {
  NormOptions norm = monte_carlo_norm_options();
  unsigned workers = 1;
};

// n matrices in M_k with i.i.d. complex Gaussian entries, rescaled to rc = 1.
inline MatrixTuple sample_coefficient_tuple(std::size_t n, Index k, const SeededStream& stream) {
  const MatrixTuple raw = sample_tuple({EnsembleKind::ginibre, k, n}, stream);
  return raw.scaled(1.0 / rc_norms(raw).rc);
}

// ||sum_j Y_j (x) a_j|| for the Ginibre tuple of trial `trial`.
inline double sample_sa_norm(const MatrixTuple& a, Index N, const SeededStream& trial, const NormOptions& norm) {
  const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, N, a.size()}, trial);
  return estimate_spectral_norm(kron_apply(a, y), norm).value;
}

struct TailReport {
  Index N = 0;
  double t = 0.0;
  int trials = 0;        // evaluated trials
  int pilot_trials = 0;  // extra trials, on their own stream, for the mean
  int evaluated = 0;
  int exceedances = 0;
  double empirical_fraction = 0.0;  // exceedances / evaluated
  double mean_estimate = 0.0;
  double bound = 0.0;
  double allowed_fraction = 0.0;
  bool zero_required = false;
  bool pass = false;
};

// Tail of | ||S_a|| - E||S_a|| |: the mean comes from a separate pilot run of
// trials / 2 samples, and exceedances are counted on all `trials` samples.
inline TailReport deviation_tail(const MatrixTuple& a, Index N, double t, int trials, const SeededStream& stream,
                                 const MonteCarloOptions& mc = {}) {
  require(!a.empty(), "deviation_tail: empty tuple");
  require(rc_norms(a).rc <= 1.0 + 1e-12, "deviation_tail: coefficient tuple must satisfy rc <= 1");
  require(trials >= 100, "deviation_tail: need at least 100 trials");
  require(N >= 1 && t >= 0, "deviation_tail: invalid N or t");
  TailReport r;
  r.N = N;
  r.t = t;
  r.trials = trials;
  r.pilot_trials = trials / 2;
  r.evaluated = trials;
  const SeededStream pilot_stream = stream.fork("pilot");
  const auto pilot = parallel_map(static_cast<std::size_t>(r.pilot_trials), mc.workers, [&](std::size_t i) {
    return sample_sa_norm(a, N, pilot_stream.with_stream(i), mc.norm);
  });
  const auto norms = parallel_map(static_cast<std::size_t>(trials), mc.workers, [&](std::size_t i) {
    return sample_sa_norm(a, N, stream.with_stream(i), mc.norm);
  });
  r.mean_estimate = summarize(pilot).mean;
  for (double v : norms)
    if (std::abs(v - r.mean_estimate) > t) ++r.exceedances;
  r.empirical_fraction = static_cast<double>(r.exceedances) / r.evaluated;
  r.bound = tail_bound(static_cast<double>(N), t);
  r.allowed_fraction = r.bound + 3.0 * std::sqrt(r.bound / r.evaluated) + 2.0 / r.evaluated;
  r.zero_required = r.bound < 1.0 / (10.0 * r.evaluated);
  r.pass = r.empirical_fraction <= r.allowed_fraction && !(r.zero_required && r.exceedances > 0);
  return r;
}

struct LemconReport {
  std::size_t n = 0;
  Index k = 0;
  Index N = 0;
  double eps = 0.0;
  int samples = 0;
  int trials = 0;
  int pilot_trials = 0;
  int event_count = 0;
  double event_fraction = 0.0;
  double event_stderr = 0.0;
  std::int64_t kmax = 0;
  bool precondition_met = false;
  double fitted_c_prime = 0.0;   // from 1 - exp(-c' eps^2 N) = fraction (rule of three if no failures)
  double worst_relative_deviation = 0.0;
};

// Sampled version of the event "| ||S_a|| - E||S_a|| | <= eps E||S_a|| for all a with
// rc(a) = 1": the quantifier runs over `samples` fixed random tuples.
inline LemconReport lemcon_event_frequency(std::size_t n, Index k, Index N, double eps, int samples, int trials,
                                           const SeededStream& stream, int pilot_trials = 20,
                                           const MonteCarloOptions& mc = {}) {
  require(n >= 1 && k >= 1 && N >= 1, "lemcon_event_frequency: dimensions must be positive");
  require(samples >= 1 && trials >= 1 && pilot_trials >= 2, "lemcon_event_frequency: counts must be positive");
  require(eps > 0, "lemcon_event_frequency: eps must be positive");
  LemconReport r;
  r.n = n;
  r.k = k;
  r.N = N;
  r.eps = eps;
  r.samples = samples;
  r.trials = trials;
  r.pilot_trials = pilot_trials;
  r.kmax = lemcon_kmax(static_cast<double>(N), static_cast<double>(n), 1.0);
  r.precondition_met = N >= static_cast<Index>(n) * k * k && k <= r.kmax;

  const SeededStream coeff = stream.fork("coefficients");
  std::vector<MatrixTuple> tuples;
  for (int s = 0; s < samples; ++s) tuples.push_back(sample_coefficient_tuple(n, k, coeff.with_stream(s)));

  const SeededStream pilot = stream.fork("pilot");
  const auto pilot_norms = parallel_map(static_cast<std::size_t>(pilot_trials), mc.workers, [&](std::size_t i) {
    const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, N, n}, pilot.with_stream(i));
    std::vector<double> v;
    for (const auto& a : tuples) v.push_back(estimate_spectral_norm(kron_apply(a, y), mc.norm).value);
    return v;
  });
  std::vector<double> mean(samples, 0.0);
  for (const auto& row : pilot_norms)
    for (int s = 0; s < samples; ++s) mean[s] += row[s] / pilot_trials;
  for (double m : mean)
    if (!(m > 0)) throw std::runtime_error("lemcon_event_frequency: pilot run produced a zero mean");

  const auto worst = parallel_map(static_cast<std::size_t>(trials), mc.workers, [&](std::size_t i) {
    const MatrixTuple y = sample_tuple({EnsembleKind::ginibre, N, n}, stream.with_stream(i));
    double w = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double v = estimate_spectral_norm(kron_apply(tuples[s], y), mc.norm).value;
      w = std::max(w, std::abs(v - mean[s]) / mean[s]);
    }
    return w;
  });
  for (double w : worst) {
    if (w <= eps) ++r.event_count;
    r.worst_relative_deviation = std::max(r.worst_relative_deviation, w);
  }
  r.event_fraction = static_cast<double>(r.event_count) / trials;
  r.event_stderr = std::sqrt(r.event_fraction * (1.0 - r.event_fraction) / trials);
  const double miss = r.event_count == trials ? std::min(1.0, 3.0 / trials) : 1.0 - r.event_fraction;
  r.fitted_c_prime = miss > 0 && miss < 1 ? -std::log(miss) / (eps * eps * static_cast<double>(N)) : 0.0;
  return r;
}

struct MomentRow {
  int p = 0;
  double lhs = 0.0;        // (E ||X||^p)^(1/p), estimated
  double mean_norm = 0.0;  // E ||X||, estimated
  double gaussian_lp = 0.0;
  double rhs = 0.0;        // mean_norm + (pi/2) N^(-1/2) ||g||_p
  double slack = 0.0;
  bool holds = false;
};

struct MomentConcentrationReport {
  Index N = 0;
  int trials = 0;
  std::vector<MomentRow> rows;
  bool pass = false;
};

// Checks (E||X||^p)^(1/p) <= E||X|| + (pi/2) sigma ||g||_p with sigma = N^(-1/2) and g
// a real standard Gaussian, for X a Ginibre matrix.
inline MomentConcentrationReport moment_concentration_check(Index N, const std::vector<int>& p_list, int trials,
                                                            const SeededStream& stream, const MonteCarloOptions& mc = {}) {
  require(N >= 1 && trials >= 2, "moment_concentration_check: need N >= 1 and at least two trials");
  const auto norms = parallel_map(static_cast<std::size_t>(trials), mc.workers, [&](std::size_t i) {
    return estimate_spectral_norm(sample_ginibre(N, stream.with_stream(i)), mc.norm).value;
  });
  MomentConcentrationReport rep;
  rep.N = N;
  rep.trials = trials;
  rep.pass = true;
  const auto base = summarize(norms);
  for (int p : p_list) {
    require(p >= 1, "moment_concentration_check: p must be positive");
    std::vector<double> powers;
    for (double x : norms) powers.push_back(std::pow(x, p));
    const auto ps = summarize(powers);
    MomentRow row;
    row.p = p;
    row.lhs = std::pow(ps.mean, 1.0 / p);
    row.mean_norm = base.mean;
    row.gaussian_lp = real_gaussian_lp_norm(p);
    row.rhs = base.mean + 0.5 * std::numbers::pi / std::sqrt(static_cast<double>(N)) * row.gaussian_lp;
    row.slack = 3.0 * (ps.stderr_ / (p * std::pow(row.lhs, p - 1)) + base.stderr_);
    row.holds = row.lhs <= row.rhs + row.slack;
    rep.pass = rep.pass && row.holds;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace rmt
