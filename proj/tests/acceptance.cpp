// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers and the
// wall-clock time against its budget. Exit status is non-zero when any line fails.

#include "rmt/rmt.hpp"

#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace rmt;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_seconds, const std::function<Outcome()>& body) {
  Stopwatch clock;
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = clock.seconds();
  const bool in_time = t < budget_seconds;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %2d %s | %s | %.2fs of %.0fs%s\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), t, budget_seconds,
              in_time ? "" : " (over budget)");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool verdict(const Report& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v.pass && !v.withheld;
  return false;
}

}  // namespace

int main() {
  const std::uint64_t seed = 20240601;

  criterion(1, "pairing identity at N=1", 1, [] {
    bool ok = true;
    std::string d;
    for (int p = 2; p <= 10; p += 2) {
      const auto s = exact_moment_scalar_series(p);
      std::int64_t f = 1;
      for (int i = 2; i <= p / 2; ++i) f *= i;
      ok = ok && s.total() == f && exact_moment_scalar(p, 1.0) == static_cast<double>(f);
      d += fmt("p=%d:%lld ", p, static_cast<long long>(s.total()));
    }
    return Outcome{ok, d};
  });

  criterion(2, "Catalan leading coefficient", 1, [] {
    bool ok = true;
    std::string d;
    const std::int64_t expected[] = {1, 2, 5, 14, 42};
    for (int p = 2; p <= 10; p += 2) {
      const auto c = exact_moment_scalar_series(p).coefficient(0);
      ok = ok && c == expected[p / 2 - 1] && c == catalan(p / 2);
      d += fmt("%lld ", static_cast<long long>(c));
    }
    return Outcome{ok, d};
  });

  criterion(3, "exact moments against Monte Carlo", 120, [&] {
    bool ok = true;
    std::string d;
    const MatrixTuple a = sample_coefficient_tuple(2, 2, SeededStream{seed}.fork("criterion-3"));
    for (Index N : {16, 32}) {
      MomentsConfig mc;
      mc.N = N;
      mc.trials = 2000;
      mc.coefficients = a;
      const auto rep = run_moments(mc, {seed, 1});
      double worst = 0;
      for (const auto* key : {"scalar", "coefficients"})
        for (const auto& row : rep.results[key]) worst = std::max(worst, std::abs(row["measured"]["z"].get<double>()));
      ok = ok && verdict(rep, "monte_carlo_agreement");
      d += fmt("N=%ld max|z|=%.2f ", static_cast<long>(N), worst);
    }
    return Outcome{ok, d};
  });

  criterion(4, "Buchholz inequality", 60, [&] {
    int violations = 0, checks = 0;
    double tightest = 1e300;
    for (int i = 0; i < 100; ++i) {
      const SeededStream s = SeededStream{seed}.fork("criterion-4").with_stream(i);
      RandomSource pick(s.fork("shape"));
      const std::size_t n = 1 + pick.below(3);
      const Index k = 1 + static_cast<Index>(pick.below(3));
      const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, k, n}, s);
      for (int p : {2, 4, 6}) {
        const auto r = buchholz_check(a, p, 8.0);
        ++checks;
        if (!r.holds) ++violations;
        tightest = std::min(tightest, r.rhs / r.lhs);
      }
    }
    return Outcome{violations == 0, fmt("%d checks, %d violations, min rhs/lhs=%.4f", checks, violations, tightest)};
  });

  criterion(5, "Ginibre norm", 60, [&] {
    const double one = spectral_norm(sample_ginibre(512, SeededStream{seed}.fork("criterion-5")));
    std::vector<double> v;
    for (int i = 0; i < 20; ++i)
      v.push_back(spectral_norm(sample_ginibre(256, SeededStream{seed}.fork("criterion-5b").with_stream(i))));
    const auto st = summarize(v);
    return Outcome{one >= 1.85 && one <= 2.05 && st.stddev <= 0.05,
                   fmt("||Y(512)||=%.4f, std over 20 at N=256=%.4f", one, st.stddev)};
  });

  criterion(6, "Fock exactness", 120, [] {
    double worst = 0;
    for (int d = 1; d <= 12; ++d) {
      const auto r = free_norm(MatrixTuple{Matrix::Identity(1, 1)}, FamilyKind::semicircular, d);
      worst = std::max(worst, std::abs(r.value - 2.0 * std::cos(std::numbers::pi / (d + 2))));
    }
    const int radius = max_reduced_radius(kDefaultBasisCap);
    bool ok = worst <= 1e-8;
    std::string d = fmt("semicircle max err=%.1e; ", worst);
    for (int n : {2, 3}) {
      const auto r = haar_sum_norm(n, radius);
      const double target = 2.0 * std::sqrt(n - 1.0);
      ok = ok && r.converged && std::abs(r.value / target - 1.0) <= 0.02;
      d += fmt("n=%d r=%d ratio=%.4f ", n, radius, r.value / target);
    }
    // The reduced model must agree with the full group ball where both fit.
    const double ball = free_norm(MatrixTuple{Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1)},
                                  FamilyKind::haar_unitary, 7)
                            .value;
    const double orbit = haar_sum_norm(3, 7).value;
    ok = ok && std::abs(ball - orbit) <= 1e-8 * ball;
    d += fmt("ball/orbit n=3 r=7 diff=%.1e", std::abs(ball - orbit));
    return Outcome{ok, d};
  });

  criterion(7, "rc sandwich for the circular Fock norm", 180, [&] {
    int inside = 0, deep = 0, min_depth = 1 << 20;
    double lo = 1e300, hi = 0;
    for (int i = 0; i < 50; ++i) {
      const SeededStream s = SeededStream{seed}.fork("criterion-7").with_stream(i);
      RandomSource pick(s.fork("shape"));
      const int n = 1 + static_cast<int>(pick.below(3));
      const Index k = 1 + static_cast<Index>(pick.below(4));
      const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, k, static_cast<std::size_t>(n)}, s);
      // The deepest truncation whose Krylov basis still fits the memory budget; at
      // larger bases the basis shrinks and the restarted iteration becomes too slow.
      const std::size_t cap = 100000;
      const int depth = max_depth_within_cap(FamilyKind::circular, n, cap, 0);
      FockOptions fo;
      fo.cap = cap;
      fo.compare_previous = false;
      fo.norm.restarts = 1;
      const auto r = free_norm(a, FamilyKind::circular, depth, fo);
      const double rc = rc_norms(a).rc;
      lo = std::min(lo, r.value / rc);
      hi = std::max(hi, r.value / rc);
      if (r.value >= 0.97 * rc && r.value <= 2.0 * rc * 1.03) ++inside;
      if (depth >= 10) ++deep;
      min_depth = std::min(min_depth, depth);
    }
    return Outcome{inside == 50 && deep == 50,
                   fmt("%d/50 inside [0.97, 2.06] rc, ratio range [%.4f, %.4f]; %d/50 at depth >= 10 (min depth %d)", inside,
                       lo, hi, deep, min_depth)};
  });

  criterion(8, "concentration tail", 60, [&] {
    const auto r = deviation_tail(normalized_column_tuple(2), 256, 0.25, 500, SeededStream{seed}.fork("criterion-8"));
    return Outcome{r.pass && r.exceedances == 0,
                   fmt("exceedances=%d of %d, bound=%.2e, mean=%.4f", r.exceedances, r.evaluated, r.bound, r.mean_estimate)};
  });

  criterion(9, "strong convergence trend", 300, [&] {
    std::string d;
    bool ok = true;
    ConvergeConfig a;
    a.polynomial = parse_polynomial("1 ; x1 | 1 ; x1*");
    const auto ra = run_strong_convergence(a, {seed, 1});
    ok = ok && verdict(ra, "gap_trend") && verdict(ra, "scalar_accuracy");
    d += fmt("x+x*: ref=%.4f chi(512)=%.4f increases=%d; ", ra.results["reference"]["reference"]["free_norm"].get<double>(),
             ra.results["per_N"].back()["chi"].get<double>(), ra.results["gap_increases"].get<int>());
    ConvergeConfig b;
    b.polynomial = random_polynomial(1, 2, 2, SeededStream{seed}.fork("criterion-9"));
    const auto rb = run_strong_convergence(b, {seed, 1});
    ok = ok && verdict(rb, "gap_trend");
    d += fmt("random deg 2: ref=%.4f chi(512)=%.4f increases=%d", rb.results["reference"]["reference"]["free_norm"].get<double>(),
             rb.results["per_N"].back()["chi"].get<double>(), rb.results["gap_increases"].get<int>());
    return Outcome{ok, d};
  });

  criterion(10, "tightness ceiling", 300, [&] {
    int ok_count = 0;
    double worst = 0, least_margin = 1e300;
    for (int i = 0; i < 20; ++i) {
      const SeededStream s = SeededStream{seed}.fork("criterion-10").with_stream(i);
      RandomSource pick(s.fork("shape"));
      TightnessConfig tc;
      tc.coefficients = sample_coefficient_tuple(1 + pick.below(3), 1 + static_cast<Index>(pick.below(4)), s);
      tc.N_grid = {256, 512};
      tc.trials = 2;
      tc.cap = 100000;
      TightnessSummary sum;
      const auto rep = estimate_tightness(tc, {seed + static_cast<std::uint64_t>(i), 1}, &sum);
      if (verdict(rep, "ceiling") && verdict(rep, "fock_floor")) ++ok_count;
      worst = std::max(worst, sum.c_hat.back());
      least_margin = std::min(least_margin, sum.c_hat.back() / sum.fock_ratio);
    }
    return Outcome{ok_count == 20, fmt("%d/20 pass, max C(512)=%.4f, min C(512)/(free/rc)=%.4f", ok_count, worst, least_margin)};
  });

  criterion(11, "operator space constants", 120, [&] {
    GrowthConfig oh;
    oh.space = GrowthSpace::oh;
    oh.n = 16;
    oh.N = 512;
    const auto r1 = run_growth_witness(oh, {seed, 1});
    GrowthConfig rc;
    rc.space = GrowthSpace::rc_sum;
    rc.n = 16;
    rc.N = 512;
    rc.trials = 4;
    const auto r2 = run_growth_witness(rc, {seed, 1});
    const bool ok = verdict(r1, "lln_floor") && verdict(r1, "ratio") && verdict(r2, "sqrt_n_floor");
    return Outcome{ok, fmt("oh: ||sum Y(x)conjY||=%.3f ratio=%.3f; rc_sum: mean ||S|| >= %.3f",
                           r1.results["measured"]["sum_Y_tensor_conjY"]["min"].get<double>(),
                           r1.results["measured"]["ratio_norm_over_rc"].get<double>(),
                           r2.results["measured"]["norm_S_lower"]["mean"].get<double>())};
  });

  criterion(12, "2-summing and Schatten-4 norms of the identity", 10, [] {
    double err = 0, gap = 0, s4 = 0;
    for (int n = 1; n <= 8; ++n) {
      const auto r = pi2_norm(Matrix::Identity(n, n));
      err = std::max(err, std::abs(r.value - std::sqrt(n)));
      gap = std::max(gap, r.gap);
      s4 = std::max(s4, std::abs(schatten_norm(Matrix::Identity(n, n), 4) - std::pow(n, 0.25)));
    }
    return Outcome{err <= 1e-6 && gap <= 1e-6 && s4 <= 4 * std::numeric_limits<double>::epsilon(),
                   fmt("pi2 err=%.1e gap=%.1e S4 err=%.1e", err, gap, s4)};
  });

  criterion(13, "lacunary ledger", 1, [] {
    const auto seq = lacunary_sequence(2, 6);
    const std::vector<BigInt> want{1, 2, 8, 128, 32768, BigInt(2147483648ULL)};
    bool ok = seq == want;
    for (std::size_t m = 1; m < seq.size(); ++m) ok = ok && seq[m] == 2 * seq[m - 1] * seq[m - 1];
    double gamma = 0;
    for (std::uint64_t N = 1; N <= 10000; ++N) {
      const BigInt led = ke_ledger_e11(seq, 2, 2, N);
      gamma = std::max(gamma, static_cast<double>(led) / (2.0 * static_cast<double>(N) * static_cast<double>(N)));
    }
    bool covered = true;
    for (std::uint64_t N = 1; N <= 10000; ++N)
      covered = covered && static_cast<double>(ke_ledger_e11(seq, 2, 2, N)) <= gamma * 2.0 * N * N;
    const double limit = lacunary_sum_constant(seq);
    return Outcome{ok && covered && gamma <= limit, fmt("fitted gamma=%.4f, geometric constant=%.4f", gamma, limit)};
  });

  criterion(14, "block-sum witness", 180, [&] {
    BlocksumConfig bc;
    const auto r = run_blocksum_witness(bc, {seed, 1});
    return Outcome{verdict(r, "witness"), fmt("witness fraction=%.2f, mean 2 rc(u)=%.3f",
                                              r.results["measured"]["witness_fraction"].get<double>(),
                                              r.results["bound"]["two_rc_u"]["mean"].get<double>())};
  });

  criterion(15, "determinism across worker counts", 120, [&] {
    MomentsConfig mc;
    mc.trials = 2000;
    mc.coefficients = normalized_column_tuple(2);
    ConvergeConfig cv;
    cv.polynomial = parse_polynomial("1 ; x1 | 1 ; x1*");
    cv.N_grid = {32, 64, 128};
    cv.trials = 8;
    cv.cap = 50000;
    const bool m = run_moments(mc, {seed, 1}).dump() == run_moments(mc, {seed, 8}).dump();
    const bool c = run_strong_convergence(cv, {seed, 1}).dump() == run_strong_convergence(cv, {seed, 8}).dump();
    return Outcome{m && c, fmt("moments identical=%d converge identical=%d", m, c)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
