#pragma once

#include "core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace rmt {

inline constexpr int kMaxPairingOrder = 12;

// A pairing of {1, ..., p}; pairs are stored with the smaller index first and sorted.
struct PairPartition {
  int p = 0;
  std::vector<std::pair<int, int>> pairs;

  bool parity_valid() const {
    for (auto [a, b] : pairs)
      if ((a + b) % 2 == 0) return false;
    return true;
  }

  // partner[i] for 1-based positions (partner[0] unused).
  std::vector<int> involution() const {
    std::vector<int> pi(p + 1, 0);
    for (auto [a, b] : pairs) {
      pi[a] = b;
      pi[b] = a;
    }
    return pi;
  }

  bool operator==(const PairPartition&) const = default;
};

inline PairPartition make_pairing(int p, std::vector<std::pair<int, int>> pairs) {
  require(p >= 0 && p % 2 == 0, "pairing: p must be even");
  require(static_cast<int>(pairs.size()) * 2 == p, "pairing: wrong number of pairs");
  std::vector<bool> seen(p + 1, false);
  for (auto& pr : pairs) {
    if (pr.first > pr.second) std::swap(pr.first, pr.second);
    require(pr.first >= 1 && pr.second <= p && pr.first != pr.second, "pairing: index out of range");
    require(!seen[pr.first] && !seen[pr.second], "pairing: pairs must be disjoint");
    seen[pr.first] = seen[pr.second] = true;
  }
  std::sort(pairs.begin(), pairs.end());
  return PairPartition{p, std::move(pairs)};
}

// All (p/2)! pairings matching odd positions to even positions. Odd position 2i+1 is
// matched with even position 2 sigma(i) + 2, sigma running through permutations in
// lexicographic order (identity first).
inline std::vector<PairPartition> enumerate_pairings(int p) {
  require(p >= 0 && p % 2 == 0, "enumerate_pairings: p must be even");
  require(p <= kMaxPairingOrder, "enumerate_pairings: p over the combinatorial cap");
  const int m = p / 2;
  std::vector<int> sigma(m);
  std::iota(sigma.begin(), sigma.end(), 0);
  std::vector<PairPartition> out;
  do {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i) pairs.emplace_back(2 * i + 1, 2 * sigma[i] + 2);
    out.push_back(make_pairing(p, std::move(pairs)));
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return out;
}

// Number of cycles of gamma o pi, gamma the cyclic shift i -> i + 1 (mod p).
inline int cycles_gamma_pi(const PairPartition& nu) {
  const auto pi = nu.involution();
  const int p = nu.p;
  std::vector<bool> seen(p + 1, false);
  int cycles = 0;
  for (int s = 1; s <= p; ++s) {
    if (seen[s]) continue;
    ++cycles;
    int i = s;
    while (!seen[i]) {
      seen[i] = true;
      i = pi[i] % p + 1;
    }
  }
  return cycles;
}

// Exponent e in the weight N^e, that is cycles(gamma pi) - 1 - p/2.
inline int genus_exponent(const PairPartition& nu) {
  require(nu.parity_valid(), "genus_exponent: pairing must join odd and even positions");
  return cycles_gamma_pi(nu) - 1 - nu.p / 2;
}

// Wick weight of a pairing; pairings joining two positions of equal parity pair Y with
// Y (or Y* with Y*) and have expectation zero.
inline double genus_weight(const PairPartition& nu, double N) {
  require(N > 0, "genus_weight: N must be positive");
  if (!nu.parity_valid()) return 0.0;
  return std::pow(N, genus_exponent(nu));
}

inline bool is_noncrossing(const PairPartition& nu) {
  for (auto [a, b] : nu.pairs)
    for (auto [c, d] : nu.pairs)
      if (a < c && c < b && b < d) return false;
  return true;
}

// sum_e coeff[e] * N^e with integer coefficients.
struct MomentValue {
  std::map<int, std::int64_t> terms;

  double evaluate(double N) const {
    double s = 0.0;
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) s += static_cast<double>(it->second) * std::pow(N, it->first);
    return s;
  }

  std::int64_t coefficient(int exponent) const {
    auto it = terms.find(exponent);
    return it == terms.end() ? 0 : it->second;
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto [_, c] : terms) t += c;
    return t;
  }

  // Leading term first, for example "5 + N^-2".
  std::string to_string() const {
    if (terms.empty()) return "0";
    std::string s;
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
      if (!s.empty()) s += " + ";
      if (it->first == 0) {
        s += std::to_string(it->second);
      } else {
        if (it->second != 1) s += std::to_string(it->second) + "*";
        s += "N^" + std::to_string(it->first);
      }
    }
    return s;
  }

  bool operator==(const MomentValue&) const = default;
};

// E tau_N |Y|^p as an exact polynomial in 1/N.
inline MomentValue exact_moment_scalar_series(int p) {
  MomentValue v;
  for (const auto& nu : enumerate_pairings(p)) v.terms[genus_exponent(nu)] += 1;
  return v;
}

inline double exact_moment_scalar(int p, double N) { return exact_moment_scalar_series(p).evaluate(N); }

inline std::int64_t catalan(int m) {
  std::int64_t c = 1;
  for (int i = 0; i < m; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

inline constexpr double kWickWorkBudget = 2e9;

// tr(a_nu) for every pairing (enumeration order): the sum over index assignments
// constant on the pairs of tr(a_{k1}* a_{k2} a_{k3}* a_{k4} ...), unnormalised trace.
inline std::vector<cplx> pairing_traces(const MatrixTuple& a, int p) {
  require(!a.empty(), "pairing_traces: empty tuple");
  require(p >= 2 && p % 2 == 0 && p <= 8, "pairing_traces: p must be even and <= 8");
  const auto pairings = enumerate_pairings(p);
  const int n = static_cast<int>(a.size());
  const int m = p / 2;
  const double k = static_cast<double>(a.dim());
  const double work = std::pow(n, m) * static_cast<double>(pairings.size()) * p * k * k * k;
  if (work > kWickWorkBudget) throw CapacityError("pairing_traces: enumeration over budget", static_cast<std::size_t>(work));

  const MatrixTuple astar = a.adjoint();
  std::vector<cplx> out;
  out.reserve(pairings.size());
  std::vector<int> assign(m, 0), index(p + 1, 0);
  for (const auto& nu : pairings) {
    cplx total = 0.0;
    std::fill(assign.begin(), assign.end(), 0);
    while (true) {
      for (int b = 0; b < m; ++b) index[nu.pairs[b].first] = index[nu.pairs[b].second] = assign[b];
      Matrix prod = astar[index[1]];
      for (int pos = 2; pos <= p; ++pos) prod = prod * (pos % 2 == 1 ? astar[index[pos]] : a[index[pos]]);
      total += prod.trace();
      int b = 0;
      while (b < m && ++assign[b] == n) assign[b++] = 0;
      if (b == m) break;
    }
    out.push_back(total);
  }
  return out;
}

// Positions of the two cyclically consecutive pairings {(1,2),(3,4),...} and
// {(2,3),...,(p,1)} in the enumeration order.
inline std::pair<std::size_t, std::size_t> cyclic_pairing_indices(int p) {
  const auto all = enumerate_pairings(p);
  std::vector<std::pair<int, int>> first, second;
  for (int i = 1; i <= p; i += 2) first.emplace_back(i, i + 1);
  for (int i = 2; i <= p; i += 2) second.emplace_back(i, i % p + 1);
  const auto c1 = make_pairing(p, first), c2 = make_pairing(p, second);
  std::size_t i1 = all.size(), i2 = all.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == c1) i1 = i;
    if (all[i] == c2) i2 = i;
  }
  return {i1, i2};
}

// E (tr x tau_N) |sum_j Y_j (x) a_j|^p.
inline double exact_moment_coeffs(const MatrixTuple& a, int p, double N) {
  const auto traces = pairing_traces(a, p);
  const auto pairings = enumerate_pairings(p);
  double s = 0.0;
  for (std::size_t i = 0; i < pairings.size(); ++i) s += genus_weight(pairings[i], N) * traces[i].real();
  return s;
}

struct BuchholzReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline double trace_power(const Matrix& h, int q) {
  Matrix acc = Matrix::Identity(h.rows(), h.cols());
  for (int i = 0; i < q; ++i) acc = acc * h;
  return acc.trace().real();
}

inline BuchholzReport buchholz_check(const MatrixTuple& a, int p, double N) {
  BuchholzReport r;
  r.lhs = exact_moment_coeffs(a, p, N);
  Matrix col = Matrix::Zero(a.dim(), a.dim()), row = col;
  for (const auto& x : a) {
    col.noalias() += x.adjoint() * x;
    row.noalias() += x * x.adjoint();
  }
  r.rhs = exact_moment_scalar(p, N) * std::max(trace_power(col, p / 2), trace_power(row, p / 2));
  r.holds = r.lhs <= r.rhs + 1e-9 * std::abs(r.rhs);
  return r;
}

}  // namespace rmt
