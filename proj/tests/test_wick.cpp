#include "rmt/ensembles.hpp"
#include "rmt/wick.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rmt;

namespace {

// Oracle: E tau_N((Y*Y)^m) by summing the Wick expansion over explicit index tuples.
// tr((Y*Y)^m) = sum_i conj(Y_{i2 i1}) Y_{i2 i3} conj(Y_{i4 i3}) Y_{i4 i5} ... and
// E conj(Y_{ab}) Y_{cd} = delta_ac delta_bd / N.
double brute_force_moment(int m, int N) {
  const int p = 2 * m;
  std::vector<int> sigma(m);
  std::iota(sigma.begin(), sigma.end(), 0);
  double total = 0;
  do {
    std::vector<int> idx(p, 0);
    long long count = 0;
    while (true) {
      bool ok = true;
      for (int f = 0; f < m && ok; ++f) {
        // conjugated factor f: conj(Y_{idx[2f+1], idx[2f]}); plain factor g: Y_{idx[2g+1], idx[(2g+2) % p]}
        const int g = sigma[f];
        const int a = idx[2 * f + 1], b = idx[2 * f];
        const int c = idx[2 * g + 1], d = idx[(2 * g + 2) % p];
        ok = a == c && b == d;
      }
      if (ok) ++count;
      int pos = 0;
      while (pos < p && ++idx[pos] == N) idx[pos++] = 0;
      if (pos == p) break;
    }
    total += static_cast<double>(count) * std::pow(N, -m);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return total / N;
}

}  // namespace

TEST(Pairings, CountsAndParity) {
  for (int p = 2; p <= 10; p += 2) {
    const auto all = enumerate_pairings(p);
    std::int64_t f = 1;
    for (int i = 2; i <= p / 2; ++i) f *= i;
    EXPECT_EQ(static_cast<std::int64_t>(all.size()), f);
    for (const auto& nu : all) EXPECT_TRUE(nu.parity_valid());
  }
  EXPECT_THROW(enumerate_pairings(3), InvalidArgument);
  EXPECT_THROW(enumerate_pairings(14), InvalidArgument);
}

TEST(Pairings, ConstructionValidates) {
  EXPECT_THROW(make_pairing(4, {{1, 2}}), InvalidArgument);
  EXPECT_THROW(make_pairing(4, {{1, 2}, {2, 3}}), InvalidArgument);
  EXPECT_THROW(make_pairing(4, {{1, 5}, {2, 3}}), InvalidArgument);
  const auto nu = make_pairing(4, {{4, 1}, {3, 2}});
  EXPECT_EQ(nu.pairs.front(), (std::pair{1, 4}));
  EXPECT_EQ(nu.involution()[4], 1);
}

TEST(Genus, PlanarPairingsHaveExponentZero) {
  const auto nested = make_pairing(4, {{1, 4}, {2, 3}});
  const auto adjacent = make_pairing(4, {{1, 2}, {3, 4}});
  EXPECT_EQ(genus_exponent(nested), 0);
  EXPECT_EQ(genus_exponent(adjacent), 0);
  EXPECT_TRUE(is_noncrossing(nested));
  const auto crossing = make_pairing(6, {{1, 4}, {2, 5}, {3, 6}});
  EXPECT_FALSE(is_noncrossing(crossing));
  EXPECT_EQ(genus_exponent(crossing), -2);
  EXPECT_DOUBLE_EQ(genus_weight(crossing, 4.0), 1.0 / 16.0);
}

TEST(Genus, InvalidParityHasZeroWeight) {
  const auto bad = make_pairing(4, {{1, 3}, {2, 4}});
  EXPECT_FALSE(bad.parity_valid());
  EXPECT_EQ(genus_weight(bad, 3.0), 0.0);
  EXPECT_THROW(genus_exponent(bad), InvalidArgument);
}

TEST(Genus, NoncrossingExactlyWhenPlanar) {
  for (int p = 2; p <= 10; p += 2)
    for (const auto& nu : enumerate_pairings(p)) EXPECT_EQ(genus_exponent(nu) == 0, is_noncrossing(nu));
}

TEST(ScalarMoments, KnownSeries) {
  EXPECT_EQ(exact_moment_scalar_series(2).to_string(), "1");
  EXPECT_EQ(exact_moment_scalar_series(4).to_string(), "2");
  EXPECT_EQ(exact_moment_scalar_series(6).to_string(), "5 + N^-2");
  EXPECT_EQ(exact_moment_scalar_series(8).coefficient(-2), 10);
}

TEST(ScalarMoments, FactorialAtOneAndCatalanLeading) {
  const std::int64_t fact[] = {1, 2, 6, 24, 120, 720};
  for (int p = 2; p <= 12; p += 2) {
    const auto s = exact_moment_scalar_series(p);
    EXPECT_EQ(s.total(), fact[p / 2 - 1]);
    EXPECT_EQ(s.coefficient(0), catalan(p / 2));
    EXPECT_DOUBLE_EQ(exact_moment_scalar(p, 1.0), static_cast<double>(fact[p / 2 - 1]));
  }
}

TEST(ScalarMoments, AgreeWithIndexEnumeration) {
  for (int m = 1; m <= 3; ++m)
    for (int N = 1; N <= 3; ++N)
      EXPECT_NEAR(exact_moment_scalar(2 * m, N), brute_force_moment(m, N), 1e-12) << "m=" << m << " N=" << N;
}

TEST(CoefficientMoments, ScalarTupleReducesToScaledScalar) {
  // sum c_j Y_j has the law of |c|_2 Y.
  const MatrixTuple a = scalar_tuple({cplx(0.6, 0.0), cplx(0.0, 0.8)});
  for (int p : {2, 4, 6, 8})
    EXPECT_NEAR(exact_moment_coeffs(a, p, 5.0), exact_moment_scalar(p, 5.0), 1e-12);
  const MatrixTuple b = scalar_tuple({cplx(2.0, 0.0)});
  EXPECT_NEAR(exact_moment_coeffs(b, 4, 3.0), 16.0 * exact_moment_scalar(4, 3.0), 1e-12);
}

TEST(CoefficientMoments, IdentityCoefficientMultipliesByK) {
  const MatrixTuple a{Matrix(Matrix::Identity(3, 3))};
  EXPECT_NEAR(exact_moment_coeffs(a, 6, 4.0), 3.0 * exact_moment_scalar(6, 4.0), 1e-12);
}

TEST(CoefficientMoments, OrderTwoIsHilbertSchmidt) {
  const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, 3, 2}, SeededStream{1});
  double hs = 0;
  for (const auto& x : a) hs += x.squaredNorm();
  EXPECT_NEAR(exact_moment_coeffs(a, 2, 7.0), hs, 1e-12);
}

TEST(CoefficientMoments, BudgetAndRange) {
  EXPECT_THROW(pairing_traces(MatrixTuple{Matrix::Identity(2, 2)}, 10), InvalidArgument);
  std::vector<Matrix> many(40, Matrix::Identity(40, 40));
  EXPECT_THROW(pairing_traces(MatrixTuple(many), 8), CapacityError);
}

TEST(CyclicPairings, Located) {
  const auto [i1, i2] = cyclic_pairing_indices(6);
  const auto all = enumerate_pairings(6);
  ASSERT_LT(i1, all.size());
  ASSERT_LT(i2, all.size());
  EXPECT_EQ(genus_exponent(all[i1]), 0);
  EXPECT_EQ(genus_exponent(all[i2]), 0);
  EXPECT_EQ(i1, 0u);
}

TEST(Buchholz, HoldsOnRandomTuples) {
  for (int i = 0; i < 20; ++i) {
    const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, 2, 3}, SeededStream{2}.with_stream(i));
    for (int p : {2, 4, 6}) {
      const auto r = buchholz_check(a, p, 6.0);
      EXPECT_TRUE(r.holds) << "p=" << p << " lhs=" << r.lhs << " rhs=" << r.rhs;
    }
  }
}

TEST(Buchholz, HoldsAtOrderTwo) {
  const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, 3, 2}, SeededStream{3});
  const auto r = buchholz_check(a, 2, 10.0);
  EXPECT_LE(r.lhs, r.rhs * (1 + 1e-12));
}

TEST(TracePower, Diagonal) {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 3.0;
  EXPECT_DOUBLE_EQ(trace_power(d, 3), 35.0);
  EXPECT_DOUBLE_EQ(trace_power(d, 0), 2.0);
}
