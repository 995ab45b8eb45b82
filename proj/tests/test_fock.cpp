#include "rmt/ensembles.hpp"
#include "rmt/fock.hpp"
#include "rmt/wick.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

using namespace rmt;

namespace {

const MatrixTuple kOne{Matrix::Identity(1, 1)};

MatrixTuple ones(int n) {
  std::vector<Matrix> v(n, Matrix::Identity(1, 1));
  return MatrixTuple(v);
}

// Oracle for the free group ball: explicit reduced words and the dense adjacency
// operator sum_j lambda(g_j) compressed to the ball.
double brute_force_haar_sum(int n, int radius) {
  std::vector<std::vector<int>> words{{}};
  std::map<std::vector<int>, int> index{{{}, 0}};
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (static_cast<int>(words[i].size()) == radius) continue;
    for (int y = 0; y < 2 * n; ++y) {
      if (!words[i].empty() && words[i].front() == (y ^ 1)) continue;
      std::vector<int> w{y};
      w.insert(w.end(), words[i].begin(), words[i].end());
      index.emplace(w, static_cast<int>(words.size()));
      words.push_back(w);
    }
  }
  const Index D = static_cast<Index>(words.size());
  Matrix s = Matrix::Zero(D, D);
  for (Index i = 0; i < D; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<int> w = words[i];
      if (!w.empty() && w.front() == 2 * j + 1)
        w.erase(w.begin());
      else
        w.insert(w.begin(), 2 * j);
      if (auto it = index.find(w); it != index.end()) s(it->second, i) += 1.0;
    }
  Eigen::JacobiSVD<Matrix> svd(s);
  return svd.singularValues()(0);
}

}  // namespace

TEST(Sizes, FockAndBall) {
  EXPECT_EQ(fock_dimension(2, 3), 15u);
  EXPECT_EQ(fock_dimension(1, 5), 6u);
  EXPECT_EQ(free_group_ball_size(2, 0), 1u);
  EXPECT_EQ(free_group_ball_size(2, 1), 5u);
  EXPECT_EQ(free_group_ball_size(2, 2), 17u);
  EXPECT_EQ(free_group_ball_size(3, 2), 1u + 6u + 30u);
}

TEST(FockBasis, IndexWordRoundTrip) {
  const FockBasis b(3, 4);
  EXPECT_EQ(b.size(), 1 + 3 + 9 + 27 + 81);
  for (Index i = 0; i < b.size(); ++i) EXPECT_EQ(b.index(b.word(i)), i);
  EXPECT_EQ(b.index({}), 0);
  EXPECT_EQ(b.index({2}), 3);
  EXPECT_EQ(b.index({0, 0}), 4);
  EXPECT_THROW(b.index({3}), InvalidArgument);
  EXPECT_THROW(b.index({0, 0, 0, 0, 0}), InvalidArgument);
}

TEST(FreeGroupBall, LeftMultiplicationAgreesWithWords) {
  const FreeGroupBall ball(2, 3);
  EXPECT_EQ(ball.size(), static_cast<Index>(free_group_ball_size(2, 3)));
  for (Index i = 0; i < ball.size(); ++i)
    for (int y = 0; y < 4; ++y) {
      const Index t = ball.left_multiply(i, y);
      if (ball.first_letter(i) == (y ^ 1)) {
        EXPECT_EQ(t, ball.parent(i));
      } else if (ball.length(i) == 3) {
        EXPECT_EQ(t, -1);
      } else {
        ASSERT_GE(t, 0);
        EXPECT_EQ(ball.first_letter(t), y);
        EXPECT_EQ(ball.parent(t), i);
      }
    }
}

TEST(FreeFamily, CapacityIsEnforced) {
  EXPECT_THROW(FreeFamily(FamilyKind::circular, 3, 12, 1000), CapacityError);
  EXPECT_THROW(build_family(FamilyKind::semicircular, 1, 0), InvalidArgument);
  EXPECT_EQ(max_depth_within_cap(FamilyKind::semicircular, 2, 31), 4);
  EXPECT_EQ(max_depth_within_cap(FamilyKind::semicircular, 2, 31, 1), 3);
}

TEST(FreeFamily, OperatorsAreAdjointPairs) {
  for (auto kind : {FamilyKind::semicircular, FamilyKind::circular, FamilyKind::haar_unitary}) {
    const FreeFamily f(kind, 2, 4);
    for (int j = 0; j < 2; ++j) EXPECT_LT(adjoint_consistency(f.as_operator(j)), 1e-13) << to_string(kind);
  }
}

TEST(FreeFamily, SemicircularMomentsAreCatalan) {
  const FreeFamily f(FamilyKind::semicircular, 1, 8);
  for (int m = 0; m <= 4; ++m) {
    const Word w(2 * m, 1);
    EXPECT_NEAR(vacuum_expectation(f, w).real(), static_cast<double>(catalan(m)), 1e-12);
    EXPECT_NEAR(vacuum_expectation(f, Word(2 * m + 1, 1)).real(), 0.0, 1e-12);
  }
}

TEST(FreeFamily, CircularStarMoments) {
  // tau((c* c)^m) = C_m and tau(c^2) = 0 for a circular element.
  const FreeFamily f(FamilyKind::circular, 1, 8);
  for (int m = 1; m <= 4; ++m) {
    Word w;
    for (int i = 0; i < m; ++i) {
      w.push_back(2);
      w.push_back(1);
    }
    EXPECT_NEAR(vacuum_expectation(f, w).real(), static_cast<double>(catalan(m)), 1e-12);
  }
  EXPECT_NEAR(std::abs(vacuum_expectation(f, {1, 1})), 0.0, 1e-12);
}

TEST(FreeFamily, HaarUnitaryMoments) {
  const FreeFamily f(FamilyKind::haar_unitary, 2, 6);
  EXPECT_NEAR(vacuum_expectation(f, {1, 3}).real(), 1.0, 1e-14);   // u1 u1*
  EXPECT_NEAR(std::abs(vacuum_expectation(f, {1, 1})), 0.0, 1e-14); // u1^2
  EXPECT_NEAR(std::abs(vacuum_expectation(f, {1, 2, 3, 4})), 0.0, 1e-14);
  EXPECT_NEAR(vacuum_expectation(f, {1, 2, 4, 3}).real(), 1.0, 1e-14);
}

TEST(FreeNorm, SemicircleTruncationsAreExact) {
  for (int d = 1; d <= 12; ++d) {
    const auto r = free_norm(kOne, FamilyKind::semicircular, d);
    EXPECT_NEAR(r.value, 2.0 * std::cos(std::numbers::pi / (d + 2)), 1e-9) << "depth " << d;
    EXPECT_NEAR(r.previous, 2.0 * std::cos(std::numbers::pi / (d + 1)), 1e-9);
  }
}

TEST(FreeNorm, ValuesIncreaseWithDepth) {
  const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, 2, 2}, SeededStream{1});
  double last = 0;
  for (int d = 1; d <= 5; ++d) {
    const auto r = free_norm(a, FamilyKind::circular, d);
    EXPECT_GE(r.value, last - 1e-9);
    EXPECT_GE(r.relative_gap, -1e-9);
    last = r.value;
  }
}

TEST(FreeNorm, RcSandwich) {
  for (int i = 0; i < 4; ++i) {
    const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, 3, 2}, SeededStream{2}.with_stream(i));
    const auto [lo, hi] = s2_sandwich(a);
    const double v = free_norm(a, FamilyKind::circular, 7).value;
    EXPECT_GE(v, 0.97 * lo);
    EXPECT_LE(v, hi * (1 + 1e-9));
  }
}

TEST(FreeNorm, ColumnTupleSitsInsideSandwich) {
  // a_j = e_{j1}: rc = sqrt(n); the truncated norm approaches 2 from below at n = 1.
  std::vector<Matrix> m;
  for (int j = 0; j < 3; ++j) m.push_back(matrix_unit(3, j, 0));
  const MatrixTuple a(m);
  const double v = free_norm(a, FamilyKind::circular, 5).value;
  EXPECT_GE(v, std::sqrt(3.0) * 0.97);
  EXPECT_LE(v, 2.0 * std::sqrt(3.0));
}

TEST(FreeNorm, HaarBallMatchesBruteForce) {
  for (auto [n, r] : {std::pair{2, 3}, std::pair{3, 2}, std::pair{2, 5}}) {
    const double want = brute_force_haar_sum(n, r);
    EXPECT_NEAR(free_norm(ones(n), FamilyKind::haar_unitary, r).value, want, 1e-9);
    EXPECT_NEAR(haar_sum_norm(n, r).value, want, 1e-9);
  }
}

TEST(FreeNorm, HaarSumApproachesKestenValue) {
  const auto r = haar_sum_norm(2, 14);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.value, 2.0 * std::sqrt(1.0) + 1e-9);
  EXPECT_GT(r.value, 0.98 * 2.0);
  EXPECT_GE(r.value, r.previous);
  EXPECT_EQ(max_reduced_radius(kDefaultBasisCap), 17);
}

TEST(FreePolyNorm, LinearPolynomialMatchesFreeNorm) {
  const MatrixTuple a = sample_tuple({EnsembleKind::ginibre, 2, 2}, SeededStream{3});
  StarPolynomial p(2, 2);
  p.add_term({1}, a[0]);
  p.add_term({2}, a[1]);
  const FreeFamily fam(FamilyKind::circular, 2, 4);
  EXPECT_NEAR(free_poly_norm(p, fam).value, free_norm(a, FamilyKind::circular, 4).value, 1e-9);
}

TEST(FreePolyNorm, CircularRealPartBelowLimit) {
  // c + c* = sqrt(2) s, so the truncations increase towards 2 sqrt(2).
  const StarPolynomial p = parse_polynomial("1 ; x1 | 1 ; x1*");
  const auto r = free_poly_norm(p, FreeFamily(FamilyKind::circular, 1, 10));
  EXPECT_LT(r.value, 2.0 * std::sqrt(2.0));
  EXPECT_GT(r.value, 0.95 * 2.0 * std::sqrt(2.0));
  EXPECT_GE(r.value, r.previous);
}

TEST(FreePolyNorm, QuadraticSemicircle) {
  // The compression of s^2 to depth d is B*B with B the (d+2) x (d+1) corner of the
  // Jacobi matrix, whose norm sits between the square Jacobi norms of sizes d+1 and d+2.
  const int d = 20;
  const StarPolynomial p = parse_polynomial("1 ; x1 x1");
  const auto r = free_poly_norm(p, FreeFamily(FamilyKind::semicircular, 1, d));
  EXPECT_GE(r.value, std::pow(2.0 * std::cos(std::numbers::pi / (d + 3)), 2.0) - 1e-9);
  EXPECT_LE(r.value, std::pow(2.0 * std::cos(std::numbers::pi / (d + 4)), 2.0) + 1e-9);
  EXPECT_THROW(free_poly_norm(p, FreeFamily(FamilyKind::haar_unitary, 1, 3)), InvalidArgument);
}
