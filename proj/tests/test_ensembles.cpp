#include "rmt/ensembles.hpp"
#include "rmt/numlin.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

using namespace rmt;

TEST(SeededStream, KeysSeparateStreamsAndSubstreams) {
  const SeededStream s{7};
  EXPECT_EQ(s.key(), SeededStream{7}.key());
  EXPECT_NE(s.key(), s.with_stream(1).key());
  EXPECT_NE(s.with_stream(1).key(), s.with_substream(1).key());
  EXPECT_NE(s.fork("a").key(), s.fork("b").key());
  EXPECT_NE(SeededStream{7}.key(), SeededStream{8}.key());
}

TEST(RandomSource, UniformsStayInRange) {
  RandomSource r(SeededStream{1});
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform(), v = r.uniform_open();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(RandomSource, NormalMoments) {
  RandomSource r(SeededStream{2});
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.06);
}

TEST(Ginibre, SameStreamSameMatrix) {
  const SeededStream s{11, 3, 2};
  EXPECT_EQ(sample_ginibre(16, s), sample_ginibre(16, s));
  EXPECT_NE(sample_ginibre(16, s), sample_ginibre(16, s.with_substream(3)));
}

TEST(Ginibre, EntryVarianceIsOneOverN) {
  const Index N = 200;
  const Matrix y = sample_ginibre(N, SeededStream{5});
  // E|y_ij|^2 = 1/N so the normalized trace of Y*Y is close to 1.
  EXPECT_NEAR(y.squaredNorm() / N, 1.0, 0.02);
  // Real and imaginary parts carry equal variance.
  double re = 0, im = 0;
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      re += y(i, j).real() * y(i, j).real();
      im += y(i, j).imag() * y(i, j).imag();
    }
  EXPECT_NEAR(re / im, 1.0, 0.03);
}

TEST(Ginibre, NormNearTwo) {
  const double v = spectral_norm(sample_ginibre(256, SeededStream{9}));
  EXPECT_GT(v, 1.85);
  EXPECT_LT(v, 2.1);
}

TEST(Gue, HermitianWithUnitScale) {
  const Index N = 200;
  const Matrix x = sample_gue(N, SeededStream{4});
  EXPECT_LT((x - x.adjoint()).norm(), 1e-14);
  EXPECT_NEAR(x.squaredNorm() / N, 1.0, 0.03);
  Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 2.0, 0.12);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), -2.0, 0.12);
}

TEST(Haar, Unitary) {
  const Matrix u = sample_haar_unitary(40, SeededStream{3});
  EXPECT_LT((u.adjoint() * u - Matrix::Identity(40, 40)).norm(), 1e-12);
}

TEST(Haar, TraceHasUnitSecondMoment) {
  // E|tr U|^2 = 1 for Haar unitaries of any size.
  double s = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) s += std::norm(sample_haar_unitary(6, SeededStream{12}.with_stream(i)).trace());
  EXPECT_NEAR(s / trials, 1.0, 0.1);
}

TEST(Ensembles, ParseAndValidate) {
  EXPECT_EQ(parse_ensemble_kind("gue"), EnsembleKind::gue);
  EXPECT_EQ(parse_ensemble_kind("haar"), EnsembleKind::haar_unitary);
  EXPECT_THROW(parse_ensemble_kind("wishart"), InvalidArgument);
  EXPECT_THROW(sample_ginibre(0, SeededStream{1}), InvalidArgument);
  EXPECT_THROW(sample_tuple({EnsembleKind::gue, 4, 0}, SeededStream{1}), InvalidArgument);
}

TEST(Ensembles, TupleUsesSubstreams) {
  const SeededStream s{21, 4};
  const MatrixTuple t = sample_tuple({EnsembleKind::ginibre, 8, 3}, s);
  ASSERT_EQ(t.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t[j], sample_ginibre(8, s.with_substream(j)));
}

TEST(BlockFamily, LayoutAndAssembly) {
  const BlockFamily f = sample_block_family({2, 3}, 2, SeededStream{6});
  EXPECT_EQ(f.total_dim(), 5);
  EXPECT_EQ(f.sizes(), (std::vector<Index>{2, 3}));
  const Matrix big = assemble_block(f, 1);
  EXPECT_EQ(big.rows(), 5);
  EXPECT_EQ(big.block(0, 0, 2, 2), f.blocks.at(2)[1]);
  EXPECT_EQ(big.block(2, 2, 3, 3), f.blocks.at(3)[1]);
  EXPECT_EQ(big.block(0, 2, 2, 3).norm(), 0.0);
  EXPECT_THROW(sample_block_family({3, 2}, 1, SeededStream{1}), InvalidArgument);
}

TEST(MatrixFormat, RoundTripIsExact) {
  const Matrix m = sample_ginibre(7, SeededStream{8});
  std::stringstream ss;
  write_matrix(ss, m);
  EXPECT_EQ(ss.str().size(), 4u + 4u + 8u + 8u + 7u * 7u * 16u);
  EXPECT_EQ(read_matrix(ss), m);
}

TEST(MatrixFormat, RectangularAndFileRoundTrip) {
  Matrix m(2, 3);
  m << cplx(1, -1), cplx(0, 2), cplx(-3.5, 0), cplx(1e-300, 0), cplx(0, -0.0), cplx(6, 7);
  const std::string path = ::testing::TempDir() + "/rmt_matrix.bin";
  save_matrix(path, m);
  EXPECT_EQ(load_matrix(path), m);
  std::remove(path.c_str());
}

TEST(MatrixFormat, HeaderIsLittleEndian) {
  std::stringstream ss;
  write_matrix(ss, Matrix::Identity(1, 2));
  const std::string b = ss.str();
  EXPECT_EQ(b.substr(0, 4), "RMTM");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);  // version
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1);  // rows
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 2); // cols
}

TEST(MatrixFormat, RejectsBadInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_matrix(bad), InvalidArgument);
  std::stringstream ss;
  write_matrix(ss, Matrix::Identity(3, 3));
  std::string s = ss.str();
  std::stringstream truncated(s.substr(0, s.size() - 5));
  EXPECT_THROW(read_matrix(truncated), InvalidArgument);
  s[4] = 9;
  std::stringstream version(s);
  EXPECT_THROW(read_matrix(version), InvalidArgument);
}
