#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace hybreg;

namespace {

void expect_orthogonal(const Matrix& m, double tol) {
  EXPECT_LE(orthonormality_defect(m), tol);
  EXPECT_EQ(m.rows(), m.cols());
}

}  // namespace

TEST(SvdSmall, Diagonal) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3;
  m(1, 1) = 1;
  const SmallSVD s = svd_small(m);
  EXPECT_NEAR(s.singular_values[0], 3.0, 1e-15);
  EXPECT_NEAR(s.singular_values[1], 1.0, 1e-15);
}

TEST(SvdSmall, UnsortedDiagonalIsSorted) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 1, 5, 2;
  const SmallSVD s = svd_small(m);
  EXPECT_NEAR(s.singular_values[0], 5.0, 1e-14);
  EXPECT_NEAR(s.singular_values[1], 2.0, 1e-14);
  EXPECT_NEAR(s.singular_values[2], 1.0, 1e-14);
  EXPECT_LE((s.reconstruct() - m).norm(), 1e-14);
}

TEST(SvdSmall, Nilpotent) {
  Matrix m(2, 2);
  m << 0, 2, 0, 0;
  const SmallSVD s = svd_small(m);
  EXPECT_NEAR(s.singular_values[0], 2.0, 1e-15);
  EXPECT_NEAR(s.singular_values[1], 0.0, 1e-15);
  expect_orthogonal(s.U, 1e-14);
  expect_orthogonal(s.V, 1e-14);
  EXPECT_LE((s.reconstruct() - m).norm(), 1e-14);
}

TEST(SvdSmall, RandomBidiagonalReconstructs) {
  Rng rng(21);
  const Matrix m = oracle::random_bidiagonal(rng, 20, 0.1, 2.0).dense();
  const SmallSVD s = svd_small(m);
  const double s_max = s.singular_values[0];
  EXPECT_LE((s.reconstruct() - m).cwiseAbs().maxCoeff(), 1e-12 * s_max);
  expect_orthogonal(s.U, 1e-12);
  expect_orthogonal(s.V, 1e-12);
  for (Index i = 1; i < s.singular_values.size(); ++i)
    EXPECT_GE(s.singular_values[i - 1], s.singular_values[i]);
}

TEST(SvdSmall, TallAndWideMatchReferenceSpectrum) {
  Rng rng(22);
  for (auto [r, c] : {std::pair<Index, Index>{12, 5}, {5, 12}, {1, 4}, {4, 1}}) {
    const Matrix m = rng.normal_matrix(r, c);
    const SmallSVD s = svd_small(m);
    EXPECT_EQ(s.U.rows(), r);
    EXPECT_EQ(s.V.rows(), c);
    expect_orthogonal(s.U, 1e-12);
    expect_orthogonal(s.V, 1e-12);
    const Vector ref = Eigen::JacobiSVD<Matrix>(m).singularValues();
    EXPECT_LE((s.singular_values - ref).norm(), 1e-12 * ref[0]);
    EXPECT_LE((s.reconstruct() - m).norm(), 1e-12 * m.norm());
  }
}

TEST(SvdSmall, RankDeficientCompletesBasis) {
  Rng rng(23);
  const Matrix m = rng.normal_matrix(8, 3) * rng.normal_matrix(3, 8);
  const SmallSVD s = svd_small(m);
  expect_orthogonal(s.U, 1e-12);
  expect_orthogonal(s.V, 1e-12);
  EXPECT_LE(s.singular_values[3], 1e-12 * s.singular_values[0]);
  EXPECT_LE((s.reconstruct() - m).norm(), 1e-12 * m.norm());
}

TEST(SvdSmall, RejectsNonFinite) {
  Matrix m = Matrix::Ones(3, 3);
  m(2, 0) = NAN;
  EXPECT_THROW(svd_small(m), ContractViolation);
}

TEST(SvdSmall, RejectsOversize) {
  EXPECT_THROW(svd_small(Matrix::Zero(1001, 1000)), ContractViolation);
}

TEST(SvdSmall, EckartYoungGap) {
  Rng rng(24);
  for (int t = 0; t < 10; ++t) {
    const Index r = 2 + static_cast<Index>(rng.uniform() * 38);
    const Index c = 2 + static_cast<Index>(rng.uniform() * 38);
    const Matrix m = rng.normal_matrix(r, c);
    const SmallSVD s = svd_small(m);
    const Index k = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(std::min(r, c) - 1));
    const TruncatedFactor f(s, k);
    const double gap = spectral_norm(m - f.dense());
    EXPECT_NEAR(gap, s.singular_values[k], 1e-10 * s.singular_values[k]);
  }
}

TEST(BidiagSolve, Scalar) {
  LowerBidiagonal b{Vector::Constant(1, 2.0), Vector(0)};
  EXPECT_DOUBLE_EQ(bidiag_solve(b, Vector::Constant(1, 6.0))[0], 3.0);
}

TEST(BidiagSolve, ForwardSubstitution) {
  LowerBidiagonal b{Vector::Ones(2), Vector::Ones(1)};
  const Vector y = bidiag_solve(b, Vector{{1.0, 3.0}});
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
}

TEST(BidiagSolve, MatchesDenseSolve) {
  Rng rng(25);
  const LowerBidiagonal b = oracle::random_bidiagonal(rng, 30, 1.0, 2.0);
  const Vector rhs = rng.normal_vector(30);
  const Vector ref = b.dense().partialPivLu().solve(rhs);
  EXPECT_LE(oracle::rel_diff(bidiag_solve(b, rhs), ref), 1e-12);
}

TEST(BidiagSolve, ZeroDiagonalIsSingular) {
  LowerBidiagonal b{Vector{{1.0, 0.0, 1.0}}, Vector::Ones(2)};
  EXPECT_THROW(bidiag_solve(b, Vector::Ones(3)), SingularMatrixError);
  LowerBidiagonal tiny{Vector{{1.0, 1e-20}}, Vector::Ones(1)};
  EXPECT_THROW(bidiag_solve(tiny, Vector::Ones(2), 1e-14), SingularMatrixError);
  EXPECT_NO_THROW(bidiag_solve(tiny, Vector::Ones(2)));
}

TEST(BidiagSolve, ShapeChecks) {
  LowerBidiagonal b{Vector::Ones(3), Vector::Ones(1)};
  EXPECT_THROW(bidiag_solve(b, Vector::Ones(3)), ContractViolation);
  LowerBidiagonal ok{Vector::Ones(3), Vector::Ones(2)};
  EXPECT_THROW(bidiag_solve(ok, Vector::Ones(2)), ContractViolation);
}

TEST(TruncatedPinv, DiagonalRankTwo) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 4, 2, 1;
  const TruncatedFactor f(svd_small(m), 2);
  const Vector y = truncated_pinv_apply(f, Vector{{4.0, 2.0, 1.0}});
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0, 1e-15);
  EXPECT_NEAR(y[2], 0.0, 1e-15);
}

TEST(TruncatedPinv, FullRankAgreesWithSolve) {
  Rng rng(26);
  const Matrix m = rng.normal_matrix(6, 6) + 6.0 * Matrix::Identity(6, 6);
  const Vector rhs = rng.normal_vector(6);
  const Vector y = truncated_pinv_apply(TruncatedFactor(svd_small(m), 6), rhs);
  EXPECT_LE(oracle::rel_diff(y, m.partialPivLu().solve(rhs)), 1e-12);
}

TEST(TruncatedPinv, MatchesDenseOracle) {
  Rng rng(27);
  for (Index k : {1, 4, 9}) {
    const Matrix m = rng.normal_matrix(k + 1, k + 1);
    const Vector rhs = rng.normal_vector(k + 1);
    const TruncatedFactor f(svd_small(m), k);
    const Vector ref = dense_pinv(dense_truncate(m, k)) * rhs;
    EXPECT_LE(oracle::rel_diff(truncated_pinv_apply(f, rhs), ref), 1e-10);
  }
}

TEST(TruncatedPinv, PenroseIdentity) {
  Rng rng(28);
  const Matrix m = rng.normal_matrix(7, 7);
  const TruncatedFactor f(svd_small(m), 5);
  const Matrix c = f.dense();
  Matrix pinv(7, 7);
  for (Index j = 0; j < 7; ++j) pinv.col(j) = truncated_pinv_apply(f, Matrix::Identity(7, 7).col(j));
  EXPECT_LE((c * pinv * c - c).norm(), 1e-10 * c.norm());
}

TEST(TruncatedPinv, IllConditionedFlagIsAWarningOnly) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 1, 1e-16, 0;
  const TruncatedFactor f(svd_small(m), 2);
  EXPECT_TRUE(f.ill_conditioned());
  EXPECT_NO_THROW(truncated_pinv_apply(f, Vector::Ones(3)));
  EXPECT_FALSE(TruncatedFactor(svd_small(Matrix::Identity(3, 3)), 3).ill_conditioned());
}

TEST(TruncatedFactor, RankBounds) {
  const SmallSVD s = svd_small(Matrix::Identity(3, 3));
  EXPECT_THROW(TruncatedFactor(s, 0), ContractViolation);
  EXPECT_THROW(TruncatedFactor(s, 4), ContractViolation);
  EXPECT_THROW(truncated_pinv_apply(TruncatedFactor(s, 2), Vector::Ones(2)), ContractViolation);
}
