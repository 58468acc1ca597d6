#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace hybreg;

TEST(BidiagInit, NormalizesRightHandSide) {
  DenseOperator a(Matrix::Identity(2, 3));
  const BidiagState s = BidiagState::init(a, Vector{{3.0, 4.0}});
  EXPECT_EQ(s.k(), 0);
  EXPECT_DOUBLE_EQ(s.beta1(), 5.0);
  EXPECT_DOUBLE_EQ(s.P(1)(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(s.P(1)(1, 0), 0.8);
}

TEST(BidiagInit, UnitVector) {
  DenseOperator a(Matrix::Identity(3, 3));
  const BidiagState s = BidiagState::init(a, Vector::Unit(3, 0));
  EXPECT_DOUBLE_EQ(s.beta1(), 1.0);
  EXPECT_EQ(Vector(s.P(1).col(0)), Vector::Unit(3, 0));
}

TEST(BidiagInit, ZeroRightHandSide) {
  DenseOperator a(Matrix::Identity(2, 2));
  try {
    BidiagState::init(a, Vector::Zero(2));
    FAIL() << "expected breakdown";
  } catch (const BreakdownError& e) {
    EXPECT_NE(std::string(e.what()).find("zero right-hand side"), std::string::npos);
  }
}

TEST(BidiagInit, LengthMismatch) {
  DenseOperator a(Matrix::Identity(2, 2));
  EXPECT_THROW(BidiagState::init(a, Vector::Ones(3)), ContractViolation);
}

TEST(BidiagExtend, IdentityBreaksDownAtStepOne) {
  DenseOperator a(Matrix::Identity(2, 2));
  BidiagState s = BidiagState::init(a, Vector::Unit(2, 0));
  EXPECT_EQ(s.extend(a, 3), 1);
  EXPECT_EQ(s.k(), 1);
  EXPECT_DOUBLE_EQ(s.alphas()[0], 1.0);
  EXPECT_EQ(Vector(s.Q(1).col(0)), Vector::Unit(2, 0));
  ASSERT_TRUE(s.breakdown().has_value());
  EXPECT_EQ(s.breakdown()->step, 1);
  EXPECT_EQ(s.breakdown()->kind, Breakdown::Kind::beta);
  EXPECT_THROW(s.extend(a, 1), BreakdownError);
}

TEST(BidiagExtend, FirstAlphaOfDiagonal) {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 2, 1;
  DenseOperator a(m);
  BidiagState s = BidiagState::init(a, Vector::Ones(2) / std::sqrt(2.0));
  s.extend(a, 1);
  EXPECT_NEAR(s.alphas()[0], std::sqrt(2.5), 1e-15);
}

TEST(BidiagExtend, ShawRecurrenceResidual) {
  const auto p = make_problem("shaw", 64, 1e-2, 1);
  const Matrix a = materialize(*p.A);
  BidiagState s = BidiagState::init(*p.A, p.b);
  s.extend(*p.A, 20);
  const Index k = std::min<Index>(s.k(), 18);
  const auto m = extract_matrices(s, k);
  EXPECT_LE((a * s.Q(k) - s.P(k + 1) * m.B_kplus).norm(), 1e-10 * a.norm());
  EXPECT_LE((a.transpose() * s.P(k) - s.Q(k) * m.B_k.transpose()).norm(), 1e-10 * a.norm());
}

TEST(BidiagExtend, IncrementalEqualsOneShot) {
  Rng rng(31);
  DenseOperator a(rng.normal_matrix(40, 30));
  const Vector b = rng.normal_vector(40);
  BidiagState once = BidiagState::init(a, b);
  once.extend(a, 12);
  BidiagState steps = BidiagState::init(a, b);
  for (int i = 0; i < 4; ++i) steps.extend(a, 3);
  EXPECT_EQ(once.alphas(), steps.alphas());
  EXPECT_EQ(once.betas(), steps.betas());
  EXPECT_EQ(Matrix(once.Q(12)), Matrix(steps.Q(12)));
}

TEST(BidiagExtend, DeterministicCoefficients) {
  const auto p = make_problem("heat", 64, 1e-2, 3);
  BidiagState a = BidiagState::init(*p.A, p.b);
  BidiagState b = BidiagState::init(*p.A, p.b);
  a.extend(*p.A, 15);
  b.extend(*p.A, 15);
  EXPECT_EQ(a.alphas(), b.alphas());
  EXPECT_EQ(a.betas(), b.betas());
}

TEST(BidiagExtend, OrthogonalityAndPositivity) {
  Rng rng(32);
  DenseOperator a(rng.normal_matrix(80, 60));
  BidiagState s = BidiagState::init(a, rng.normal_vector(80));
  s.extend(a, 30);
  EXPECT_LE(orthonormality_defect(s.P(31)), 1e-10);
  EXPECT_LE(orthonormality_defect(s.Q(30)), 1e-10);
  for (double v : s.alphas()) EXPECT_GT(v, 0.0);
  for (double v : s.betas()) EXPECT_GT(v, 0.0);
}

TEST(BidiagExtend, NoReorthLosesLittleOnWellConditioned) {
  Rng rng(33);
  DenseOperator a(rng.normal_matrix(60, 40));
  BidiagState s = BidiagState::init(a, rng.normal_vector(60), Reorthogonalization::none);
  s.extend(a, 10);
  EXPECT_EQ(s.reorth(), Reorthogonalization::none);
  EXPECT_LE(orthonormality_defect(s.Q(10)), 1e-8);
}

TEST(BidiagExtend, BreakdownAtKrylovExhaustion) {
  Rng rng(34);
  DenseOperator a(rng.normal_matrix(10, 4));
  BidiagState s = BidiagState::init(a, rng.normal_vector(10));
  const Index done = s.extend(a, 10);
  EXPECT_EQ(done, 4);
  ASSERT_TRUE(s.breakdown());
  EXPECT_EQ(s.breakdown()->step, 5);
  EXPECT_EQ(s.breakdown()->kind, Breakdown::Kind::alpha);
}

TEST(ExtractMatrices, ShapesFollowDefinition) {
  Rng rng(35);
  DenseOperator a(rng.normal_matrix(12, 9));
  BidiagState s = BidiagState::init(a, rng.normal_vector(12));
  s.extend(a, 3);
  const auto m1 = extract_matrices(s, 1);
  EXPECT_EQ(m1.B_k.rows(), 1);
  EXPECT_DOUBLE_EQ(m1.B_k(0, 0), s.alphas()[0]);
  const auto m2 = extract_matrices(s, 2);
  EXPECT_DOUBLE_EQ(m2.B_k(0, 0), s.alphas()[0]);
  EXPECT_DOUBLE_EQ(m2.B_k(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(m2.B_k(1, 0), s.betas()[1]);
  EXPECT_DOUBLE_EQ(m2.B_k(1, 1), s.alphas()[1]);
  EXPECT_EQ(m2.B_kplus.rows(), 3);
  EXPECT_DOUBLE_EQ(m2.B_kplus(2, 1), s.betas()[2]);
  ASSERT_TRUE(m2.B_kp1.has_value());
  EXPECT_EQ(m2.B_kp1->rows(), 3);
  EXPECT_FALSE(extract_matrices(s).B_kp1.has_value());
  EXPECT_THROW(extract_matrices(s, 0), ContractViolation);
  EXPECT_THROW(extract_matrices(s, 4), ContractViolation);
}

TEST(ExtractMatrices, ProjectionEqualsBidiagonal) {
  Rng rng(36);
  const Matrix am = rng.normal_matrix(50, 40);
  DenseOperator a(am);
  BidiagState s = BidiagState::init(a, rng.normal_vector(50));
  s.extend(a, 10);
  const auto m = extract_matrices(s, 10);
  EXPECT_LE((s.P(10).transpose() * am * s.Q(10) - m.B_k).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExtractMatrices, SingularValuesInterlace) {
  Rng rng(37);
  const Matrix am = rng.normal_matrix(30, 20);
  DenseOperator a(am);
  BidiagState s = BidiagState::init(a, rng.normal_vector(30));
  s.extend(a, 8);
  const Vector sa = Eigen::JacobiSVD<Matrix>(am).singularValues();
  const Vector sb = Eigen::JacobiSVD<Matrix>(extract_matrices(s).B_kplus).singularValues();
  for (Index i = 0; i < sb.size(); ++i) {
    EXPECT_LE(sb[i], sa[0] * (1 + 1e-12));
    EXPECT_GE(sb[i], sa[sa.size() - 1] * (1 - 1e-12));
  }
}

TEST(BidiagState, FromPartsRoundTrip) {
  Rng rng(38);
  DenseOperator a(rng.normal_matrix(15, 10));
  BidiagState s = BidiagState::init(a, rng.normal_vector(15));
  s.extend(a, 4);
  const BidiagState t = BidiagState::from_parts(s.P(5), s.Q(4), s.alphas(), s.betas());
  EXPECT_EQ(t.k(), 4);
  EXPECT_EQ(extract_matrices(t).B_kplus, extract_matrices(s).B_kplus);
  EXPECT_THROW(BidiagState::from_parts(s.P(4), s.Q(4), s.alphas(), s.betas()), ContractViolation);
}

TEST(BidiagState, BlockAccessBounds) {
  DenseOperator a(Matrix::Identity(3, 3));
  BidiagState s = BidiagState::init(a, Vector::Ones(3));
  EXPECT_THROW(s.Q(1), ContractViolation);
  EXPECT_THROW(s.P(2), ContractViolation);
}
