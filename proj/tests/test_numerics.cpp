#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace koopman;

namespace {

RealMatrix random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  RealMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(gen);
  return m;
}

}  // namespace

TEST(Tolerance, DefaultsAndValidation) {
  ToleranceConfig t;
  EXPECT_DOUBLE_EQ(t.rank_rtol, 1e-10);
  EXPECT_DOUBLE_EQ(t.eig_match_atol, 1e-8);
  EXPECT_DOUBLE_EQ(t.subspace_atol, 1e-8);
  EXPECT_NO_THROW(t.validate());
  t.rank_rtol = -1;
  EXPECT_THROW(t.validate(), Error);
}

TEST(Rank, Examples) {
  EXPECT_EQ(numerical_rank(RealMatrix::Identity(3, 3)), 3);
  RealMatrix m(2, 2);
  m << 1, 2, 2, 4;
  EXPECT_EQ(numerical_rank(m), 1);
  EXPECT_EQ(numerical_rank(RealMatrix::Zero(4, 3)), 0);
}

TEST(Rank, Example2DictionaryMatchesGramOracle) {
  const auto& d = fx::example2_data();
  EXPECT_EQ(fx::gram_rank(d.dx), 9);
  EXPECT_EQ(numerical_rank(d.dx), 9);
}

TEST(Rank, NonFiniteRejected) {
  RealMatrix m = RealMatrix::Identity(2, 2);
  m(0, 1) = std::nan("");
  try {
    numerical_rank(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(Rank, MatchesConstructedRankOnRandomProducts) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Index r = 1 + seed % 7;
    const RealMatrix m = random_matrix(60, r, seed) * random_matrix(r, 12, seed + 100);
    EXPECT_EQ(numerical_rank(m), r);
  }
}

TEST(NullSpace, Examples) {
  EXPECT_FALSE(null_space_basis(RealMatrix::Identity(4, 4)).has_value());
  RealMatrix m(1, 2);
  m << 1, 1;
  const auto z = null_space_basis(m);
  ASSERT_TRUE(z.has_value());
  ASSERT_EQ(z->cols(), 1);
  EXPECT_NEAR(std::abs((*z)(0, 0)), 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR((*z)(0, 0) + (*z)(1, 0), 0.0, 1e-14);
}

TEST(NullSpace, Example2StackedDataHasEightDimensionalNullSpace) {
  const auto& d = fx::example2_data();
  RealMatrix ab(d.dx.rows(), 18);
  ab << d.dx, d.dy;
  const auto z = null_space_basis(ab);
  ASSERT_TRUE(z.has_value());
  EXPECT_EQ(z->cols(), 8);
  EXPECT_LE((ab * *z).norm() / ab.norm(), 1e-12);
}

TEST(NullSpace, PropertiesOnRandomMatrices) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Index r = 1 + seed % 5;
    const RealMatrix m = random_matrix(40, r, seed) * random_matrix(r, 9, seed + 50);
    const auto z = null_space_basis(m);
    ASSERT_TRUE(z.has_value());
    EXPECT_EQ(z->cols(), 9 - r);
    EXPECT_LE((m * *z).norm(), 1e-10 * m.norm());
    EXPECT_LE((z->transpose() * *z - RealMatrix::Identity(z->cols(), z->cols())).norm(), 1e-12);
  }
}

TEST(PseudoInverse, Examples) {
  RealMatrix d = RealMatrix::Zero(2, 2);
  d.diagonal() << 2, 4;
  RealMatrix expect = RealMatrix::Zero(2, 2);
  expect.diagonal() << 0.5, 0.25;
  EXPECT_LE((pseudo_inverse(d) - expect).norm(), 1e-15);
  const RealMatrix z = pseudo_inverse(RealMatrix::Zero(3, 2));
  EXPECT_EQ(z.rows(), 2);
  EXPECT_EQ(z.cols(), 3);
  EXPECT_EQ(z.norm(), 0.0);
  const RealMatrix m = random_matrix(100, 5, 3);
  EXPECT_LE((pseudo_inverse(m) * m - RealMatrix::Identity(5, 5)).norm(), 1e-10);
}

TEST(PseudoInverse, PenroseIdentities) {
  for (unsigned seed = 0; seed < 12; ++seed) {
    const Index rows = 5 + 17 * seed, cols = 1 + (seed * 7) % 50;
    const Index r = std::min(rows, cols) - (seed % 3 == 0 ? std::min<Index>(std::min(rows, cols) - 1, 2) : 0);
    const RealMatrix m = random_matrix(rows, r, seed) * random_matrix(r, cols, seed + 1000);
    const RealMatrix p = pseudo_inverse(m);
    const double s = m.norm();
    EXPECT_LE((m * p * m - m).norm(), 1e-10 * s) << seed;
    EXPECT_LE((p * m * p - p).norm(), 1e-10 * p.norm()) << seed;
    EXPECT_LE(((m * p).transpose() - m * p).norm(), 1e-10) << seed;
    EXPECT_LE(((p * m).transpose() - p * m).norm(), 1e-10) << seed;
  }
}

TEST(LeastSquares, AgreesWithNormalEquations) {
  const RealMatrix m = random_matrix(200, 6, 9);
  const RealMatrix rhs = random_matrix(200, 3, 10);
  const RealMatrix oracle = (m.transpose() * m).ldlt().solve(m.transpose() * rhs);
  EXPECT_LE((least_squares(m, rhs) - oracle).norm(), 1e-10);
}

TEST(Eig, Identity) {
  const auto e = eig(RealMatrix::Identity(3, 3));
  ASSERT_EQ(e.size(), 3u);
  for (const auto& p : e) {
    EXPECT_NEAR(std::abs(p.value - 1.0), 0.0, 1e-14);
    EXPECT_EQ(p.kind, PairKind::Real);
  }
}

TEST(Eig, RotationScalingMatchesCharacteristicPolynomial) {
  RealMatrix m(2, 2);
  m << 0.8, -0.5, 0.5, 0.8;
  const auto [r1, r2] = fx::char_poly_roots(m);
  const auto e = eig(m);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_LE(fx::spectrum_distance({e[0].value, e[1].value}, {r1, r2}), 1e-14);
  EXPECT_EQ(e[0].kind, PairKind::ConjugateUpper);
  EXPECT_EQ(e[1].kind, PairKind::ConjugateLower);
  EXPECT_GT(e[0].value.imag(), 0);
  EXPECT_EQ(e[1].value, std::conj(e[0].value));
  EXPECT_LE((e[1].vector - e[0].vector.conjugate()).norm(), 0.0);
  for (const auto& p : e) EXPECT_LE((m.cast<Complex>() * p.vector - p.value * p.vector).norm(), 1e-14);
}

TEST(Eig, DiagonalHasStandardEigenvectors) {
  RealMatrix m(2, 2);
  m << 2, 0, 0, 3;
  const auto e = eig(m);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_NEAR(e[0].value.real(), 3, 1e-15);
  EXPECT_NEAR(e[1].value.real(), 2, 1e-15);
  EXPECT_NEAR(std::abs(e[0].vector(1)), 1, 1e-15);
  EXPECT_NEAR(std::abs(e[1].vector(0)), 1, 1e-15);
  // normalized phase: largest entry real positive
  EXPECT_GT(e[0].vector(1).real(), 0);
}

TEST(Eig, NonSquareRejected) { EXPECT_THROW(eig(RealMatrix::Zero(2, 3)), Error); }

TEST(Eig, RandomMatricesSatisfyEigenEquation) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const RealMatrix m = random_matrix(7, 7, seed);
    const auto e = eig(m);
    ASSERT_EQ(e.size(), 7u);
    for (const auto& p : e) {
      EXPECT_NEAR(p.vector.norm(), 1.0, 1e-12);
      EXPECT_LE((m.cast<Complex>() * p.vector - p.value * p.vector).norm(), 1e-10 * m.norm());
    }
  }
}

TEST(Subspaces, EqualityExamples) {
  RealMatrix p(3, 2), q(3, 2);
  p << 1, 0, 0, 1, 0, 0;
  q << 1, 1, 1, -1, 0, 0;
  EXPECT_TRUE(subspace_equal(p, q));
  RealMatrix e1(3, 1), e2(3, 1);
  e1 << 1, 0, 0;
  e2 << 0, 1, 0;
  EXPECT_FALSE(subspace_equal(e1, e2));
  EXPECT_FALSE(subspace_equal(p, e1));
}

TEST(Subspaces, PrincipalAnglesAgainstOracle) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const RealMatrix p = random_matrix(30, 4, seed);
    const RealMatrix q = p * random_matrix(4, 4, seed + 1) + 1e-4 * random_matrix(30, 4, seed + 2);
    const RealVector a = principal_angles(p, q);
    EXPECT_NEAR(a.maxCoeff(), fx::max_angle_oracle(p, q), 1e-9);
    for (Index i = 1; i < a.size(); ++i) EXPECT_LE(a(i - 1), a(i));
  }
}

TEST(Subspaces, EqualityIsInvariantUnderBasisChange) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const RealMatrix p = random_matrix(25, 3, seed);
    const RealMatrix t = random_matrix(3, 3, seed + 7) + 3 * RealMatrix::Identity(3, 3);
    EXPECT_TRUE(subspace_equal(p, RealMatrix(p * t)));
    EXPECT_TRUE(subspace_equal(RealMatrix(p * t), p));
  }
}

TEST(Subspaces, TinyAnglesResolved) {
  RealMatrix p(2, 1), q(2, 1);
  p << 1, 0;
  q << 1, 1e-12;
  EXPECT_NEAR(principal_angles(p, q)(0), 1e-12, 1e-20);
}

TEST(Subspaces, ContainmentResidual) {
  RealMatrix c(3, 2), e(3, 1), out(3, 1);
  c << 1, 0, 0, 1, 0, 0;
  e << 1, 2, 0;
  out << 0, 0, 1;
  EXPECT_LE(containment_residual(e, c), 1e-15);
  EXPECT_NEAR(containment_residual(out, c), 1.0, 1e-15);
}
