#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace koopman;

TEST(Ssd, LinearDictionaryIsWholeSpan) {
  const SnapshotSet s = generate(fx::example2_spec(), 1000);
  const auto r = ssd(s.x, s.y);
  ASSERT_FALSE(r.zero);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.log[0].null_dim, 2);
  EXPECT_EQ(r.c, RealMatrix::Identity(2, 2));
  const auto red = reduced_koopman(s.x, s.y, r);
  EXPECT_LE((red.k - fx::example2_a().transpose()).norm(), 1e-12);
  EXPECT_TRUE(red.invertible);
}

TEST(Ssd, Example2FindsQuadraticSpan) {
  const auto& d = fx::example2_data();
  const auto r = ssd(d.dx, d.dy);
  ASSERT_FALSE(r.zero);
  EXPECT_EQ(r.dim(), 6);
  ASSERT_GE(r.log.size(), 2u);
  EXPECT_EQ(r.log[0].null_dim, 8);
  EXPECT_LE(fx::max_angle_oracle(RealMatrix(d.dx * r.c), fx::quadratic_span_on(d.snaps.x)), 1e-6);
  EXPECT_LE(fx::max_angle_oracle(RealMatrix(d.dx * r.c), RealMatrix(d.dy * r.c)), 1e-8);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Ssd, Example2ReducedSpectrum) {
  const auto& d = fx::example2_data();
  const auto r = ssd(d.dx, d.dy);
  const auto red = reduced_koopman(fx::example2_dictionary(), d.dx, d.dy, r);
  std::vector<Complex> values;
  for (const auto& p : eig(red.k)) values.push_back(p.value);
  EXPECT_LE(fx::spectrum_distance(values, fx::example2_spectrum()), 1e-6);
  EXPECT_LE(red.relative_residual, 1e-12);
  ASSERT_TRUE(red.dictionary.has_value());
  EXPECT_EQ(red.dictionary->size(), 6);
  EXPECT_LE(fx::max_angle_oracle(red.dictionary->evaluate(d.snaps.x), fx::quadratic_span_on(d.snaps.x)), 1e-6);
}

TEST(Ssd, LiftedEigenvectorsAgreeWithForwardBackward) {
  const auto& d = fx::example2_data();
  const auto r = ssd(d.dx, d.dy);
  const auto lifted = lift_eigenvectors(d.dx, d.dy, r, reduced_koopman(d.dx, d.dy, r));
  const auto fb = forward_backward_eigenpairs(d.dx, d.dy);
  ASSERT_EQ(lifted.size(), fb.matches.size());
  for (const auto& m : lifted) {
    EXPECT_LE(m.data_defect, 1e-8);
    EXPECT_LE(fx::projection_residual(ComplexMatrix(r.c.cast<Complex>()), m.v), 1e-8);
    const auto it = std::find_if(fb.matches.begin(), fb.matches.end(),
                                 [&](const MatchedEvolution& o) { return std::abs(o.lambda - m.lambda) < 1e-6; });
    ASSERT_NE(it, fb.matches.end());
    ComplexMatrix a(9, 1), b(9, 1);
    a.col(0) = m.v;
    b.col(0) = it->v;
    EXPECT_LE(fx::max_angle_oracle(a, b), 1e-6);
  }
  // FB-matched span on the data equals the SSD span
  ComplexMatrix vs(9, static_cast<Index>(fb.matches.size()));
  for (std::size_t i = 0; i < fb.matches.size(); ++i) vs.col(static_cast<Index>(i)) = fb.matches[i].v;
  EXPECT_TRUE(subspace_equal(ComplexMatrix(d.dx.cast<Complex>() * vs), RealMatrix(d.dx * r.c), {1e-10, 1e-8, 1e-6}));
}

TEST(Ssd, ZeroResultWhenNothingIsInvariant) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  RealMatrix dx(200, 3), dy(200, 3);
  for (Index i = 0; i < dx.size(); ++i) dx.data()[i] = nd(gen);
  for (Index i = 0; i < dy.size(); ++i) dy.data()[i] = nd(gen);
  const auto r = ssd(dx, dy);
  EXPECT_TRUE(r.zero);
  EXPECT_EQ(r.dim(), 0);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_THROW(reduced_koopman(dx, dy, r), Error);
}

TEST(Ssd, PreconditionsAndWarnings) {
  RealMatrix dx(4, 2);
  dx << 1, 2, 2, 4, 3, 6, 4, 8;
  try {
    ssd(dx, dx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AssumptionViolation);
  }
  const SnapshotSet s = generate(fx::example2_spec(), 3);
  EXPECT_FALSE(ssd(s.x, s.y).warnings.empty());
  EXPECT_THROW(approximate_ssd(s.x, s.y, 0.0), Error);
  EXPECT_THROW(approximate_ssd(s.x, s.y, 1.0), Error);
}

TEST(Ssd, VanDerPolExactIsConstant) {
  const auto d = fx::make_data(fx::vanderpol_spec(), 10000, monomials_up_to_degree(2, 7));
  const auto r = ssd(d.dx, d.dy);
  ASSERT_EQ(r.dim(), 1);
  // C proportional to e_1, the constant monomial
  EXPECT_LE(r.c.bottomRows(35).norm() / r.c.norm(), 1e-8);
  const auto red = reduced_koopman(d.dx, d.dy, r);
  EXPECT_NEAR(red.k(0, 0), 1.0, 1e-10);
  const auto lifted = lift_eigenvectors(d.dx, d.dy, r, red);
  ASSERT_EQ(lifted.size(), 1u);
  EXPECT_NEAR(std::abs(lifted[0].lambda - 1.0), 0, 1e-10);
}

TEST(Ssd, DimensionsStrictlyDecrease) {
  const auto d = fx::make_data(fx::vanderpol_spec(), 10000, monomials_up_to_degree(2, 7));
  const auto r = ssd(d.dx, d.dy);
  EXPECT_LE(r.iterations, 36);
  for (std::size_t i = 1; i < r.log.size(); ++i) EXPECT_LT(r.log[i].subspace_dim, r.log[i - 1].subspace_dim);
}

TEST(ApproximateSsd, TinyEpsilonMatchesExact) {
  const auto& d = fx::example2_data();
  const auto exact = ssd(d.dx, d.dy);
  const auto approx = approximate_ssd(d.dx, d.dy, 1e-15);
  EXPECT_EQ(approx.mode, SsdMode::Approximate);
  ASSERT_EQ(approx.dim(), exact.dim());
  EXPECT_LE(fx::max_angle_oracle(exact.c, approx.c), 1e-8);
}

TEST(ApproximateSsd, RecoversSubspaceUnderPerturbation) {
  const auto& d = fx::example2_data();
  const auto clean = ssd(d.dx, d.dy);
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1e-6, 1e-6);
  RealMatrix noisy = d.dy;
  for (Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += u(gen);
  const auto r = approximate_ssd(d.dx, noisy, 1e-4);
  ASSERT_EQ(r.dim(), 6);
  EXPECT_LE(fx::max_angle_oracle(RealMatrix(d.dx * r.c), RealMatrix(d.dx * clean.c)), 1e-3);
  for (const auto& it : r.log) EXPECT_LE(it.truncation_ratio, 1e-4);
}

TEST(ApproximateSsd, TruncatedRankRule) {
  RealVector s(4);
  s << 10, 1, 1e-5, 1e-6;
  double ratio = 0;
  // tail sums: 11.000011, 1.000011, 1.1e-5, 1e-6 over 11.000011
  EXPECT_EQ(detail::truncated_rank(s, 1e-4, ratio).value(), 2);
  EXPECT_NEAR(ratio, 1.1e-5 / 11.000011, 1e-20);
  EXPECT_EQ(detail::truncated_rank(s, 1e-7, ratio).value(), 3);
  EXPECT_NEAR(ratio, 1e-6 / 11.000011, 1e-21);
  EXPECT_FALSE(detail::truncated_rank(s, 1e-8, ratio).has_value());
}

TEST(ReducedKoopman, LiftOfConstant) {
  const SnapshotSet s = generate(fx::example2_spec(), 100);
  const MonomialDictionary d(2, {{0, 0}});
  const RealMatrix dx = d.evaluate(s.x), dy = d.evaluate(s.y);
  const auto r = ssd(dx, dy);
  ASSERT_EQ(r.dim(), 1);
  const auto red = reduced_koopman(dx, dy, r);
  EXPECT_NEAR(red.k(0, 0), 1.0, 1e-14);
  const auto lifted = lift_eigenvectors(dx, dy, r, red);
  ASSERT_EQ(lifted.size(), 1u);
  EXPECT_NEAR(std::abs(lifted[0].v(0)), 1.0, 1e-14);
}

TEST(Grid, ConstantEigenfunction) {
  const MonomialDictionary d(2, {{0, 0}, {1, 0}});
  ComplexVector v(2);
  v << 1, 0;
  const auto g = eigenfunction_grid(d, v, {{-3, 1}, {0, 2}}, 4);
  EXPECT_EQ(g.points.rows(), 16);
  EXPECT_LE((g.magnitude.array() - 1).abs().maxCoeff(), 0);
  EXPECT_EQ(g.angle.cwiseAbs().maxCoeff(), 0);
}

TEST(Grid, RadialFunctionAtCorner) {
  const auto d = fx::example2_dictionary();
  ComplexVector v = ComplexVector::Zero(9);
  v(3) = 1;
  v(5) = 1;
  const auto g = eigenfunction_grid(d, v, {{-2, 2}, {-2, 2}}, 5);
  const Index last = g.points.rows() - 1;
  EXPECT_EQ(g.points(last, 0), 2);
  EXPECT_EQ(g.points(last, 1), 2);
  EXPECT_DOUBLE_EQ(g.magnitude(last), 8);
  EXPECT_EQ(g.angle(last), 0);
  // x_1 varies slowest
  EXPECT_EQ(g.points(1, 0), -2);
  EXPECT_EQ(g.points(1, 1), -1);
}

TEST(Grid, ConjugateEigenfunctionNegatesAngle) {
  const auto& d = fx::example2_data();
  const auto fb = forward_backward_eigenpairs(d.dx, d.dy);
  const auto it = std::find_if(fb.matches.begin(), fb.matches.end(), [](const MatchedEvolution& m) {
    return std::abs(m.lambda - Complex(0.8, 0.5)) < 1e-6;
  });
  ASSERT_NE(it, fb.matches.end());
  const Box box{{-2, 2}, {-2, 2}};
  const auto g = eigenfunction_grid(fx::example2_dictionary(), it->v, box, 21);
  const auto gc = eigenfunction_grid(fx::example2_dictionary(), ComplexVector(it->v.conjugate()), box, 21);
  EXPECT_TRUE(g.magnitude.allFinite());
  EXPECT_TRUE(g.angle.allFinite());
  EXPECT_EQ(g.points.rows(), 441);
  EXPECT_LE((g.magnitude - gc.magnitude).cwiseAbs().maxCoeff(), 1e-14);
  for (Index i = 0; i < g.angle.size(); ++i) {
    // angle = pi maps to itself under conjugation on the principal branch
    if (std::abs(std::abs(g.angle(i)) - M_PI) < 1e-12 || g.magnitude(i) < 1e-12) continue;
    EXPECT_NEAR(g.angle(i), -gc.angle(i), 1e-12);
  }
}

TEST(Grid, InvalidInput) {
  const auto d = fx::example2_dictionary();
  ComplexVector v = ComplexVector::Zero(9);
  EXPECT_THROW(eigenfunction_grid(d, v, {{-2, 2}, {-2, 2}}, 1), Error);
  EXPECT_THROW(eigenfunction_grid(d, v, {{-2, 2}}, 4), Error);
  EXPECT_THROW(eigenfunction_grid(d, ComplexVector::Zero(3), {{-2, 2}, {-2, 2}}, 4), Error);
}
