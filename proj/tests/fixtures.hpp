#pragma once

// Shared data sets and independent oracles for the test suites.
// The oracles avoid the library's own numerics routines on purpose.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "koopman/koopman.hpp"

namespace fx {

using namespace koopman;

inline RealMatrix example2_a() {
  RealMatrix a(2, 2);
  a << 0.8, 0.5, -0.5, 0.8;
  return a;
}

inline SystemSpec example2_spec(std::uint64_t seed = 1) {
  SystemSpec s;
  s.dynamics = DiscreteLinear{example2_a()};
  s.box = {{-2, 2}, {-2, 2}};
  s.seed = seed;
  return s;
}

inline SystemSpec vanderpol_spec(std::uint64_t seed = 7) {
  SystemSpec s;
  s.dynamics = ContinuousField{VectorFieldId::VanDerPol, 5e-3, 1};
  s.box = {{-4, 4}, {-4, 4}};
  s.seed = seed;
  return s;
}

/// 1, x1, x2, x1^2, x1 x2, x2^2, x1^3, x2^3, x1^2 x2
inline MonomialDictionary example2_dictionary() {
  return MonomialDictionary(2, {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {0, 3}, {2, 1}});
}

struct DictData {
  SnapshotSet snaps;
  RealMatrix dx, dy;
};

template <class D>
DictData make_data(const SystemSpec& spec, Index n, const D& dict) {
  DictData d;
  d.snaps = generate(spec, n);
  d.dx = dict.evaluate(d.snaps.x);
  d.dy = dict.evaluate(d.snaps.y);
  return d;
}

inline const DictData& example2_data() {
  static const DictData d = make_data(example2_spec(), 10000, example2_dictionary());
  return d;
}

/// Columns 1, x1, x2, x1^2, x1 x2, x2^2 evaluated directly on X.
inline RealMatrix quadratic_span_on(const RealMatrix& x) {
  RealMatrix e(x.rows(), 6);
  for (Index i = 0; i < x.rows(); ++i) {
    const double a = x(i, 0), b = x(i, 1);
    e.row(i) << 1.0, a, b, a * a, a * b, b * b;
  }
  return e;
}

// --- oracles ---------------------------------------------------------------

/// Modified Gram-Schmidt with reorthogonalization; drops columns below tol.
template <class M>
M gram_schmidt(const M& in, double tol = 1e-10) {
  using Scalar = typename M::Scalar;
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> cols;
  const double scale = std::max(1.0, in.norm());
  for (Index j = 0; j < in.cols(); ++j) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = in.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : cols) v -= q * q.dot(v);
    if (v.norm() > tol * scale) cols.push_back(v / v.norm());
  }
  M q(in.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) q.col(static_cast<Index>(j)) = cols[j];
  return q;
}

/// Largest principal angle via the residual of projecting each basis onto the other.
template <class M>
double max_angle_oracle(const M& p, const M& q) {
  const M qp = gram_schmidt(p), qq = gram_schmidt(q);
  if (qp.cols() != qq.cols()) return M_PI / 2;
  const M r = qq - qp * (qp.adjoint() * qq);
  Eigen::JacobiSVD<M> svd(r);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return std::asin(std::min(1.0, s));
}

/// ||(I - P_range(basis)) v|| / ||v||
template <class M, class V>
double projection_residual(const M& basis, const V& v) {
  const M q = gram_schmidt(basis);
  const V r = v - q * (q.adjoint() * v);
  return r.norm() / v.norm();
}

/// Rank via Gram-matrix LDLT pivots, for well-scaled tall matrices.
inline Index gram_rank(const RealMatrix& m, double rel = 1e-12) {
  const RealMatrix g = m.transpose() * m;
  Eigen::LDLT<RealMatrix> ldlt(g);
  const RealVector d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  Index r = 0;
  for (Index i = 0; i < d.size(); ++i)
    if (d(i) > rel * dmax) ++r;
  return r;
}

/// Roots of the 2x2 characteristic polynomial lambda^2 - tr lambda + det.
inline std::pair<Complex, Complex> char_poly_roots(const RealMatrix& m) {
  const double tr = m.trace(), det = m.determinant();
  const Complex disc = std::sqrt(Complex(tr * tr - 4 * det, 0.0));
  return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

/// Greedy nearest matching of two spectra; max absolute error, or inf on size mismatch.
inline double spectrum_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0;
  for (const auto& x : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](const Complex& l, const Complex& r) { return std::abs(l - x) < std::abs(r - x); });
    worst = std::max(worst, std::abs(*it - x));
    b.erase(it);
  }
  return worst;
}

inline std::vector<Complex> example2_spectrum() {
  return {1.0, 0.89, {0.8, 0.5}, {0.8, -0.5}, {0.39, 0.8}, {0.39, -0.8}};
}

}  // namespace fx
