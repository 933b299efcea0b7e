#pragma once

// Tolerance-aware dense linear algebra shared by every algorithm in the library.
// All rank decisions route through ToleranceConfig so that repeated null-space
// computations inside one run agree with each other.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koopman/errors.hpp"

namespace koopman {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct ToleranceConfig {
  /// Dimensionless factor; the singular-value cutoff is rank_rtol * sigma_max * max(rows, cols).
  double rank_rtol = 1e-10;
  double eig_match_atol = 1e-8;
  /// Largest principal angle (radians) still considered "same subspace".
  double subspace_atol = 1e-8;

  void validate() const {
    detail::require(rank_rtol > 0 && eig_match_atol > 0 && subspace_atol > 0, ErrorCode::InvalidInput,
                    "tolerances must be strictly positive");
  }

  double rank_threshold(double sigma_max, Index rows, Index cols) const {
    return rank_rtol * sigma_max * static_cast<double>(std::max<Index>({rows, cols, 1}));
  }
};

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

namespace detail {

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  require(all_finite(m), ErrorCode::InvalidInput, std::string(what) + ": non-finite entries");
}

}  // namespace detail

/// Singular values (descending) with the full set of right singular vectors and,
/// optionally, the thin left factor. Tall inputs are reduced by Householder QR
/// first so the SVD only ever runs on a cols x cols triangle.
template <class Scalar>
struct SingularSystem {
  RealVector sigma;            // min(rows, cols) values, descending
  DenseMatrix<Scalar> V;       // cols x cols, unitary
  DenseMatrix<Scalar> U;       // rows x min(rows, cols); empty unless requested
  Index rows = 0;
  Index cols = 0;

  double sigma_max() const { return sigma.size() ? sigma(0) : 0.0; }
};

template <class Derived>
SingularSystem<typename Derived::Scalar> singular_system(const Eigen::MatrixBase<Derived>& m_in,
                                                         bool want_u = false) {
  using Scalar = typename Derived::Scalar;
  using Mat = DenseMatrix<Scalar>;
  const Mat m = m_in;
  detail::require_finite(m, "singular_system");

  SingularSystem<Scalar> out;
  out.rows = m.rows();
  out.cols = m.cols();
  const Index k = std::min(m.rows(), m.cols());
  if (m.cols() == 0) {
    out.sigma.resize(0);
    out.V.resize(0, 0);
    if (want_u) out.U.resize(m.rows(), 0);
    return out;
  }
  if (m.rows() == 0) {
    out.sigma.resize(0);
    out.V = Mat::Identity(m.cols(), m.cols());
    if (want_u) out.U.resize(0, 0);
    return out;
  }

  if (m.rows() > m.cols()) {
    Eigen::HouseholderQR<Mat> qr(m);
    const Mat r = qr.matrixQR().topRows(m.cols()).template triangularView<Eigen::Upper>();
    const unsigned opts = Eigen::ComputeFullV | (want_u ? Eigen::ComputeFullU : 0u);
    Eigen::JacobiSVD<Mat> svd(r, opts);
    out.sigma = svd.singularValues();
    out.V = svd.matrixV();
    if (want_u) {
      Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
      out.U = q * svd.matrixU();
    }
  } else {
    const unsigned opts = Eigen::ComputeFullV | (want_u ? Eigen::ComputeThinU : 0u);
    Eigen::JacobiSVD<Mat> svd(m, opts);
    out.sigma = svd.singularValues();
    out.V = svd.matrixV();
    if (want_u) out.U = svd.matrixU().leftCols(k);
  }
  return out;
}

template <class Scalar>
Index rank_from_spectrum(const SingularSystem<Scalar>& s, const ToleranceConfig& tol) {
  const double cutoff = tol.rank_threshold(s.sigma_max(), s.rows, s.cols);
  Index r = 0;
  for (Index i = 0; i < s.sigma.size(); ++i)
    if (s.sigma(i) > cutoff) ++r;
  return r;
}

template <class Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& m, const ToleranceConfig& tol = {}) {
  return rank_from_spectrum(singular_system(m), tol);
}

template <class Derived>
bool has_full_column_rank(const Eigen::MatrixBase<Derived>& m, const ToleranceConfig& tol = {}) {
  return numerical_rank(m, tol) == m.cols();
}

/// Orthonormal basis of the null space taken from the trailing right singular
/// vectors; std::nullopt when the null space is {0}.
template <class Derived>
std::optional<DenseMatrix<typename Derived::Scalar>> null_space_basis(const Eigen::MatrixBase<Derived>& m,
                                                                      const ToleranceConfig& tol = {}) {
  const auto s = singular_system(m);
  const Index r = rank_from_spectrum(s, tol);
  if (r == m.cols()) return std::nullopt;
  return DenseMatrix<typename Derived::Scalar>(s.V.rightCols(m.cols() - r));
}

/// Moore-Penrose inverse by singular-value truncation at the shared rank cutoff.
template <class Derived>
DenseMatrix<typename Derived::Scalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& m,
                                                     const ToleranceConfig& tol = {}) {
  using Mat = DenseMatrix<typename Derived::Scalar>;
  const auto s = singular_system(m, true);
  const Index r = rank_from_spectrum(s, tol);
  if (r == 0) return Mat::Zero(m.cols(), m.rows());
  const Eigen::VectorXd inv = s.sigma.head(r).cwiseInverse();
  return s.V.leftCols(r) * inv.asDiagonal() * s.U.leftCols(r).adjoint();
}

/// pseudo_inverse(m) * rhs without forming the pseudo-inverse explicitly.
template <class DerivedM, class DerivedR>
DenseMatrix<typename DerivedM::Scalar> least_squares(const Eigen::MatrixBase<DerivedM>& m,
                                                     const Eigen::MatrixBase<DerivedR>& rhs,
                                                     const ToleranceConfig& tol = {}) {
  using Mat = DenseMatrix<typename DerivedM::Scalar>;
  detail::require(m.rows() == rhs.rows(), ErrorCode::InvalidInput, "least_squares: row mismatch");
  detail::require_finite(rhs, "least_squares");
  const auto s = singular_system(m, true);
  const Index r = rank_from_spectrum(s, tol);
  if (r == 0) return Mat::Zero(m.cols(), rhs.cols());
  const Eigen::VectorXd inv = s.sigma.head(r).cwiseInverse();
  const Mat projected = s.U.leftCols(r).adjoint() * rhs;
  return s.V.leftCols(r) * (inv.asDiagonal() * projected);
}

enum class PairKind { Real, ConjugateUpper, ConjugateLower };

struct Eigenpair {
  Complex value;
  ComplexVector vector;
  PairKind kind = PairKind::Real;
};

/// Eigenpairs ordered by decreasing modulus; a complex pair is stored as the
/// Im > 0 member followed immediately by its exact conjugate.
struct EigenpairSet {
  std::vector<Eigenpair> pairs;

  std::size_t size() const { return pairs.size(); }
  const Eigenpair& operator[](std::size_t i) const { return pairs[i]; }
  auto begin() const { return pairs.begin(); }
  auto end() const { return pairs.end(); }
};

/// Unit 2-norm, largest-magnitude entry rotated onto the positive real axis.
inline ComplexVector normalize_phase(ComplexVector v) {
  const double n = v.norm();
  if (n == 0.0) return v;
  v /= n;
  Index imax = 0;
  double best = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    // strict comparison keeps the first index on ties
    if (a > best * (1.0 + 1e-12)) {
      best = a;
      imax = i;
    }
  }
  const Complex phase = std::conj(v(imax)) / std::abs(v(imax));
  v *= phase;
  v(imax) = Complex(v(imax).real(), 0.0);
  return v;
}

template <class Derived>
EigenpairSet eig(const Eigen::MatrixBase<Derived>& m_in) {
  const RealMatrix m = m_in;
  detail::require(m.rows() == m.cols(), ErrorCode::InvalidInput, "eig: matrix must be square");
  detail::require_finite(m, "eig");
  EigenpairSet out;
  if (m.rows() == 0) return out;

  Eigen::EigenSolver<RealMatrix> solver(m, true);
  detail::require(solver.info() == Eigen::Success, ErrorCode::InvalidInput, "eig: QR iteration failed");
  const ComplexVector values = solver.eigenvalues();
  const ComplexMatrix vectors = solver.eigenvectors();

  struct Unit {
    Complex value;
    ComplexVector vector;
    bool complex_pair;
  };
  std::vector<Unit> units;
  for (Index i = 0; i < values.size(); ++i) {
    const Complex lam = values(i);
    if (lam.imag() < 0.0) continue;
    if (lam.imag() == 0.0) {
      ComplexVector v = vectors.col(i).real().cast<Complex>();
      units.push_back({Complex(lam.real(), 0.0), normalize_phase(std::move(v)), false});
    } else {
      units.push_back({lam, normalize_phase(vectors.col(i)), true});
    }
  }
  std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) {
    const double ma = std::abs(a.value), mb = std::abs(b.value);
    if (ma != mb) return ma > mb;
    if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
    return a.value.imag() > b.value.imag();
  });
  for (auto& u : units) {
    if (!u.complex_pair) {
      out.pairs.push_back({u.value, u.vector, PairKind::Real});
    } else {
      out.pairs.push_back({u.value, u.vector, PairKind::ConjugateUpper});
      out.pairs.push_back({std::conj(u.value), u.vector.conjugate(), PairKind::ConjugateLower});
    }
  }
  return out;
}

/// Orthonormal basis for the column span (left singular vectors above the cutoff).
template <class Derived>
DenseMatrix<typename Derived::Scalar> orthonormal_basis(const Eigen::MatrixBase<Derived>& m,
                                                        const ToleranceConfig& tol = {}) {
  const auto s = singular_system(m, true);
  const Index r = rank_from_spectrum(s, tol);
  return s.U.leftCols(r);
}

/// Principal angles (ascending, radians) between the column spans of p and q;
/// min(dim p, dim q) values. Uses sine and cosine together so that tiny angles
/// are resolved to roughly machine precision.
template <class DerivedP, class DerivedQ>
RealVector principal_angles(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                            const ToleranceConfig& tol = {}) {
  detail::require(p.rows() == q.rows(), ErrorCode::InvalidInput, "principal_angles: row mismatch");
  ComplexMatrix qp = orthonormal_basis(ComplexMatrix(p.template cast<Complex>()), tol);
  ComplexMatrix qq = orthonormal_basis(ComplexMatrix(q.template cast<Complex>()), tol);
  if (qp.cols() < qq.cols()) std::swap(qp, qq);  // qq is now the smaller subspace
  const Index k = qq.cols();
  RealVector out(k);
  if (k == 0) return out;
  const ComplexMatrix overlap = qp.adjoint() * qq;
  const ComplexMatrix residual = qq - qp * overlap;
  Eigen::JacobiSVD<ComplexMatrix> cs(overlap);
  Eigen::JacobiSVD<ComplexMatrix> ss(residual);
  const RealVector cosines = cs.singularValues();  // descending
  RealVector sines = ss.singularValues();          // descending, length min(rows, k)
  for (Index i = 0; i < k; ++i) {
    const double c = std::min(1.0, cosines(i));
    // ascending sine pairs with descending cosine
    const Index j = k - 1 - i;
    const double s = j < sines.size() ? std::min(1.0, sines(j)) : 0.0;
    out(i) = std::atan2(s, c);
  }
  std::sort(out.data(), out.data() + k);
  return out;
}

/// True iff the column spans coincide (same numerical dimension and every
/// principal angle within subspace_atol).
template <class DerivedP, class DerivedQ>
bool subspace_equal(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                    const ToleranceConfig& tol = {}) {
  detail::require(p.rows() == q.rows(), ErrorCode::InvalidInput, "subspace_equal: row mismatch");
  detail::require_finite(p, "subspace_equal");
  detail::require_finite(q, "subspace_equal");
  if (numerical_rank(p, tol) != numerical_rank(q, tol)) return false;
  const RealVector angles = principal_angles(p, q, tol);
  return angles.size() == 0 || angles.maxCoeff() <= tol.subspace_atol;
}

/// Largest sine of the angle between span(e) and span(c), i.e.
/// ||(I - P_c) Q_e||_2; zero iff span(e) is contained in span(c).
template <class DerivedE, class DerivedC>
double containment_residual(const Eigen::MatrixBase<DerivedE>& e, const Eigen::MatrixBase<DerivedC>& c,
                            const ToleranceConfig& tol = {}) {
  detail::require(e.rows() == c.rows(), ErrorCode::InvalidInput, "containment_residual: row mismatch");
  const ComplexMatrix qe = orthonormal_basis(ComplexMatrix(e.template cast<Complex>()), tol);
  const ComplexMatrix qc = orthonormal_basis(ComplexMatrix(c.template cast<Complex>()), tol);
  if (qe.cols() == 0) return 0.0;
  const ComplexMatrix rest = qe - qc * (qc.adjoint() * qe);
  Eigen::JacobiSVD<ComplexMatrix> svd(rest);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace koopman
