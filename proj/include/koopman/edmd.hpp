#pragma once

// EDMD least-squares fits and forward-backward identification of the
// dictionary functions that evolve linearly on the data.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "koopman/errors.hpp"
#include "koopman/numerics.hpp"

namespace koopman {

enum class Direction { Forward, Backward };

struct KoopmanMatrix {
  RealMatrix k;
  Direction direction = Direction::Forward;
  /// ||D_target - D_source K||_F
  double residual_fro = 0.0;
  /// false when D_source is numerically rank deficient; K is then the minimum-norm solution
  bool source_full_rank = true;
};

/// K = pinv(source) * target, the least-squares minimizer of ||target - source K||_F.
inline KoopmanMatrix edmd_matrix(const RealMatrix& source, const RealMatrix& target, const ToleranceConfig& tol = {},
                                 Direction direction = Direction::Forward) {
  detail::require(source.rows() == target.rows() && source.cols() == target.cols(), ErrorCode::InvalidInput,
                  "edmd: dictionary matrices differ in shape");
  detail::require(source.cols() >= 1, ErrorCode::InvalidInput, "edmd: empty dictionary");
  detail::require_finite(source, "edmd");
  detail::require_finite(target, "edmd");
  KoopmanMatrix out;
  out.direction = direction;
  out.k = least_squares(source, target, tol);
  out.residual_fro = (target - source * out.k).norm();
  out.source_full_rank = source.rows() >= source.cols() && has_full_column_rank(source, tol);
  return out;
}

inline double relative_residual(const RealMatrix& dx, const RealMatrix& dy, const RealMatrix& k) {
  detail::require(dx.rows() == dy.rows() && dx.cols() == k.rows() && dy.cols() == k.cols(), ErrorCode::InvalidInput,
                  "relative_residual: shape mismatch");
  const double denom = std::min(dx.norm(), dy.norm());
  detail::require(denom > 0.0, ErrorCode::InvalidInput, "relative_residual: zero denominator");
  return (dy - dx * k).norm() / denom;
}

/// ||DY v - lambda DX v||_2 / ||DX v||_2
inline double data_defect(const RealMatrix& dx, const RealMatrix& dy, const ComplexVector& v, Complex lambda) {
  const ComplexVector fx = dx.cast<Complex>() * v;
  const ComplexVector fy = dy.cast<Complex>() * v;
  const double base = fx.norm();
  if (base == 0.0) return std::numeric_limits<double>::infinity();
  return (fy - lambda * fx).norm() / base;
}

struct LinearEvolutionCheck {
  bool holds = false;
  double defect = 0.0;
};

/// Does f(x) = D(x) v satisfy f(y_i) = lambda f(x_i) on the data (relative tolerance)?
inline LinearEvolutionCheck check_linear_evolution(const RealMatrix& dx, const RealMatrix& dy, const ComplexVector& v,
                                                   Complex lambda, double rtol) {
  detail::require(dx.rows() == dy.rows() && dx.cols() == dy.cols() && v.size() == dx.cols(), ErrorCode::InvalidInput,
                  "check_linear_evolution: shape mismatch");
  detail::require(v.norm() > 0.0, ErrorCode::InvalidInput, "check_linear_evolution: v must be nonzero");
  LinearEvolutionCheck out;
  out.defect = data_defect(dx, dy, v, lambda);
  out.holds = out.defect <= rtol;
  return out;
}

struct MatchedEvolution {
  Complex lambda;
  ComplexVector v;
  double forward_defect = 0.0;   // ||K_f v - lambda v||
  double backward_defect = 0.0;  // ||K_b v - v / lambda||
  double data_defect = 0.0;      // ||D(Y) v - lambda D(X) v|| / ||D(X) v||
  PairKind kind = PairKind::Real;
};

inline MatchedEvolution make_evolution(const RealMatrix& dx, const RealMatrix& dy, const RealMatrix& kf,
                                       const RealMatrix& kb, Complex lambda, ComplexVector v, PairKind kind) {
  MatchedEvolution m;
  m.lambda = lambda;
  m.v = std::move(v);
  m.kind = kind;
  m.forward_defect = (kf.cast<Complex>() * m.v - lambda * m.v).norm();
  m.backward_defect = (kb.cast<Complex>() * m.v - m.v / lambda).norm();
  m.data_defect = data_defect(dx, dy, m.v, lambda);
  return m;
}

inline MatchedEvolution conjugate(const MatchedEvolution& m) {
  MatchedEvolution c = m;
  c.lambda = std::conj(m.lambda);
  c.v = m.v.conjugate();
  c.kind = PairKind::ConjugateLower;
  return c;
}

struct ForwardBackwardResult {
  KoopmanMatrix forward;
  KoopmanMatrix backward;
  std::vector<MatchedEvolution> matches;
  /// K_f eigenvalues with |lambda| < 1e-12, excluded from matching
  std::vector<Complex> skipped_near_zero;
  /// candidates that passed the backward tests but failed the data test
  std::size_t inconsistent_candidates = 0;
};

inline constexpr double kNearZeroEigenvalue = 1e-12;

namespace detail {

inline ComplexMatrix stack_columns(const std::vector<ComplexVector>& cols, Index rows) {
  ComplexMatrix m(rows, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Index>(j)) = cols[j];
  return m;
}

/// Principal vectors of span(qf) whose angle to span(qb) is at most `gate`.
inline ComplexMatrix subspace_intersection(const ComplexMatrix& qf, const ComplexMatrix& qb, double gate) {
  Eigen::JacobiSVD<ComplexMatrix> svd(qf.adjoint() * qb, Eigen::ComputeFullU);
  const double cos_gate = std::cos(gate);
  Index k = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) >= cos_gate) ++k;
  return qf * svd.matrixU().leftCols(k);
}

}  // namespace detail

/// Every eigenpair (lambda, v) of K_f = EDMD(DX, DY) for which v is also an
/// eigenvector of K_b = EDMD(DY, DX) with eigenvalue 1/lambda. Repeated
/// eigenvalues are handled by intersecting the two eigenspaces.
inline ForwardBackwardResult forward_backward_eigenpairs(const RealMatrix& dx, const RealMatrix& dy,
                                                         const ToleranceConfig& tol = {}) {
  tol.validate();
  detail::require(dx.rows() == dy.rows() && dx.cols() == dy.cols(), ErrorCode::InvalidInput,
                  "forward_backward: dictionary matrices differ in shape");
  detail::require(dx.rows() >= dx.cols(), ErrorCode::AssumptionViolation,
                  "forward_backward: fewer samples than dictionary functions");
  detail::require(has_full_column_rank(dx, tol), ErrorCode::AssumptionViolation,
                  "forward_backward: D(X) does not have full column rank");
  detail::require(has_full_column_rank(dy, tol), ErrorCode::AssumptionViolation,
                  "forward_backward: D(Y) does not have full column rank");

  ForwardBackwardResult out;
  out.forward = edmd_matrix(dx, dy, tol, Direction::Forward);
  out.backward = edmd_matrix(dy, dx, tol, Direction::Backward);
  const RealMatrix& kf = out.forward.k;
  const RealMatrix& kb = out.backward.k;
  const Index nd = dx.cols();
  const double kb_norm = kb.norm();
  const double atol = tol.eig_match_atol;
  const double loose = std::sqrt(atol);

  const EigenpairSet ef = eig(kf);
  const EigenpairSet eb = eig(kb);

  struct Cluster {
    std::vector<Complex> values;
    std::vector<ComplexVector> vectors;
    bool real = true;
  };
  auto near = [&](Complex a, Complex b) { return std::abs(a - b) <= loose * (1.0 + std::abs(b)); };
  std::vector<Cluster> clusters;
  for (const auto& p : ef) {
    if (p.kind == PairKind::ConjugateLower) continue;
    if (std::abs(p.value) < kNearZeroEigenvalue) {
      out.skipped_near_zero.push_back(p.value);
      if (p.kind == PairKind::ConjugateUpper) out.skipped_near_zero.push_back(std::conj(p.value));
      continue;
    }
    // single linkage on the eigenvalues
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
      return std::any_of(c.values.begin(), c.values.end(), [&](Complex mu) { return near(p.value, mu); });
    });
    if (it == clusters.end()) {
      clusters.push_back({});
      it = std::prev(clusters.end());
    }
    it->values.push_back(p.value);
    it->vectors.push_back(p.vector);
    if (p.kind != PairKind::Real) it->real = false;
  }

  for (const auto& cl : clusters) {
    // K_b eigenvalues mu whose reciprocal lands on a member of the cluster
    std::vector<ComplexVector> back;
    for (const auto& p : eb) {
      if (std::abs(p.value) < kNearZeroEigenvalue) continue;
      const Complex inv = 1.0 / p.value;
      if (std::any_of(cl.values.begin(), cl.values.end(), [&](Complex lam) { return near(inv, lam); }))
        back.push_back(p.vector);
    }
    if (back.empty()) continue;

    const ComplexMatrix qf = orthonormal_basis(detail::stack_columns(cl.vectors, nd), tol);
    const ComplexMatrix qb = orthonormal_basis(detail::stack_columns(back, nd), tol);
    const ComplexMatrix w = detail::subspace_intersection(qf, qb, loose);
    if (w.cols() == 0) continue;

    // re-diagonalize K_f on the candidate subspace
    const ComplexMatrix restricted = w.adjoint() * kf.cast<Complex>() * w;
    std::vector<std::pair<Complex, ComplexVector>> candidates;
    if (cl.real && restricted.imag().norm() <= 1e-12 * (1.0 + restricted.norm())) {
      for (const auto& p : eig(RealMatrix(restricted.real())))
        if (p.kind != PairKind::ConjugateLower) candidates.emplace_back(p.value, w * p.vector);
    } else {
      Eigen::ComplexEigenSolver<ComplexMatrix> ces(restricted);
      for (Index i = 0; i < ces.eigenvalues().size(); ++i)
        candidates.emplace_back(ces.eigenvalues()(i), w * ces.eigenvectors().col(i));
    }

    for (auto& [lambda, vec] : candidates) {
      if (std::abs(lambda) < kNearZeroEigenvalue) continue;
      ComplexVector v = normalize_phase(vec);
      const bool is_real = lambda.imag() == 0.0 || (cl.real && std::abs(lambda.imag()) <= 1e-14 * std::abs(lambda));
      if (is_real) {
        lambda = Complex(lambda.real(), 0.0);
        if (v.imag().norm() <= 1e-12) v = ComplexVector(v.real().cast<Complex>());
      }
      const PairKind kind = is_real ? PairKind::Real : PairKind::ConjugateUpper;
      MatchedEvolution m = make_evolution(dx, dy, kf, kb, lambda, v, kind);
      const Complex lambda_b = m.v.dot(kb.cast<Complex>() * m.v);  // Rayleigh quotient, v is unit
      const bool backward_ok = m.backward_defect <= atol * kb_norm &&
                               std::abs(lambda_b - 1.0 / lambda) <= atol * (1.0 + 1.0 / std::abs(lambda));
      if (!backward_ok) continue;
      if (m.data_defect > atol) {
        ++out.inconsistent_candidates;
        continue;
      }
      out.matches.push_back(m);
      if (kind == PairKind::ConjugateUpper) out.matches.push_back(conjugate(m));
    }
  }
  return out;
}

/// Re-runs the matching on the leading N/4, N/2 and N samples and reports
/// whether every eigenvalue matched on the full data is matched on the smaller
/// prefixes as well. This checks a finite ladder only.
struct ConsistencySweep {
  std::vector<Index> sample_counts;
  std::vector<std::vector<Complex>> eigenvalues;  // per sample count
  bool stable = true;
};

inline ConsistencySweep consistency_sweep(const RealMatrix& dx, const RealMatrix& dy, const ToleranceConfig& tol = {},
                                          double lambda_atol = 1e-6) {
  ConsistencySweep out;
  const Index n = dx.rows();
  for (Index count : {n / 4, n / 2, n}) {
    if (count < dx.cols()) continue;
    const auto fb = forward_backward_eigenpairs(dx.topRows(count), dy.topRows(count), tol);
    std::vector<Complex> values;
    for (const auto& m : fb.matches) values.push_back(m.lambda);
    out.sample_counts.push_back(count);
    out.eigenvalues.push_back(std::move(values));
  }
  if (out.eigenvalues.empty()) return out;
  const auto& full = out.eigenvalues.back();
  for (std::size_t level = 0; level + 1 < out.eigenvalues.size(); ++level) {
    for (const Complex& lam : full) {
      const auto& sub = out.eigenvalues[level];
      const bool found = std::any_of(sub.begin(), sub.end(), [&](Complex mu) {
        return std::abs(mu - lam) <= lambda_atol * (1.0 + std::abs(lam));
      });
      if (!found) out.stable = false;
    }
  }
  return out;
}

}  // namespace koopman
