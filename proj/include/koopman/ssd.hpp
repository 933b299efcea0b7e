#pragma once

// Symmetric Subspace Decomposition: iterative null-space pruning of a
// dictionary down to the largest subspace whose snapshots satisfy
// R(D(X) C) = R(D(Y) C), plus the reduced Koopman matrix on that subspace.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "koopman/dictionary.hpp"
#include "koopman/edmd.hpp"
#include "koopman/errors.hpp"
#include "koopman/numerics.hpp"
#include "koopman/systems.hpp"

namespace koopman {

enum class SsdMode { Exact, Approximate };

inline std::string to_string(SsdMode mode) { return mode == SsdMode::Exact ? "exact" : "approximate"; }

struct SsdIteration {
  Index subspace_dim = 0;  // rows of Z^A (current number of columns of C)
  Index null_dim = 0;      // columns of Z^A
  /// approximate mode: discarded singular-value sum over total sum
  double truncation_ratio = 0.0;
  /// approximate mode: no truncation index satisfied the ratio, exact rank used instead
  bool fell_back = false;
};

struct SsdResult {
  RealMatrix c;  // N_d x dim; empty when zero
  bool zero = false;
  Index iterations = 0;
  std::vector<SsdIteration> log;
  SsdMode mode = SsdMode::Exact;
  double epsilon = 0.0;
  std::vector<std::string> warnings;

  Index dim() const { return zero ? 0 : c.cols(); }
};

namespace detail {

inline void check_ssd_preconditions(const RealMatrix& dx, const RealMatrix& dy, const ToleranceConfig& tol,
                                    SsdResult& out) {
  tol.validate();
  require(dx.rows() == dy.rows() && dx.cols() == dy.cols(), ErrorCode::InvalidInput,
          "ssd: dictionary matrices differ in shape");
  require(dx.cols() >= 1, ErrorCode::InvalidInput, "ssd: empty dictionary");
  require(dx.rows() >= dx.cols(), ErrorCode::AssumptionViolation, "ssd: fewer samples than dictionary functions");
  require(has_full_column_rank(dx, tol), ErrorCode::AssumptionViolation, "ssd: D(X) does not have full column rank");
  require(has_full_column_rank(dy, tol), ErrorCode::AssumptionViolation, "ssd: D(Y) does not have full column rank");
  if (dx.rows() < 2 * dx.cols())
    out.warnings.push_back("fewer than 2*N_d samples; null-space decisions may be unreliable");
}

/// Number of singular values kept by the eps-truncation rule, i.e. k_i - 1 for
/// the smallest k_i with sum_{j>=k_i} sigma_j / sum_j sigma_j <= eps.
inline std::optional<Index> truncated_rank(const RealVector& sigma, double eps, double& ratio) {
  const Index n = sigma.size();
  // tail(k) = sum of sigma[k..], accumulated from the small end
  RealVector tail(n + 1);
  tail(n) = 0.0;
  for (Index k = n - 1; k >= 0; --k) tail(k) = tail(k + 1) + sigma(k);
  const double total = tail(0);
  if (total <= 0.0) {
    ratio = 0.0;
    return Index{0};
  }
  for (Index k = 0; k < n; ++k) {
    if (tail(k) / total <= eps) {
      ratio = tail(k) / total;
      return k;
    }
  }
  return std::nullopt;
}

inline SsdResult run_ssd(const RealMatrix& dx, const RealMatrix& dy, const ToleranceConfig& tol,
                         std::optional<double> eps) {
  SsdResult out;
  out.mode = eps ? SsdMode::Approximate : SsdMode::Exact;
  out.epsilon = eps.value_or(0.0);
  check_ssd_preconditions(dx, dy, tol, out);

  const Index nd = dx.cols();
  RealMatrix a = dx;
  RealMatrix b = dy;
  RealMatrix c = RealMatrix::Identity(nd, nd);

  for (Index iter = 1;; ++iter) {
    require(iter <= nd + 1, ErrorCode::InternalInvariantViolation, "ssd: iteration bound exceeded");
    const Index m = a.cols();
    RealMatrix ab(a.rows(), 2 * m);
    ab << a, b;
    const auto s = singular_system(ab);

    SsdIteration entry;
    entry.subspace_dim = m;
    Index rank = rank_from_spectrum(s, tol);
    if (eps) {
      double ratio = 0.0;
      if (auto k = truncated_rank(s.sigma, *eps, ratio)) {
        // never keep values the exact rule already treats as zero
        if (*k < rank) rank = *k;
        entry.truncation_ratio = ratio;
      } else {
        entry.fell_back = true;
      }
    }
    entry.null_dim = 2 * m - rank;
    out.log.push_back(entry);
    out.iterations = iter;

    if (entry.null_dim == 0) {
      // the basis does not exist
      out.zero = true;
      out.c.resize(nd, 0);
      return out;
    }
    const RealMatrix za = s.V.rightCols(entry.null_dim).topRows(m);
    if (m <= entry.null_dim) {
      out.c = std::move(c);
      return out;
    }
    require(numerical_rank(za, tol) == za.cols(), ErrorCode::InternalInvariantViolation,
            "ssd: null-space block Z^A lost column rank");
    c = c * za;
    a = a * za;
    b = b * za;
  }
}

}  // namespace detail

/// Exact-mode SSD. Returns C with R(DX C) = R(DY C), maximal, or a zero result.
inline SsdResult ssd(const RealMatrix& dx, const RealMatrix& dy, const ToleranceConfig& tol = {}) {
  return detail::run_ssd(dx, dy, tol, std::nullopt);
}

/// SSD on eps-truncated [A_i, B_i]; ranges agree only approximately.
inline SsdResult approximate_ssd(const RealMatrix& dx, const RealMatrix& dy, double eps,
                                 const ToleranceConfig& tol = {}) {
  detail::require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidInput, "approximate_ssd: eps must lie in (0, 1)");
  return detail::run_ssd(dx, dy, tol, eps);
}

struct ReducedKoopman {
  RealMatrix k;
  double relative_residual = 0.0;  // e_r on D~(X) = DX C, D~(Y) = DY C
  bool invertible = true;
  std::optional<DerivedDictionary> dictionary;
};

inline ReducedKoopman reduced_koopman(const RealMatrix& dx, const RealMatrix& dy, const SsdResult& result,
                                      const ToleranceConfig& tol = {}) {
  detail::require(!result.zero && result.c.cols() > 0, ErrorCode::InvalidInput, "reduced_koopman: zero SSD result");
  detail::require(result.c.rows() == dx.cols(), ErrorCode::InvalidInput, "reduced_koopman: C does not match data");
  const RealMatrix dxc = dx * result.c;
  const RealMatrix dyc = dy * result.c;
  ReducedKoopman out;
  out.k = least_squares(dxc, dyc, tol);
  out.relative_residual = relative_residual(dxc, dyc, out.k);
  out.invertible = has_full_column_rank(out.k, tol);
  return out;
}

inline ReducedKoopman reduced_koopman(const MonomialDictionary& base, const RealMatrix& dx, const RealMatrix& dy,
                                      const SsdResult& result, const ToleranceConfig& tol = {}) {
  ReducedKoopman out = reduced_koopman(dx, dy, result, tol);
  out.dictionary = restrict(base, result.c, tol);
  return out;
}

/// (lambda, v = C w) for every eigenpair (lambda, w) of the reduced matrix;
/// defects are measured on the full dictionary data.
inline std::vector<MatchedEvolution> lift_eigenvectors(const RealMatrix& dx, const RealMatrix& dy,
                                                       const SsdResult& result, const ReducedKoopman& reduced,
                                                       const ToleranceConfig& tol = {}) {
  detail::require(!result.zero, ErrorCode::InvalidInput, "lift_eigenvectors: zero SSD result");
  const RealMatrix kf = edmd_matrix(dx, dy, tol, Direction::Forward).k;
  const RealMatrix kb = edmd_matrix(dy, dx, tol, Direction::Backward).k;
  const ComplexMatrix c = result.c.cast<Complex>();
  std::vector<MatchedEvolution> out;
  for (const auto& p : eig(reduced.k)) {
    if (p.kind == PairKind::ConjugateLower) continue;
    MatchedEvolution m = make_evolution(dx, dy, kf, kb, p.value, normalize_phase(c * p.vector), p.kind);
    out.push_back(m);
    if (p.kind == PairKind::ConjugateUpper) out.push_back(conjugate(m));
  }
  return out;
}

struct EigenfunctionGrid {
  RealMatrix points;  // one row per node, x_1 varying slowest
  RealVector magnitude;
  RealVector angle;  // principal branch, (-pi, pi]
};

/// Evaluates f(x) = D(x) v on a regular grid with `resolution` nodes per axis.
template <ObservableDictionary D>
EigenfunctionGrid eigenfunction_grid(const D& dict, const ComplexVector& v, const Box& box, Index resolution) {
  detail::require(resolution >= 2, ErrorCode::InvalidInput, "eigenfunction_grid: resolution must be >= 2");
  detail::require(v.size() == dict.size(), ErrorCode::InvalidInput, "eigenfunction_grid: coefficient length mismatch");
  detail::require(static_cast<Index>(box.size()) == dict.state_dim(), ErrorCode::InvalidInput,
                  "eigenfunction_grid: box dimension mismatch");
  validate_box(box);
  const Index n = dict.state_dim();
  Index nodes = 1;
  for (Index i = 0; i < n; ++i) nodes *= resolution;
  EigenfunctionGrid g;
  g.points.resize(nodes, n);
  for (Index node = 0; node < nodes; ++node) {
    Index rest = node;
    for (Index axis = n - 1; axis >= 0; --axis) {
      const Index idx = rest % resolution;
      rest /= resolution;
      const auto& iv = box[static_cast<std::size_t>(axis)];
      g.points(node, axis) = iv.lo + (iv.hi - iv.lo) * static_cast<double>(idx) / static_cast<double>(resolution - 1);
    }
  }
  const ComplexVector f = evaluate_observable(dict, g.points, v);
  g.magnitude = f.cwiseAbs();
  g.angle.resize(nodes);
  for (Index i = 0; i < nodes; ++i) g.angle(i) = std::arg(f(i));
  return g;
}

}  // namespace koopman
