#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "koopman/errors.hpp"
#include "koopman/numerics.hpp"

namespace koopman {

/// Exponent tuple of one monomial d(x) = prod_i x_i^e_i.
using Exponents = std::vector<unsigned>;

/// Ordered list of distinct monomials in state_dim variables.
class MonomialDictionary {
 public:
  MonomialDictionary(Index state_dim, std::vector<Exponents> exponents)
      : state_dim_(state_dim), exponents_(std::move(exponents)) {
    detail::require(state_dim_ >= 1, ErrorCode::InvalidInput, "dictionary: state dimension must be >= 1");
    detail::require(!exponents_.empty(), ErrorCode::InvalidInput, "dictionary: empty exponent list");
    std::set<Exponents> seen;
    for (const auto& e : exponents_) {
      detail::require(static_cast<Index>(e.size()) == state_dim_, ErrorCode::InvalidInput,
                      "dictionary: exponent tuple length differs from state dimension");
      detail::require(seen.insert(e).second, ErrorCode::InvalidInput, "dictionary: duplicate monomial");
      for (unsigned p : e) max_power_ = std::max(max_power_, p);
    }
  }

  Index state_dim() const { return state_dim_; }
  Index size() const { return static_cast<Index>(exponents_.size()); }
  const std::vector<Exponents>& exponents() const { return exponents_; }

  RealMatrix evaluate(const RealMatrix& x) const {
    detail::require(x.cols() == state_dim_, ErrorCode::InvalidInput,
                    "evaluate: state has " + std::to_string(x.cols()) + " columns, dictionary expects " +
                        std::to_string(state_dim_));
    RealMatrix out(x.rows(), size());
    // powers(i, p) = x_i^p for the current row
    RealMatrix powers(state_dim_, max_power_ + 1);
    for (Index r = 0; r < x.rows(); ++r) {
      for (Index i = 0; i < state_dim_; ++i) {
        powers(i, 0) = 1.0;
        for (unsigned p = 1; p <= max_power_; ++p) powers(i, p) = powers(i, p - 1) * x(r, i);
      }
      for (Index j = 0; j < size(); ++j) {
        double v = 1.0;
        for (Index i = 0; i < state_dim_; ++i) v *= powers(i, exponents_[j][i]);
        out(r, j) = v;
      }
      if (!out.row(r).allFinite()) throw OverflowError(static_cast<std::size_t>(r), "dictionary evaluation overflow");
    }
    return out;
  }

  bool operator==(const MonomialDictionary&) const = default;

 private:
  Index state_dim_;
  std::vector<Exponents> exponents_;
  unsigned max_power_ = 0;
};

/// D~(x) = D(x) * coeffs for a monomial base dictionary D.
class DerivedDictionary {
 public:
  DerivedDictionary(MonomialDictionary base, RealMatrix coeffs, const ToleranceConfig& tol = {})
      : base_(std::move(base)), coeffs_(std::move(coeffs)) {
    detail::require(coeffs_.rows() == base_.size(), ErrorCode::InvalidInput,
                    "derived dictionary: coefficient rows must equal base dictionary size");
    detail::require(coeffs_.cols() >= 1, ErrorCode::RankError, "derived dictionary: no columns");
    detail::require(all_finite(coeffs_), ErrorCode::InvalidInput, "derived dictionary: non-finite coefficients");
    detail::require(has_full_column_rank(coeffs_, tol), ErrorCode::RankError,
                    "derived dictionary: coefficient matrix is not full column rank");
  }

  Index state_dim() const { return base_.state_dim(); }
  Index size() const { return coeffs_.cols(); }
  const MonomialDictionary& base() const { return base_; }
  const RealMatrix& coeffs() const { return coeffs_; }

  RealMatrix evaluate(const RealMatrix& x) const { return base_.evaluate(x) * coeffs_; }

 private:
  MonomialDictionary base_;
  RealMatrix coeffs_;
};

template <class D>
concept ObservableDictionary = requires(const D& d, const RealMatrix& x) {
  { d.evaluate(x) } -> std::same_as<RealMatrix>;
  { d.size() } -> std::convertible_to<Index>;
  { d.state_dim() } -> std::convertible_to<Index>;
};

/// Graded-lexicographic list of all monomials of total degree <= degree,
/// starting with the constant.
inline MonomialDictionary monomials_up_to_degree(Index n, unsigned degree) {
  detail::require(n >= 1, ErrorCode::InvalidInput, "monomials_up_to_degree: n must be >= 1");
  std::vector<Exponents> all;
  Exponents cur(static_cast<std::size_t>(n), 0);
  // fills positions [pos, n) with exponents summing to `left`, x_1 highest first
  auto fill = [&](auto&& self, std::size_t pos, unsigned left) -> void {
    if (pos + 1 == cur.size()) {
      cur[pos] = left;
      all.push_back(cur);
      return;
    }
    for (unsigned e = left + 1; e-- > 0;) {
      cur[pos] = e;
      self(self, pos + 1, left - e);
    }
  };
  for (unsigned d = 0; d <= degree; ++d) fill(fill, 0, d);
  return MonomialDictionary(n, std::move(all));
}

template <ObservableDictionary D>
RealMatrix evaluate(const D& dict, const RealMatrix& x) {
  return dict.evaluate(x);
}

/// f(x) = D(x) v for each row of x.
template <ObservableDictionary D>
ComplexVector evaluate_observable(const D& dict, const RealMatrix& x, const ComplexVector& v) {
  detail::require(v.size() == dict.size(), ErrorCode::InvalidInput, "observable: coefficient length mismatch");
  return dict.evaluate(x).template cast<Complex>() * v;
}

inline DerivedDictionary restrict(const MonomialDictionary& dict, const RealMatrix& c,
                                  const ToleranceConfig& tol = {}) {
  detail::require(c.rows() == dict.size(), ErrorCode::InvalidInput, "restrict: C rows must equal dictionary size");
  return DerivedDictionary(dict, c, tol);
}

inline DerivedDictionary restrict(const DerivedDictionary& dict, const RealMatrix& c,
                                  const ToleranceConfig& tol = {}) {
  detail::require(c.rows() == dict.size(), ErrorCode::InvalidInput, "restrict: C rows must equal dictionary size");
  detail::require(has_full_column_rank(c, tol), ErrorCode::RankError, "restrict: C is not full column rank");
  return DerivedDictionary(dict.base(), dict.coeffs() * c, tol);
}

}  // namespace koopman
