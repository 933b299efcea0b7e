#pragma once

// Built-in dynamical systems and seeded snapshot generation.
//
// Sampling uses splitmix64 in counter mode: entry (row, col) of the sample
// matrix is a pure function of (seed, row * n + col), so generation is
// reproducible across platforms and independent of evaluation order.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "koopman/errors.hpp"
#include "koopman/numerics.hpp"

namespace koopman {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};
using Box = std::vector<Interval>;

inline void validate_box(const Box& box) {
  detail::require(!box.empty(), ErrorCode::InvalidInput, "box: no intervals");
  for (const auto& iv : box) {
    detail::require(std::isfinite(iv.lo) && std::isfinite(iv.hi), ErrorCode::InvalidInput, "box: non-finite bound");
    detail::require(iv.lo <= iv.hi, ErrorCode::InvalidInput, "box: empty interval (lo > hi)");
  }
}

namespace rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// index-th output of a splitmix64 stream seeded with `seed`.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
  return mix(seed + (index + 1) * kGamma);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace rng

inline RealMatrix sample_uniform(const Box& box, Index count, std::uint64_t seed) {
  detail::require(count >= 1, ErrorCode::InvalidInput, "sample_uniform: N must be >= 1");
  validate_box(box);
  const Index n = static_cast<Index>(box.size());
  RealMatrix x(count, n);
  for (Index r = 0; r < count; ++r) {
    for (Index c = 0; c < n; ++c) {
      const auto idx = static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(c);
      const double u = rng::unit_double(rng::splitmix64_at(seed, idx));
      const auto& iv = box[static_cast<std::size_t>(c)];
      x(r, c) = iv.lo + (iv.hi - iv.lo) * u;
    }
  }
  return x;
}

enum class VectorFieldId { VanDerPol };

inline std::string to_string(VectorFieldId id) {
  switch (id) {
    case VectorFieldId::VanDerPol: return "vanderpol";
  }
  return "unknown";
}

/// x+ = A x
struct DiscreteLinear {
  RealMatrix a;
};

/// Flow of a vector field over dt, integrated with classical RK4.
struct ContinuousField {
  VectorFieldId field = VectorFieldId::VanDerPol;
  double dt = 5e-3;
  int substeps = 1;
};

struct SystemSpec {
  std::variant<DiscreteLinear, ContinuousField> dynamics;
  Box box;
  std::uint64_t seed = 0;

  Index state_dim() const {
    if (const auto* lin = std::get_if<DiscreteLinear>(&dynamics)) return lin->a.rows();
    return 2;
  }

  std::string id() const {
    if (std::holds_alternative<DiscreteLinear>(dynamics)) return "linear";
    return to_string(std::get<ContinuousField>(dynamics).field);
  }

  void validate() const {
    if (const auto* lin = std::get_if<DiscreteLinear>(&dynamics)) {
      detail::require(lin->a.rows() >= 1 && lin->a.rows() == lin->a.cols(), ErrorCode::InvalidInput,
                      "system: A must be square and non-empty");
      detail::require(all_finite(lin->a), ErrorCode::InvalidInput, "system: A has non-finite entries");
    } else {
      const auto& f = std::get<ContinuousField>(dynamics);
      detail::require(f.dt > 0 && std::isfinite(f.dt), ErrorCode::InvalidInput, "system: dt must be > 0");
      detail::require(f.substeps >= 1, ErrorCode::InvalidInput, "system: substeps must be >= 1");
    }
    validate_box(box);
    detail::require(static_cast<Index>(box.size()) == state_dim(), ErrorCode::InvalidInput,
                    "system: box dimension differs from state dimension");
  }
};

/// x1' = x2, x2' = -x1 + (1 - x1^2) x2
inline std::array<double, 2> van_der_pol(const std::array<double, 2>& x) {
  return {x[1], -x[0] + (1.0 - x[0] * x[0]) * x[1]};
}

inline std::array<double, 2> field_value(VectorFieldId id, const std::array<double, 2>& x) {
  switch (id) {
    case VectorFieldId::VanDerPol: return van_der_pol(x);
  }
  return {0.0, 0.0};
}

inline std::array<double, 2> rk4_flow(VectorFieldId id, std::array<double, 2> x, double dt, int substeps) {
  const double h = dt / substeps;
  auto axpy = [](const std::array<double, 2>& a, double s, const std::array<double, 2>& b) {
    return std::array<double, 2>{a[0] + s * b[0], a[1] + s * b[1]};
  };
  for (int k = 0; k < substeps; ++k) {
    const auto k1 = field_value(id, x);
    const auto k2 = field_value(id, axpy(x, h / 2, k1));
    const auto k3 = field_value(id, axpy(x, h / 2, k2));
    const auto k4 = field_value(id, axpy(x, h, k3));
    for (int i = 0; i < 2; ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return x;
}

/// Row-wise application of the map T.
inline RealMatrix step(const SystemSpec& spec, const RealMatrix& x) {
  detail::require(x.cols() == spec.state_dim(), ErrorCode::InvalidInput, "step: state dimension mismatch");
  RealMatrix y(x.rows(), x.cols());
  if (const auto* lin = std::get_if<DiscreteLinear>(&spec.dynamics)) {
    y.noalias() = x * lin->a.transpose();
  } else {
    const auto& f = std::get<ContinuousField>(spec.dynamics);
    for (Index r = 0; r < x.rows(); ++r) {
      const auto out = rk4_flow(f.field, {x(r, 0), x(r, 1)}, f.dt, f.substeps);
      y(r, 0) = out[0];
      y(r, 1) = out[1];
    }
  }
  for (Index r = 0; r < y.rows(); ++r)
    if (!y.row(r).allFinite()) throw OverflowError(static_cast<std::size_t>(r), "step: non-finite state");
  return y;
}

struct Provenance {
  std::string source;  // system id, or "ingested"
  std::optional<std::uint64_t> seed;
  Box box;
  std::optional<double> dt;
  std::optional<int> substeps;
  std::string integrator;  // "rk4" for continuous systems
};

struct SnapshotSet {
  RealMatrix x;
  RealMatrix y;
  Provenance provenance;

  Index state_dim() const { return x.cols(); }
  Index count() const { return x.rows(); }

  void validate() const {
    detail::require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorCode::InvalidInput,
                    "snapshots: X and Y differ in shape");
    detail::require(x.rows() >= 1 && x.cols() >= 1, ErrorCode::InvalidInput, "snapshots: empty");
    detail::require(all_finite(x) && all_finite(y), ErrorCode::InvalidInput, "snapshots: non-finite entries");
  }
};

inline SnapshotSet generate(const SystemSpec& spec, Index count) {
  spec.validate();
  SnapshotSet s;
  s.x = sample_uniform(spec.box, count, spec.seed);
  s.y = step(spec, s.x);
  s.provenance.source = spec.id();
  s.provenance.seed = spec.seed;
  s.provenance.box = spec.box;
  if (const auto* f = std::get_if<ContinuousField>(&spec.dynamics)) {
    s.provenance.dt = f->dt;
    s.provenance.substeps = f->substeps;
    s.provenance.integrator = "rk4";
  }
  return s;
}

}  // namespace koopman
