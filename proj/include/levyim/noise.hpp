#pragma once

// Coupled two-sided noise: Brownian motion W, alpha/2-stable subordinator S^alpha
// and the subordinated process L^alpha_t = W(S^alpha_t).

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "levyim/cadlag_path.hpp"
#include "levyim/errors.hpp"
#include "levyim/rng.hpp"
#include "levyim/table.hpp"

namespace levyim {

inline constexpr double kDefaultMesh = 0x1.0p-10;

/// Two-sided time window [-backward, forward].
struct Horizon {
  double backward = 50.0;
  double forward = 10.0;
};

namespace stream {
inline constexpr std::uint64_t anchor = 1;
inline constexpr std::uint64_t bridge = 2;
inline constexpr std::uint64_t sub_positive = 3;
inline constexpr std::uint64_t sub_negative = 4;
}  // namespace stream

/// Intensity constant of the Levy measure C(alpha) dx / x^{1+alpha/2}.
inline double levy_intensity_constant(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("levy_intensity_constant: alpha must lie in (0, 2)");
  return std::pow(2.0, -(1.0 - 0.5 * alpha)) * alpha / std::tgamma(1.0 - 0.5 * alpha);
}

/// Two-sided Brownian motion that can be evaluated at any time in any order.
///
/// Anchors W(+-2^j) are built from independent increments; inside each anchor
/// interval the path is refined by Brownian-bridge bisection down to
/// `2^-resolution_bits` and interpolated linearly below that. All normals are
/// counter-based, so the function is fixed by the seed alone.
class BrownianField {
 public:
  static constexpr int kMaxExponent = 40;

  explicit BrownianField(std::uint64_t seed, double scale = 1.0, int resolution_bits = 20)
      : seed_(seed), scale_(scale), resolution_(std::ldexp(1.0, -resolution_bits)) {
    for (std::uint64_t side = 0; side < 2; ++side) {
      anchors_[side][0] = rng::normal(seed_, stream::anchor, side, 0);
      for (int j = 0; j < kMaxExponent; ++j)
        anchors_[side][j + 1] = anchors_[side][j] + std::sqrt(std::ldexp(1.0, j)) *
                                                        rng::normal(seed_, stream::anchor, side, j + 1);
    }
  }

  double operator()(double tau) const {
    if (tau == 0.0) return 0.0;
    return scale_ * (tau > 0.0 ? one_side(0, tau) : one_side(1, -tau));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  double max_time() const noexcept { return std::ldexp(1.0, kMaxExponent); }

 private:
  double one_side(std::uint64_t side, double tau) const {
    if (!(tau <= max_time())) throw RangeError("BrownianField: time beyond 2^40", tau - max_time());
    double a = 0.0, b = 1.0, wa = 0.0, wb = anchors_[side][0];
    std::uint64_t id = 0;
    if (tau >= 1.0) {
      const int j = std::ilogb(tau);
      if (j >= kMaxExponent) return anchors_[side][kMaxExponent];
      a = std::ldexp(1.0, j);
      b = 2.0 * a;
      wa = anchors_[side][j];
      wb = anchors_[side][j + 1];
      id = static_cast<std::uint64_t>(j) + 1;
    }
    std::uint64_t index = 1;
    std::uint64_t level = 0;
    while (b - a > resolution_) {
      if (tau == a) return wa;
      const double m = 0.5 * (a + b);
      const double wm = 0.5 * (wa + wb) + 0.5 * std::sqrt(b - a) * rng::normal(seed_, stream::bridge, side * 64 + id, level, index);
      if (tau < m) {
        b = m;
        wb = wm;
        index = 2 * index;
      } else {
        a = m;
        wa = wm;
        index = 2 * index + 1;
      }
      ++level;
    }
    return wa + (tau - a) / (b - a) * (wb - wa);
  }

  std::uint64_t seed_;
  double scale_;
  double resolution_;
  std::array<std::array<double, kMaxExponent + 1>, 2> anchors_{};
};

/// One increment of S^alpha over a step dt: dt^{2/alpha} times a standard positive
/// alpha/2-stable variate. The (angle, exponential) pair depends only on
/// (seed, stream, k), so every alpha reuses the same underlying randomness.
inline double subordinator_increment(double alpha, double dt, std::uint64_t seed, std::uint64_t strm,
                                     std::uint64_t k) {
  const double angle = std::numbers::pi * rng::uniform(seed, strm, k, 0);
  const double expo = -std::log(rng::uniform(seed, strm, k, 1));
  return std::pow(dt, 2.0 / alpha) * rng::positive_stable(0.5 * alpha, angle, expo);
}

/// `n` consecutive positive-time increments of the subordinator with step dt.
inline std::vector<double> subordinator_increments(double alpha, double dt, std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = subordinator_increment(alpha, dt, seed, stream::sub_positive, k + 1);
  return out;
}

namespace detail {

inline void check_grid(const Horizon& h, double mesh) {
  if (!(mesh > 0.0)) throw ConfigError("mesh", "must be positive");
  if (!(h.backward >= 0.0) || !(h.forward >= 0.0) || h.backward + h.forward <= 0.0)
    throw ConfigError("horizon", "must be non-negative with positive length");
}

inline std::vector<double> mesh_grid(const Horizon& h, double mesh, std::size_t& zero_index) {
  const auto n_neg = static_cast<std::size_t>(std::ceil(h.backward / mesh - 1e-9));
  const auto n_pos = static_cast<std::size_t>(std::ceil(h.forward / mesh - 1e-9));
  std::vector<double> times(n_neg + n_pos + 1);
  for (std::size_t i = 0; i < times.size(); ++i)
    times[i] = (static_cast<double>(i) - static_cast<double>(n_neg)) * mesh;
  zero_index = n_neg;
  return times;
}

}  // namespace detail

/// Two-sided alpha/2-stable subordinator on the mesh grid, S_0 = 0, right-continuous.
/// Negative times use an independent increment stream, mirrored so the path stays
/// nondecreasing through 0. alpha = 2 yields the identity clock.
inline CadlagPath sample_subordinator(double alpha, const Horizon& horizon, double mesh, std::uint64_t seed) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("sample_subordinator: alpha must lie in (1, 2]");
  detail::check_grid(horizon, mesh);
  std::size_t zero = 0;
  std::vector<double> times = detail::mesh_grid(horizon, mesh, zero);
  std::vector<double> values(times.size(), 0.0);
  if (alpha == 2.0) {
    values = times;
  } else {
    for (std::size_t i = zero + 1; i < times.size(); ++i)
      values[i] = values[i - 1] + subordinator_increment(alpha, mesh, seed, stream::sub_positive, i - zero);
    for (std::size_t k = 1; k <= zero; ++k)
      values[zero - k] = values[zero - k + 1] - subordinator_increment(alpha, mesh, seed, stream::sub_negative, k);
  }
  return CadlagPath(std::move(times), std::move(values), PathKind::piecewise_constant);
}

struct NoiseScenario {
  double alpha = 2.0;
  std::uint64_t seed = 0;
  Horizon horizon;
  double mesh = kDefaultMesh;
  std::shared_ptr<const BrownianField> field;
  CadlagPath brownian;                     ///< W on the mesh, piecewise-linear
  std::optional<CadlagPath> subordinator;  ///< empty for alpha = 2 (identity clock)
  CadlagPath subordinated;                 ///< L^alpha
};

/// L^alpha = W o S^alpha on the subordinator grid. W is evaluated through the
/// Brownian field, i.e. with bridge refinement between the stored mesh points.
/// With `allow_extension = false`, subordinator values outside the stored
/// Brownian horizon raise RangeError instead of extending W.
inline CadlagPath subordinated_bm(const NoiseScenario& sc, bool allow_extension = true) {
  if (!sc.subordinator) return sc.brownian;
  const CadlagPath& clock = *sc.subordinator;
  if (!allow_extension) {
    const double lo = clock.values().front();
    const double hi = clock.values().back();
    if (lo < sc.brownian.t_min())
      throw RangeError("subordinated_bm: subordinator below the Brownian domain", sc.brownian.t_min() - lo);
    if (hi > sc.brownian.t_max())
      throw RangeError("subordinated_bm: subordinator above the Brownian domain", hi - sc.brownian.t_max());
  }
  std::vector<double> values(clock.size());
  for (std::size_t i = 0; i < clock.size(); ++i) values[i] = (*sc.field)(clock.values()[i]);
  return CadlagPath(clock.times(), std::move(values), PathKind::piecewise_constant);
}

/// Builds the coupled scenario. The Brownian member depends only on
/// (seed, horizon, mesh), so it is bit-identical across alpha.
inline NoiseScenario make_scenario(double alpha, std::uint64_t seed, const Horizon& horizon = {},
                                   double mesh = kDefaultMesh, double brownian_scale = 1.0) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("make_scenario: alpha must lie in (1, 2]");
  detail::check_grid(horizon, mesh);
  NoiseScenario sc;
  sc.alpha = alpha;
  sc.seed = seed;
  sc.horizon = horizon;
  sc.mesh = mesh;
  sc.field = std::make_shared<const BrownianField>(seed, brownian_scale);
  std::size_t zero = 0;
  std::vector<double> times = detail::mesh_grid(horizon, mesh, zero);
  std::vector<double> w(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) w[i] = (*sc.field)(times[i]);
  sc.brownian = CadlagPath(std::move(times), std::move(w), PathKind::piecewise_linear);
  if (alpha < 2.0) sc.subordinator = sample_subordinator(alpha, horizon, mesh, seed);
  sc.subordinated = subordinated_bm(sc);
  return sc;
}

/// Empirical Laplace transform of one unit-time subordinator increment against
/// e^{-lambda^{alpha/2}}. Columns: alpha,lambda,empirical,exact,stderr,z_score.
inline Table laplace_check(const std::vector<double>& alphas, const std::vector<double>& lambdas, std::size_t n,
                           std::uint64_t seed) {
  Table t;
  t.columns = {"alpha", "lambda", "empirical", "exact", "stderr", "z_score"};
  for (double a : alphas) {
    if (!(a > 1.0 && a < 2.0)) continue;
    std::vector<double> inc(n);
    for (std::size_t k = 0; k < n; ++k) inc[k] = subordinator_increment(a, 1.0, seed, stream::sub_positive, k + 1);
    for (double l : lambdas) {
      std::vector<double> e(n);
      for (std::size_t k = 0; k < n; ++k) e[k] = std::exp(-l * inc[k]);
      const MeanEstimate m = mean_with_stderr(e);
      const double exact = std::exp(-std::pow(l, 0.5 * a));
      t.rows.push_back({a, l, m.mean, exact, m.stderr_, (m.mean - exact) / m.stderr_});
    }
  }
  return t;
}

}  // namespace levyim
