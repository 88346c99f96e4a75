#pragma once

// Stationary Ornstein-Uhlenbeck process z(theta_t omega) solving dz = -z dt + dL,
// evaluated exactly against the piecewise representation of the driving path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "levyim/cadlag_path.hpp"
#include "levyim/errors.hpp"
#include "levyim/noise.hpp"
#include "levyim/parallel.hpp"
#include "levyim/table.hpp"

namespace levyim {

inline constexpr double kDefaultTail = 40.0;

struct StationaryValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

namespace detail {

// Integral of e^{s - t} * path(s) over one grid piece [a, b] of `path`.
inline double exp_weighted_piece(const CadlagPath& path, std::size_t i, double a, double b, double t) {
  const auto& ts = path.times();
  const auto& vs = path.values();
  if (path.kind() == PathKind::piecewise_constant || i + 1 == ts.size())
    return vs[i] * (std::exp(b - t) - std::exp(a - t));
  const double m = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i]);
  const double wa = vs[i] + m * (a - ts[i]);
  const double wb = vs[i] + m * (b - ts[i]);
  return std::exp(b - t) * (wb - m) - std::exp(a - t) * (wa - m);
}

}  // namespace detail

/// z(theta_t omega) = omega(t) - int_{-tail}^0 e^s omega(t+s) ds, integrated exactly
/// per path piece. The bound covers the dropped part, using the largest |omega|
/// seen before t - tail.
inline StationaryValue stationary_z(const CadlagPath& path, double t, double tail = kDefaultTail,
                                    double margin = 1.0) {
  if (!(tail > 0.0)) throw DomainError("stationary_z: tail must be positive");
  const double lo = t - tail;
  if (path.empty() || lo - margin < path.t_min())
    throw RangeError("stationary_z: path horizon too short", path.empty() ? tail + margin : path.t_min() - (lo - margin));
  if (t > path.t_max()) throw RangeError("stationary_z: t beyond path horizon", t - path.t_max());

  const auto& ts = path.times();
  double integral = 0.0;
  std::size_t i = path.locate(lo);
  double a = lo;
  while (a < t) {
    const double b = (i + 1 < ts.size()) ? std::min(ts[i + 1], t) : t;
    integral += detail::exp_weighted_piece(path, i, a, b, t);
    a = b;
    ++i;
  }
  double sup = std::abs(path(lo));
  for (std::size_t j = 0; j < ts.size() && ts[j] <= lo; ++j) sup = std::max(sup, std::abs(path.values()[j]));
  return {path(t) - integral, std::exp(-tail) * sup};
}

/// z(theta_t omega) on the driver's grid, with closed-form values between grid
/// points and the running integral Z(t) = int_0^t z dr.
///
/// Between grid points t_k and t_{k+1} the driver is a + b (t - t_k), so
/// z(t) = b + (z_k - b) e^{-(t - t_k)}; at a jump of the driver z jumps by the
/// same amount. Values are trusted from `valid_from() = t_min + tail` on.
class OuPath {
 public:
  static OuPath build(const CadlagPath& driver, double tail = kDefaultTail) {
    if (!(tail >= 0.0)) throw DomainError("OuPath: tail must be non-negative");
    const auto& ts = driver.times();
    const auto& vs = driver.values();
    const std::size_t n = ts.size();
    OuPath out;
    out.times_ = ts;
    out.z_.assign(n, 0.0);
    out.zl_.assign(n, 0.0);
    out.slope_.assign(n, 0.0);
    out.cum_.assign(n, 0.0);
    out.valid_from_ = ts.front() + tail;
    if (out.valid_from_ > ts.back()) throw RangeError("OuPath: driver shorter than the tail", out.valid_from_ - ts.back());

    // Starting from I = 0 at t_0 means z_0 = L(t_0).
    out.z_[0] = vs[0];
    out.zl_[0] = vs[0];
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double h = ts[k + 1] - ts[k];
      const double b = driver.kind() == PathKind::piecewise_linear ? (vs[k + 1] - vs[k]) / h : 0.0;
      out.slope_[k] = b;
      const double decay = std::exp(-h);
      const double z_minus = b + (out.z_[k] - b) * decay;
      const double l_minus = driver.kind() == PathKind::piecewise_linear ? vs[k + 1] : vs[k];
      out.zl_[k + 1] = z_minus;
      out.z_[k + 1] = z_minus + (vs[k + 1] - l_minus);
      out.cum_[k + 1] = out.cum_[k] + b * h + (out.z_[k] - b) * (-std::expm1(-h));
    }

    double sup = 0.0;
    for (std::size_t k = 0; k < n && ts[k] <= ts.front() + 1.0; ++k) sup = std::max(sup, std::abs(vs[k]));
    out.tail_bound_ = std::exp(-tail) * sup;
    out.cum_at_zero_ = 0.0;
    if (ts.front() <= 0.0 && ts.back() >= 0.0) out.cum_at_zero_ = out.raw_integral(0.0);
    else out.cum_at_zero_ = out.raw_integral(ts.front());
    return out;
  }

  /// z identically 0 on [t_lo, t_hi] (deterministic reference case).
  static OuPath zero(double t_lo, double t_hi) {
    OuPath out;
    out.times_ = {t_lo, t_hi};
    out.z_ = {0.0, 0.0};
    out.zl_ = {0.0, 0.0};
    out.slope_ = {0.0, 0.0};
    out.cum_ = {0.0, 0.0};
    out.valid_from_ = t_lo;
    return out;
  }

  /// Right-continuous value z(theta_t omega).
  double z(double t) const {
    const std::size_t i = locate(t);
    if (i + 1 == times_.size()) return z_[i];
    const double b = slope_[i];
    return b + (z_[i] - b) * std::exp(-(t - times_[i]));
  }

  double z_left(double t) const {
    const std::size_t i = locate(t);
    if (times_[i] == t && i > 0 && times_[i] > valid_from_) return zl_[i];
    return z(t);
  }

  /// int_0^t z(theta_r omega) dr (negative for t < 0).
  double integral(double t) const {
    locate(t);
    return raw_integral(t) - cum_at_zero_;
  }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return z_; }
  const std::vector<double>& left_values() const noexcept { return zl_; }
  double valid_from() const noexcept { return valid_from_; }
  double t_max() const { return times_.back(); }
  double tail_bound() const noexcept { return tail_bound_; }
  bool covers(double a, double b) const { return a >= valid_from_ && b <= t_max(); }

 private:
  std::size_t locate(double t) const {
    if (t < valid_from_) throw RangeError("OuPath: t before the trusted horizon", valid_from_ - t);
    if (t > times_.back()) throw RangeError("OuPath: t beyond the horizon", t - times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin()) - 1;
  }

  double raw_integral(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    if (i + 1 == times_.size()) return cum_[i];
    const double tau = t - times_[i];
    const double b = slope_[i];
    return cum_[i] + b * tau + (z_[i] - b) * (-std::expm1(-tau));
  }

  std::vector<double> times_;
  std::vector<double> z_;
  std::vector<double> zl_;
  std::vector<double> slope_;
  std::vector<double> cum_;
  double valid_from_ = 0.0;
  double tail_bound_ = 0.0;
  double cum_at_zero_ = 0.0;
};

/// OU path of the scenario's subordinated driver.
inline OuPath ou_path(const NoiseScenario& sc, double tail = kDefaultTail) {
  return OuPath::build(sc.subordinated, tail);
}

/// Horizon needed to evaluate z on [-back, fwd] with the given tail.
inline Horizon ou_horizon(double back, double fwd, double tail = kDefaultTail) {
  return Horizon{back + tail + 1.0, fwd};
}

/// sup over [lo, hi] of |a - b|, taken over the union of both grids, including
/// left limits at every grid point.
inline double sup_difference(const OuPath& a, const OuPath& b, double lo, double hi) {
  std::vector<double> pts;
  for (const auto* p : {&a, &b})
    for (double t : p->times())
      if (t >= lo && t <= hi) pts.push_back(t);
  pts.push_back(lo);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double sup = 0.0;
  for (double t : pts) {
    sup = std::max(sup, std::abs(a.z(t) - b.z(t)));
    if (t > lo) sup = std::max(sup, std::abs(a.z_left(t) - b.z_left(t)));
  }
  return sup;
}

struct GrowthReport {
  double max_ratio = 0.0;     ///< max over |t| in [T/2, T] of |z(t)| / |t|
  double mean_forward = 0.0;  ///< |(1/T) int_0^T z ds|
  double mean_backward = 0.0; ///< |(1/T) int_{-T}^0 z ds|
};

/// Sublinear-growth diagnostic; a report, never a hard failure.
inline GrowthReport verify_growth(const OuPath& z, double t_probe) {
  GrowthReport r;
  const auto& ts = z.times();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double at = std::abs(ts[i]);
    if (at >= 0.5 * t_probe && at <= t_probe && ts[i] >= z.valid_from())
      r.max_ratio = std::max(r.max_ratio, std::abs(z.values()[i]) / at);
  }
  if (z.covers(0.0, t_probe)) r.mean_forward = std::abs(z.integral(t_probe) / t_probe);
  if (z.covers(-t_probe, 0.0)) r.mean_backward = std::abs(z.integral(-t_probe) / t_probe);
  return r;
}

struct OuConvergenceSpec {
  std::vector<double> alphas{1.5, 1.9, 1.99};
  double p = 1.0;
  double window = 1.0;  ///< T: sup over [-T, T]
  std::size_t samples = 200;
  std::uint64_t seed0 = 1;
  double mesh = kDefaultMesh;
  unsigned threads = 1;
};

/// Monte Carlo estimate of E sup_{[-T,T]} |z^alpha - z|^p under the coupled
/// construction (same W, subordinated vs identity clock). Columns:
/// alpha,p,T,n,estimate,stderr.
inline Table ou_convergence_table(const OuConvergenceSpec& spec) {
  if (!(spec.p > 0.0 && spec.p < 2.0)) throw DomainError("ou_convergence_table: p must lie in (0, 2)");
  for (double a : spec.alphas)
    if (!(a > 1.0 && a <= 2.0)) throw DomainError("ou_convergence_table: alpha must lie in (1, 2]");
  const Horizon h = ou_horizon(spec.window, spec.window + 1.0);
  const std::size_t na = spec.alphas.size();
  std::vector<std::vector<double>> samples(na, std::vector<double>(spec.samples, 0.0));
  parallel_for(spec.samples, spec.threads, [&](std::size_t s) {
    const std::uint64_t seed = spec.seed0 + s;
    const OuPath reference = ou_path(make_scenario(2.0, seed, h, spec.mesh));
    for (std::size_t j = 0; j < na; ++j) {
      if (spec.alphas[j] == 2.0) continue;
      const OuPath za = ou_path(make_scenario(spec.alphas[j], seed, h, spec.mesh));
      samples[j][s] = std::pow(sup_difference(za, reference, -spec.window, spec.window), spec.p);
    }
  });
  Table t;
  t.columns = {"alpha", "p", "T", "n", "estimate", "stderr"};
  for (std::size_t j = 0; j < na; ++j) {
    const MeanEstimate m = mean_with_stderr(samples[j]);
    t.rows.push_back({spec.alphas[j], spec.p, spec.window, static_cast<double>(spec.samples), m.mean, m.stderr_});
  }
  return t;
}

}  // namespace levyim
