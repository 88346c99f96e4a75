#pragma once

// Conjugated random evolution equation
//   du/dt + A u = z(theta_t omega) u + G(theta_t omega, u),
// exponential Euler time stepping, and the frame change v = e^{z} u.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "levyim/errors.hpp"
#include "levyim/format.hpp"
#include "levyim/noise.hpp"
#include "levyim/nonlinearity.hpp"
#include "levyim/ou.hpp"
#include "levyim/parallel.hpp"
#include "levyim/spectral.hpp"
#include "levyim/table.hpp"

namespace levyim {

enum class Frame { conjugated, original };

inline const char* to_string(Frame f) { return f == Frame::conjugated ? "conjugated" : "original"; }

struct Trajectory {
  std::vector<double> times;    ///< relative to `origin`, starting at 0
  std::vector<StateVec> states;
  std::vector<double> z;        ///< z(theta_{origin + t} omega) at each time
  Frame frame = Frame::conjugated;
  double origin = 0.0;
};

struct IntegrateOptions {
  /// Replace the left-endpoint drift e^{z_n dt} by the exact e^{Z(t_{n+1}) - Z(t_n)}.
  bool exact_drift = false;
  double divergence_limit = 1e12;
};

namespace detail {

// phi_1(m) = (e^m - 1) / m with phi_1(0) = 1.
inline double phi1(double m) { return m == 0.0 ? 1.0 : std::expm1(m) / m; }

}  // namespace detail

/// Integrates the conjugated equation on [0, T] in step dt, starting at time
/// `origin` of the noise (so the driver seen is theta_origin omega).
inline Trajectory integrate(const OuPath& ou, double origin, const Spectrum& spec, const Nonlinearity& nl,
                            const StateVec& x, double T, double dt, const IntegrateOptions& opt = {}) {
  if (x.size() != spec.K()) throw ContractViolation("integrate: initial state has wrong dimension");
  if (!(dt > 0.0) || !(T >= 0.0)) throw DomainError("integrate: need dt > 0 and T >= 0");
  if (!ou.covers(origin, origin + T))
    throw RangeError("integrate: OU path does not cover the integration window",
                     std::max(ou.valid_from() - origin, origin + T - ou.t_max()));
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  if (std::abs(static_cast<double>(steps) * dt - T) > 1e-9 * std::max(1.0, T))
    throw DomainError("integrate: T must be a multiple of dt");

  const int K = spec.K();
  Eigen::VectorXd decay(K), weight(K);
  for (int k = 0; k < K; ++k) {
    decay[k] = std::exp(-spec.lambda(k) * dt);
    weight[k] = detail::phi1(-spec.lambda(k) * dt) * dt;
  }

  Trajectory tr;
  tr.origin = origin;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.z.reserve(steps + 1);
  StateVec u = x;
  double zn = ou.z(origin);
  double Zn = opt.exact_drift ? ou.integral(origin) : 0.0;
  tr.times.push_back(0.0);
  tr.states.push_back(u);
  tr.z.push_back(zn);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t1 = static_cast<double>(n + 1) * dt;
    double drift = zn * dt;
    double Z1 = 0.0;
    if (opt.exact_drift) {
      Z1 = ou.integral(origin + t1);
      drift = Z1 - Zn;
    }
    const StateVec g = conjugated_g(nl, zn, u);
    const double grow = std::exp(drift);
    u = (grow * decay.array() * u.array() + weight.array() * g.array()).matrix();
    const double nrm = spec.norm(u);
    if (!std::isfinite(nrm) || nrm > opt.divergence_limit)
      throw NumericalFailure("integrate: state diverged at step " + std::to_string(n + 1) +
                             " (t = " + fmt_double(t1) + ", norm = " + fmt_double(nrm) + ")");
    zn = ou.z(origin + t1);
    Zn = Z1;
    tr.times.push_back(t1);
    tr.states.push_back(u);
    tr.z.push_back(zn);
  }
  return tr;
}

inline Trajectory integrate(const NoiseScenario& sc, const Spectrum& spec, const Nonlinearity& nl, const StateVec& x,
                            double T, double dt, const IntegrateOptions& opt = {}) {
  return integrate(ou_path(sc), 0.0, spec, nl, x, T, dt, opt);
}

/// v = e^{z} u pointwise.
inline Trajectory to_original(const Trajectory& tr) {
  if (tr.frame != Frame::conjugated) throw ContractViolation("to_original: trajectory is not in the conjugated frame");
  Trajectory out = tr;
  out.frame = Frame::original;
  for (std::size_t i = 0; i < out.states.size(); ++i) out.states[i] *= std::exp(tr.z[i]);
  return out;
}

/// u = e^{-z} v pointwise.
inline Trajectory to_conjugated(const Trajectory& tr) {
  if (tr.frame != Frame::original) throw ContractViolation("to_conjugated: trajectory is not in the original frame");
  Trajectory out = tr;
  out.frame = Frame::conjugated;
  for (std::size_t i = 0; i < out.states.size(); ++i) out.states[i] *= std::exp(-tr.z[i]);
  return out;
}

/// Long form `t,k,coeff` with k counted from 1.
inline void write_long_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,k,coeff\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    for (Eigen::Index k = 0; k < tr.states[i].size(); ++k)
      os << fmt_double(tr.times[i]) << ',' << (k + 1) << ',' << fmt_double(tr.states[i][k]) << '\n';
}

inline void write_norm_csv(std::ostream& os, const Trajectory& tr, const Spectrum& spec) {
  os << "t,norm_sigma\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    os << fmt_double(tr.times[i]) << ',' << fmt_double(spec.norm(tr.states[i])) << '\n';
}

/// sup over the shared grid of ||a - b||_sigma.
inline double sup_state_distance(const Trajectory& a, const Trajectory& b, const Spectrum& spec) {
  if (a.times.size() != b.times.size()) throw ContractViolation("sup_state_distance: grids differ");
  double sup = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i) sup = std::max(sup, spec.norm(a.states[i] - b.states[i]));
  return sup;
}

struct SolutionConvergenceSpec {
  std::vector<double> alphas{1.5, 1.9, 1.99, 2.0};
  double T = 1.0;
  double dt = 1e-3;
  std::size_t seeds = 100;
  std::uint64_t seed0 = 1;
  double eps = 0.05;
  double mesh = kDefaultMesh;
  unsigned threads = 1;
};

struct SolutionConvergence {
  Table conjugated;  ///< sup_t ||u^alpha(t, omega, x) - u(t, omega, x)||_sigma
  Table original;    ///< sup_t ||v^alpha(t, omega, x) - v(t, omega, x)||_sigma
};

/// Coupled Monte Carlo comparison against the Brownian case. Columns:
/// alpha,median_sup_error,frac_below_eps,eps,n.
inline SolutionConvergence solution_convergence(const SolutionConvergenceSpec& cfg, const Spectrum& spec,
                                                const Nonlinearity& nl, const StateVec& x) {
  for (double a : cfg.alphas)
    if (!(a > 1.0 && a <= 2.0)) throw DomainError("solution_convergence: alpha must lie in (1, 2]");
  const Horizon h = ou_horizon(0.0, cfg.T + 1.0);
  const std::size_t na = cfg.alphas.size();
  std::vector<std::vector<double>> conj(na, std::vector<double>(cfg.seeds));
  std::vector<std::vector<double>> orig(na, std::vector<double>(cfg.seeds));
  parallel_for(cfg.seeds, cfg.threads, [&](std::size_t s) {
    const std::uint64_t seed = cfg.seed0 + s;
    const OuPath z2 = ou_path(make_scenario(2.0, seed, h, cfg.mesh));
    const Trajectory u2 = integrate(z2, 0.0, spec, nl, x, cfg.T, cfg.dt);
    const Trajectory v2 = to_original(integrate(z2, 0.0, spec, nl, std::exp(-z2.z(0.0)) * x, cfg.T, cfg.dt));
    for (std::size_t j = 0; j < na; ++j) {
      if (cfg.alphas[j] == 2.0) {
        conj[j][s] = 0.0;
        orig[j][s] = 0.0;
        continue;
      }
      const OuPath za = ou_path(make_scenario(cfg.alphas[j], seed, h, cfg.mesh));
      const Trajectory ua = integrate(za, 0.0, spec, nl, x, cfg.T, cfg.dt);
      const Trajectory va = to_original(integrate(za, 0.0, spec, nl, std::exp(-za.z(0.0)) * x, cfg.T, cfg.dt));
      conj[j][s] = sup_state_distance(ua, u2, spec);
      orig[j][s] = sup_state_distance(va, v2, spec);
    }
  });
  auto make = [&](const std::vector<std::vector<double>>& errs) {
    Table t;
    t.columns = {"alpha", "median_sup_error", "frac_below_eps", "eps", "n"};
    for (std::size_t j = 0; j < na; ++j) {
      std::size_t below = 0;
      for (double e : errs[j]) below += e < cfg.eps;
      const double n = static_cast<double>(errs[j].size());
      t.rows.push_back({cfg.alphas[j], median(errs[j]), n > 0 ? static_cast<double>(below) / n : 0.0, cfg.eps, n});
    }
    return t;
  };
  return {make(conj), make(orig)};
}

}  // namespace levyim
