#pragma once

// Random inertial manifold M(omega) = { xi + psi(omega, xi) } of the conjugated
// equation, computed from the Lyapunov-Perron fixed point on a backward history.
//
// Everything is done in reduced variables w(s) = e^{-Z(s)} u(s), Z(s) = int_0^s z,
// where the map reads, per mode k,
//   w_k(t) = e^{-lambda_k t} xi_k + int_0^t e^{-lambda_k (t-s)} g_k(s) ds        (k in P)
//   w_k(t) =                 int_{-inf}^t e^{-lambda_k (t-s)} g_k(s) ds         (k in Q)
// with g(s) = e^{-Z(s)} G(theta_s omega, e^{Z(s)} w(s)). The weighted norm
// sup e^{beta s - Z(s)} ||u(s)||_sigma becomes sup e^{beta s} ||w(s)||_sigma.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "levyim/dynamics.hpp"
#include "levyim/errors.hpp"
#include "levyim/format.hpp"
#include "levyim/noise.hpp"
#include "levyim/nonlinearity.hpp"
#include "levyim/ou.hpp"
#include "levyim/parallel.hpp"
#include "levyim/spectral.hpp"
#include "levyim/table.hpp"

namespace levyim {

/// Backward (or forward) history on a grid, with the data needed for the weighted norm.
struct HistoryFn {
  std::vector<double> grid;        ///< ascending
  std::vector<StateVec> states;    ///< u(s) in the conjugated frame
  double beta = 0.0;
  std::vector<double> weight_path; ///< Z(s) = int_0^s z(theta_r omega) dr
  Eigen::VectorXd norm_weights;    ///< lambda_k^sigma
  int iterations = 0;
  double contraction = 0.0;        ///< largest successive-residual ratio observed
  double residual = 0.0;
  double tail_bound = 0.0;         ///< bound on the effect of truncating at the far end
};

struct ManifoldParams {
  double mu = 0.9;
  double tol_fp = 1e-10;
  double t_minus = 0.0;  ///< 0 selects 40 / (lambda_{N+1} - beta)
  double fine_step = 0x1.0p-10;
  double fine_span = 2.0;
  double growth = 1.05;
  double max_step = 0.05;
  int max_iter = 500;
  int max_outer = 200;   ///< forward_track_solve outer iterations
};

namespace detail {

// J0(x) = int_0^1 e^{-xq} dq,  J1(x) = int_0^1 q e^{-xq} dq.
inline double exp_j0(double x) {
  if (std::abs(x) < 0.5) {
    double term = 1.0, sum = 0.0;
    for (int n = 0; n < 25; ++n) {
      sum += term / (n + 1);
      term *= -x / (n + 1);
    }
    return sum;
  }
  return -std::expm1(-x) / x;
}

inline double exp_j1(double x) {
  if (std::abs(x) < 0.5) {
    double term = 1.0, sum = 0.0;
    for (int n = 0; n < 25; ++n) {
      sum += term / (n + 2);
      term *= -x / (n + 1);
    }
    return sum;
  }
  return (1.0 - std::exp(-x) * (1.0 + x)) / (x * x);
}

/// Exact integration of e^{-lambda (t - s)} against piecewise-linear data on a grid.
/// Q modes accumulate forward from the first grid point, P modes backward from
/// the last one (with a minus sign), both starting from zero.
class ExpQuadrature {
 public:
  ExpQuadrature() = default;
  ExpQuadrature(const std::vector<double>& grid, const Spectrum& spec) : N_(spec.N()), K_(spec.K()) {
    const std::size_t m = grid.size() - 1;
    a_.resize(K_, static_cast<Eigen::Index>(m));
    c0_.resize(K_, static_cast<Eigen::Index>(m));
    c1_.resize(K_, static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const double h = grid[i + 1] - grid[i];
      for (int k = 0; k < K_; ++k) {
        const double l = spec.lambda(k);
        const auto ii = static_cast<Eigen::Index>(i);
        if (k >= N_) {
          const double x = l * h;
          a_(k, ii) = std::exp(-x);
          c0_(k, ii) = h * exp_j1(x);
          c1_(k, ii) = h * (exp_j0(x) - exp_j1(x));
        } else {
          const double x = -l * h;
          a_(k, ii) = std::exp(l * h);
          c0_(k, ii) = h * (exp_j0(x) - exp_j1(x));
          c1_(k, ii) = h * exp_j1(x);
        }
      }
    }
  }

  /// out[i] (K x C) = integral part of the map applied to the field g (K x C per point).
  void apply(const std::vector<Eigen::MatrixXd>& g, std::vector<Eigen::MatrixXd>& out) const {
    const std::size_t n = g.size();
    const Eigen::Index C = g.front().cols();
    out.assign(n, Eigen::MatrixXd::Zero(K_, C));
    for (int k = N_; k < K_; ++k)
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out[i + 1].row(k) = a_(k, ii) * out[i].row(k) + c0_(k, ii) * g[i].row(k) + c1_(k, ii) * g[i + 1].row(k);
      }
    for (int k = 0; k < N_; ++k)
      for (std::size_t i = n - 1; i-- > 0;) {
        const auto ii = static_cast<Eigen::Index>(i);
        out[i].row(k) = a_(k, ii) * out[i + 1].row(k) - (c0_(k, ii) * g[i].row(k) + c1_(k, ii) * g[i + 1].row(k));
      }
  }

 private:
  int N_ = 0;
  int K_ = 0;
  Eigen::MatrixXd a_, c0_, c1_;
};

/// Uniform step near 0, then geometric coarsening out to -t_minus.
inline std::vector<double> graded_grid(double t_minus, const ManifoldParams& p) {
  std::vector<double> back{0.0};
  double s = 0.0;
  double h = p.fine_step;
  while (s > -t_minus) {
    if (-s >= p.fine_span) h = std::min(h * p.growth, p.max_step);
    double next = s - h;
    if (next < -t_minus + 1e-3 * h) next = -t_minus;
    back.push_back(next);
    s = next;
  }
  return {back.rbegin(), back.rend()};
}

/// max_i e^{beta t_i} max_col ||col||_sigma
inline double field_norm(const std::vector<Eigen::MatrixXd>& f, const std::vector<double>& t, double beta,
                         const Eigen::VectorXd& w) {
  double out = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = std::exp(beta * t[i]);
    for (Eigen::Index c = 0; c < f[i].cols(); ++c) out = std::max(out, e * f[i].col(c).cwiseProduct(w).norm());
  }
  return out;
}

inline double field_diff_norm(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b,
                              const std::vector<double>& t, double beta, const Eigen::VectorXd& w) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = std::exp(beta * t[i]);
    for (Eigen::Index c = 0; c < a[i].cols(); ++c)
      out = std::max(out, e * (a[i].col(c) - b[i].col(c)).cwiseProduct(w).norm());
  }
  return out;
}

struct FixedPointStats {
  int iterations = 0;
  double contraction = 0.0;
  double residual = 0.0;
};

/// Picard iteration w <- hom + Quad(g(w)) in the weighted sup norm. Ratios of
/// successive residuals are only trusted while the residual is well above
/// rounding level.
template <class GField>
FixedPointStats picard(std::vector<Eigen::MatrixXd>& w, const std::vector<Eigen::MatrixXd>& hom,
                       const ExpQuadrature& quad, const std::vector<double>& t, double beta,
                       const Eigen::VectorXd& weights, double tol, int max_iter, GField&& gfield,
                       const char* who) {
  FixedPointStats st;
  std::vector<Eigen::MatrixXd> g, next;
  double prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    gfield(w, g);
    quad.apply(g, next);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += hom[i];
    const double r = field_diff_norm(next, w, t, beta, weights);
    const double scale = field_norm(next, t, beta, weights);
    w.swap(next);
    st.iterations = it;
    st.residual = r;
    const double floor = 1e-13 * scale;
    if (prev > 100.0 * floor) {
      const double ratio = r / prev;
      st.contraction = std::max(st.contraction, ratio);
      if (ratio > 1.0)
        throw NumericalFailure(std::string(who) + ": iteration is not contracting (residual ratio " +
                               fmt_double(ratio) + " at iterate " + std::to_string(it) + ")");
    }
    if (r <= tol * scale || r <= floor) return st;
    prev = r;
  }
  throw NumericalFailure(std::string(who) + ": no convergence after " + std::to_string(max_iter) +
                         " iterations (residual " + fmt_double(st.residual) + ")");
}

}  // namespace detail

/// psi(theta_origin omega, .) for one noise realization. Solved histories are
/// cached per xi; the cache is shared by copies and guarded by a mutex.
class ManifoldGraph {
 public:
  ManifoldGraph(std::shared_ptr<const OuPath> ou, Spectrum spec, NonlinearityPtr nl, ManifoldParams params = {},
                double origin = 0.0)
      : ou_(std::move(ou)), spec_(std::move(spec)), nl_(std::move(nl)), params_(params), origin_(origin) {
    if (!ou_ || !nl_) throw ContractViolation("ManifoldGraph: missing OU path or nonlinearity");
    gap_ = check_gap(spec_, nl_->lipschitz(), params_.mu);
    if (!gap_.satisfied)
      throw GapViolation("spectral gap condition fails: lambda_{N+1} - lambda_N = " + fmt_double(gap_.lhs) +
                         " < " + fmt_double(gap_.rhs));
    t_minus_ = params_.t_minus > 0.0 ? params_.t_minus : 40.0 / (spec_.lambda_N1() - gap_.beta);
    if (!ou_->covers(origin_ - t_minus_, origin_))
      throw RangeError("ManifoldGraph: OU path does not cover [origin - T_minus, origin]",
                       ou_->valid_from() - (origin_ - t_minus_));
    grid_ = detail::graded_grid(t_minus_, params_);
    const double base = ou_->integral(origin_);
    z_.resize(grid_.size());
    Z_.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      z_[i] = ou_->z(origin_ + grid_[i]);
      Z_[i] = ou_->integral(origin_ + grid_[i]) - base;
    }
    Z_.back() = 0.0;
    quad_ = std::make_shared<const detail::ExpQuadrature>(grid_, spec_);
    cache_ = std::make_shared<Cache>();
  }

  /// Graph over theta_t omega (same OU path, origin moved by t).
  ManifoldGraph at(double t) const { return ManifoldGraph(ou_, spec_, nl_, params_, origin_ + t); }

  const Spectrum& spectrum() const noexcept { return spec_; }
  const Nonlinearity& nonlinearity() const noexcept { return *nl_; }
  const ManifoldParams& params() const noexcept { return params_; }
  const GapReport& gap() const noexcept { return gap_; }
  double beta() const noexcept { return gap_.beta; }
  double t_minus() const noexcept { return t_minus_; }
  double origin() const noexcept { return origin_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const OuPath& ou() const noexcept { return *ou_; }
  std::shared_ptr<const OuPath> ou_ptr() const noexcept { return ou_; }
  /// z(theta_origin omega).
  double z0() const noexcept { return z_.back(); }

  std::shared_ptr<const HistoryFn> solve(const Eigen::VectorXd& xi) const {
    if (xi.size() != spec_.N()) throw ContractViolation("lp_solve: xi must have N components");
    std::vector<double> key(xi.data(), xi.data() + xi.size());
    {
      std::lock_guard lock(cache_->mutex);
      auto it = cache_->entries.find(key);
      if (it != cache_->entries.end()) return it->second;
    }
    auto h = std::make_shared<const HistoryFn>(compute(xi));
    std::lock_guard lock(cache_->mutex);
    cache_->entries[key] = h;
    return h;
  }

  Eigen::MatrixXd derivative(const Eigen::VectorXd& xi) const;

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::vector<double>, std::shared_ptr<const HistoryFn>> entries;
  };

  // g_i = e^{-Z_i} G(z_i, e^{Z_i} w_i) = e^{-(Z_i + z_i)} F(e^{Z_i + z_i} w_i)
  void g_field(const std::vector<Eigen::MatrixXd>& w, std::vector<Eigen::MatrixXd>& g) const {
    g.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double e = Z_[i] + z_[i];
      g[i] = std::exp(-e) * nl_->eval(std::exp(e) * w[i].col(0));
    }
  }

  std::vector<Eigen::MatrixXd> homogeneous(const Eigen::MatrixXd& xi_cols) const {
    const int N = spec_.N();
    std::vector<Eigen::MatrixXd> hom(grid_.size(), Eigen::MatrixXd::Zero(spec_.K(), xi_cols.cols()));
    for (std::size_t i = 0; i < grid_.size(); ++i)
      for (int k = 0; k < N; ++k) hom[i].row(k) = std::exp(-spec_.lambda(k) * grid_[i]) * xi_cols.row(k);
    return hom;
  }

  HistoryFn compute(const Eigen::VectorXd& xi) const {
    const Eigen::MatrixXd xi_col = xi;
    std::vector<Eigen::MatrixXd> hom = homogeneous(xi_col);
    std::vector<Eigen::MatrixXd> w = hom;  // solution for F = 0
    HistoryFn out;
    out.norm_weights = spec_.sigma_weights();
    detail::FixedPointStats st;
    if (xi.isZero(0.0)) {
      st.iterations = 0;
    } else {
      st = detail::picard(w, hom, *quad_, grid_, gap_.beta, out.norm_weights, params_.tol_fp, params_.max_iter,
                          [this](const auto& ww, auto& g) { g_field(ww, g); }, "lp_solve");
    }
    // P part at 0 is xi by construction; pin it against rounding.
    w.back().col(0).head(spec_.N()) = xi;
    out.grid = grid_;
    out.beta = gap_.beta;
    out.weight_path = Z_;
    out.states.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) out.states[i] = std::exp(Z_[i]) * w[i].col(0);
    out.iterations = st.iterations;
    out.contraction = st.contraction;
    out.residual = st.residual;
    out.tail_bound = std::exp(-(spec_.lambda_N1() - gap_.beta) * t_minus_) *
                     detail::field_norm(w, grid_, gap_.beta, out.norm_weights);
    return out;
  }

  std::shared_ptr<const OuPath> ou_;
  Spectrum spec_;
  NonlinearityPtr nl_;
  ManifoldParams params_;
  double origin_;
  GapReport gap_;
  double t_minus_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> z_;
  std::vector<double> Z_;
  std::shared_ptr<const detail::ExpQuadrature> quad_;
  std::shared_ptr<Cache> cache_;

  friend Eigen::MatrixXd d_psi(const ManifoldGraph&, const Eigen::VectorXd&);
};

/// Fixed point of the Lyapunov-Perron map for P-coordinate xi.
inline HistoryFn lp_solve(const ManifoldGraph& graph, const Eigen::VectorXd& xi) { return *graph.solve(xi); }

/// psi(omega, xi) = Q u(0).
inline Eigen::VectorXd psi(const ManifoldGraph& graph, const Eigen::VectorXd& xi) {
  return graph.spectrum().q_block(graph.solve(xi)->states.back());
}

/// D_xi psi(omega, xi) as a (K - N) x N matrix, from the linearized fixed point
///   V = e^{-At + Z} [I_P; 0] + LP integrals of D_uG(theta_s omega, u(s)) V(s).
inline Eigen::MatrixXd d_psi(const ManifoldGraph& graph, const Eigen::VectorXd& xi) {
  const auto hist = graph.solve(xi);
  const Spectrum& spec = graph.spec_;
  const int N = spec.N();
  const int K = spec.K();
  const std::size_t n = graph.grid_.size();
  // In reduced variables the linearized integrand is D_uF(e^{z} u(s)) W(s).
  std::vector<Eigen::MatrixXd> jac(n);
  const bool linear = graph.nl_->is_linear();
  for (std::size_t i = 0; i < n; ++i) {
    if (linear && i > 0) {
      jac[i] = jac[0];
      continue;
    }
    jac[i] = graph.nl_->deriv(std::exp(graph.z_[i]) * hist->states[i]);
  }
  Eigen::MatrixXd eye = Eigen::MatrixXd::Zero(K, N);
  eye.topRows(N).setIdentity();
  std::vector<Eigen::MatrixXd> hom = graph.homogeneous(eye);
  std::vector<Eigen::MatrixXd> W = hom;
  detail::picard(W, hom, *graph.quad_, graph.grid_, graph.gap_.beta, spec.sigma_weights(), graph.params_.tol_fp,
                 graph.params_.max_iter,
                 [&](const std::vector<Eigen::MatrixXd>& ww, std::vector<Eigen::MatrixXd>& g) {
                   g.resize(ww.size());
                   for (std::size_t i = 0; i < ww.size(); ++i) g[i] = jac[i] * ww[i];
                 },
                 "d_psi");
  return W.back().bottomRows(K - N);
}

inline Eigen::MatrixXd ManifoldGraph::derivative(const Eigen::VectorXd& xi) const { return d_psi(*this, xi); }

/// Central finite differences of psi in each P direction, step h.
inline Eigen::MatrixXd finite_difference_d_psi(const ManifoldGraph& graph, const Eigen::VectorXd& xi, double h = 1e-5) {
  const int N = graph.spectrum().N();
  Eigen::MatrixXd D(graph.spectrum().Q_dim(), N);
  for (int j = 0; j < N; ++j) {
    Eigen::VectorXd a = xi, b = xi;
    a[j] += h;
    b[j] -= h;
    D.col(j) = (psi(graph, a) - psi(graph, b)) / (2.0 * h);
  }
  return D;
}

/// Default backward truncation 40 / (lambda_{N+1} - beta); fails if the gap does not hold.
inline double default_t_minus(const Spectrum& spec, double lipschitz, const ManifoldParams& p) {
  if (p.t_minus > 0.0) return p.t_minus;
  const GapReport gap = check_gap(spec, lipschitz, p.mu);
  if (!gap.satisfied) throw GapViolation("spectral gap condition fails");
  return 40.0 / (spec.lambda_N1() - gap.beta);
}

/// Operator norm of a Q x P block between the sigma-weighted spaces.
inline double sigma_operator_norm(const Spectrum& spec, const Eigen::MatrixXd& D) {
  const Eigen::VectorXd wq = spec.sigma_weights().tail(spec.Q_dim());
  const Eigen::VectorXd wp = spec.sigma_weights().head(spec.N());
  const Eigen::MatrixXd scaled = wq.asDiagonal() * D * wp.cwiseInverse().asDiagonal();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(scaled).singularValues()(0);
}

struct TrackingReport {
  std::vector<double> times;
  std::vector<double> defect;
  double slope = 0.0;  ///< least-squares slope of log defect over samples with defect > 0
};

/// Least-squares slope of log(d) against t, skipping non-positive values.
inline double log_slope(const std::vector<double>& t, const std::vector<double>& d) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(d[i] > 0.0)) continue;
    const double y = std::log(d[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double den = stt - st * st / nn;
  return den > 0.0 ? (sty - st * sy / nn) / den : 0.0;
}

/// d(t) = ||Q u(t) - psi(theta_t omega, P u(t))||_sigma along the conjugated
/// trajectory from x, sampled every `sample_every` time units on [0, T].
inline TrackingReport tracking_defect(const ManifoldGraph& graph, const StateVec& x, double T, double dt = 1e-3,
                                      double sample_every = 0.05, const IntegrateOptions& opt = {}) {
  const Spectrum& spec = graph.spectrum();
  const Trajectory tr = integrate(graph.ou(), graph.origin(), spec, graph.nonlinearity(), x, T, dt, opt);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample_every / dt)));
  TrackingReport rep;
  for (std::size_t i = 0; i < tr.times.size(); i += stride) {
    const double t = tr.times[i];
    const ManifoldGraph g = graph.at(t);
    const StateVec& u = tr.states[i];
    const Eigen::VectorXd d = spec.q_block(u) - psi(g, spec.p_block(u));
    rep.times.push_back(t);
    rep.defect.push_back(spec.norm_q(d));
  }
  rep.slope = log_slope(rep.times, rep.defect);
  return rep;
}

struct ForwardTrack {
  StateVec shadow;     ///< x~ on the manifold with u(t, x~) - u(t, x) = O(e^{-beta t})
  HistoryFn difference;  ///< y(t) = u(t, x~) - u(t, x) on [0, T+]
  Eigen::VectorXd p;   ///< Q y(0)
  int outer_iterations = 0;
};

/// Shadow point of x. For fixed p in QD(A^sigma), y solves
///   y(t) = e^{-At + Z(t)} p + int_0^t e^{..} Q dG ds - int_t^{T+} e^{..} P dG ds,
/// dG(s) = G(u(s) + y(s)) - G(u(s)); p is then updated by p <- psi(Px + Py(0)) - Qx.
inline ForwardTrack forward_track_solve(const ManifoldGraph& graph, const StateVec& x, double t_plus = 0.0,
                                        double dt = 1e-3) {
  const Spectrum& spec = graph.spectrum();
  const Nonlinearity& nl = graph.nonlinearity();
  const ManifoldParams& prm = graph.params();
  const int K = spec.K();
  const double beta = graph.beta();
  if (!(t_plus > 0.0)) t_plus = std::ceil(-std::log(prm.tol_fp) / beta);
  const Trajectory tr = integrate(graph.ou(), graph.origin(), spec, nl, x, t_plus, dt);
  const std::vector<double>& t = tr.times;
  const std::size_t n = t.size();
  std::vector<double> z(n), Z(n);
  const double base = graph.ou().integral(graph.origin());
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = tr.z[i];
    Z[i] = graph.ou().integral(graph.origin() + t[i]) - base;
  }
  const detail::ExpQuadrature quad(t, spec);
  const Eigen::VectorXd& wts = spec.sigma_weights();

  auto inner = [&](const Eigen::VectorXd& p, std::vector<Eigen::MatrixXd>& eta) {
    std::vector<Eigen::MatrixXd> hom(n, Eigen::MatrixXd::Zero(K, 1));
    for (std::size_t i = 0; i < n; ++i)
      for (int k = spec.N(); k < K; ++k) hom[i](k, 0) = std::exp(-spec.lambda(k) * t[i]) * p[k - spec.N()];
    eta = hom;
    if (p.isZero(0.0) && nl.lipschitz() == 0.0) return;
    detail::picard(eta, hom, quad, t, beta, wts, prm.tol_fp, prm.max_iter,
                   [&](const std::vector<Eigen::MatrixXd>& e, std::vector<Eigen::MatrixXd>& g) {
                     g.resize(e.size());
                     for (std::size_t i = 0; i < e.size(); ++i) {
                       const double s = Z[i] + z[i];
                       const StateVec base_u = std::exp(z[i]) * tr.states[i];
                       g[i] = std::exp(-s) * (nl.eval(base_u + std::exp(s) * e[i].col(0)) - nl.eval(base_u));
                     }
                   },
                   "forward_track_solve");
  };

  const Eigen::VectorXd Px = spec.p_block(x);
  const Eigen::VectorXd Qx = spec.q_block(x);
  Eigen::VectorXd p = psi(graph, Px) - Qx;
  std::vector<Eigen::MatrixXd> eta;
  ForwardTrack out;
  // psi is itself only solved to tol_fp, which sets the floor for the outer loop.
  const double outer_tol = 100.0 * prm.tol_fp * (1.0 + spec.norm(x));
  for (int it = 1;; ++it) {
    inner(p, eta);
    const Eigen::VectorXd Py0 = eta.front().col(0).head(spec.N());
    const Eigen::VectorXd p_next = psi(graph, Px + Py0) - Qx;
    const double change = spec.norm_q(p_next - p);
    p = p_next;
    out.outer_iterations = it;
    if (change <= outer_tol) break;
    if (it >= prm.max_outer || !std::isfinite(change))
      throw NumericalFailure("forward_track_solve: outer iteration on p does not converge (change " +
                             fmt_double(change) + " after " + std::to_string(it) + " iterations)");
  }
  inner(p, eta);
  out.p = p;
  out.difference.grid = t;
  out.difference.beta = beta;
  out.difference.weight_path = Z;
  out.difference.norm_weights = wts;
  out.difference.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.difference.states[i] = std::exp(Z[i]) * eta[i].col(0);
  out.shadow = x + out.difference.states.front();
  out.shadow.tail(spec.Q_dim()) = Qx + p;
  return out;
}

struct ManifoldConvergenceSpec {
  std::vector<double> alphas{1.5, 1.9, 1.99, 2.0};
  std::vector<Eigen::VectorXd> xis;
  std::size_t seeds = 50;
  std::uint64_t seed0 = 1;
  double mesh = kDefaultMesh;
  unsigned threads = 1;
};

/// Scenario horizon that supports a graph at origins in [0, forward] with the given T_minus.
inline Horizon manifold_horizon(double t_minus, double forward = 1.0) {
  return ou_horizon(t_minus, forward);
}

/// Per alpha, medians over seeds (each seed takes the max over the xi set) of
///   ||psi^alpha - psi||_sigma, ||D psi^alpha - D psi||, and
///   ||e^{z^alpha} psi^alpha(e^{-z^alpha} xi) - e^{z} psi(e^{-z} xi)||_sigma.
/// Columns: alpha,median_psi_diff,median_dpsi_diff,median_graph_diff,n.
inline Table manifold_convergence(const ManifoldConvergenceSpec& cfg, const Spectrum& spec, NonlinearityPtr nl,
                                  const ManifoldParams& params = {}) {
  for (double a : cfg.alphas)
    if (!(a > 1.0 && a <= 2.0)) throw DomainError("manifold_convergence: alpha must lie in (1, 2]");
  const double t_minus = default_t_minus(spec, nl->lipschitz(), params);
  const Horizon h = manifold_horizon(t_minus + 1.0);
  std::vector<Eigen::VectorXd> xis = cfg.xis;
  if (xis.empty()) xis.push_back(Eigen::VectorXd::Ones(spec.N()));
  const std::size_t na = cfg.alphas.size();
  std::vector<std::array<std::vector<double>, 3>> res(na);
  for (auto& r : res)
    for (auto& v : r) v.assign(cfg.seeds, 0.0);
  parallel_for(cfg.seeds, cfg.threads, [&](std::size_t s) {
    const std::uint64_t seed = cfg.seed0 + s;
    auto ref_ou = std::make_shared<const OuPath>(ou_path(make_scenario(2.0, seed, h, cfg.mesh)));
    const ManifoldGraph ref(ref_ou, spec, nl, params);
    for (std::size_t j = 0; j < na; ++j) {
      if (cfg.alphas[j] == 2.0) continue;
      auto ou = std::make_shared<const OuPath>(ou_path(make_scenario(cfg.alphas[j], seed, h, cfg.mesh)));
      const ManifoldGraph g(ou, spec, nl, params);
      double d0 = 0.0, d1 = 0.0, d2 = 0.0;
      for (const auto& xi : xis) {
        d0 = std::max(d0, spec.norm_q(psi(g, xi) - psi(ref, xi)));
        d1 = std::max(d1, sigma_operator_norm(spec, d_psi(g, xi) - d_psi(ref, xi)));
        const double ea = std::exp(g.z0());
        const double e2 = std::exp(ref.z0());
        const Eigen::VectorXd ta = ea * psi(g, xi / ea);
        const Eigen::VectorXd t2 = e2 * psi(ref, xi / e2);
        d2 = std::max(d2, spec.norm_q(ta - t2));
      }
      res[j][0][s] = d0;
      res[j][1][s] = d1;
      res[j][2][s] = d2;
    }
  });
  Table t;
  t.columns = {"alpha", "median_psi_diff", "median_dpsi_diff", "median_graph_diff", "n"};
  for (std::size_t j = 0; j < na; ++j)
    t.rows.push_back({cfg.alphas[j], median(res[j][0]), median(res[j][1]), median(res[j][2]),
                      static_cast<double>(cfg.seeds)});
  return t;
}

}  // namespace levyim
