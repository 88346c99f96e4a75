#pragma once

// Diagonal operator A in its eigenbasis: projectors, semigroup, dichotomy
// estimates, the spectral gap test and the Gronwall-Henry series.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "levyim/errors.hpp"

namespace levyim {

/// Coefficients u_k in the eigenbasis of A.
using StateVec = Eigen::VectorXd;

/// Eigenvalues lambda_1 <= ... <= lambda_K, split index N (P spans the first N
/// modes) and the fractional exponent sigma of the state space D(A^sigma).
class Spectrum {
 public:
  Spectrum(std::vector<double> lambdas, int split, double sigma)
      : lambdas_(std::move(lambdas)), split_(split), sigma_(sigma) {
    if (lambdas_.empty()) throw DomainError("Spectrum: no eigenvalues");
    if (!(lambdas_.front() > 0.0)) throw DomainError("Spectrum: eigenvalues must be positive");
    for (std::size_t k = 1; k < lambdas_.size(); ++k)
      if (lambdas_[k] < lambdas_[k - 1]) throw DomainError("Spectrum: eigenvalues must be nondecreasing");
    if (split_ < 1 || split_ >= K()) throw DomainError("Spectrum: split index must satisfy 1 <= N < K");
    if (!(lambdas_[split_ - 1] < lambdas_[split_])) throw DomainError("Spectrum: need lambda_N < lambda_{N+1}");
    if (!(sigma_ >= 0.0 && sigma_ < 1.0)) throw DomainError("Spectrum: sigma must lie in [0, 1)");
    weights_.resize(K());
    for (int k = 0; k < K(); ++k) weights_[k] = std::pow(lambdas_[k], sigma_);
  }

  /// lambda_k = k^power, k = 1..K.
  static Spectrum power_family(int K, double power, int split, double sigma = 0.0) {
    std::vector<double> l(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) l[k] = std::pow(static_cast<double>(k + 1), power);
    return Spectrum(std::move(l), split, sigma);
  }

  int K() const noexcept { return static_cast<int>(lambdas_.size()); }
  int N() const noexcept { return split_; }
  int Q_dim() const noexcept { return K() - split_; }
  double sigma() const noexcept { return sigma_; }
  double lambda(int k) const { return lambdas_.at(static_cast<std::size_t>(k)); }
  const std::vector<double>& lambdas() const noexcept { return lambdas_; }
  double lambda_N() const { return lambdas_[split_ - 1]; }
  double lambda_N1() const { return lambdas_[split_]; }

  /// lambda_k^sigma (the diagonal of A^sigma).
  const Eigen::VectorXd& sigma_weights() const noexcept { return weights_; }

  double norm(const StateVec& u) const { return u.cwiseProduct(weights_).norm(); }
  double norm_p(const Eigen::VectorXd& xi) const { return xi.cwiseProduct(weights_.head(split_)).norm(); }
  double norm_q(const Eigen::VectorXd& eta) const { return eta.cwiseProduct(weights_.tail(Q_dim())).norm(); }

  Eigen::VectorXd p_block(const StateVec& u) const { return u.head(split_); }
  Eigen::VectorXd q_block(const StateVec& u) const { return u.tail(Q_dim()); }
  StateVec assemble(const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) const {
    StateVec u(K());
    u << xi, eta;
    return u;
  }

 private:
  std::vector<double> lambdas_;
  int split_;
  double sigma_;
  Eigen::VectorXd weights_;
};

/// sigma^sigma with the limit value 1 at sigma = 0.
inline double sigma_pow_sigma(double sigma) { return sigma == 0.0 ? 1.0 : std::pow(sigma, sigma); }

struct GapReport {
  double lhs = 0.0;  ///< lambda_{N+1} - lambda_N
  double rhs = 0.0;
  bool satisfied = false;
  double beta = 0.0;  ///< lambda_N + (2/mu) L lambda_N^sigma
  double margin = 0.0;
  double contraction = 0.0;  ///< Lipschitz bound of the Lyapunov-Perron map at this beta
};

/// Spectral gap condition
///   lambda_{N+1} - lambda_N >= (2L/mu) (lambda_N^s + s^s Gamma(1-s) (lambda_{N+1}-lambda_N)^s + lambda_{N+1}^s).
inline GapReport check_gap(const Spectrum& spec, double lipschitz, double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("check_gap: mu must lie in (0, 1)");
  if (!(lipschitz >= 0.0)) throw DomainError("check_gap: L must be non-negative");
  const double s = spec.sigma();
  const double ln = spec.lambda_N();
  const double ln1 = spec.lambda_N1();
  const double gap = ln1 - ln;
  GapReport r;
  r.lhs = gap;
  r.rhs = 2.0 * lipschitz / mu *
          (std::pow(ln, s) + sigma_pow_sigma(s) * std::tgamma(1.0 - s) * std::pow(gap, s) + std::pow(ln1, s));
  r.satisfied = r.lhs >= r.rhs;
  r.margin = r.lhs - r.rhs;
  r.beta = ln + 2.0 / mu * lipschitz * std::pow(ln, s);
  if (lipschitz == 0.0) {
    r.contraction = 0.0;
  } else if (r.beta < ln1) {
    const double d = ln1 - r.beta;
    r.contraction = lipschitz * (std::pow(ln, s) / (r.beta - ln) +
                                 sigma_pow_sigma(s) * std::tgamma(1.0 - s) / std::pow(d, 1.0 - s) + std::pow(ln1, s) / d);
  } else {
    r.contraction = std::numeric_limits<double>::infinity();
  }
  return r;
}

enum class Block { P, Q, full };

/// lambda_k^power e^{-lambda_k t} v_k on the selected block, zero elsewhere.
/// Q (and full) flows are forward only.
inline StateVec semigroup_apply(const Spectrum& spec, double t, const StateVec& v, Block part, double power) {
  if (v.size() != spec.K()) throw ContractViolation("semigroup_apply: dimension mismatch");
  if (part != Block::P && t < 0.0) throw ContractViolation("semigroup_apply: Q semigroup is forward-only");
  StateVec out = StateVec::Zero(spec.K());
  const int lo = part == Block::Q ? spec.N() : 0;
  const int hi = part == Block::P ? spec.N() : spec.K();
  for (int k = lo; k < hi; ++k) {
    const double l = spec.lambda(k);
    out[k] = (power == 0.0 ? 1.0 : std::pow(l, power)) * std::exp(-l * t) * v[k];
  }
  return out;
}

/// E_sigma(x) = sum_n x^{n(1-sigma)} / Gamma(n(1-sigma) + 1), summed in log space
/// to relative tolerance 1e-12. E_0 is the exponential.
inline double e_sigma_series(double sigma, double x) {
  if (!(x >= 0.0)) throw DomainError("e_sigma_series: x must be non-negative");
  if (!(sigma >= 0.0 && sigma < 1.0)) throw DomainError("e_sigma_series: sigma must lie in [0, 1)");
  if (x == 0.0) return 1.0;
  const double a = 1.0 - sigma;
  const double lx = std::log(x);
  double sum = 1.0;
  bool past_peak = false;
  double prev = 1.0;
  for (int n = 1; n < 100000; ++n) {
    const double q = n * a;
    const double term = std::exp(q * lx - std::lgamma(q + 1.0));
    sum += term;
    if (term < prev) past_peak = true;
    prev = term;
    if (past_peak && term <= 1e-12 * sum) break;
  }
  return sum;
}

/// Semigroup constants in ||A^sigma e^{-At}|| <= M t^{-sigma} e^{-kappa t} for the
/// diagonal case: M = 1, kappa = lambda_1 (1 - sigma/e).
struct SemigroupConstants {
  double M = 1.0;
  double kappa = 0.0;
};

inline SemigroupConstants diagonal_semigroup_constants(const Spectrum& spec) {
  return {1.0, spec.lambda(0) * (1.0 - spec.sigma() / std::numbers::e)};
}

/// Gronwall-Henry a-priori bound at t = T:
///   e^{kappa T} M e^{N} ||x||_sigma E_sigma(theta T),  theta = [M L e^{N} Gamma(1-sigma)]^{1/(1-sigma)},
/// with N = int_0^T |z(theta_r omega)| dr. Dominates sup_{[0,T]} ||u(t)||_sigma.
inline double apriori_bound(const Spectrum& spec, double lipschitz, double x_norm, double horizon, double n_path,
                            double M, double kappa) {
  if (!(x_norm >= 0.0 && horizon >= 0.0 && n_path >= 0.0 && lipschitz >= 0.0 && kappa >= 0.0))
    throw DomainError("apriori_bound: arguments must be non-negative");
  if (!(M >= 1.0)) throw DomainError("apriori_bound: M must be >= 1");
  const double s = spec.sigma();
  if (!(s < 1.0)) throw DomainError("apriori_bound: sigma must be < 1");
  if (x_norm == 0.0) return 0.0;
  const double growth = std::exp(n_path);
  const double theta = std::pow(M * lipschitz * growth * std::tgamma(1.0 - s), 1.0 / (1.0 - s));
  return std::exp(kappa * horizon) * M * growth * x_norm * e_sigma_series(s, theta * horizon);
}

}  // namespace levyim
