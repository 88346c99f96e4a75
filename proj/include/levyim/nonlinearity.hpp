#pragma once

// Nonlinearity presets F: D(A^sigma) -> H with certified Lipschitz constants,
// ||F(u) - F(v)|| <= L ||u - v||_sigma.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>

#include "levyim/errors.hpp"
#include "levyim/spectral.hpp"

namespace levyim {

class Nonlinearity {
 public:
  virtual ~Nonlinearity() = default;
  virtual StateVec eval(const StateVec& u) const = 0;
  /// Jacobian D_uF at u, K x K.
  virtual Eigen::MatrixXd deriv(const StateVec& u) const = 0;
  virtual double lipschitz() const = 0;
  virtual std::string name() const = 0;
  /// True when F is linear, so D_uF does not depend on u.
  virtual bool is_linear() const { return false; }
};

using NonlinearityPtr = std::shared_ptr<const Nonlinearity>;

class ZeroNonlinearity final : public Nonlinearity {
 public:
  explicit ZeroNonlinearity(int K) : K_(K) {}
  StateVec eval(const StateVec& u) const override { return StateVec::Zero(u.size()); }
  Eigen::MatrixXd deriv(const StateVec&) const override { return Eigen::MatrixXd::Zero(K_, K_); }
  double lipschitz() const override { return 0.0; }
  std::string name() const override { return "zero"; }
  bool is_linear() const override { return true; }

 private:
  int K_;
};

/// F(u) = eps u. Keeps P and Q invariant, so the graph is flat.
class LinearDiagonal final : public Nonlinearity {
 public:
  LinearDiagonal(const Spectrum& spec, double eps)
      : K_(spec.K()), eps_(eps), L_(std::abs(eps) * std::pow(spec.lambda(0), -spec.sigma())) {}
  StateVec eval(const StateVec& u) const override { return eps_ * u; }
  Eigen::MatrixXd deriv(const StateVec&) const override { return eps_ * Eigen::MatrixXd::Identity(K_, K_); }
  double lipschitz() const override { return L_; }
  std::string name() const override { return "linear-diagonal"; }
  bool is_linear() const override { return true; }

 private:
  int K_;
  double eps_;
  double L_;
};

/// F(u) = eps <u, e_from> e_to, modes numbered from 1.
class CrossCouple final : public Nonlinearity {
 public:
  CrossCouple(const Spectrum& spec, double eps, int from, int to) : K_(spec.K()), eps_(eps), from_(from), to_(to) {
    if (from < 1 || from > K_ || to < 1 || to > K_) throw DomainError("cross-couple: mode index outside 1..K");
    L_ = std::abs(eps) * std::pow(spec.lambda(from - 1), -spec.sigma());
  }
  StateVec eval(const StateVec& u) const override {
    StateVec out = StateVec::Zero(u.size());
    out[to_ - 1] = eps_ * u[from_ - 1];
    return out;
  }
  Eigen::MatrixXd deriv(const StateVec&) const override {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(K_, K_);
    d(to_ - 1, from_ - 1) = eps_;
    return d;
  }
  double lipschitz() const override { return L_; }
  std::string name() const override { return "cross-couple"; }
  bool is_linear() const override { return true; }

 private:
  int K_;
  double eps_;
  int from_;
  int to_;
  double L_;
};

/// F_k(u) = eps tanh((u_{k-1} + u_{k+1}) / 2) with u_0 = u_{K+1} = 0.
/// The neighbour average has operator norm <= 1 and tanh is 1-Lipschitz.
class Saturating final : public Nonlinearity {
 public:
  Saturating(const Spectrum& spec, double eps)
      : K_(spec.K()), eps_(eps), L_(std::abs(eps) * std::pow(spec.lambda(0), -spec.sigma())) {}
  StateVec eval(const StateVec& u) const override {
    StateVec out(u.size());
    for (int k = 0; k < K_; ++k) out[k] = eps_ * std::tanh(avg(u, k));
    return out;
  }
  Eigen::MatrixXd deriv(const StateVec& u) const override {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(K_, K_);
    for (int k = 0; k < K_; ++k) {
      const double c = std::cosh(avg(u, k));
      const double w = 0.5 * eps_ / (c * c);
      if (k > 0) d(k, k - 1) = w;
      if (k + 1 < K_) d(k, k + 1) = w;
    }
    return d;
  }
  double lipschitz() const override { return L_; }
  std::string name() const override { return "saturating"; }

 private:
  double avg(const StateVec& u, int k) const {
    const double left = k > 0 ? u[k - 1] : 0.0;
    const double right = k + 1 < K_ ? u[k + 1] : 0.0;
    return 0.5 * (left + right);
  }

  int K_;
  double eps_;
  double L_;
};

/// G(omega, u) = e^{-z} F(e^{z} u); same Lipschitz constant as F.
inline StateVec conjugated_g(const Nonlinearity& nl, double z, const StateVec& u) {
  if (z == 0.0) return nl.eval(u);
  return std::exp(-z) * nl.eval(std::exp(z) * u);
}

/// D_uG(omega, u) = D_uF(e^{z} u).
inline Eigen::MatrixXd conjugated_dg(const Nonlinearity& nl, double z, const StateVec& u) {
  return nl.deriv(std::exp(z) * u);
}

}  // namespace levyim
