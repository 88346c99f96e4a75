#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "levyim/spectral.hpp"

using namespace levyim;

TEST(Spectrum, PowerFamilyAndAccessors) {
  const Spectrum s = Spectrum::power_family(6, 2.0, 2, 0.25);
  EXPECT_EQ(s.K(), 6);
  EXPECT_EQ(s.N(), 2);
  EXPECT_EQ(s.Q_dim(), 4);
  EXPECT_EQ(s.lambda(0), 1.0);
  EXPECT_EQ(s.lambda(5), 36.0);
  EXPECT_EQ(s.lambda_N(), 4.0);
  EXPECT_EQ(s.lambda_N1(), 9.0);
  EXPECT_NEAR(s.sigma_weights()[2], std::pow(9.0, 0.25), 1e-15);
}

TEST(Spectrum, RejectsInvalidInput) {
  EXPECT_THROW(Spectrum({}, 1, 0.0), DomainError);
  EXPECT_THROW(Spectrum({0.0, 1.0}, 1, 0.0), DomainError);
  EXPECT_THROW(Spectrum({2.0, 1.0}, 1, 0.0), DomainError);
  EXPECT_THROW(Spectrum({1.0, 1.0, 4.0}, 1, 0.0), DomainError);
  EXPECT_THROW(Spectrum({1.0, 4.0}, 2, 0.0), DomainError);
  EXPECT_THROW(Spectrum({1.0, 4.0}, 1, 1.0), DomainError);
  EXPECT_NO_THROW(Spectrum({1.0, 1.0, 4.0}, 2, 0.5));
}

TEST(Spectrum, ProjectorsReassemble) {
  proptest::Gen g(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = g.integer(2, 12);
    const int N = g.integer(1, K - 1);
    const Spectrum s(g.eigenvalues(K, N), N, g.uniform(0.0, 0.99));
    const StateVec v = g.vector(K);
    EXPECT_EQ(s.assemble(s.p_block(v), s.q_block(v)), v);
    const StateVec pv = semigroup_apply(s, 0.0, v, Block::P, 0.0);
    const StateVec qv = semigroup_apply(s, 0.0, v, Block::Q, 0.0);
    EXPECT_EQ(pv + qv, v);
    EXPECT_NEAR(s.norm(v) * s.norm(v), s.norm_p(s.p_block(v)) * s.norm_p(s.p_block(v)) +
                                           s.norm_q(s.q_block(v)) * s.norm_q(s.q_block(v)),
                1e-10 * s.norm(v) * s.norm(v));
  }
}

TEST(Gap, WorkedExampleSatisfied) {
  const Spectrum s = Spectrum::power_family(8, 2.0, 2);
  const GapReport r = check_gap(s, 0.5, 0.9);
  EXPECT_NEAR(r.rhs, 10.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.lhs, 5.0, 1e-12);
  EXPECT_NEAR(r.margin, 5.0 / 3.0, 1e-12);
  EXPECT_TRUE(r.satisfied);
  EXPECT_NEAR(r.beta, 4.0 + 1.0 / 0.9, 1e-12);
  EXPECT_GT(r.beta, 4.0);
  EXPECT_LT(r.beta, 9.0);
  // Step 1 bound: L (1/(beta - 4) + 1/(9 - beta) + 1/(9 - beta)) at sigma = 0
  const double b = 4.0 + 1.0 / 0.9;
  EXPECT_NEAR(r.contraction, 0.5 * (1.0 / (b - 4.0) + 2.0 / (9.0 - b)), 1e-12);
  EXPECT_LE(r.contraction, 0.9);
}

TEST(Gap, WorkedExampleFailsAtNOne) {
  const Spectrum s = Spectrum::power_family(8, 2.0, 1);
  const GapReport r = check_gap(s, 0.5, 0.9);
  EXPECT_NEAR(r.lhs, 3.0, 1e-12);
  EXPECT_NEAR(r.rhs, 10.0 / 3.0, 1e-12);
  EXPECT_FALSE(r.satisfied);
}

TEST(Gap, ZeroLipschitzAlwaysSatisfied) {
  const GapReport r = check_gap(Spectrum::power_family(5, 1.0, 3, 0.4), 0.0, 0.5);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.satisfied);
  EXPECT_EQ(r.beta, 3.0);
}

TEST(Gap, RejectsMuOutsideUnitInterval) {
  const Spectrum s = Spectrum::power_family(4, 2.0, 2);
  EXPECT_THROW(check_gap(s, 0.5, 0.0), DomainError);
  EXPECT_THROW(check_gap(s, 0.5, 1.0), DomainError);
  EXPECT_THROW(check_gap(s, -0.1, 0.5), DomainError);
}

TEST(Gap, SigmaTermUsesGammaAndSigmaPower) {
  const double s = 0.3;
  const Spectrum sp = Spectrum::power_family(6, 2.0, 2, s);
  const GapReport r = check_gap(sp, 0.1, 0.8);
  const double oracle = 2.0 * 0.1 / 0.8 *
                        (std::pow(4.0, s) + std::pow(s, s) * std::tgamma(1.0 - s) * std::pow(5.0, s) + std::pow(9.0, s));
  EXPECT_NEAR(r.rhs, oracle, 1e-12);
  EXPECT_EQ(sigma_pow_sigma(0.0), 1.0);
}

TEST(Gap, MonotoneInLipschitzAndMu) {
  proptest::Gen g(19);
  for (int trial = 0; trial < 500; ++trial) {
    const int K = g.integer(2, 8);
    const int N = g.integer(1, K - 1);
    const Spectrum s(g.eigenvalues(K, N), N, g.uniform(0.0, 0.95));
    const double L = g.uniform(0.0, 3.0), mu = g.uniform(0.05, 0.95);
    const GapReport base = check_gap(s, L, mu);
    const GapReport more_L = check_gap(s, L + g.uniform(0.0, 1.0), mu);
    const GapReport less_mu = check_gap(s, L, mu * g.uniform(0.2, 1.0));
    if (!base.satisfied) {
      EXPECT_FALSE(more_L.satisfied);
      EXPECT_FALSE(less_mu.satisfied);
    }
    EXPECT_EQ(base.satisfied, base.lhs >= base.rhs);
    if (base.satisfied && L > 0.0) {
      EXPECT_GT(base.beta, s.lambda_N());
      EXPECT_LT(base.beta, s.lambda_N1());
    }
  }
}

TEST(Semigroup, TimeZeroPowerZeroIsProjection) {
  const Spectrum s = Spectrum::power_family(5, 2.0, 2, 0.5);
  StateVec v(5);
  v << 1, 2, 3, 4, 5;
  StateVec p(5), q(5);
  p << 1, 2, 0, 0, 0;
  q << 0, 0, 3, 4, 5;
  EXPECT_EQ(semigroup_apply(s, 0.0, v, Block::P, 0.0), p);
  EXPECT_EQ(semigroup_apply(s, 0.0, v, Block::Q, 0.0), q);
  EXPECT_EQ(semigroup_apply(s, 0.0, v, Block::full, 0.0), v);
}

TEST(Semigroup, QBackwardIsRejected) {
  const Spectrum s = Spectrum::power_family(4, 2.0, 2);
  const StateVec v = StateVec::Ones(4);
  EXPECT_THROW(semigroup_apply(s, -0.1, v, Block::Q, 0.0), ContractViolation);
  EXPECT_THROW(semigroup_apply(s, -0.1, v, Block::full, 0.0), ContractViolation);
  EXPECT_NO_THROW(semigroup_apply(s, -0.1, v, Block::P, 0.0));
  EXPECT_THROW(semigroup_apply(s, 0.1, StateVec::Ones(3), Block::P, 0.0), ContractViolation);
}

TEST(Semigroup, UnitVectorExamples) {
  const double sg = 0.4;
  const Spectrum s = Spectrum::power_family(6, 2.0, 2, sg);
  const StateVec eN1 = StateVec::Unit(6, 2);
  const StateVec eN = StateVec::Unit(6, 1);
  for (double t : {0.01, 0.3, 2.0}) {
    const double got = semigroup_apply(s, t, eN1, Block::Q, sg).norm();
    EXPECT_NEAR(got, std::pow(9.0, sg) * std::exp(-9.0 * t), 1e-14);
    EXPECT_LE(got, (std::pow(sg / t, sg) + std::pow(9.0, sg)) * std::exp(-9.0 * t));
    const double back = semigroup_apply(s, -t, eN, Block::P, sg).norm();
    EXPECT_NEAR(back, std::pow(4.0, sg) * std::exp(4.0 * t), 1e-12 * back);
  }
}

TEST(Semigroup, SemigroupPropertyExact) {
  proptest::Gen g(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = g.integer(2, 9);
    const int N = g.integer(1, K - 1);
    const Spectrum s(g.eigenvalues(K, N), N, 0.0);
    const StateVec v = g.vector(K);
    const double t1 = g.uniform(0.0, 0.5), t2 = g.uniform(0.0, 0.5);
    for (Block b : {Block::P, Block::Q, Block::full}) {
      const StateVec once = semigroup_apply(s, t1 + t2, v, b, 0.0);
      const StateVec twice = semigroup_apply(s, t1, semigroup_apply(s, t2, v, b, 0.0), b, 0.0);
      EXPECT_LE((once - twice).norm(), 1e-13 * (1.0 + v.norm()));
    }
  }
}

TEST(Semigroup, DichotomyInequalitiesOnRandomProbes) {
  proptest::Gen g(29);
  for (int config = 0; config < 5; ++config) {
    const int K = g.integer(3, 10);
    const int N = g.integer(1, K - 1);
    const double sg = g.uniform(0.0, 0.95);
    const Spectrum s(g.eigenvalues(K, N), N, sg);
    const double lN = s.lambda_N(), lN1 = s.lambda_N1();
    for (int probe = 0; probe < 1000; ++probe) {
      const StateVec v = g.unit_vector(K);
      const double t = g.uniform(1e-3, 3.0);
      const double slack = 1.0 + 1e-12;
      EXPECT_LE(semigroup_apply(s, -t, v, Block::P, sg).norm(), slack * std::pow(lN, sg) * std::exp(lN * t));
      EXPECT_LE(semigroup_apply(s, t, v, Block::Q, 0.0).norm(), slack * std::exp(-lN1 * t));
      EXPECT_LE(semigroup_apply(s, t, v, Block::Q, sg).norm(),
                slack * (std::pow(sg / t, sg) + std::pow(lN1, sg)) * std::exp(-lN1 * t));
    }
  }
}

TEST(ESigma, ExponentialAtSigmaZero) {
  EXPECT_NEAR(e_sigma_series(0.0, 1.0), std::numbers::e, 1e-12);
  EXPECT_NEAR(e_sigma_series(0.0, 7.5), std::exp(7.5), 1e-11 * std::exp(7.5));
}

TEST(ESigma, ValueAtZeroIsOne) {
  for (double sg : {0.0, 0.3, 0.9}) EXPECT_EQ(e_sigma_series(sg, 0.0), 1.0);
}

TEST(ESigma, BruteForcePartialSum) {
  // sum_{n<200} 2^n / Gamma(n/2 + 1), summed directly.
  double brute = 0.0;
  for (int n = 0; n < 200; ++n) brute += std::pow(2.0, n) / std::tgamma(0.5 * n + 1.0);
  EXPECT_NEAR(e_sigma_series(0.5, 4.0), brute, 1e-11 * brute);
  // Closed form at sigma = 1/2: E(x) = e^x (1 + erf(sqrt x)) is a Mittag-Leffler identity.
  EXPECT_NEAR(e_sigma_series(0.5, 4.0), std::exp(4.0) * (1.0 + std::erf(2.0)), 1e-10 * brute);
}

TEST(ESigma, RejectsNegativeArgument) {
  EXPECT_THROW(e_sigma_series(0.2, -1.0), DomainError);
  EXPECT_THROW(e_sigma_series(1.0, 1.0), DomainError);
}

TEST(APriori, ZeroInitialData) {
  const Spectrum s = Spectrum::power_family(4, 2.0, 2, 0.2);
  EXPECT_EQ(apriori_bound(s, 0.7, 0.0, 3.0, 1.5, 1.0, 1.0), 0.0);
}

TEST(APriori, LinearCaseReducesToExponentials) {
  const Spectrum s = Spectrum::power_family(4, 2.0, 2, 0.2);
  const double b = apriori_bound(s, 0.0, 2.0, 3.0, 0.5, 1.5, 0.8);
  EXPECT_NEAR(b, std::exp(0.8 * 3.0) * 1.5 * std::exp(0.5) * 2.0, 1e-12 * b);
}

TEST(APriori, RejectsBadConstants) {
  const Spectrum s = Spectrum::power_family(4, 2.0, 2);
  EXPECT_THROW(apriori_bound(s, 0.1, 1.0, 1.0, 0.0, 0.5, 1.0), DomainError);
  EXPECT_THROW(apriori_bound(s, -0.1, 1.0, 1.0, 0.0, 1.0, 1.0), DomainError);
}

TEST(APriori, DiagonalSemigroupConstantsHold) {
  // ||A^sigma e^{-At}|| = max_k lambda_k^sigma e^{-lambda_k t} <= M t^{-sigma} e^{-kappa t}
  proptest::Gen g(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = g.integer(2, 10);
    const int N = g.integer(1, K - 1);
    const Spectrum s(g.eigenvalues(K, N), N, g.uniform(0.0, 0.95));
    const SemigroupConstants c = diagonal_semigroup_constants(s);
    const double t = g.uniform(1e-3, 5.0);
    double op = 0.0;
    for (int k = 0; k < K; ++k) op = std::max(op, std::pow(s.lambda(k), s.sigma()) * std::exp(-s.lambda(k) * t));
    EXPECT_LE(op, (1.0 + 1e-12) * c.M * std::pow(t, -s.sigma()) * std::exp(-c.kappa * t));
  }
}
