#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <thread>
#include <vector>

#include "gen.hpp"
#include "levyim/manifold.hpp"
#include "levyim/metrics.hpp"

using namespace levyim;

namespace {

const Spectrum kSpec = Spectrum::power_family(8, 2.0, 2);

std::shared_ptr<const OuPath> flat_noise() { return std::make_shared<const OuPath>(OuPath::zero(-200.0, 50.0)); }

std::shared_ptr<const OuPath> random_noise(double alpha, std::uint64_t seed, double back = 12.0, double fwd = 4.0) {
  return std::make_shared<const OuPath>(ou_path(make_scenario(alpha, seed, manifold_horizon(back, fwd))));
}

Eigen::VectorXd vec2(double a, double b) { return (Eigen::VectorXd(2) << a, b).finished(); }

}  // namespace

TEST(ClosedForm, CrossCouplingGraph) {
  // z = 0, F(u) = eps u_1 e_3: psi(xi) = eps xi_1 / (lambda_3 - lambda_1) e_3 = 0.0125 xi_1 e_3.
  auto f = std::make_shared<const CrossCouple>(kSpec, 0.1, 1, 3);
  const ManifoldGraph g(flat_noise(), kSpec, f);
  for (double x1 : {-2.0, -0.5, 0.3, 1.0, 4.0}) {
    const Eigen::VectorXd q = psi(g, vec2(x1, 0.7));
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(6);
    expect[0] = 0.0125 * x1;
    EXPECT_LT((q - expect).cwiseAbs().maxCoeff(), 1e-6) << "xi_1 " << x1;
  }
  const Eigen::MatrixXd D = d_psi(g, vec2(1.0, -1.0));
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(6, 2);
  expect(0, 0) = 0.0125;
  EXPECT_LT((D - expect).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ClosedForm, CrossCouplingHistory) {
  // u(t) = xi_1 e^{-t} e_1 + eps xi_1 / 8 e^{-t} e_3 for t <= 0, plus the free xi_2 mode.
  auto f = std::make_shared<const CrossCouple>(kSpec, 0.1, 1, 3);
  const ManifoldGraph g(flat_noise(), kSpec, f);
  const HistoryFn h = lp_solve(g, vec2(1.5, 0.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < h.grid.size(); ++i) {
    const double t = h.grid[i];
    StateVec exact = StateVec::Zero(8);
    exact[0] = 1.5 * std::exp(-t);
    exact[2] = 0.1 * 1.5 / 8.0 * std::exp(-t);
    worst = std::max(worst, std::exp(g.beta() * t) * kSpec.norm(h.states[i] - exact));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(ZeroNonlinearity, GraphIsFlatAndHistoryIsFreeFlow) {
  auto f = std::make_shared<const ZeroNonlinearity>(8);
  const auto z = random_noise(1.8, 4);
  const ManifoldGraph g(z, kSpec, f);
  const Eigen::VectorXd xi = vec2(0.6, -1.1);
  EXPECT_EQ(psi(g, xi).norm(), 0.0);
  EXPECT_EQ(d_psi(g, xi).norm(), 0.0);
  const HistoryFn h = lp_solve(g, xi);
  for (std::size_t i = 0; i < h.grid.size(); i += 97) {
    const double t = h.grid[i];
    const double w = z->integral(t);
    EXPECT_NEAR(h.states[i][0], 0.6 * std::exp(-t + w), 1e-12 * std::exp(-t + w));
    EXPECT_NEAR(h.states[i][1], -1.1 * std::exp(-4.0 * t + w), 1e-12 * std::exp(-4.0 * t + w));
  }
}

TEST(LinearDiagonal, GraphIsFlatForEveryAlpha) {
  auto f = std::make_shared<const LinearDiagonal>(kSpec, 0.4);
  for (double alpha : {1.5, 1.9, 2.0}) {
    const ManifoldGraph g(random_noise(alpha, 3), kSpec, f);
    EXPECT_LT(psi(g, vec2(1.0, -0.5)).norm(), 1e-14) << alpha;
  }
}

TEST(Graph, OriginMapsToZero) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  for (std::uint64_t seed : {1u, 2u}) {
    const ManifoldGraph g(random_noise(1.7, seed), kSpec, f);
    EXPECT_EQ(psi(g, vec2(0.0, 0.0)).norm(), 0.0);
  }
}

TEST(Graph, PComponentAtZeroIsXi) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const ManifoldGraph g(random_noise(1.9, 5), kSpec, f);
  const Eigen::VectorXd xi = vec2(0.37, -0.81);
  const HistoryFn h = lp_solve(g, xi);
  EXPECT_EQ(h.grid.back(), 0.0);
  EXPECT_EQ(kSpec.p_block(h.states.back()), xi);
}

TEST(Graph, GapAndHorizonPreconditions) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const Spectrum n1 = Spectrum::power_family(8, 2.0, 1);
  EXPECT_THROW(ManifoldGraph(flat_noise(), n1, std::make_shared<const Saturating>(n1, 0.5)), GapViolation);
  EXPECT_THROW(default_t_minus(n1, 0.5, {}), GapViolation);
  const auto short_path = std::make_shared<const OuPath>(OuPath::zero(-1.0, 1.0));
  EXPECT_THROW(ManifoldGraph(short_path, kSpec, f), RangeError);
  EXPECT_THROW(ManifoldGraph(nullptr, kSpec, f), ContractViolation);
  const ManifoldGraph g(flat_noise(), kSpec, f);
  EXPECT_THROW(psi(g, Eigen::VectorXd::Ones(3)), ContractViolation);
}

TEST(Graph, DefaultBackwardHorizon) {
  const double beta = 4.0 + 1.0 / 0.9;
  EXPECT_NEAR(default_t_minus(kSpec, 0.5, {}), 40.0 / (9.0 - beta), 1e-12);
  ManifoldParams p;
  p.t_minus = 3.0;
  EXPECT_EQ(default_t_minus(kSpec, 0.5, p), 3.0);
}

TEST(Graph, ContractionCertificateAndLipschitzBound) {
  proptest::Gen gen(21);
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const ManifoldParams prm;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ManifoldGraph g(random_noise(1.9, seed), kSpec, f, prm);
    for (int pair = 0; pair < 10; ++pair) {
      const Eigen::VectorXd a = gen.vector(2, 2.0), b = gen.vector(2, 2.0);
      const HistoryFn ha = lp_solve(g, a), hb = lp_solve(g, b);
      EXPECT_LE(ha.contraction, prm.mu + 0.05);
      const double ratio = kSpec.norm_q(psi(g, a) - psi(g, b)) / kSpec.norm_p(a - b);
      EXPECT_LE(ratio, prm.mu / (2.0 * (1.0 - prm.mu)) + 1e-6);
      // histories: weighted distance <= (1 - mu)^{-1} |xi_a - xi_b|
      HistoryFn diff = ha;
      for (std::size_t i = 0; i < diff.states.size(); ++i) diff.states[i] = ha.states[i] - hb.states[i];
      EXPECT_LE(weighted_history_norm(diff), kSpec.norm_p(a - b) / (1.0 - prm.mu) * (1.0 + 1e-9));
    }
  }
}

TEST(Graph, DerivativeMatchesFiniteDifferences) {
  proptest::Gen gen(22);
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  ManifoldParams prm;
  prm.tol_fp = 1e-13;
  for (std::uint64_t seed : {7u, 8u}) {
    const ManifoldGraph g(random_noise(1.8, seed), kSpec, f, prm);
    for (int probe = 0; probe < 3; ++probe) {
      const Eigen::VectorXd xi = gen.vector(2, 1.5);
      const Eigen::MatrixXd D = d_psi(g, xi);
      const Eigen::MatrixXd F = finite_difference_d_psi(g, xi);
      EXPECT_LT((D - F).norm() / D.norm(), 1e-4);
      EXPECT_EQ(D.rows(), 6);
      EXPECT_EQ(D.cols(), 2);
    }
  }
}

TEST(Graph, TailInsensitivity) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const auto z = random_noise(1.9, 11);
  for (double tm : {1.0, 2.0, 3.0}) {
    ManifoldParams a, b;
    a.t_minus = tm;
    b.t_minus = 2.0 * tm;
    const ManifoldGraph ga(z, kSpec, f, a), gb(z, kSpec, f, b);
    const Eigen::VectorXd xi = vec2(1.0, -0.8);
    const HistoryFn h = lp_solve(ga, xi);
    const double bound = std::exp(-(kSpec.lambda_N1() - ga.beta()) * tm) * weighted_history_norm(h);
    EXPECT_LE(kSpec.norm_q(psi(ga, xi) - psi(gb, xi)), bound + 10.0 * a.tol_fp) << "T_minus " << tm;
  }
}

TEST(Graph, ConcurrentEvaluationMatchesSerial) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const auto z = random_noise(1.7, 2);
  const ManifoldGraph serial(z, kSpec, f), shared(z, kSpec, f);
  std::vector<Eigen::VectorXd> xis;
  for (int i = 0; i < 6; ++i) xis.push_back(vec2(0.3 * i - 0.7, 0.1 * i));
  std::vector<Eigen::VectorXd> expect;
  for (const auto& xi : xis) expect.push_back(psi(serial, xi));
  std::vector<std::vector<Eigen::VectorXd>> got(4);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t r = 0; r < 3 * xis.size(); ++r) got[w].push_back(psi(shared, xis[(r + w) % xis.size()]));
    });
  for (auto& t : pool) t.join();
  for (int w = 0; w < 4; ++w)
    for (std::size_t r = 0; r < got[w].size(); ++r) EXPECT_EQ(got[w][r], expect[(r + w) % xis.size()]);
  EXPECT_EQ(serial.solve(xis[0]).get(), serial.solve(xis[0]).get());
}

TEST(Tracking, InvarianceOnTheGraph) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const ManifoldGraph g(random_noise(1.9, 3, 12.0, 3.0), kSpec, f);
  const Eigen::VectorXd xi = vec2(0.9, -0.4);
  const StateVec x = kSpec.assemble(xi, psi(g, xi));
  const TrackingReport r = tracking_defect(g, x, 1.0);
  for (double d : r.defect) EXPECT_LT(d, 1e-3 * (1.0 + kSpec.norm(x)));
}

TEST(Tracking, LinearDecayClosedForm) {
  // F = 0, x = e_3: d(t) = exp(-9 t + int_0^t z).
  auto f = std::make_shared<const ZeroNonlinearity>(8);
  const auto z = random_noise(1.8, 6, 12.0, 3.0);
  const ManifoldGraph g(z, kSpec, f);
  IntegrateOptions opt;
  opt.exact_drift = true;
  const TrackingReport r = tracking_defect(g, StateVec::Unit(8, 2), 1.0, 1e-3, 0.05, opt);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double exact = std::exp(-9.0 * r.times[i] + z->integral(r.times[i]));
    EXPECT_NEAR(r.defect[i], exact, 1e-9 * exact);
  }
  EXPECT_LT(r.slope, -g.beta() / 2.0);
}

TEST(Tracking, OffGraphDecayRate) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  proptest::Gen gen(31);
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ManifoldGraph g(random_noise(1.9, seed, 12.0, 3.0), kSpec, f);
    const TrackingReport r = tracking_defect(g, gen.vector(8), 1.5);
    good += r.slope <= -g.beta() / 2.0 + 0.2 * g.beta();
  }
  EXPECT_GE(good, 4);
}

TEST(ForwardTrack, PointOnGraphIsItsOwnShadow) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  const ManifoldGraph g(random_noise(1.9, 4, 12.0, 12.0), kSpec, f);
  const Eigen::VectorXd xi = vec2(0.5, 0.2);
  const StateVec x = kSpec.assemble(xi, psi(g, xi));
  const ForwardTrack ft = forward_track_solve(g, x);
  EXPECT_LT(kSpec.norm(ft.shadow - x), 1e-8);
  EXPECT_LT(kSpec.norm_q(ft.p), 1e-8);
}

TEST(ForwardTrack, ZeroNonlinearityProjectsOntoP) {
  auto f = std::make_shared<const ZeroNonlinearity>(8);
  const ManifoldGraph g(random_noise(1.8, 5, 12.0, 12.0), kSpec, f);
  proptest::Gen gen(5);
  const StateVec x = gen.vector(8);
  const ForwardTrack ft = forward_track_solve(g, x);
  StateVec px = x;
  px.tail(6).setZero();
  EXPECT_LT(kSpec.norm(ft.shadow - px), 1e-12);
  EXPECT_NEAR(kSpec.norm(x - ft.shadow), kSpec.norm_q(kSpec.q_block(x)), 1e-12);
}

TEST(ForwardTrack, ShadowLiesOnGraphAndAttracts) {
  auto f = std::make_shared<const Saturating>(kSpec, 0.5);
  proptest::Gen gen(6);
  const ManifoldGraph g(random_noise(1.9, 6, 12.0, 12.0), kSpec, f);
  const StateVec x = gen.vector(8);
  const ForwardTrack ft = forward_track_solve(g, x);
  const Eigen::VectorXd on = psi(g, kSpec.p_block(ft.shadow));
  EXPECT_LT(kSpec.norm_q(kSpec.q_block(ft.shadow) - on), 1e-7);
  // ||y||_weighted <= (1 - mu)^{-1} ||p||
  EXPECT_LE(weighted_history_norm(ft.difference), kSpec.norm_q(ft.p) / (1.0 - g.params().mu) * (1.0 + 1e-9));
  std::vector<double> t, d;
  for (std::size_t i = 0; i < ft.difference.grid.size(); i += 50) {
    if (ft.difference.grid[i] > 2.0) break;
    t.push_back(ft.difference.grid[i]);
    d.push_back(kSpec.norm(ft.difference.states[i]));
  }
  EXPECT_LE(log_slope(t, d), -g.beta() / 2.0);
}

TEST(Convergence, AlphaTwoRowIsZero) {
  ManifoldConvergenceSpec s;
  s.alphas = {1.9, 2.0};
  s.seeds = 2;
  const Table t = manifold_convergence(s, kSpec, std::make_shared<const Saturating>(kSpec, 0.5), {});
  EXPECT_EQ(t.columns, (std::vector<std::string>{"alpha", "median_psi_diff", "median_dpsi_diff", "median_graph_diff", "n"}));
  for (std::size_t j = 1; j <= 3; ++j) {
    EXPECT_EQ(t.rows[1][j], 0.0);
    EXPECT_GT(t.rows[0][j], 0.0);
  }
}

TEST(Convergence, LinearDiagonalGivesZeroEverywhere) {
  ManifoldConvergenceSpec s;
  s.alphas = {1.5, 1.9, 2.0};
  s.seeds = 2;
  const Table t = manifold_convergence(s, kSpec, std::make_shared<const LinearDiagonal>(kSpec, 0.3), {});
  for (const auto& row : t.rows)
    for (std::size_t j = 1; j <= 3; ++j) EXPECT_LT(row[j], 1e-13);
}

TEST(Quadrature, GradedGridShape) {
  const ManifoldParams p;
  const std::vector<double> grid = detail::graded_grid(10.0, p);
  EXPECT_EQ(grid.back(), 0.0);
  EXPECT_LE(grid.front(), -10.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double h = grid[i] - grid[i - 1];
    EXPECT_GT(h, 0.0);
    EXPECT_LE(h, p.max_step * (1.0 + 1e-12));
    if (grid[i] > -p.fine_span) EXPECT_NEAR(h, p.fine_step, 1e-15);
  }
}

TEST(Quadrature, ExponentialWeights) {
  // J0(x) = (1 - e^{-x}) / x, J1(x) = (1 - e^{-x}(1 + x)) / x^2, continuous through the series switch.
  for (double x : {-3.0, -0.6, -0.49, -1e-3, 0.0, 1e-3, 0.49, 0.51, 2.0, 40.0}) {
    const double j0 = x == 0.0 ? 1.0 : -std::expm1(-x) / x;
    const double j1 = x == 0.0 ? 0.5 : (1.0 - std::exp(-x) * (1.0 + x)) / (x * x);
    EXPECT_NEAR(detail::exp_j0(x), j0, 1e-13) << x;
    EXPECT_NEAR(detail::exp_j1(x), j1, 1e-9) << x;
  }
}
