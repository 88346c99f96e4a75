#pragma once

// Experiment runner: config in, CSV tables + plot data + manifest.json out.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyim/config.hpp"
#include "levyim/dynamics.hpp"
#include "levyim/manifold.hpp"
#include "levyim/noise.hpp"
#include "levyim/ou.hpp"
#include "levyim/plot.hpp"
#include "levyim/rng.hpp"
#include "levyim/spectral.hpp"
#include "levyim/table.hpp"

#ifndef LEVYIM_VERSION
#define LEVYIM_VERSION "0.1.0"
#endif

namespace levyim {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitGap = 3, kExitNumerical = 4 };

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> files;  ///< relative to the output directory
};

namespace detail {

inline StateVec initial_state(const ExperimentConfig& c, const Spectrum& spec) {
  if (!c.x.empty()) return Eigen::Map<const Eigen::VectorXd>(c.x.data(), static_cast<Eigen::Index>(c.x.size()));
  StateVec x = StateVec::Zero(spec.K());
  x[0] = 1.0;
  x[spec.N()] = 1.0;
  return x;
}

inline ManifoldParams manifold_params(const ExperimentConfig& c) {
  ManifoldParams p;
  p.mu = c.mu;
  p.tol_fp = c.tol_fp;
  p.t_minus = c.t_minus;
  return p;
}

class Output {
 public:
  Output(std::filesystem::path dir, RunResult& res) : dir_(std::move(dir)), res_(res) {
    std::filesystem::create_directories(dir_);
  }
  void table(const std::string& name, const Table& t) {
    std::ofstream os(dir_ / name);
    t.write_csv(os);
    res_.files.push_back(name);
  }
  void plot(const std::string& stem, const Table& t, const PlotAxes& axes) {
    const PlotResult pr = emit_plot_data(t, axes, dir_ / stem);
    res_.files.push_back(pr.data.filename().string());
    if (!pr.svg.empty()) res_.files.push_back(pr.svg.filename().string());
    if (!pr.warning.empty()) warnings.push_back(stem + ": " + pr.warning);
  }
  std::ofstream stream(const std::string& name) {
    res_.files.push_back(name);
    return std::ofstream(dir_ / name);
  }
  const std::filesystem::path& dir() const { return dir_; }
  std::vector<std::string> warnings;

 private:
  std::filesystem::path dir_;
  RunResult& res_;
};

inline Table gap_table(const Spectrum& spec, double L, double mu, const GapReport& g) {
  Table t;
  t.columns = {"lambda_N", "lambda_N1", "L", "mu", "lhs", "rhs", "satisfied", "beta", "margin", "contraction_bound"};
  t.rows.push_back({spec.lambda_N(), spec.lambda_N1(), L, mu, g.lhs, g.rhs, g.satisfied ? 1.0 : 0.0, g.beta, g.margin,
                    g.contraction});
  return t;
}

inline std::string gap_failure_message(const GapReport& g) {
  return "spectral gap condition fails: lambda_{N+1} - lambda_N = " + fmt_double(g.lhs) +
         " < (2L/mu)(lambda_N^s + s^s Gamma(1-s) gap^s + lambda_{N+1}^s) = " + fmt_double(g.rhs);
}

inline std::vector<Eigen::VectorXd> xi_grid(const ExperimentConfig& c, int N) {
  std::vector<double> axis;
  for (int i = 0; i < c.xi_points; ++i)
    axis.push_back(c.xi_points == 1 ? c.xi_min : c.xi_min + (c.xi_max - c.xi_min) * i / (c.xi_points - 1));
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(static_cast<std::size_t>(N), 0);
  while (true) {
    Eigen::VectorXd xi(N);
    for (int j = 0; j < N; ++j) xi[j] = axis[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    out.push_back(xi);
    int j = N - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == c.xi_points) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
  return out;
}

inline void run_experiment(const ExperimentConfig& c, Output& out, RunResult& res) {
  const std::string& e = c.experiment;
  if (e == "noise-stats") {
    const Table lap = laplace_check(c.alphas, {0.5, 1.0, 2.0}, c.samples, c.seed);
    out.table("noise_laplace.csv", lap);
    Table cst;
    cst.columns = {"alpha", "C", "ratio_2C_over_2_minus_alpha"};
    for (double a : c.alphas)
      if (a < 2.0) cst.rows.push_back({a, levy_intensity_constant(a), 2.0 * levy_intensity_constant(a) / (2.0 - a)});
    out.table("noise_constant.csv", cst);
    return;
  }
  if (e == "ou-converge") {
    OuConvergenceSpec s;
    s.alphas = c.alphas;
    s.p = c.p;
    s.window = c.T;
    s.samples = c.seeds;
    s.seed0 = c.seed;
    s.mesh = c.mesh;
    s.threads = c.threads;
    const Table t = ou_convergence_table(s);
    out.table("ou_convergence.csv", t);
    out.plot("ou_convergence", t, {"alpha", {"estimate"}, "E sup |z^alpha - z|^p", false});
    return;
  }

  const Spectrum spec = make_spectrum(c);
  const NonlinearityPtr nl = make_nonlinearity(c, spec);
  const GapReport gap = check_gap(spec, nl->lipschitz(), c.mu);

  if (e == "check-gap") {
    out.table("gap.csv", gap_table(spec, nl->lipschitz(), c.mu, gap));
    res.message = "lhs = " + fmt_double(gap.lhs) + ", rhs = " + fmt_double(gap.rhs) + ", margin = " +
                  fmt_double(gap.margin) + ", beta = " + fmt_double(gap.beta);
    if (!gap.satisfied) {
      res.exit_code = kExitGap;
      res.message = gap_failure_message(gap);
    }
    return;
  }
  if (e == "integrate") {
    const StateVec x = initial_state(c, spec);
    const OuPath z = ou_path(make_scenario(c.alpha, c.seed, ou_horizon(0.0, c.T + 1.0), c.mesh));
    const Trajectory u = integrate(z, 0.0, spec, *nl, x, c.T, c.dt);
    {
      auto os = out.stream("trajectory_long.csv");
      write_long_csv(os, u);
    }
    {
      auto os = out.stream("trajectory_norm.csv");
      write_norm_csv(os, u, spec);
    }
    {
      auto os = out.stream("trajectory_original_norm.csv");
      write_norm_csv(os, to_original(u), spec);
    }
    return;
  }
  if (e == "converge-solutions") {
    SolutionConvergenceSpec s;
    s.alphas = c.alphas;
    s.T = c.T;
    s.dt = c.dt;
    s.seeds = c.seeds;
    s.seed0 = c.seed;
    s.eps = c.threshold;
    s.mesh = c.mesh;
    s.threads = c.threads;
    const SolutionConvergence r = solution_convergence(s, spec, *nl, initial_state(c, spec));
    out.table("solutions_conjugated.csv", r.conjugated);
    out.table("solutions_original.csv", r.original);
    Table both;
    both.columns = {"alpha", "conjugated", "original"};
    for (std::size_t i = 0; i < r.conjugated.rows.size(); ++i)
      both.rows.push_back({r.conjugated.rows[i][0], r.conjugated.rows[i][1], r.original.rows[i][1]});
    out.plot("solutions", both, {"alpha", {"conjugated", "original"}, "median sup-error vs alpha", false});
    return;
  }

  // Manifold experiments need the gap up front.
  if (!gap.satisfied) {
    res.exit_code = kExitGap;
    res.message = gap_failure_message(gap);
    return;
  }
  const ManifoldParams mp = manifold_params(c);
  const double t_minus = default_t_minus(spec, nl->lipschitz(), mp);

  if (e == "converge-manifolds") {
    ManifoldConvergenceSpec s;
    s.alphas = c.alphas;
    s.seeds = c.seeds;
    s.seed0 = c.seed;
    s.mesh = c.mesh;
    s.threads = c.threads;
    s.xis = {Eigen::VectorXd::Constant(spec.N(), c.xi_max)};
    const Table t = manifold_convergence(s, spec, nl, mp);
    out.table("manifolds.csv", t);
    out.plot("manifolds", t, {"alpha", {"median_psi_diff", "median_dpsi_diff", "median_graph_diff"},
                              "manifold differences vs alpha", false});
    return;
  }

  const double forward = e == "track-defect" ? c.T + 1.0 : 1.0;
  auto ou = std::make_shared<const OuPath>(
      ou_path(make_scenario(c.alpha, c.seed, manifold_horizon(t_minus + 1.0, forward), c.mesh)));

  if (e == "solve-manifold") {
    const ManifoldGraph g(ou, spec, nl, mp);
    Table t;
    for (int j = 1; j <= spec.N(); ++j) t.columns.push_back("xi_" + std::to_string(j));
    for (int j = spec.N() + 1; j <= spec.K(); ++j) t.columns.push_back("psi_" + std::to_string(j));
    for (const auto& xi : xi_grid(c, spec.N())) {
      const Eigen::VectorXd q = psi(g, xi);
      std::vector<double> row(xi.data(), xi.data() + xi.size());
      row.insert(row.end(), q.data(), q.data() + q.size());
      t.rows.push_back(std::move(row));
    }
    out.table("manifold.csv", t);
    return;
  }
  if (e == "track-defect") {
    const ManifoldGraph g(ou, spec, nl, mp);
    const TrackingReport r = tracking_defect(g, initial_state(c, spec), c.T, c.dt);
    Table t;
    t.columns = {"t", "defect", "log_defect"};
    for (std::size_t i = 0; i < r.times.size(); ++i)
      t.rows.push_back({r.times[i], r.defect[i], r.defect[i] > 0.0 ? std::log(r.defect[i]) : -INFINITY});
    out.table("track_defect.csv", t);
    res.message = "log-defect slope " + fmt_double(r.slope) + ", beta " + fmt_double(g.beta());
    return;
  }
  if (e == "d-psi-check") {
    Table t;
    t.columns = {"seed", "rel_error", "contraction", "iterations"};
    ManifoldParams tight = mp;
    tight.tol_fp = std::min(mp.tol_fp, 1e-13);
    const Horizon h = manifold_horizon(t_minus + 1.0);
    std::vector<std::vector<double>> rows(c.seeds);
    parallel_for(c.seeds, c.threads, [&](std::size_t s) {
      const std::uint64_t seed = c.seed + s;
      auto z = std::make_shared<const OuPath>(ou_path(make_scenario(c.alpha, seed, h, c.mesh)));
      const ManifoldGraph g(z, spec, nl, tight);
      Eigen::VectorXd xi(spec.N());
      for (int j = 0; j < spec.N(); ++j)
        xi[j] = c.xi_min + (c.xi_max - c.xi_min) * rng::uniform(seed, 0x5eed, static_cast<std::uint64_t>(j));
      const Eigen::MatrixXd D = d_psi(g, xi);
      const Eigen::MatrixXd F = finite_difference_d_psi(g, xi);
      const HistoryFn hist = lp_solve(g, xi);
      rows[s] = {static_cast<double>(seed), (D - F).norm() / std::max(D.norm(), 1e-300), hist.contraction,
                 static_cast<double>(hist.iterations)};
    });
    t.rows = std::move(rows);
    out.table("dpsi_check.csv", t);
    return;
  }
  throw ConfigError("run.experiment", "unknown experiment '" + e + "'");
}

}  // namespace detail

/// Runs one experiment; never throws. Exit codes: 0 ok, 2 config, 3 gap, 4 numerical.
inline RunResult run(const ExperimentConfig& cfg, bool quiet = true) {
  RunResult res;
  const auto start = std::chrono::steady_clock::now();
  try {
    validate(cfg);
    detail::Output out(cfg.output, res);
    {
      auto os = out.stream("config.ini");
      os << serialize_config(cfg);
    }
    detail::run_experiment(cfg, out, res);
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(serialize_config(cfg))));
    nlohmann::json m;
    m["experiment"] = cfg.experiment;
    m["config_hash"] = hash;
    m["version"] = LEVYIM_VERSION;
    m["seed"] = cfg.seed;
    m["seeds"] = cfg.seeds;
    m["threads"] = cfg.threads;
    m["wall_time_s"] = wall;
    m["exit_code"] = res.exit_code;
    m["files"] = res.files;
    if (!res.message.empty()) m["message"] = res.message;
    std::ofstream(out.dir() / "manifest.json") << m.dump(2) << '\n';
  } catch (const ConfigError& e) {
    res.exit_code = kExitConfig;
    res.message = std::string("config error: ") + e.what();
  } catch (const DomainError& e) {
    res.exit_code = kExitConfig;
    res.message = std::string("config error: ") + e.what();
  } catch (const GapViolation& e) {
    res.exit_code = kExitGap;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = kExitNumerical;
    res.message = std::string("numerical failure: ") + e.what();
  }
  if (!quiet && !res.message.empty()) (res.exit_code == kExitOk ? std::cout : std::cerr) << res.message << '\n';
  return res;
}

}  // namespace levyim
