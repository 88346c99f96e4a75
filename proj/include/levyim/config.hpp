#pragma once

// Experiment configuration: a flat INI file (sections of key = value).

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <istream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "levyim/errors.hpp"
#include "levyim/format.hpp"
#include "levyim/noise.hpp"
#include "levyim/nonlinearity.hpp"
#include "levyim/spectral.hpp"

namespace levyim {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"noise-stats",   "ou-converge", "check-gap",
                                              "integrate",     "solve-manifold", "d-psi-check",
                                              "track-defect",  "converge-solutions", "converge-manifolds"};
  return names;
}

struct ExperimentConfig {
  std::string experiment = "check-gap";
  std::string output = "out";
  unsigned threads = 1;
  std::uint64_t seed = 1;   ///< first seed
  std::size_t seeds = 20;   ///< number of seeds for Monte Carlo experiments

  // spectrum: explicit list, or lambda_k = k^power for k = 1..K
  std::vector<double> lambdas;
  int K = 8;
  double power = 2.0;
  int N = 2;
  double sigma = 0.0;

  // nonlinearity preset
  std::string preset = "saturating";
  double eps = 0.5;
  int from = 1;
  int to = 3;

  // noise
  std::vector<double> alphas{1.5, 1.9, 1.99, 2.0};
  double alpha = 1.9;  ///< single-alpha experiments
  double mesh = kDefaultMesh;
  std::size_t samples = 100000;  ///< noise-stats draws

  // solver
  double mu = 0.9;
  double tol_fp = 1e-10;
  double t_minus = 0.0;
  double dt = 1e-3;
  double T = 1.0;
  double threshold = 0.05;  ///< eps in frac_below_eps
  double p = 1.0;           ///< OU moment

  // manifold sampling and initial data
  std::vector<double> x;   ///< initial state, K entries (empty: e_1 + e_{N+1})
  double xi_min = -1.0;
  double xi_max = 1.0;
  int xi_points = 5;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
  return s;
}

inline std::vector<double> split_doubles(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError(field, "not a number: '" + tok + "'");
    }
    if (used != tok.size()) throw ConfigError(field, "not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

class IniReader {
 public:
  explicit IniReader(const boost::property_tree::ptree& pt) : pt_(pt) {}

  template <class T>
  void get(const std::string& path, T& target) {
    seen_.insert(path);
    auto node = pt_.get_child_optional(boost::property_tree::ptree::path_type(path, '.'));
    if (!node) return;
    const std::string text = node->data();
    if constexpr (std::is_same_v<T, std::string>) {
      target = text;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      target = split_doubles(path, text);
    } else {
      auto v = node->get_value_optional<T>();
      if (!v) throw ConfigError(path, "cannot parse '" + text + "'");
      target = *v;
    }
  }

  void reject_unknown() const {
    for (const auto& [section, body] : pt_) {
      if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside a section");
      for (const auto& [key, value] : body) {
        const std::string path = section + "." + key;
        if (!seen_.count(path)) throw ConfigError(path, "unknown key");
      }
    }
  }

 private:
  const boost::property_tree::ptree& pt_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Range checks; throws ConfigError naming the offending key.
inline void validate(const ExperimentConfig& c) {
  bool known = false;
  for (const auto& n : experiment_names()) known |= n == c.experiment;
  if (!known) throw ConfigError("run.experiment", "unknown experiment '" + c.experiment + "'");
  if (c.threads < 1) throw ConfigError("run.threads", "must be >= 1");
  if (c.seeds < 1) throw ConfigError("run.seeds", "must be >= 1");
  if (c.lambdas.empty()) {
    if (c.K < 2) throw ConfigError("spectrum.K", "must be >= 2");
    if (!(c.power > 0.0)) throw ConfigError("spectrum.power", "must be positive");
  }
  const int K = c.lambdas.empty() ? c.K : static_cast<int>(c.lambdas.size());
  if (c.N < 1 || c.N >= K) throw ConfigError("spectrum.N", "must satisfy 1 <= N < K");
  if (!(c.sigma >= 0.0 && c.sigma < 1.0)) throw ConfigError("spectrum.sigma", "must lie in [0, 1)");
  if (c.preset != "zero" && c.preset != "linear-diagonal" && c.preset != "cross-couple" && c.preset != "saturating")
    throw ConfigError("nonlinearity.preset", "unknown preset '" + c.preset + "'");
  if (c.preset == "cross-couple" && (c.from < 1 || c.from > K || c.to < 1 || c.to > K))
    throw ConfigError("nonlinearity.from", "mode indices must lie in 1..K");
  if (c.alphas.empty()) throw ConfigError("noise.alphas", "needs at least one value");
  for (double a : c.alphas)
    if (!(a > 1.0 && a <= 2.0)) throw ConfigError("noise.alphas", "alpha must lie in (1, 2], got " + fmt_double(a));
  if (!(c.alpha > 1.0 && c.alpha <= 2.0)) throw ConfigError("noise.alpha", "must lie in (1, 2], got " + fmt_double(c.alpha));
  if (!(c.mesh > 0.0)) throw ConfigError("noise.mesh", "must be positive");
  if (c.samples < 2) throw ConfigError("noise.samples", "must be >= 2");
  if (!(c.mu > 0.0 && c.mu < 1.0)) throw ConfigError("solver.mu", "must lie in (0, 1)");
  if (!(c.tol_fp > 0.0)) throw ConfigError("solver.tol_fp", "must be positive");
  if (!(c.t_minus >= 0.0)) throw ConfigError("solver.t_minus", "must be >= 0 (0 selects the default)");
  if (!(c.dt > 0.0)) throw ConfigError("solver.dt", "must be positive");
  if (!(c.T > 0.0)) throw ConfigError("solver.T", "must be positive");
  if (!(c.threshold > 0.0)) throw ConfigError("solver.threshold", "must be positive");
  if (!(c.p > 0.0 && c.p < 2.0)) throw ConfigError("solver.p", "must lie in (0, 2)");
  if (!c.x.empty() && static_cast<int>(c.x.size()) != K) throw ConfigError("manifold.x", "needs K entries");
  if (!(c.xi_min <= c.xi_max)) throw ConfigError("manifold.xi_min", "must not exceed xi_max");
  if (c.xi_points < 1) throw ConfigError("manifold.xi_points", "must be >= 1");
}

inline ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("file", e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  detail::IniReader r(pt);
  r.get("run.experiment", c.experiment);
  r.get("run.output", c.output);
  r.get("run.threads", c.threads);
  r.get("run.seed", c.seed);
  r.get("run.seeds", c.seeds);
  r.get("spectrum.lambdas", c.lambdas);
  r.get("spectrum.K", c.K);
  r.get("spectrum.power", c.power);
  r.get("spectrum.N", c.N);
  r.get("spectrum.sigma", c.sigma);
  r.get("nonlinearity.preset", c.preset);
  r.get("nonlinearity.eps", c.eps);
  r.get("nonlinearity.from", c.from);
  r.get("nonlinearity.to", c.to);
  r.get("noise.alphas", c.alphas);
  r.get("noise.alpha", c.alpha);
  r.get("noise.mesh", c.mesh);
  r.get("noise.samples", c.samples);
  r.get("solver.mu", c.mu);
  r.get("solver.tol_fp", c.tol_fp);
  r.get("solver.t_minus", c.t_minus);
  r.get("solver.dt", c.dt);
  r.get("solver.T", c.T);
  r.get("solver.threshold", c.threshold);
  r.get("solver.p", c.p);
  r.get("manifold.x", c.x);
  r.get("manifold.xi_min", c.xi_min);
  r.get("manifold.xi_max", c.xi_max);
  r.get("manifold.xi_points", c.xi_points);
  r.reject_unknown();
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Canonical text form: every key, fixed order, shortest round-trip numbers.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[run]\n"
     << "experiment = " << c.experiment << '\n'
     << "output = " << c.output << '\n'
     << "threads = " << c.threads << '\n'
     << "seed = " << c.seed << '\n'
     << "seeds = " << c.seeds << "\n\n"
     << "[spectrum]\n"
     << "lambdas = " << detail::join(c.lambdas) << '\n'
     << "K = " << c.K << '\n'
     << "power = " << fmt_double(c.power) << '\n'
     << "N = " << c.N << '\n'
     << "sigma = " << fmt_double(c.sigma) << "\n\n"
     << "[nonlinearity]\n"
     << "preset = " << c.preset << '\n'
     << "eps = " << fmt_double(c.eps) << '\n'
     << "from = " << c.from << '\n'
     << "to = " << c.to << "\n\n"
     << "[noise]\n"
     << "alphas = " << detail::join(c.alphas) << '\n'
     << "alpha = " << fmt_double(c.alpha) << '\n'
     << "mesh = " << fmt_double(c.mesh) << '\n'
     << "samples = " << c.samples << "\n\n"
     << "[solver]\n"
     << "mu = " << fmt_double(c.mu) << '\n'
     << "tol_fp = " << fmt_double(c.tol_fp) << '\n'
     << "t_minus = " << fmt_double(c.t_minus) << '\n'
     << "dt = " << fmt_double(c.dt) << '\n'
     << "T = " << fmt_double(c.T) << '\n'
     << "threshold = " << fmt_double(c.threshold) << '\n'
     << "p = " << fmt_double(c.p) << "\n\n"
     << "[manifold]\n"
     << "x = " << detail::join(c.x) << '\n'
     << "xi_min = " << fmt_double(c.xi_min) << '\n'
     << "xi_max = " << fmt_double(c.xi_max) << '\n'
     << "xi_points = " << c.xi_points << '\n';
  return os.str();
}

inline Spectrum make_spectrum(const ExperimentConfig& c) {
  if (c.lambdas.empty()) return Spectrum::power_family(c.K, c.power, c.N, c.sigma);
  try {
    return Spectrum(c.lambdas, c.N, c.sigma);
  } catch (const DomainError& e) {
    throw ConfigError("spectrum.lambdas", e.what());
  }
}

inline NonlinearityPtr make_nonlinearity(const ExperimentConfig& c, const Spectrum& spec) {
  if (c.preset == "zero") return std::make_shared<const ZeroNonlinearity>(spec.K());
  if (c.preset == "linear-diagonal") return std::make_shared<const LinearDiagonal>(spec, c.eps);
  if (c.preset == "cross-couple") return std::make_shared<const CrossCouple>(spec, c.eps, c.from, c.to);
  if (c.preset == "saturating") return std::make_shared<const Saturating>(spec, c.eps);
  throw ConfigError("nonlinearity.preset", "unknown preset '" + c.preset + "'");
}

/// 64-bit FNV-1a, used for the config hash in manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace levyim
