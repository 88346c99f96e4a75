#pragma once

// Distances between cadlag paths (uniform, Skorokhod J1 upper bounds) and the
// weighted sup norm of backward histories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "levyim/cadlag_path.hpp"
#include "levyim/errors.hpp"
#include "levyim/format.hpp"
#include "levyim/manifold.hpp"

namespace levyim {

namespace detail {

inline void check_window(const CadlagPath& p, double a, double b, const char* who) {
  if (!(a <= b)) throw RangeError(std::string(who) + ": empty window");
  if (p.empty() || a < p.t_min()) throw RangeError(std::string(who) + ": window starts before the path", p.empty() ? 0.0 : p.t_min() - a);
  if (b > p.t_max()) throw RangeError(std::string(who) + ": window ends after the path", b - p.t_max());
}

inline void grid_points(const CadlagPath& p, double a, double b, std::vector<double>& out) {
  const auto& ts = p.times();
  auto lo = std::lower_bound(ts.begin(), ts.end(), a);
  auto hi = std::upper_bound(ts.begin(), ts.end(), b);
  out.insert(out.end(), lo, hi);
}

inline void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

/// sup_{t in [a, b]} |p1(t) - p2(t)|, over the union of both grids with left limits.
inline double uniform_distance(const CadlagPath& p1, const CadlagPath& p2, double a, double b) {
  detail::check_window(p1, a, b, "uniform_distance");
  detail::check_window(p2, a, b, "uniform_distance");
  std::vector<double> pts{a, b};
  detail::grid_points(p1, a, b, pts);
  detail::grid_points(p2, a, b, pts);
  detail::sort_unique(pts);
  double sup = 0.0;
  for (double t : pts) {
    sup = std::max(sup, std::abs(p1(t) - p2(t)));
    if (t > a) sup = std::max(sup, std::abs(p1.left_limit(t) - p2.left_limit(t)));
  }
  return sup;
}

/// Piecewise-linear increasing bijection of [a, b] through the given knots.
struct TimeChange {
  std::vector<std::pair<double, double>> knots;  ///< (t, lambda(t)), including both ends

  double operator()(double t) const { return interp(t, false); }
  double inverse(double s) const { return interp(s, true); }

  /// sup |log slope| over the pieces.
  double log_slope_sup() const {
    double out = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      const double slope = (knots[i + 1].second - knots[i].second) / (knots[i + 1].first - knots[i].first);
      out = std::max(out, std::abs(std::log(slope)));
    }
    return out;
  }

  std::string describe() const {
    if (knots.size() == 2) return "identity";
    std::string s;
    for (std::size_t i = 1; i + 1 < knots.size(); ++i) {
      if (!s.empty()) s += "; ";
      s += fmt_double(knots[i].first) + "->" + fmt_double(knots[i].second);
    }
    return s;
  }

 private:
  double interp(double x, bool inv) const {
    auto key = [inv](const std::pair<double, double>& k) { return inv ? k.second : k.first; };
    auto val = [inv](const std::pair<double, double>& k) { return inv ? k.first : k.second; };
    if (x <= key(knots.front())) return val(knots.front());
    if (x >= key(knots.back())) return val(knots.back());
    std::size_t i = 0;
    while (key(knots[i + 1]) < x) ++i;
    const double w = (x - key(knots[i])) / (key(knots[i + 1]) - key(knots[i]));
    return val(knots[i]) + w * (val(knots[i + 1]) - val(knots[i]));
  }
};

/// sup_t |p1(t) - p2(lambda(t))| + sup |log slope of lambda| on [a, b].
inline double j1_objective(const CadlagPath& p1, const CadlagPath& p2, const TimeChange& lam, double a, double b) {
  std::vector<double> pts{a, b};
  detail::grid_points(p1, a, b, pts);
  std::vector<double> q;
  detail::grid_points(p2, a, b, q);
  for (double s : q) pts.push_back(std::clamp(lam.inverse(s), a, b));
  for (const auto& k : lam.knots) pts.push_back(k.first);
  detail::sort_unique(pts);
  double sup = 0.0;
  for (double t : pts) {
    const double s = std::clamp(lam(t), a, b);
    sup = std::max(sup, std::abs(p1(t) - p2(s)));
    if (t > a) sup = std::max(sup, std::abs(p1.left_limit(t) - p2.left_limit(s)));
  }
  return sup + lam.log_slope_sup();
}

struct PathDistanceReport {
  double d_uniform = 0.0;
  double d_j1_upper = 0.0;
  std::string lambda_used = "identity";
  std::size_t candidates = 0;  ///< time changes evaluated
  bool exhausted = false;      ///< budget ran out before the enumeration finished
};

inline void to_json(nlohmann::json& j, const PathDistanceReport& r) {
  j = nlohmann::json{{"d_uniform", r.d_uniform},
                     {"d_j1_upper", r.d_j1_upper},
                     {"lambda_used", r.lambda_used},
                     {"candidates", r.candidates},
                     {"exhausted", r.exhausted}};
}

/// Upper bound on d_J1(p1, p2) over [a, b]: best objective among time changes
/// whose knots send jumps of p1 to jumps of p2. Candidates are tried in a fixed
/// order (identity, in-order matching, nearest matching, then depth-first
/// enumeration of order-preserving matchings), at most `budget` of them.
inline PathDistanceReport j1_distance_upper(const CadlagPath& p1, const CadlagPath& p2, double a, double b,
                                            std::size_t budget = 10000) {
  detail::check_window(p1, a, b, "j1_distance_upper");
  detail::check_window(p2, a, b, "j1_distance_upper");
  PathDistanceReport rep;
  rep.d_uniform = uniform_distance(p1, p2, a, b);
  rep.d_j1_upper = std::numeric_limits<double>::infinity();

  auto interior = [a, b](std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [a, b](double t) { return !(t > a && t < b); }), v.end());
    return v;
  };
  const std::vector<double> j1 = interior(p1.jump_times());
  const std::vector<double> j2 = interior(p2.jump_times());

  budget = std::max<std::size_t>(budget, 1);
  auto try_match = [&](const std::vector<std::pair<std::size_t, std::size_t>>& m) -> bool {
    if (rep.candidates >= budget) {
      rep.exhausted = true;
      return false;
    }
    TimeChange lam;
    lam.knots.emplace_back(a, a);
    for (const auto& [i, j] : m) lam.knots.emplace_back(j1[i], j2[j]);
    lam.knots.emplace_back(b, b);
    ++rep.candidates;
    const double v = j1_objective(p1, p2, lam, a, b);
    if (v < rep.d_j1_upper) {
      rep.d_j1_upper = v;
      rep.lambda_used = lam.describe();
    }
    return true;
  };

  if (!try_match({})) return rep;
  if (j1.empty() || j2.empty()) return rep;

  std::vector<std::pair<std::size_t, std::size_t>> in_order;
  for (std::size_t i = 0; i < std::min(j1.size(), j2.size()); ++i) in_order.emplace_back(i, i);
  if (!try_match(in_order)) return rep;

  std::vector<std::pair<std::size_t, std::size_t>> nearest;
  std::size_t next_j = 0;
  for (std::size_t i = 0; i < j1.size() && next_j < j2.size(); ++i) {
    auto it = std::lower_bound(j2.begin() + static_cast<std::ptrdiff_t>(next_j), j2.end(), j1[i]);
    std::size_t j = static_cast<std::size_t>(it - j2.begin());
    if (j > next_j && (j == j2.size() || j1[i] - j2[j - 1] < j2[j] - j1[i])) --j;
    if (j >= j2.size()) break;
    nearest.emplace_back(i, j);
    next_j = j + 1;
  }
  if (!try_match(nearest)) return rep;

  std::vector<std::pair<std::size_t, std::size_t>> cur;
  bool stop = false;
  std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t i, std::size_t j0) {
    if (stop) return;
    if (i == j1.size()) {
      if (!cur.empty() && !try_match(cur)) stop = true;
      return;
    }
    for (std::size_t j = j0; j < j2.size() && !stop; ++j) {
      cur.emplace_back(i, j);
      dfs(i + 1, j + 1);
      cur.pop_back();
    }
    dfs(i + 1, j0);
  };
  dfs(0, 0);
  return rep;
}

/// sup over the grid of e^{beta s - Z(s)} ||u(s)||_sigma.
inline double weighted_history_norm(const HistoryFn& h) {
  if (h.weight_path.size() != h.grid.size() || h.states.size() != h.grid.size() || h.norm_weights.size() == 0)
    throw ContractViolation("weighted_history_norm: history has no weight data");
  double out = 0.0;
  for (std::size_t i = 0; i < h.grid.size(); ++i)
    out = std::max(out, std::exp(h.beta * h.grid[i] - h.weight_path[i]) * h.states[i].cwiseProduct(h.norm_weights).norm());
  return out;
}

}  // namespace levyim
