#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "levyim/errors.hpp"
#include "levyim/format.hpp"

namespace levyim {

enum class PathKind { piecewise_constant, piecewise_linear };

inline const char* to_string(PathKind kind) {
  return kind == PathKind::piecewise_constant ? "piecewise-constant" : "piecewise-linear";
}

/// Real path on a strictly increasing time grid. Piecewise-constant paths are
/// right-continuous (value at the largest grid point <= t); piecewise-linear
/// paths interpolate. Evaluation outside [t_min, t_max] throws RangeError.
class CadlagPath {
 public:
  CadlagPath() = default;

  CadlagPath(std::vector<double> times, std::vector<double> values, PathKind kind)
      : times_(std::move(times)), values_(std::move(values)), kind_(kind) {
    if (times_.empty() || times_.size() != values_.size())
      throw ContractViolation("CadlagPath: times and values must be non-empty and of equal length");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw ContractViolation("CadlagPath: times must be strictly increasing");
  }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  PathKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return times_.size(); }
  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }
  bool covers(double a, double b) const { return !empty() && a >= t_min() && b <= t_max(); }
  bool empty() const noexcept { return times_.empty(); }

  /// Index of the largest grid point <= t (t must be in range).
  std::size_t locate(double t) const {
    check(t);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin()) - 1;
  }

  double operator()(double t) const {
    const std::size_t i = locate(t);
    if (kind_ == PathKind::piecewise_constant || i + 1 == times_.size()) return values_[i];
    const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    return values_[i] + w * (values_[i + 1] - values_[i]);
  }

  /// Left limit p(t-); equals p(t) at t_min and everywhere for linear paths.
  double left_limit(double t) const {
    check(t);
    if (kind_ == PathKind::piecewise_linear || t == t_min()) return (*this)(t);
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

  /// Grid points where a piecewise-constant path changes value.
  std::vector<double> jump_times() const {
    std::vector<double> out;
    if (kind_ != PathKind::piecewise_constant) return out;
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (values_[i] != values_[i - 1]) out.push_back(times_[i]);
    return out;
  }

  bool is_nondecreasing() const {
    return std::is_sorted(values_.begin(), values_.end());
  }

 private:
  void check(double t) const {
    if (empty()) throw RangeError("CadlagPath: empty path");
    if (t < t_min()) throw RangeError("CadlagPath: t below horizon", t_min() - t);
    if (t > t_max()) throw RangeError("CadlagPath: t above horizon", t - t_max());
  }

  std::vector<double> times_;
  std::vector<double> values_;
  PathKind kind_ = PathKind::piecewise_constant;
};

/// Metric-dynamical-system shift: (theta_t p)(s) = p(t + s) - p(t).
/// The returned grid is the input grid translated by -t, with 0 inserted when
/// t is not already a grid point.
inline CadlagPath shift(const CadlagPath& path, double t) {
  if (!path.covers(t, t)) throw RangeError("shift: t outside the stored horizon");
  const double base = path(t);
  std::vector<double> times;
  std::vector<double> values;
  times.reserve(path.size() + 1);
  values.reserve(path.size() + 1);
  bool inserted = false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double tau = path.times()[i];
    if (!inserted && tau > t) {
      times.push_back(0.0);
      values.push_back(0.0);
      inserted = true;
    }
    if (tau == t) inserted = true;
    times.push_back(tau - t);
    values.push_back(tau == t ? 0.0 : path.values()[i] - base);
  }
  return CadlagPath(std::move(times), std::move(values), path.kind());
}

struct PathMeta {
  std::string label;
  double alpha = 2.0;
  unsigned long long seed = 0;
  double mesh = 0.0;
};

/// CSV with a one-line header comment, then `t,value`.
inline void write_csv(std::ostream& os, const CadlagPath& path, const PathMeta& meta) {
  os << "# " << meta.label << " kind=" << to_string(path.kind()) << " alpha=" << fmt_double(meta.alpha)
     << " seed=" << meta.seed << " mesh=" << fmt_double(meta.mesh) << '\n';
  os << "t,value\n";
  for (std::size_t i = 0; i < path.size(); ++i)
    os << fmt_double(path.times()[i]) << ',' << fmt_double(path.values()[i]) << '\n';
}

}  // namespace levyim
