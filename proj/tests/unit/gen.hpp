#pragma once

// Small seeded generators for the property tests.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace levyim::proptest {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>()(eng_); }

  Eigen::VectorXd vector(int n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }

  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd v = vector(n);
    return v / v.norm();
  }

  /// Increasing eigenvalue list with a strict gap after position `split`.
  std::vector<double> eigenvalues(int K, int split) {
    std::vector<double> l(static_cast<std::size_t>(K));
    double cur = uniform(0.2, 2.0);
    for (int k = 0; k < K; ++k) {
      l[static_cast<std::size_t>(k)] = cur;
      cur += (k + 1 == split) ? uniform(0.5, 10.0) : uniform(0.0, 5.0);
    }
    return l;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace levyim::proptest
