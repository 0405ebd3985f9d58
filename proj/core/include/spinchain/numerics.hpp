#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace spinchain {

/// Gauss-Legendre nodes and weights on [lower, upper], ascending.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  static GaussLegendreRule on_interval(double lower, double upper, std::size_t count);
  std::size_t size() const { return nodes.size(); }
};

/// Neumaier compensated summation.
template <typename T>
class CompensatedSum {
 public:
  void add(T value) {
    const T t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      carry_ += (sum_ - t) + value;
    } else {
      carry_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  T value() const { return sum_ + carry_; }

 private:
  T sum_{};
  T carry_{};
};

}  // namespace spinchain
