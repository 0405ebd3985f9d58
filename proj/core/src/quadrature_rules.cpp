#include <numbers>

#include "spinchain/errors.hpp"
#include "spinchain/numerics.hpp"

namespace spinchain {

GaussLegendreRule GaussLegendreRule::on_interval(double lower, double upper,
                                                 std::size_t count) {
  if (count == 0 || !(upper > lower)) {
    throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre rule needs count > 0 and upper > lower");
  }
  GaussLegendreRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const double mid = 0.5 * (upper + lower);
  const double half = 0.5 * (upper - lower);
  const auto n = static_cast<double>(count);
  const std::size_t roots = (count + 1) / 2;
  for (std::size_t i = 0; i < roots; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 1; j <= count; ++j) {
        const double p2 = p1;
        p1 = p0;
        const auto jd = static_cast<double>(j);
        p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[count - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[count - 1 - i] = half * w;
  }
  if (count % 2 == 1) rule.nodes[count / 2] = mid;
  return rule;
}

}  // namespace spinchain
