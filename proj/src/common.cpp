#include "smcmc/common.hpp"

#include <algorithm>
#include <sstream>

namespace smcmc {

std::string describe_point(const Vector& x) {
  std::ostringstream out;
  out.precision(6);
  out << "(";
  const Eigen::Index shown = std::min<Eigen::Index>(x.size(), 6);
  for (Eigen::Index i = 0; i < shown; ++i) {
    if (i) out << ", ";
    out << x[i];
  }
  if (shown < x.size()) out << ", ... [" << x.size() << " coords]";
  out << ")";
  return out.str();
}

double log_sum_exp(std::span<const double> values) {
  double peak = kNegInf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kNegInf) return kNegInf;
  double total = 0.0;
  for (double v : values) {
    if (v != kNegInf) total += std::exp(v - peak);
  }
  return peak + std::log(total);
}

double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& lower_factor) {
  const Vector white =
      lower_factor.triangularView<Eigen::Lower>().solve(x - mean);
  const double log_det = lower_factor.diagonal().array().log().sum();
  return -0.5 * white.squaredNorm() - log_det -
         0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI);
}

}  // namespace smcmc
