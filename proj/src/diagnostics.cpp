#include "smcmc/diagnostics.hpp"

#include <algorithm>
#include <complex>

#include <unsupported/Eigen/FFT>

namespace smcmc {

namespace {

// Autocovariances for lags 0..n-1 via zero-padded FFT.
std::vector<double> autocovariance(std::span<const double> chain, double mean) {
  const std::size_t n = chain.size();
  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  std::vector<double> centered(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) centered[i] = chain[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, centered);
  for (auto& c : spectrum) c = std::norm(c);
  std::vector<double> acov;
  fft.inv(acov, spectrum);
  acov.resize(n);
  for (auto& a : acov) a /= static_cast<double>(n);
  return acov;
}

}  // namespace

EssEstimate effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  require(n >= 10, "effective_sample_size: chain length must be at least 10");
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);

  const auto acov = autocovariance(chain, mean);
  const double scale = std::max(1.0, std::abs(mean));
  if (!(acov[0] > 1e-26 * scale * scale)) return {1.0, true};

  // Geyer: sum consecutive pairs Gamma_m = rho_{2m} + rho_{2m+1} while positive,
  // and enforce the sequence to be non-increasing.
  double tau_sum = 0.0;  // sum_{t>=1} rho_t
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double rho_even = acov[2 * m] / acov[0];
    const double rho_odd = acov[2 * m + 1] / acov[0];
    double pair = rho_even + rho_odd;
    if (pair <= 0.0) break;
    pair = std::min(pair, previous_pair);
    previous_pair = pair;
    tau_sum += (m == 0) ? pair - 1.0 : pair;  // rho_0 = 1 is not part of the sum
  }
  const double tau = 1.0 + 2.0 * tau_sum;
  const double value = std::clamp(static_cast<double>(n) / tau, 1.0, static_cast<double>(n));
  return {value, false};
}

double ess(std::span<const double> chain) { return effective_sample_size(chain).value; }

std::vector<EssEstimate> ess_per_coordinate(const StateMatrix& chain) {
  std::vector<EssEstimate> out;
  out.reserve(static_cast<std::size_t>(chain.cols()));
  std::vector<double> column(static_cast<std::size_t>(chain.rows()));
  for (Eigen::Index j = 0; j < chain.cols(); ++j) {
    for (Eigen::Index i = 0; i < chain.rows(); ++i) column[static_cast<std::size_t>(i)] = chain(i, j);
    out.push_back(effective_sample_size(column));
  }
  return out;
}

void summarize_ess(ParticleCloud& cloud) {
  const int n = cloud.size();
  cloud.ess_per_coordinate = Vector::Constant(cloud.dim(), static_cast<double>(n));
  if (n < 10) {
    cloud.ess = cloud.ess_min = static_cast<double>(n);
    return;
  }
  const auto estimates = ess_per_coordinate(cloud.states);
  std::vector<double> moving;
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    cloud.ess_per_coordinate[static_cast<Eigen::Index>(j)] = estimates[j].value;
    if (!estimates[j].constant_chain) moving.push_back(estimates[j].value);
  }
  if (moving.empty()) {
    cloud.ess = cloud.ess_min = 1.0;
    return;
  }
  cloud.ess_min = *std::min_element(moving.begin(), moving.end());
  cloud.ess = median(std::move(moving));
}

double l2_error(const Vector& estimate, const Vector& truth) {
  require(estimate.size() == truth.size(), "l2_error: dimension mismatch");
  return (estimate - truth).norm();
}

Vector cloud_mean(const StateMatrix& states) {
  require(states.rows() > 0, "cloud_mean: empty cloud");
  return states.colwise().mean().transpose();
}

Vector cloud_std(const StateMatrix& states) {
  require(states.rows() > 1, "cloud_std: need at least two states");
  const Eigen::RowVectorXd mean = states.colwise().mean();
  const StateMatrix centered = states.rowwise() - mean;
  return (centered.array().square().colwise().sum() / static_cast<double>(states.rows() - 1))
      .sqrt()
      .transpose();
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: empty input");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace smcmc
