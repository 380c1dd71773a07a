#pragma once

#include <span>
#include <vector>

#include "smcmc/common.hpp"
#include "smcmc/particle_cloud.hpp"

namespace smcmc {

struct EssEstimate {
  double value = 1.0;
  bool constant_chain = false;  // flagged: ESS reported as 1 by convention
};

/// Effective sample size of a scalar chain, n / (1 + 2 sum rho_t), with the
/// autocorrelation sum truncated by Geyer's initial positive sequence rule.
/// Clamped to [1, n]. Requires at least 10 values.
EssEstimate effective_sample_size(std::span<const double> chain);
double ess(std::span<const double> chain);

/// Per-coordinate ESS of a chain stored one state per row.
std::vector<EssEstimate> ess_per_coordinate(const StateMatrix& chain);

/// Fills ess / ess_min / ess_per_coordinate of a cloud. Constant (pinned)
/// coordinates are excluded from the median and minimum; if every coordinate
/// is constant both are 1. Clouds shorter than 10 report their length.
void summarize_ess(ParticleCloud& cloud);

double l2_error(const Vector& estimate, const Vector& truth);

/// Per-coordinate sample mean and standard deviation of a cloud.
Vector cloud_mean(const StateMatrix& states);
Vector cloud_std(const StateMatrix& states);

double median(std::vector<double> values);

}  // namespace smcmc
