#pragma once

#include <cstdint>

#include "smcmc/common.hpp"

namespace smcmc {

enum class RejectionReason : std::uint8_t {
  kNone,
  kProjectionFailed,
  kReverseCheckFailed,
  kMetropolisRejected,
};

const char* to_string(RejectionReason reason);

/// Per-stage outcome counts over a run of kernel steps.
struct RejectionTally {
  std::int64_t accepted = 0;
  std::int64_t projection_failed = 0;
  std::int64_t reverse_check_failed = 0;
  std::int64_t mh_rejected = 0;

  void record(RejectionReason reason);
  std::int64_t total() const {
    return accepted + projection_failed + reverse_check_failed + mh_rejected;
  }
  /// Projection and reverse-check failures count as rejections.
  double acceptance_rate() const {
    return total() == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(total());
  }
};

/// N states on the time-k manifold plus the diagnostics of the chain that produced them.
struct ParticleCloud {
  int time_index = 0;
  StateMatrix states;
  double acceptance_rate = 0.0;
  double ess = 0.0;      // median over non-constant coordinates
  double ess_min = 0.0;  // minimum over non-constant coordinates
  Vector ess_per_coordinate;
  double wall_time = 0.0;  // seconds
  double rho = 0.0;        // proposal scale used for the retained states
  RejectionTally tally;

  int size() const { return static_cast<int>(states.rows()); }
  int dim() const { return static_cast<int>(states.cols()); }
  Vector particle(int i) const { return states.row(i).transpose(); }
};

}  // namespace smcmc
