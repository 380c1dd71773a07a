#include "smcmc/linear_noise_kernels.hpp"

#include <algorithm>
#include <cmath>

namespace smcmc {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double standard_normal_logpdf(const Vector& e) {
  return -0.5 * e.squaredNorm() - 0.5 * static_cast<double>(e.size()) * kLogTwoPi;
}

/// Full QR of m^T (rows x cols, rows < cols) with the sign of Q fixed by diag(R) >= 0.
struct SignedQr {
  Matrix q;
  Matrix r;  // leading rows x rows block of R
};

SignedQr signed_qr_of_transpose(const Matrix& m) {
  const Eigen::Index rows = m.rows();
  Eigen::HouseholderQR<Matrix> qr(m.transpose());
  SignedQr out{qr.householderQ(), qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>()};
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (out.r(i, i) < 0.0) {
      out.q.col(i) *= -1.0;
      out.r.row(i) *= -1.0;
    }
  }
  return out;
}

double mixture_log_mean(const StateMatrix& previous, const ModelSpec& model, int time_index,
                        const Vector& x) {
  std::vector<double> terms(previous.rows());
  for (Eigen::Index i = 0; i < previous.rows(); ++i) {
    terms[i] = model.transition_logpdf(time_index, previous.row(i).transpose(), x);
  }
  return log_sum_exp(terms) - std::log(static_cast<double>(previous.rows()));
}

double acceptance(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

}  // namespace

void LinearObservation::validate() const {
  require(matrix.rows() >= 1 && matrix.rows() < matrix.cols(),
          "LinearObservation: need 1 <= d_y < d_x");
  require(y.size() == matrix.rows(), "LinearObservation: y has wrong length");
  require(delta >= 0.0 && std::isfinite(delta), "LinearObservation: delta must be nonnegative");
  Eigen::JacobiSVD<Matrix> svd(matrix);
  const auto& sv = svd.singularValues();
  if (!(sv.minCoeff() > 1e-12 * std::max(1.0, sv.maxCoeff()))) {
    throw SingularJacobianError("LinearObservation: observation matrix is rank deficient");
  }
}

Vector KernelParametrization::state_part(const Vector& z) const { return map(z).head(dim_x); }

Vector KernelParametrization::noise_part(const Vector& z) const {
  require(delta > 0.0, "KernelParametrization: no noise coordinates when delta = 0");
  return map(z).tail(dim_y);
}

KernelParametrization build_parametrization(const LinearObservation& obs) {
  obs.validate();
  const int dx = static_cast<int>(obs.matrix.cols());
  const int dy = static_cast<int>(obs.matrix.rows());

  const SignedQr base = signed_qr_of_transpose(obs.matrix);
  // A^T = Q1 R, so the minimum-norm solution of A z = y is Q1 R^{-T} y.
  const Vector coeffs = base.r.transpose().triangularView<Eigen::Lower>().solve(obs.y);
  KernelParametrization degenerate;
  degenerate.dim_x = dx;
  degenerate.dim_y = dy;
  degenerate.particular_solution = base.q.leftCols(dy) * coeffs;
  degenerate.basis = base.q.rightCols(dx - dy);
  if (obs.delta == 0.0) return degenerate;

  Matrix augmented(dy, dx + dy);
  augmented << obs.matrix, std::sqrt(obs.delta) * Matrix::Identity(dy, dy);
  const SignedQr noisy = signed_qr_of_transpose(augmented);
  KernelParametrization out;
  out.dim_x = dx;
  out.dim_y = dy;
  out.delta = obs.delta;
  out.particular_solution = Vector::Zero(dx + dy);
  out.particular_solution.head(dx) = degenerate.particular_solution;
  out.basis = procrustes_align(noisy.q.rightCols(dx), limit_basis(degenerate));
  return out;
}

Matrix limit_basis(const KernelParametrization& degenerate) {
  const int dx = degenerate.dim_x;
  const int dy = degenerate.dim_y;
  Matrix out = Matrix::Zero(dx + dy, dx);
  out.topLeftCorner(dx, dx - dy) = degenerate.basis;
  out.bottomRightCorner(dy, dy) = Matrix::Identity(dy, dy);
  return out;
}

Matrix procrustes_align(const Matrix& basis, const Matrix& target) {
  require(basis.rows() == target.rows() && basis.cols() == target.cols(),
          "procrustes_align: shape mismatch");
  Eigen::JacobiSVD<Matrix> svd(basis.transpose() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return basis * (svd.matrixU() * svd.matrixV().transpose());
}

double low_noise_log_target(const Vector& ztilde, const KernelParametrization& par,
                            const StateMatrix& previous, const ModelSpec& model, int time_index) {
  require(par.delta > 0.0, "low_noise_log_target: parametrization must have delta > 0");
  require(ztilde.size() == par.coordinate_dim(), "low_noise_log_target: wrong coordinate length");
  const Vector u = par.map(ztilde);
  return standard_normal_logpdf(u.tail(par.dim_y)) +
         mixture_log_mean(previous, model, time_index, u.head(par.dim_x));
}

double degenerate_log_target(const Vector& z, const KernelParametrization& par,
                             const StateMatrix& previous, const ModelSpec& model, int time_index) {
  require(par.delta == 0.0, "degenerate_log_target: parametrization must have delta = 0");
  require(z.size() == par.coordinate_dim(), "degenerate_log_target: wrong coordinate length");
  return mixture_log_mean(previous, model, time_index, par.map(z));
}

namespace {

template <typename LogTarget>
LinearStep random_walk_step(const Vector& z, double scale, RandomStream& rng, LogTarget&& target) {
  require(scale > 0.0, "random walk step: proposal scale must be positive");
  const Vector proposal = z + scale * rng.normal_vector(z.size());
  const double log_u = std::log(rng.uniform());
  LinearStep out{z, false, target(proposal) - target(z)};
  if (std::isnan(out.log_ratio)) out.log_ratio = kNegInf;
  if (log_u < out.log_ratio) {
    out.coordinates = proposal;
    out.accepted = true;
  }
  return out;
}

}  // namespace

LinearStep low_noise_step(const Vector& ztilde, const StateMatrix& previous,
                          const ModelSpec& model, int time_index,
                          const KernelParametrization& par, double proposal_scale,
                          RandomStream& rng) {
  require(par.delta > 0.0, "low_noise_step: delta = 0 requires the degenerate kernel");
  return random_walk_step(ztilde, proposal_scale, rng, [&](const Vector& z) {
    return low_noise_log_target(z, par, previous, model, time_index);
  });
}

LinearStep degenerate_step(const Vector& z, const StateMatrix& previous, const ModelSpec& model,
                           int time_index, const KernelParametrization& par,
                           double proposal_scale, RandomStream& rng) {
  return random_walk_step(z, proposal_scale, rng, [&](const Vector& c) {
    return degenerate_log_target(c, par, previous, model, time_index);
  });
}

std::vector<double> default_delta_grid() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
}

namespace {

StateMatrix previous_states(const ProbeInput& input, double delta) {
  if (input.time_index <= 1) return input.model.initial_state.transpose();
  const KernelParametrization par = build_parametrization({input.matrix, input.previous_y, delta});
  const int dz = static_cast<int>(input.matrix.cols() - input.matrix.rows());
  StateMatrix out(input.previous_ztilde.rows(), input.matrix.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Vector zt = input.previous_ztilde.row(i).transpose();
    out.row(i) = (delta > 0.0 ? par.state_part(zt) : par.map(zt.head(dz))).transpose();
  }
  return out;
}

/// log p_N(zbar) + log (1/N) sum_i f(u*_{k-1}(z_i), u*_k(z)).
double limit_log_target(const ProbeInput& input, const KernelParametrization& degenerate,
                        const StateMatrix& previous, const Vector& ztilde) {
  const int dz = degenerate.coordinate_dim();
  return standard_normal_logpdf(ztilde.tail(degenerate.dim_y)) +
         degenerate_log_target(ztilde.head(dz), degenerate, previous, input.model,
                               input.time_index);
}

void validate_probe(const ProbeInput& input) {
  const Eigen::Index dx = input.matrix.cols();
  require(input.ztilde.size() == dx && input.ztilde_proposed.size() == dx,
          "convergence_probe: z~ must have length d_x");
  if (input.time_index > 1) {
    require(input.previous_ztilde.rows() >= 1 && input.previous_ztilde.cols() == dx,
            "convergence_probe: previous particles must be N x d_x");
  }
}

}  // namespace

std::vector<ProbeRow> convergence_probe(const ProbeInput& input, const std::vector<double>& grid) {
  validate_probe(input);
  require(!grid.empty(), "convergence_probe: delta grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] > 0.0, "convergence_probe: delta values must be positive");
    require(i == 0 || grid[i] < grid[i - 1], "convergence_probe: delta grid must decrease");
  }

  const KernelParametrization degenerate = build_parametrization({input.matrix, input.current_y, 0.0});
  const StateMatrix limit_previous = previous_states(input, 0.0);
  const double limit_acc =
      acceptance(limit_log_target(input, degenerate, limit_previous, input.ztilde_proposed) -
                 limit_log_target(input, degenerate, limit_previous, input.ztilde));
  const Matrix target_basis = limit_basis(degenerate);

  std::vector<ProbeRow> rows;
  for (double delta : grid) {
    const KernelParametrization par = build_parametrization({input.matrix, input.current_y, delta});
    const StateMatrix previous = previous_states(input, delta);
    ProbeRow row;
    row.delta = delta;
    row.acceptance_delta = acceptance(
        low_noise_log_target(input.ztilde_proposed, par, previous, input.model, input.time_index) -
        low_noise_log_target(input.ztilde, par, previous, input.model, input.time_index));
    row.acceptance_limit = limit_acc;
    row.gap = std::abs(row.acceptance_delta - row.acceptance_limit);
    row.basis_distance = (par.basis - target_basis).norm();
    rows.push_back(row);
  }
  return rows;
}

FactorizedCheck factorized_limit_check(const ProbeInput& input, double proposal_scale) {
  validate_probe(input);
  require(proposal_scale > 0.0, "factorized_limit_check: proposal scale must be positive");
  const KernelParametrization degenerate = build_parametrization({input.matrix, input.current_y, 0.0});
  const StateMatrix previous = previous_states(input, 0.0);
  const int dz = degenerate.coordinate_dim();
  const int dy = degenerate.dim_y;
  const Vector& from = input.ztilde;
  const Vector& to = input.ztilde_proposed;

  // q~(a, b) = q(z_a, z_b) p_N(zbar_b) with q an isotropic Gaussian random walk.
  auto log_q_factorized = [&](const Vector& a, const Vector& b) {
    const Vector step = b.head(dz) - a.head(dz);
    return -0.5 * step.squaredNorm() / (proposal_scale * proposal_scale) -
           dz * std::log(proposal_scale) - 0.5 * dz * kLogTwoPi +
           standard_normal_logpdf(b.tail(dy));
  };
  const double limit_log_ratio = limit_log_target(input, degenerate, previous, to) -
                                 limit_log_target(input, degenerate, previous, from) +
                                 log_q_factorized(to, from) - log_q_factorized(from, to);
  const double degenerate_log_ratio =
      degenerate_log_target(to.head(dz), degenerate, previous, input.model, input.time_index) -
      degenerate_log_target(from.head(dz), degenerate, previous, input.model, input.time_index);

  FactorizedCheck out;
  out.limit_acceptance = acceptance(limit_log_ratio);
  out.degenerate_acceptance = acceptance(degenerate_log_ratio);
  out.difference = std::abs(out.limit_acceptance - out.degenerate_acceptance);
  return out;
}

}  // namespace smcmc
