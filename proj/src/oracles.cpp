#include "smcmc/oracles.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "smcmc/linear_noise_kernels.hpp"

namespace smcmc {

namespace {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

GaussianBelief kalman_predict(const GaussianBelief& belief, const Matrix& transition,
                              const Matrix& noise_factor) {
  return {transition * belief.mean,
          symmetrize(transition * belief.covariance * transition.transpose() +
                     noise_factor * noise_factor.transpose())};
}

GaussianBelief kalman_step(const GaussianBelief& belief, const Matrix& transition,
                           const Matrix& noise_factor, const Matrix& observation, const Vector& y,
                           const Matrix& observation_covariance) {
  const GaussianBelief predicted = kalman_predict(belief, transition, noise_factor);
  const Matrix& p = predicted.covariance;
  const Matrix innovation = observation * p * observation.transpose() + observation_covariance;
  // Eigen-directions of the innovation that are negligible against the prediction are already
  // pinned (e.g. a second degenerate update with the same y); they are left out of the inverse.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(innovation);
  const double floor = 1e-12 * std::max(1.0, p.diagonal().cwiseAbs().maxCoeff());
  Vector inverse_values = Vector::Zero(eig.eigenvalues().size());
  for (Eigen::Index i = 0; i < inverse_values.size(); ++i) {
    if (eig.eigenvalues()[i] > floor) inverse_values[i] = 1.0 / eig.eigenvalues()[i];
  }
  const Matrix innovation_inverse =
      eig.eigenvectors() * inverse_values.asDiagonal() * eig.eigenvectors().transpose();
  const Matrix gain = p * observation.transpose() * innovation_inverse;
  if (!gain.allFinite()) throw NumericalError("kalman: gain is not finite");
  const Matrix identity = Matrix::Identity(p.rows(), p.cols());
  const Matrix joseph = identity - gain * observation;
  // Joseph form keeps the degenerate posterior covariance symmetric and PSD.
  Matrix post = joseph * p * joseph.transpose() + gain * observation_covariance * gain.transpose();
  return {predicted.mean + gain * (y - observation * predicted.mean), symmetrize(post)};
}

GaussianBelief kalman_degenerate_step(const GaussianBelief& belief, const Matrix& transition,
                                      const Matrix& noise_factor, const Matrix& observation,
                                      const Vector& y) {
  const Matrix zero = Matrix::Zero(observation.rows(), observation.rows());
  return kalman_step(belief, transition, noise_factor, observation, y, zero);
}

std::vector<GaussianBelief> kalman_filter_degenerate(const ModelSpec& model,
                                                     const StateMatrix& observations) {
  require(model.linear_dynamics && model.observation_matrix,
          "kalman_filter_degenerate: model must be linear-Gaussian");
  GaussianBelief belief{model.initial_state, Matrix::Zero(model.dim_x, model.dim_x)};
  std::vector<GaussianBelief> out;
  for (Eigen::Index k = 0; k < observations.rows(); ++k) {
    belief = kalman_degenerate_step(belief, model.linear_dynamics->transition,
                                    model.linear_dynamics->noise_factor, *model.observation_matrix,
                                    observations.row(k).transpose());
    out.push_back(belief);
  }
  return out;
}

double sphere_coordinate_marginal_pdf(int d, double radius, double t) {
  require(d >= 3, "sphere_coordinate_marginal_pdf: d must be at least 3");
  require(radius > 0.0, "sphere_coordinate_marginal_pdf: radius must be positive");
  if (std::abs(t) > radius) return 0.0;
  const double u = t / radius;
  const double norm = radius * boost::math::beta(0.5, 0.5 * (d - 1));
  return std::pow(1.0 - u * u, 0.5 * (d - 3)) / norm;
}

double sphere_coordinate_marginal_cdf(int d, double radius, double t) {
  require(d >= 3, "sphere_coordinate_marginal_cdf: d must be at least 3");
  require(radius > 0.0, "sphere_coordinate_marginal_cdf: radius must be positive");
  if (t <= -radius) return 0.0;
  if (t >= radius) return 1.0;
  const double u = t / radius;
  // u^2 ~ Beta(1/2, (d-1)/2) and u is symmetric.
  const double half = 0.5 * boost::math::ibeta(0.5, 0.5 * (d - 1), u * u);
  return u >= 0.0 ? 0.5 + half : 0.5 - half;
}

Vector sample_uniform_sphere(int d, double radius, RandomStream& rng) {
  Vector g = rng.normal_vector(d);
  return radius * g / g.norm();
}

std::vector<GridMarginal> grid_filter(const ModelSpec& model, const StateMatrix& observations,
                                      const GridSpec& grid) {
  require(model.observation_matrix.has_value(), "grid_filter: observation must be linear");
  const int dz = model.dim_x - model.dim_y;
  require(dz >= 1 && dz <= 2, "grid_filter: at most two tangent dimensions are supported");
  require(grid.lower.size() == dz && grid.upper.size() == dz, "grid_filter: grid bounds have wrong size");
  require(grid.points_per_dim >= 3, "grid_filter: need at least 3 points per dimension");
  const int m = grid.points_per_dim;
  const int n_nodes = dz == 1 ? m : m * m;

  StateMatrix nodes(n_nodes, dz);
  Vector quad(n_nodes);
  Eigen::VectorXi on_boundary = Eigen::VectorXi::Zero(n_nodes);
  for (int node = 0; node < n_nodes; ++node) {
    double weight = 1.0;
    for (int axis = 0; axis < dz; ++axis) {
      const int i = axis == 0 ? node % m : node / m;
      const double h = (grid.upper[axis] - grid.lower[axis]) / (m - 1);
      nodes(node, axis) = grid.lower[axis] + i * h;
      const bool edge = i == 0 || i == m - 1;
      weight *= edge ? 0.5 * h : h;
      if (edge) on_boundary[node] = 1;
    }
    quad[node] = weight;
  }

  const Matrix& a = *model.observation_matrix;
  auto physical_nodes = [&](const Vector& y) {
    const KernelParametrization par = build_parametrization({a, y, 0.0});
    StateMatrix x(n_nodes, model.dim_x);
    for (int node = 0; node < n_nodes; ++node) {
      x.row(node) = par.map(nodes.row(node).transpose()).transpose();
    }
    return x;
  };

  // log f between every pair of nodes, via whitening when the covariance is constant.
  auto log_transition = [&](int k, const StateMatrix& from, const StateMatrix& to) {
    Matrix out(from.rows(), to.rows());
    if (model.gaussian && model.gaussian->constant_factor) {
      const Matrix& l = *model.gaussian->constant_factor;
      const auto lower = l.triangularView<Eigen::Lower>();
      const double log_norm = -l.diagonal().array().log().sum() -
                              0.5 * model.dim_x * std::log(2.0 * M_PI);
      Matrix white_from(model.dim_x, from.rows());
      for (Eigen::Index i = 0; i < from.rows(); ++i) {
        white_from.col(i) = lower.solve(model.gaussian->mean(from.row(i).transpose()));
      }
      const Matrix white_to = lower.solve(Matrix(to.transpose()));
      for (Eigen::Index i = 0; i < from.rows(); ++i) {
        for (Eigen::Index j = 0; j < to.rows(); ++j) {
          out(i, j) = log_norm - 0.5 * (white_to.col(j) - white_from.col(i)).squaredNorm();
        }
      }
      return out;
    }
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      for (Eigen::Index j = 0; j < to.rows(); ++j) {
        out(i, j) = model.transition_logpdf(k, from.row(i).transpose(), to.row(j).transpose());
      }
    }
    return out;
  };

  std::vector<GridMarginal> out;
  StateMatrix previous_nodes = model.initial_state.transpose();
  Vector previous_mass = Vector::Ones(1);
  for (Eigen::Index k = 1; k <= observations.rows(); ++k) {
    const StateMatrix current = physical_nodes(observations.row(k - 1).transpose());
    const Matrix log_f = log_transition(static_cast<int>(k), previous_nodes, current);
    // The Gram weight is constant for a linear constraint and cancels on normalization.
    const double shift = log_f.maxCoeff();
    const Vector density = (log_f.array() - shift).exp().matrix().transpose() * previous_mass;
    Vector mass = density.cwiseProduct(quad);
    const double total = mass.sum();
    if (!(total > 0.0)) throw NumericalError("grid_filter: all grid mass vanished");
    mass /= total;

    GridMarginal marginal;
    marginal.nodes = nodes;
    marginal.probabilities = mass;
    marginal.mean = current.transpose() * mass;
    const Matrix centered = current.rowwise() - marginal.mean.transpose();
    marginal.stddev =
        (centered.array().square().colwise() * mass.array()).colwise().sum().sqrt().transpose();
    for (int node = 0; node < n_nodes; ++node) {
      if (on_boundary[node]) marginal.boundary_mass += mass[node];
    }
    marginal.leaked = marginal.boundary_mass > 1e-6;
    out.push_back(marginal);

    previous_nodes = current;
    previous_mass = mass;
  }
  return out;
}

}  // namespace smcmc
