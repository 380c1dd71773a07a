#include "smcmc/models.hpp"

#include <cmath>

namespace smcmc {

namespace {

Matrix lower_cholesky(const Matrix& cov, const std::string& what) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError(what + ": covariance is not positive definite");
  return llt.matrixL();
}

/// Fills the callbacks of a model whose transition is Gaussian.
void attach_gaussian(ModelSpec& model, GaussianTransition transition) {
  model.gaussian = transition;
  model.transition_logpdf = [t = transition](int, const Vector& prev, const Vector& x) {
    const Vector mean = t.mean(prev);
    return t.constant_factor ? gaussian_logpdf(x, mean, *t.constant_factor)
                             : gaussian_logpdf(x, mean, t.covariance_factor(prev));
  };
  model.simulate_step = [t = transition](int, const Vector& prev, RandomStream& rng) {
    const Vector noise = rng.normal_vector(prev.size());
    const Matrix factor = t.constant_factor ? *t.constant_factor : t.covariance_factor(prev);
    return Vector(t.mean(prev) + factor * noise);
  };
}

void attach_linear_observation(ModelSpec& model, const Matrix& a) {
  model.observation_matrix = a;
  model.observe.value = [a](const Vector& x) { return Vector(a * x); };
  model.observe.jacobian = [a](const Vector&) { return a; };
}

void attach_linear_dynamics(ModelSpec& model, const Matrix& b, const Matrix& c) {
  model.linear_dynamics = LinearDynamics{b, c};
  GaussianTransition t;
  t.mean = [b](const Vector& prev) { return Vector(b * prev); };
  const Matrix factor = lower_cholesky(c * c.transpose(), model.name);
  t.covariance_factor = [factor](const Vector&) { return factor; };
  t.constant_factor = factor;
  attach_gaussian(model, t);
}

}  // namespace

ConstraintSystem ModelSpec::constraint(const Vector& y) const {
  return ConstraintSystem(dim_x, y, observe);
}

Vector ModelSpec::to_physical(const Vector& v) const {
  return physical_map ? Vector(*physical_map * v) : v;
}

Trajectory simulate(const ModelSpec& model, int n_steps, std::uint64_t seed) {
  require(n_steps >= 0, "simulate: n_steps must be nonnegative");
  Trajectory traj;
  traj.states.resize(n_steps + 1, model.dim_x);
  traj.observations.resize(n_steps, model.dim_y);
  Vector x = model.initial_state;
  traj.states.row(0) = x.transpose();
  for (int k = 1; k <= n_steps; ++k) {
    RandomStream rng(seed, static_cast<std::uint32_t>(k), StreamPurpose::kSimulation);
    x = model.simulate_step(k, x, rng);
    if (!x.allFinite()) {
      throw NumericalError(model.name + ": simulated state is not finite at step " +
                           std::to_string(k));
    }
    traj.states.row(k) = x.transpose();
    traj.observations.row(k - 1) = model.observe.value(x).transpose();
  }
  return traj;
}

ModelSpec lgm_spec(int dim_x, double sigma) {
  require(dim_x >= 2, "lgm_spec: dim_x must be at least 2");
  require(sigma > 0.0, "lgm_spec: sigma must be positive");
  ModelSpec model;
  model.name = "lgm";
  model.dim_x = dim_x;
  model.dim_y = 1;
  model.initial_state = Vector::Zero(dim_x);
  model.state_scale = sigma;
  const Matrix b = Matrix::Constant(dim_x, dim_x, 1.0 / dim_x);
  attach_linear_dynamics(model, b, sigma * Matrix::Identity(dim_x, dim_x));
  Matrix a = Matrix::Zero(1, dim_x);
  a(0, 0) = 1.0;
  attach_linear_observation(model, a);
  return model;
}

ModelSpec sphere_spec(int dim_x, double sigma) {
  require(dim_x >= 2, "sphere_spec: dim_x must be at least 2");
  require(sigma > 0.0, "sphere_spec: sigma must be positive");
  ModelSpec model;
  model.name = "sphere";
  model.dim_x = dim_x;
  model.dim_y = 1;
  model.initial_state = Vector::Zero(dim_x);
  model.state_scale = sigma;
  attach_linear_dynamics(model, 0.5 * Matrix::Identity(dim_x, dim_x),
                         sigma * Matrix::Identity(dim_x, dim_x));
  model.observe.value = [](const Vector& x) { return Vector::Constant(1, x.squaredNorm()); };
  model.observe.jacobian = [](const Vector& x) { return Matrix(2.0 * x.transpose()); };
  return model;
}

Vector fhn_drift(const Vector& x, const FhnParams& p) {
  Vector a(2);
  a << (x[0] - x[0] * x[0] * x[0] - x[1]) / p.epsilon, p.gamma * x[0] - x[1] + p.beta;
  return a;
}

Matrix fhn_drift_jacobian(const Vector& x, const FhnParams& p) {
  Matrix j(2, 2);
  j << (1.0 - 3.0 * x[0] * x[0]) / p.epsilon, -1.0 / p.epsilon, p.gamma, -1.0;
  return j;
}

Vector fhn_hessian_trace(const Vector& x, const FhnParams& p) {
  // Hessians of the two drift components; only d^2 a_1 / dx_1^2 is nonzero.
  Matrix h1 = Matrix::Zero(2, 2);
  h1(0, 0) = -6.0 * x[0] / p.epsilon;
  const Matrix h2 = Matrix::Zero(2, 2);
  Vector b(2);
  b << 0.0, p.sigma;
  const Matrix bbt = b * b.transpose();
  Vector out(2);
  out << (h1 * bbt).trace(), (h2 * bbt).trace();
  return out;
}

Vector fhn_mean(const Vector& x, const FhnParams& p) {
  const Vector a = fhn_drift(x, p);
  const Matrix da = fhn_drift_jacobian(x, p);
  const double d = p.delta;
  return x + d * a + 0.5 * d * d * (da * a) + 0.25 * std::pow(d, 4) * fhn_hessian_trace(x, p);
}

Matrix fhn_noise_columns(const Vector& x, const FhnParams& p) {
  Vector b(2);
  b << 0.0, p.sigma;
  const Vector da_b = fhn_drift_jacobian(x, p) * b;
  const double d = p.delta;
  Matrix g(2, 2);
  g.col(0) = std::sqrt(d) * b + 0.5 * std::pow(d, 1.5) * da_b;
  g.col(1) = 0.5 * std::pow(d, 1.5) * da_b / std::sqrt(3.0);
  return g;
}

ModelSpec fhn_spec(const FhnParams& params) {
  require(params.sigma > 0.0 && params.epsilon > 0.0 && params.delta > 0.0,
          "fhn_spec: sigma, epsilon and delta must be positive");
  ModelSpec model;
  model.name = "fhn";
  model.dim_x = 2;
  model.dim_y = 1;
  model.initial_state = Vector::Zero(2);
  model.state_scale = 1.0;

  GaussianTransition t;
  t.mean = [params](const Vector& prev) { return fhn_mean(prev, params); };
  t.covariance_factor = [params](const Vector& prev) {
    const Matrix g = fhn_noise_columns(prev, params);
    const Matrix cov = g * g.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e14) {
      throw NumericalError("fhn: transition covariance is numerically singular at " +
                           describe_point(prev));
    }
    return lower_cholesky(cov, "fhn");
  };
  attach_gaussian(model, t);
  // Sample with the scheme's own (W1, W2) columns rather than the Cholesky factor.
  model.simulate_step = [params](int, const Vector& prev, RandomStream& rng) {
    const Vector w = rng.normal_vector(2);
    return Vector(fhn_mean(prev, params) + fhn_noise_columns(prev, params) * w);
  };

  Matrix a = Matrix::Zero(1, 2);
  a(0, 0) = 1.0;
  attach_linear_observation(model, a);
  return model;
}

Matrix matern_covariance(int n, const MaternConfig& cfg) {
  require(n > 0, "matern_covariance: n must be positive");
  require(cfg.smoothness == 0.5, "matern_covariance: only smoothness 1/2 is supported");
  require(cfg.range > 0.0 && cfg.variance > 0.0 && cfg.spacing > 0.0,
          "matern_covariance: range, variance and spacing must be positive");
  const double period = n * cfg.spacing;
  Matrix cov(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double raw = std::abs(i - j) * cfg.spacing;
      const double dist = std::min(raw, period - raw);
      cov(i, j) = cfg.variance * std::exp(-dist / cfg.range);
    }
  }
  return cov;
}

namespace {

Matrix circulant(int n, std::initializer_list<std::pair<int, double>> stencil) {
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [offset, weight] : stencil) m(i, ((i + offset) % n + n) % n) += weight;
  }
  return m;
}

}  // namespace

Matrix circulant_first_difference(int n) { return circulant(n, {{-1, -1.0}, {1, 1.0}}); }

Matrix circulant_second_difference(int n) {
  return circulant(n, {{-1, 1.0}, {0, -2.0}, {1, 1.0}});
}

Matrix circulant_fourth_difference(int n) {
  return circulant(n, {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}});
}

KsOperators ks_operators(const KsParams& params) {
  require(params.dim_x >= 5, "ks_operators: dim_x must be at least 5");
  require(params.stride > 0 && params.dim_x % params.stride == 0,
          "ks_operators: dim_x must be divisible by the observation stride");
  require(params.length > 0.0 && params.gamma > 0.0, "ks_operators: invalid length or gamma");
  const int n = params.dim_x;
  KsOperators ops;
  ops.ds = params.length / n;
  ops.dt = ops.ds * ops.ds / 2.0;
  ops.implicit = (1.0 + params.gamma) * Matrix::Identity(n, n) +
                 (ops.dt / (ops.ds * ops.ds)) * circulant_second_difference(n) +
                 (ops.dt / std::pow(ops.ds, 4)) * circulant_fourth_difference(n);
  Eigen::LLT<Matrix> llt(ops.implicit);
  if (llt.info() != Eigen::Success) throw NumericalError("ks: implicit operator is not SPD");
  ops.advection = (ops.dt / (2.0 * ops.ds)) * circulant_first_difference(n);

  MaternConfig matern = params.matern;
  matern.spacing = ops.ds;
  const Matrix field_factor = lower_cholesky(matern_covariance(n, matern), "ks matern");
  ops.noise = std::sqrt(ops.dt) * field_factor;

  const int dy = n / params.stride;
  ops.observation = Matrix::Zero(dy, n);
  for (int r = 0; r < dy; ++r) ops.observation(r, r * params.stride) = 1.0;

  ops.implicit_inverse = llt.solve(Matrix::Identity(n, n));
  const Matrix scaled_noise = ops.implicit_inverse * ops.noise;
  ops.covariance = scaled_noise * scaled_noise.transpose();
  ops.covariance = 0.5 * (ops.covariance + ops.covariance.transpose());
  ops.covariance_factor = lower_cholesky(ops.covariance, "ks transition");

  ops.initial_state.resize(n);
  for (int i = 0; i < n; ++i) ops.initial_state[i] = 1.5 * std::cos(i * ops.ds / 5.0);
  return ops;
}

Vector ks_mean(const KsOperators& ops, const Vector& x_prev) {
  const Vector advected = x_prev - x_prev.cwiseProduct(ops.advection * x_prev);
  return ops.implicit_inverse * advected;
}

ModelSpec ks_spec(const KsParams& params) {
  const KsOperators ops = ks_operators(params);
  ModelSpec model;
  model.name = "ks";
  model.dim_x = params.dim_x;
  model.dim_y = params.dim_x / params.stride;
  model.initial_state = ops.initial_state;
  model.state_scale = 1.0;
  GaussianTransition t;
  t.mean = [ops](const Vector& prev) { return ks_mean(ops, prev); };
  t.covariance_factor = [f = ops.covariance_factor](const Vector&) { return f; };
  t.constant_factor = ops.covariance_factor;
  attach_gaussian(model, t);
  attach_linear_observation(model, ops.observation);
  return model;
}

Matrix ks_preconditioner_covariance(const KsOperators& ops, double observation_sd) {
  require(observation_sd > 0.0, "ks_preconditioner_covariance: observation_sd must be positive");
  const int n = static_cast<int>(ops.covariance.rows());
  const Matrix q_inv = ops.covariance.llt().solve(Matrix::Identity(n, n));
  const Matrix precision =
      q_inv + ops.observation.transpose() * ops.observation / (observation_sd * observation_sd);
  Matrix sigma = precision.llt().solve(Matrix::Identity(n, n));
  return 0.5 * (sigma + sigma.transpose());
}

ModelSpec precondition(const ModelSpec& model, const Matrix& factor) {
  require(model.gaussian.has_value(), "precondition: model must have a Gaussian transition");
  require(factor.rows() == model.dim_x && factor.cols() == model.dim_x,
          "precondition: factor has wrong shape");
  const Matrix p = factor.triangularView<Eigen::Lower>();
  const Matrix p_inv = p.triangularView<Eigen::Lower>().solve(Matrix::Identity(model.dim_x, model.dim_x));

  ModelSpec out;
  out.name = model.name;
  out.dim_x = model.dim_x;
  out.dim_y = model.dim_y;
  out.initial_state = p_inv * model.initial_state;
  out.state_scale = model.state_scale;
  out.physical_map = model.physical_map ? Matrix(*model.physical_map * p) : p;

  const GaussianTransition inner = *model.gaussian;
  GaussianTransition t;
  t.mean = [inner, p, p_inv](const Vector& v) { return Vector(p_inv * inner.mean(p * v)); };
  auto whitened_factor = [p_inv](const Matrix& l) {
    const Matrix m = p_inv * l;
    return lower_cholesky(m * m.transpose(), "precondition");
  };
  if (inner.constant_factor) {
    const Matrix f = whitened_factor(*inner.constant_factor);
    t.constant_factor = f;
    t.covariance_factor = [f](const Vector&) { return f; };
  } else {
    t.covariance_factor = [inner, p, whitened_factor](const Vector& v) {
      return whitened_factor(inner.covariance_factor(p * v));
    };
  }
  attach_gaussian(out, t);

  const ObservationMap h = model.observe;
  out.observe.value = [h, p](const Vector& v) { return h.value(p * v); };
  out.observe.jacobian = [h, p](const Vector& v) { return Matrix(h.jacobian(p * v) * p); };
  if (model.observation_matrix) out.observation_matrix = Matrix(*model.observation_matrix * p);
  return out;
}

bool is_linear_observation(const ModelSpec& model) { return model.observation_matrix.has_value(); }

}  // namespace smcmc
