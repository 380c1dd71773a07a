#include "smcmc/constraint_manifold.hpp"

#include <string>

namespace smcmc {

namespace {

void check_state_dim(const ConstraintSystem& sys, const Vector& x, const char* what) {
  if (x.size() != sys.dim_x()) {
    throw ContractViolation(std::string(what) + ": expected state of length " +
                            std::to_string(sys.dim_x()) + ", got " + std::to_string(x.size()));
  }
}

}  // namespace

ConstraintSystem::ConstraintSystem(int dim_x, Vector observation, ObservationMap h)
    : ConstraintSystem(dim_x, std::move(observation), std::move(h), Matrix()) {}

ConstraintSystem::ConstraintSystem(int dim_x, Vector observation, ObservationMap h, Matrix metric)
    : dim_x_(dim_x), observation_(std::move(observation)), h_(std::move(h)) {
  require(dim_x_ > 0, "ConstraintSystem: dim_x must be positive");
  require(observation_.size() > 0, "ConstraintSystem: dim_y must be positive");
  require(observation_.size() < dim_x_, "ConstraintSystem: need dim_y < dim_x");
  require(static_cast<bool>(h_.value) && static_cast<bool>(h_.jacobian),
          "ConstraintSystem: observation map needs value and jacobian");
  if (metric.size() == 0) {
    metric_ = Matrix::Identity(dim_x_, dim_x_);
    metric_factor_ = metric_;
    identity_metric_ = true;
    return;
  }
  require(metric.rows() == dim_x_ && metric.cols() == dim_x_,
          "ConstraintSystem: metric must be dim_x x dim_x");
  require((metric - metric.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, metric.cwiseAbs().maxCoeff()),
          "ConstraintSystem: metric must be symmetric");
  Eigen::LLT<Matrix> llt(metric);
  require(llt.info() == Eigen::Success, "ConstraintSystem: metric must be positive definite");
  metric_ = std::move(metric);
  metric_factor_ = llt.matrixL();
  identity_metric_ = metric_.isIdentity(0.0);
}

Vector evaluate_constraint(const ConstraintSystem& sys, const Vector& x) {
  check_state_dim(sys, x, "evaluate_constraint");
  return sys.observation() - sys.observation_map().value(x);
}

Matrix constraint_jacobian(const ConstraintSystem& sys, const Vector& x) {
  check_state_dim(sys, x, "constraint_jacobian");
  Matrix jac = -sys.observation_map().jacobian(x);
  if (jac.rows() != sys.dim_y() || jac.cols() != sys.dim_x()) {
    throw ContractViolation("constraint_jacobian: observation Jacobian has wrong shape");
  }
  return jac;
}

double constraint_violation(const ConstraintSystem& sys, const Vector& x) {
  return evaluate_constraint(sys, x).cwiseAbs().maxCoeff();
}

GramWeight gram_weight(const ConstraintSystem& sys, const Vector& x) {
  const Matrix jac = constraint_jacobian(sys, x);
  Matrix gram;
  if (sys.has_identity_metric()) {
    gram = jac * jac.transpose();
  } else {
    // J M^{-1} J^T = (L^{-1} J^T)^T (L^{-1} J^T) with M = L L^T
    const Matrix scaled =
        sys.metric_factor().triangularView<Eigen::Lower>().solve(jac.transpose());
    gram = scaled.transpose() * scaled;
  }
  Eigen::LLT<Matrix> llt(gram);
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  if (llt.info() != Eigen::Success || !diag.allFinite() || diag.minCoeff() <= 0.0 ||
      diag.minCoeff() <= 1e-12 * diag.maxCoeff()) {
    throw SingularJacobianError("Gram matrix is not positive definite at " + describe_point(x));
  }
  const double log_det = 2.0 * diag.array().log().sum();
  const double log_value = -0.5 * log_det;
  return {std::exp(log_value), log_value};
}

double log_gram_weight(const ConstraintSystem& sys, const Vector& x) {
  return gram_weight(sys, x).log_value;
}

TangentFrame tangent_frame(const ConstraintSystem& sys, const Vector& x) {
  const Matrix jac = constraint_jacobian(sys, x);
  const int dx = sys.dim_x();
  const int dy = sys.dim_y();
  Eigen::HouseholderQR<Matrix> qr(jac.transpose());
  Matrix q = qr.householderQ();
  const Matrix& packed = qr.matrixQR();
  const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
  for (int i = 0; i < dy; ++i) {
    const double r_ii = packed(i, i);
    if (!std::isfinite(r_ii) || std::abs(r_ii) <= 1e-12 * scale) {
      throw SingularJacobianError("rank-deficient constraint Jacobian at " + describe_point(x));
    }
    // Nonnegative diagonal of R.
    if (r_ii < 0.0) q.col(i) *= -1.0;
  }
  TangentFrame frame;
  frame.base_point = x;
  frame.tangent_basis = q.rightCols(dx - dy).transpose();
  frame.normal_basis = jac;
  frame.orthonormal_normals = q.leftCols(dy).transpose();
  return frame;
}

std::optional<Vector> project_to_manifold(const ConstraintSystem& sys, const Vector& base,
                                          const Vector& shift, const NewtonConfig& cfg) {
  return project_to_manifold(sys, base, shift, constraint_jacobian(sys, base), cfg);
}

std::optional<Vector> project_to_manifold(const ConstraintSystem& sys, const Vector& base,
                                          const Vector& shift, const Matrix& base_jacobian,
                                          const NewtonConfig& cfg) {
  check_state_dim(sys, base, "project_to_manifold");
  check_state_dim(sys, shift, "project_to_manifold");
  require(base_jacobian.rows() == sys.dim_y() && base_jacobian.cols() == sys.dim_x(),
          "project_to_manifold: base Jacobian has wrong shape");

  const Vector start = base + shift;
  const Matrix normals = base_jacobian.transpose();
  Vector coeffs = Vector::Zero(sys.dim_y());
  Vector x = start;
  Vector residual = evaluate_constraint(sys, x);
  double norm = residual.cwiseAbs().maxCoeff();
  int growth_streak = 0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (!std::isfinite(norm)) return std::nullopt;
    if (norm <= cfg.tolerance) return x;
    const Matrix step_matrix = constraint_jacobian(sys, x) * normals;
    Eigen::FullPivLU<Matrix> lu(step_matrix);
    if (!lu.isInvertible()) return std::nullopt;
    coeffs -= lu.solve(residual);
    x = start + normals * coeffs;
    residual = evaluate_constraint(sys, x);
    const double next = residual.cwiseAbs().maxCoeff();
    growth_streak = next > norm ? growth_streak + 1 : 0;
    norm = next;
    if (growth_streak >= cfg.divergence_window) return std::nullopt;
  }
  if (std::isfinite(norm) && norm <= cfg.tolerance) return x;
  return std::nullopt;
}

TangentNormalSplit split_tangent_normal(const TangentFrame& frame, const Vector& w) {
  require(w.size() == frame.base_point.size(), "split_tangent_normal: dimension mismatch");
  Vector tangent = frame.tangent_basis.transpose() * (frame.tangent_basis * w);
  Vector normal = w - tangent;
  return {std::move(tangent), std::move(normal)};
}

}  // namespace smcmc
