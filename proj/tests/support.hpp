#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "smcmc/constraint_manifold.hpp"
#include "smcmc/rng.hpp"

namespace smcmc::testing {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// h(x) = |x|^2, so the level set y is the sphere of radius sqrt(y).
inline ObservationMap square_norm_map() {
  return {[](const Vector& x) { return Vector::Constant(1, x.squaredNorm()); },
          [](const Vector& x) { return Matrix(2.0 * x.transpose()); }};
}

inline ObservationMap linear_map(const Matrix& a) {
  return {[a](const Vector& x) { return Vector(a * x); }, [a](const Vector&) { return a; }};
}

inline ConstraintSystem sphere_system(int d, double radius) {
  return ConstraintSystem(d, Vector::Constant(1, radius * radius), square_norm_map());
}

inline Vector uniform_on_sphere(int d, double radius, RandomStream& rng) {
  Vector x = rng.normal_vector(d);
  return radius * x / x.norm();
}

inline double angle_fraction(const Vector& x) {
  constexpr double kTwoPi = 6.283185307179586;
  double t = std::atan2(x[1], x[0]) / kTwoPi;
  return t < 0.0 ? t + 1.0 : t;
}

inline std::vector<double> column(const StateMatrix& m, int j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

}  // namespace smcmc::testing
