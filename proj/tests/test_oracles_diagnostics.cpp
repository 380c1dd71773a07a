#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

#include "smcmc/diagnostics.hpp"
#include "smcmc/oracles.hpp"
#include "smcmc/stat_tests.hpp"
#include "support.hpp"

using namespace smcmc;
using namespace smcmc::testing;

namespace {

Matrix axis_row(int d) {
  Matrix a = Matrix::Zero(1, d);
  a(0, 0) = 1.0;
  return a;
}

std::vector<double> ar1_chain(int n, double phi, std::uint64_t seed) {
  RandomStream rng(seed, 0, StreamPurpose::kTest);
  std::vector<double> out(n);
  double x = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (int i = 0; i < n; ++i) {
    x = phi * x + rng.normal();
    out[i] = x;
  }
  return out;
}

GridSpec square_grid(double half_width, int points) {
  return {Vector::Constant(2, -half_width), Vector::Constant(2, half_width), points};
}

}  // namespace

TEST(Kalman, DegeneratePosteriorPinsObservation) {
  const ModelSpec model = lgm_spec(20);
  const Trajectory traj = simulate(model, 30, 1);
  const std::vector<GaussianBelief> beliefs = kalman_filter_degenerate(model, traj.observations);
  ASSERT_EQ(beliefs.size(), 30u);
  const Matrix a = *model.observation_matrix;
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    EXPECT_NEAR((a * beliefs[k].mean)(0), traj.observations(k, 0), 1e-10);
    EXPECT_LT(std::abs((a * beliefs[k].covariance * a.transpose())(0, 0)), 1e-14);
    EXPECT_EQ(Eigen::LLT<Matrix>(beliefs[k].covariance.bottomRightCorner(19, 19)).info(), Eigen::Success);
  }
}

TEST(Kalman, AxisCasePinsFirstCoordinateExactly) {
  const GaussianBelief prior{vec({0.2, -0.1}), Matrix::Identity(2, 2)};
  const GaussianBelief post =
      kalman_degenerate_step(prior, Matrix::Identity(2, 2), Matrix::Zero(2, 2), axis_row(2), vec({0.9}));
  EXPECT_DOUBLE_EQ(post.mean[0], 0.9);
  EXPECT_DOUBLE_EQ(post.mean[1], -0.1);
  EXPECT_NEAR(post.covariance(0, 0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(post.covariance(1, 1), 1.0);
}

TEST(Kalman, RepeatedDegenerateUpdateIsIdempotent) {
  Matrix cov(3, 3);
  cov << 1.0, 0.3, 0.1, 0.3, 2.0, -0.2, 0.1, -0.2, 0.5;
  const GaussianBelief prior{vec({0.1, 0.2, 0.3}), cov};
  const Matrix a = vec({1.0, 2.0, -1.0}).transpose();
  const Matrix id = Matrix::Identity(3, 3), zero = Matrix::Zero(3, 3);
  const GaussianBelief once = kalman_degenerate_step(prior, id, zero, a, vec({0.7}));
  const GaussianBelief twice = kalman_degenerate_step(once, id, zero, a, vec({0.7}));
  EXPECT_LT((once.mean - twice.mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((once.covariance - twice.covariance).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kalman, NoisyUpdateApproachesDegenerateOne) {
  const GaussianBelief prior{vec({0.0, 0.0, 0.0}), Matrix::Identity(3, 3)};
  const Matrix b = Matrix::Constant(3, 3, 1.0 / 3.0), c = 0.2 * Matrix::Identity(3, 3);
  const GaussianBelief exact = kalman_degenerate_step(prior, b, c, axis_row(3), vec({0.4}));
  const GaussianBelief noisy = kalman_step(prior, b, c, axis_row(3), vec({0.4}), 1e-10 * Matrix::Identity(1, 1));
  EXPECT_LT((exact.mean - noisy.mean).norm(), 1e-8);
  EXPECT_LT((exact.covariance - noisy.covariance).norm(), 1e-8);
}

TEST(SphereMarginal, ThreeDimensionsIsUniform) {
  for (double t : {-1.9, -0.3, 0.0, 1.2, 1.99}) {
    EXPECT_NEAR(sphere_coordinate_marginal_pdf(3, 2.0, t), 0.25, 1e-14);
    EXPECT_NEAR(sphere_coordinate_marginal_cdf(3, 2.0, t), (t + 2.0) / 4.0, 1e-14);
  }
  EXPECT_EQ(sphere_coordinate_marginal_pdf(3, 2.0, 2.5), 0.0);
}

TEST(SphereMarginal, SymmetricAndNormalized) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto pdf = [](double t) { return sphere_coordinate_marginal_pdf(100, 2.0, t); };
  EXPECT_NEAR(Rule::integrate(pdf, -2.0, 2.0, 15, 1e-14), 1.0, 1e-8);
  for (double t : {0.1, 0.4, 1.0}) {
    EXPECT_DOUBLE_EQ(pdf(t), pdf(-t));
    EXPECT_NEAR(sphere_coordinate_marginal_cdf(100, 2.0, t),
                0.5 + Rule::integrate(pdf, 0.0, t, 15, 1e-14), 1e-10);
  }
  EXPECT_EQ(sphere_coordinate_marginal_cdf(100, 2.0, 0.0), 0.5);
}

TEST(SphereMarginal, ExactSamplerPassesKs) {
  RandomStream rng(2, 0, StreamPurpose::kTest);
  std::vector<double> first;
  for (int i = 0; i < 2000; ++i) {
    const Vector x = sample_uniform_sphere(100, 3.0, rng);
    ASSERT_NEAR(x.norm(), 3.0, 1e-12);
    first.push_back(x[0]);
  }
  const GoodnessOfFit fit = ks_one_sample(first, [](double t) { return sphere_coordinate_marginal_cdf(100, 3.0, t); });
  EXPECT_GT(fit.p_value, 0.01);
}

TEST(GridFilter, FirstStepMatchesConditionalGaussian) {
  const ModelSpec model = lgm_spec(3, 0.1);
  StateMatrix obs(1, 1);
  obs << 0.25;
  const std::vector<GridMarginal> grid = grid_filter(model, obs, square_grid(1.0, 101));
  ASSERT_EQ(grid.size(), 1u);
  EXPECT_FALSE(grid[0].leaked);
  EXPECT_NEAR(grid[0].mean[0], 0.25, 1e-12);
  EXPECT_NEAR(grid[0].mean[1], 0.0, 1e-6);
  EXPECT_NEAR(grid[0].mean[2], 0.0, 1e-6);
  EXPECT_NEAR(grid[0].stddev[1], 0.1, 1e-6);
  EXPECT_NEAR(grid[0].stddev[2], 0.1, 1e-6);
  EXPECT_NEAR(grid[0].probabilities.sum(), 1.0, 1e-12);
}

TEST(GridFilter, AgreesWithDegenerateKalman) {
  const ModelSpec model = lgm_spec(3, 0.1);
  const Trajectory traj = simulate(model, 6, 3);
  const std::vector<GridMarginal> grid = grid_filter(model, traj.observations, square_grid(1.0, 81));
  const std::vector<GaussianBelief> kalman = kalman_filter_degenerate(model, traj.observations);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_FALSE(grid[k].leaked) << "k = " << k + 1;
    const Vector kalman_sd = kalman[k].covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    EXPECT_LT((grid[k].mean - kalman[k].mean).cwiseAbs().maxCoeff(), 1e-3) << "k = " << k + 1;
    EXPECT_LT((grid[k].stddev - kalman_sd).cwiseAbs().maxCoeff(), 1e-3) << "k = " << k + 1;
  }
}

TEST(GridFilter, ConstantTransitionGivesQuadratureWeights) {
  ModelSpec flat;
  flat.name = "flat";
  flat.dim_x = 2;
  flat.dim_y = 1;
  flat.transition_logpdf = [](int, const Vector&, const Vector&) { return 0.0; };
  flat.observe = linear_map(axis_row(2));
  flat.observation_matrix = axis_row(2);
  flat.initial_state = Vector::Zero(2);
  StateMatrix obs(3, 1);
  obs << 0.1, -0.2, 0.3;
  const GridSpec spec{vec({-1.0}), vec({1.0}), 11};
  for (const GridMarginal& m : grid_filter(flat, obs, spec)) {
    // Interior nodes carry weight h and the two ends h/2, normalized: 1/10 and 1/20.
    EXPECT_NEAR(m.probabilities[0], 0.05, 1e-15);
    EXPECT_NEAR(m.probabilities[5], 0.1, 1e-15);
    EXPECT_NEAR(m.boundary_mass, 0.1, 1e-15);
    EXPECT_TRUE(m.leaked);
  }
}

TEST(GridFilter, RejectsTooManyTangentDimensions) {
  StateMatrix obs(1, 1);
  obs << 0.0;
  EXPECT_THROW(grid_filter(lgm_spec(4), obs, GridSpec{Vector::Zero(3), Vector::Ones(3), 5}), ContractViolation);
}

TEST(Ess, IidChain) {
  RandomStream rng(4, 0, StreamPurpose::kTest);
  std::vector<double> chain(10000);
  for (double& v : chain) v = rng.normal();
  const double value = ess(chain);
  EXPECT_GE(value, 8000.0);
  EXPECT_LE(value, 12000.0);
}

TEST(Ess, Ar1MatchesAnalyticValue) {
  const std::vector<double> chain = ar1_chain(100000, 0.9, 5);
  EXPECT_NEAR(ess(chain), 100000.0 / 19.0, 0.2 * 100000.0 / 19.0);
}

TEST(Ess, ConstantChainIsOneAndFlagged) {
  const std::vector<double> chain(500, 3.25);
  const EssEstimate est = effective_sample_size(chain);
  EXPECT_EQ(est.value, 1.0);
  EXPECT_TRUE(est.constant_chain);
}

TEST(Ess, InvariantUnderAffineMaps) {
  const std::vector<double> chain = ar1_chain(5000, 0.7, 6);
  RandomStream rng(6, 1, StreamPurpose::kTest);
  for (int i = 0; i < 10; ++i) {
    const double scale = std::exp(2.0 * rng.normal()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double shift = 100.0 * rng.normal();
    std::vector<double> mapped(chain.size());
    for (std::size_t j = 0; j < chain.size(); ++j) mapped[j] = scale * chain[j] + shift;
    EXPECT_NEAR(ess(mapped), ess(chain), 1e-6 * ess(chain));
  }
}

TEST(Ess, ShortChainIsContractViolation) {
  const std::vector<double> chain(5, 1.0);
  EXPECT_THROW(ess(chain), ContractViolation);
}

TEST(Ess, CloudSummaryExcludesPinnedCoordinates) {
  const std::vector<double> free = ar1_chain(2000, 0.5, 7);
  ParticleCloud cloud;
  cloud.states.resize(2000, 2);
  for (int i = 0; i < 2000; ++i) cloud.states.row(i) << 0.4, free[i];
  summarize_ess(cloud);
  EXPECT_DOUBLE_EQ(cloud.ess, ess(free));
  EXPECT_DOUBLE_EQ(cloud.ess_min, ess(free));
  EXPECT_EQ(cloud.ess_per_coordinate[0], 1.0);
}

TEST(L2Error, TrivialCases) {
  EXPECT_EQ(l2_error(vec({1.0, 2.0}), vec({1.0, 2.0})), 0.0);
  for (int d : {1, 5, 50}) {
    Vector e1 = Vector::Zero(d);
    e1[0] = 1.0;
    EXPECT_EQ(l2_error(e1, Vector::Zero(d)), 1.0);
  }
  EXPECT_THROW(l2_error(vec({1.0}), vec({1.0, 2.0})), ContractViolation);
}

TEST(CloudMoments, MeanStdMedian) {
  StateMatrix s(4, 2);
  s << 1, 0, 2, 0, 3, 0, 4, 8;
  EXPECT_TRUE(cloud_mean(s).isApprox(vec({2.5, 2.0})));
  EXPECT_NEAR(cloud_std(s)[0], std::sqrt(5.0 / 3.0), 1e-15);  // n - 1 denominator
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

namespace {

std::vector<double> fixed_a() {
  std::vector<double> out;
  for (int i = 0; i < 60; ++i) out.push_back(std::sin(0.37 * i + 0.1) * (1.0 + 0.001 * i));
  return out;
}

std::vector<double> fixed_b() {
  std::vector<double> out;
  for (int j = 0; j < 45; ++j) out.push_back(std::cos(0.53 * j) * 1.1 + 0.05);
  return out;
}

}  // namespace

// Reference values frozen from scipy.stats 1.15 (ks_1samp, ks_2samp, cramervonmises_2samp,
// scipy.special.kolmogorov) on the same deterministic samples.
TEST(StatTests, KolmogorovSurvivalMatchesReference) {
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.049485876755377876, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(2.0), 0.0006709252557796953, 1e-14);
}

TEST(StatTests, KsOneSampleMatchesReference) {
  std::vector<double> u;
  for (int i = 1; i <= 50; ++i) u.push_back(std::pow(std::fmod(i * 0.6180339887498949, 1.0), 1.3));
  const GoodnessOfFit fit = ks_one_sample(u, [](double t) { return std::clamp(t, 0.0, 1.0); });
  EXPECT_NEAR(fit.statistic, 0.11457735001615152, 1e-12);
  // scipy uses the exact finite-n law; Stephens' approximation is within 0.02.
  EXPECT_NEAR(fit.p_value, 0.49205085008242255, 0.02);
}

TEST(StatTests, KsTwoSampleMatchesReference) {
  const GoodnessOfFit fit = ks_two_sample(fixed_a(), fixed_b());
  EXPECT_NEAR(fit.statistic, 0.1388888888888889, 1e-12);
  EXPECT_NEAR(fit.p_value, 0.660636666399828, 0.02);
}

TEST(StatTests, CvmTwoSampleMatchesReference) {
  const CvmResult res = cvm_two_sample(fixed_a(), fixed_b());
  EXPECT_NEAR(res.statistic, 0.10835978835978821, 1e-12);
  EXPECT_FALSE(res.rejects_at_05());
}

TEST(StatTests, CvmDetectsShift) {
  RandomStream rng(8, 0, StreamPurpose::kTest);
  std::vector<double> a, b;
  for (int i = 0; i < 500; ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal() + 0.5);
  }
  EXPECT_TRUE(cvm_two_sample(a, b).rejects_at_01());
}
