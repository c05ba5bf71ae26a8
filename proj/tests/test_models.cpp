#include <cmath>

#include "doctest.h"
#include "qlsd/errors.hpp"
#include "qlsd/models.hpp"

using namespace qlsd;

namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  int k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

PotentialModel small_logistic(std::uint64_t seed = 3) {
  return make_synthetic_logistic(1.0, 1.0, 3, 3, 5, 12, 2.0, RandomStream(seed));
}

ParamVector random_theta(RandomStream& s, int d, double scale = 1.0) {
  return scale * gaussian_draw(s, d);
}

}  // namespace

TEST_CASE("gaussian component gradient vanishes at its data point") {
  Eigen::MatrixXd y(2, 2);
  y << 1, 5, 0, -2;
  const auto model = PotentialModel::gaussian({y});
  CHECK(model.grad_component(0, 1, vec({5, -2})).norm() == 0.0);
}

TEST_CASE("gaussian component gradient is theta minus y") {
  Eigen::MatrixXd y(2, 1);
  y << 1, 0;
  const auto model = PotentialModel::gaussian({y});
  const ParamVector g = model.grad_component(0, 0, vec({3, 4}));
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
}

TEST_CASE("out-of-range indices raise index errors") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 3);
  const auto model = PotentialModel::gaussian({y});
  CHECK_THROWS_AS(model.grad_component(1, 0, vec({0, 0})), IndexError);
  CHECK_THROWS_AS(model.grad_component(0, 3, vec({0, 0})), IndexError);
  CHECK_THROWS_AS(model.grad_component(0, -1, vec({0, 0})), IndexError);
  CHECK_THROWS_AS(model.grad_client(-1, vec({0, 0})), IndexError);
}

TEST_CASE("logistic component gradient matches central differences") {
  const auto model = small_logistic();
  RandomStream s(1);
  const double eps = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    const ParamVector theta = random_theta(s, model.d());
    for (int i = 0; i < model.b(); ++i) {
      for (int j = 0; j < model.client_size(i); ++j) {
        const ParamVector g = model.grad_component(i, j, theta);
        for (int k = 0; k < model.d(); ++k) {
          ParamVector tp = theta, tm = theta;
          tp[k] += eps;
          tm[k] -= eps;
          const double fd =
              (model.potential_component(i, j, tp) - model.potential_component(i, j, tm)) / (2 * eps);
          CHECK(std::abs(fd - g[k]) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("client gradient equals the exact sum of its components") {
  const auto gm = make_gaussian_dataset(3, 4, 10, 50, 1.0, RandomStream(4));
  const auto lm = small_logistic();
  RandomStream s(8);
  for (const auto* model : {&gm, &lm}) {
    const ParamVector theta = random_theta(s, model->d());
    for (int i = 0; i < model->b(); ++i) {
      ParamVector sum = ParamVector::Zero(model->d());
      for (int j = 0; j < model->client_size(i); ++j) sum += model->grad_component(i, j, theta);
      CHECK((model->grad_client(i, theta).array() == sum.array()).all());
    }
  }
}

TEST_CASE("gaussian client gradient is N_i (theta - client mean)") {
  const auto model = make_gaussian_dataset(4, 3, 5, 30, 2.0, RandomStream(5));
  RandomStream s(2);
  const ParamVector theta = random_theta(s, 3);
  for (int i = 0; i < model.b(); ++i) {
    const auto& y = model.client(i).features;
    const ParamVector mean = y.rowwise().mean();
    const ParamVector expected = y.cols() * (theta - mean);
    CHECK((model.grad_client(i, theta) - expected).norm() < 1e-10);
  }
}

TEST_CASE("gradients sum to zero at the minimizer") {
  const auto gm = make_gaussian_dataset(5, 6, 10, 40, 2.0, RandomStream(6));
  const auto lm = make_synthetic_logistic(1, 1, 10, 2, 20, 60, 1.0, RandomStream(6));
  for (const auto* model : {&gm, &lm}) {
    const ParamVector ts = minimizer(*model, 1e-9);
    ParamVector total = ParamVector::Zero(model->d());
    for (int i = 0; i < model->b(); ++i) total += model->grad_client(i, ts);
    CHECK(total.norm() < 1e-8);
  }
}

TEST_CASE("gaussian minimizer is the global observation mean") {
  const auto model = make_gaussian_dataset(3, 2, 4, 9, 1.0, RandomStream(10));
  ParamVector sum = ParamVector::Zero(2);
  for (int i = 0; i < model.b(); ++i) sum += model.client(i).features.rowwise().sum();
  CHECK((minimizer(model) - sum / model.N_total()).norm() < 1e-14);
}

TEST_CASE("gaussian minimizer with one point is that point") {
  Eigen::MatrixXd y(3, 1);
  y << 0.3, -1.7, 2.9;
  const auto model = PotentialModel::gaussian({y});
  CHECK((minimizer(model).array() == y.col(0).array()).all());
}

TEST_CASE("logistic minimizer agrees with grid search plus Newton polish") {
  Eigen::MatrixXd x(2, 4);
  x << 1.0, -0.5, 0.3, 2.0,
       0.2, 1.0, -1.5, 0.4;
  Eigen::VectorXd y(4);
  y << 1, 0, 1, 0;
  const auto model = PotentialModel::logistic({x}, {y}, 1.0);

  // Independent oracle: coarse grid, then Newton steps with the analytic Hessian.
  ParamVector best = ParamVector::Zero(2);
  double best_u = model.potential(best);
  for (double a = -4; a <= 4; a += 0.01) {
    for (double b = -4; b <= 4; b += 0.01) {
      const ParamVector t = vec({a, b});
      const double u = model.potential(t);
      if (u < best_u) {
        best_u = u;
        best = t;
      }
    }
  }
  for (int it = 0; it < 20; ++it) {
    Eigen::Matrix2d H = Eigen::Matrix2d::Identity();  // prior precision 1
    Eigen::Vector2d g = best;
    for (int j = 0; j < 4; ++j) {
      const double z = x.col(j).dot(best);
      const double sgm = 1.0 / (1.0 + std::exp(-z));
      g += (sgm - y[j]) * x.col(j);
      H += sgm * (1 - sgm) * x.col(j) * x.col(j).transpose();
    }
    best -= H.ldlt().solve(g);
  }
  const ParamVector ts = minimizer(model, 1e-10);
  CHECK(std::abs(ts[0] - best[0]) < 1e-4);
  CHECK(std::abs(ts[1] - best[1]) < 1e-4);
}

TEST_CASE("minimizer reports non-convergence") {
  const auto model = make_synthetic_logistic(1, 1, 5, 2, 20, 40, 10.0, RandomStream(1));
  CHECK_THROWS_AS(minimizer(model, 1e-12, 2), OptimizationError);
}

TEST_CASE("gaussian smoothness profile") {
  const auto model = make_gaussian_dataset(2, 3, 50, 50, 0.0, RandomStream(1));
  const auto p = smoothness_profile(model);
  CHECK(p.m == 100);
  CHECK(p.L == 100);
  CHECK(p.M_per_client == std::vector<double>{50, 50});
  CHECK(p.Mbar == 1.0);
  CHECK(p.N_total == 100);
}

TEST_CASE("logistic profile with zero features is the prior curvature") {
  const auto model = PotentialModel::logistic({Eigen::MatrixXd::Zero(2, 5)},
                                              {Eigen::VectorXd::Zero(5)}, 4.0);
  const auto p = smoothness_profile(model);
  CHECK(p.m == doctest::Approx(0.25));
  CHECK(p.L == doctest::Approx(0.25));
}

TEST_CASE("gaussian component co-coercivity holds with equality") {
  const auto model = make_gaussian_dataset(2, 4, 3, 6, 1.0, RandomStream(2));
  RandomStream s(3);
  for (int t = 0; t < 100; ++t) {
    const ParamVector a = random_theta(s, 4), b = random_theta(s, 4);
    const ParamVector dg = model.grad_component(0, 1, a) - model.grad_component(0, 1, b);
    CHECK(dg.squaredNorm() == doctest::Approx(1.0 * dg.dot(a - b)).epsilon(1e-12));
  }
}

TEST_CASE("client gradients match central differences of client potentials") {
  const auto gm = make_gaussian_dataset(2, 3, 5, 10, 1.0, RandomStream(12));
  const auto lm = small_logistic(12);
  RandomStream s(13);
  const double eps = 1e-5;
  for (const auto* model : {&gm, &lm}) {
    for (int trial = 0; trial < 10; ++trial) {
      const ParamVector theta = random_theta(s, model->d());
      for (int i = 0; i < model->b(); ++i) {
        const ParamVector g = model->grad_client(i, theta);
        for (int k = 0; k < model->d(); ++k) {
          ParamVector tp = theta, tm = theta;
          tp[k] += eps;
          tm[k] -= eps;
          const double fd = (model->potential_client(i, tp) - model->potential_client(i, tm)) / (2 * eps);
          CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
        }
      }
    }
  }
}

TEST_CASE("strong convexity, Lipschitz and per-component witnesses on random pairs") {
  const auto gm = make_gaussian_dataset(3, 3, 5, 15, 1.0, RandomStream(21));
  const auto lm = small_logistic(21);
  RandomStream s(22);
  for (const auto* model : {&gm, &lm}) {
    const auto p = smoothness_profile(*model);
    for (int t = 0; t < 1000; ++t) {
      const ParamVector a = random_theta(s, model->d(), 3.0), b = random_theta(s, model->d(), 3.0);
      const ParamVector dg = model->grad(a) - model->grad(b);
      const ParamVector dt = a - b;
      CHECK(dg.dot(dt) >= p.m * dt.squaredNorm() * (1 - 1e-12));
      CHECK(dg.norm() <= p.L * dt.norm() * (1 + 1e-12));
      const int i = t % model->b();
      const int j = t % model->client_size(i);
      const ParamVector dc = model->grad_component(i, j, a) - model->grad_component(i, j, b);
      CHECK(dc.squaredNorm() <= p.Mbar * dc.dot(dt) * (1 + 1e-12) + 1e-300);
    }
  }
}

TEST_CASE("prior shares add up to the full prior") {
  const auto model = small_logistic();
  double total = 0.0;
  for (int i = 0; i < model.b(); ++i) total += model.client_size(i) * model.prior_share(i);
  CHECK(total == doctest::Approx(1.0 / model.prior_variance()).epsilon(1e-14));
}

TEST_CASE("gaussian dataset generator shape and determinism") {
  const auto model = make_gaussian_dataset(20, 50, 10, 200, 1.0, RandomStream(99));
  CHECK(model.b() == 20);
  CHECK(model.d() == 50);
  for (int n : model.sizes()) {
    CHECK(n >= 10);
    CHECK(n <= 200);
  }
  const auto again = make_gaussian_dataset(20, 50, 10, 200, 1.0, RandomStream(99));
  for (int i = 0; i < 20; ++i) {
    CHECK((model.client(i).features.array() == again.client(i).features.array()).all());
  }
}

TEST_CASE("zero heterogeneity gives centred clients") {
  const auto model = make_gaussian_dataset(4, 3, 4000, 4000, 0.0, RandomStream(5));
  for (int i = 0; i < 4; ++i) {
    const ParamVector mean = model.client(i).features.rowwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() < 5.0 / std::sqrt(4000.0));
  }
}

TEST_CASE("generators validate their ranges") {
  CHECK_THROWS_AS(make_gaussian_dataset(2, 2, 0, 5, 1.0, RandomStream(1)), ConfigError);
  CHECK_THROWS_AS(make_gaussian_dataset(2, 2, 6, 5, 1.0, RandomStream(1)), ConfigError);
  CHECK_THROWS_AS(make_gaussian_dataset(2, 2, 1, 5, -1.0, RandomStream(1)), ConfigError);
  CHECK_THROWS_AS(make_synthetic_logistic(-1, 0, 2, 2, 1, 5, 1.0, RandomStream(1)), ConfigError);
}

TEST_CASE("synthetic logistic shape matches the d=2, b=50 configuration") {
  const auto model = make_synthetic_logistic(1, 1, 50, 2, 20, 100, 1.0, RandomStream(4));
  CHECK(model.b() == 50);
  CHECK(model.d() == 2);
  CHECK(model.kind() == ModelKind::LogisticRegression);
}

TEST_CASE("synthetic labels are mixed for most clients") {
  // With this recipe about 87% of 20-record clients see both labels (measured over 2000 seeds).
  int mixed = 0;
  const int seeds = 400;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const auto model = make_synthetic_logistic(1, 1, 1, 2, 20, 20, 1.0, RandomStream(seed));
    const double freq = model.client(0).labels.mean();
    mixed += freq > 0 && freq < 1;
  }
  CHECK(mixed / double(seeds) > 0.8);
  CHECK(mixed / double(seeds) < 0.95);
}

TEST_CASE("gaussian posterior is centred at the minimizer with variance 1/N") {
  const auto model = make_gaussian_dataset(3, 2, 10, 10, 1.0, RandomStream(2));
  const auto post = gaussian_posterior(model);
  CHECK(post.variance == doctest::Approx(1.0 / 30));
  CHECK((post.mean - minimizer(model)).norm() == 0.0);
}
