#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support.hpp"
#include "roadwatch/error.hpp"
#include "roadwatch/gp.hpp"
#include "roadwatch/rng.hpp"

using namespace roadwatch;
using namespace roadwatch::testing;

namespace {

Hyperparameters hyper(double sf, std::vector<double> ls, double sn) {
  Hyperparameters h;
  h.signal_std = sf;
  h.length_scales = Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  h.noise_std = sn;
  return h;
}

// Independent log marginal likelihood: kernel entries from ard_se_kernel,
// log-determinant and solve via full-pivot LU.
double naive_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparameters& h, double jitter) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd a = x.row(i).transpose();
      Eigen::VectorXd b = x.row(j).transpose();
      k(i, j) = ard_se_kernel(std::span(a.data(), a.size()), std::span(b.data(), b.size()), h);
    }
  k.diagonal().array() += h.noise_std * h.noise_std + jitter;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
  return -0.5 * y.dot(lu.solve(y)) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2 * std::numbers::pi);
}

struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Dataset random_dataset(Engine& eng, Eigen::Index n, Eigen::Index d) {
  Dataset ds{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      ds.x(i, j) = uniform(eng, 0.0, 5.0);
      s += std::sin(ds.x(i, j) * static_cast<double>(j + 1));
    }
    ds.y[i] = s + 0.1 * standard_normal(eng);
  }
  return ds;
}

}  // namespace

TEST_CASE("ard_se_kernel: zero distance, hand value, symmetry, dimension check") {
  const Hyperparameters h = hyper(1.0, {1.0}, 0.1);
  const double zero = 0.0;
  const double one = 1.0;
  CHECK(ard_se_kernel(std::span(&zero, 1), std::span(&zero, 1), h) == 1.0);
  CHECK(ard_se_kernel(std::span(&zero, 1), std::span(&one, 1), h) == doctest::Approx(0.6065306597126334).epsilon(1e-12));

  Engine eng(5);
  const Hyperparameters h3 = hyper(1.7, {0.5, 2.0, 1.1}, 0.1);
  for (int t = 0; t < 50; ++t) {
    double a[3], b[3];
    for (int i = 0; i < 3; ++i) {
      a[i] = standard_normal(eng);
      b[i] = standard_normal(eng);
    }
    CHECK(ard_se_kernel(a, b, h3) == ard_se_kernel(b, a, h3));
    CHECK(ard_se_kernel(a, a, h3) == doctest::Approx(1.7 * 1.7));
  }
  CHECK_THROWS_AS(ard_se_kernel(std::span(&zero, 1), std::span(&zero, 1), h3), DimensionError);
}

TEST_CASE("predict: one-point training set by hand") {
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  Eigen::VectorXd y(1);
  y << 1.0;
  GpModel m = GpModel::build(x, y, hyper(1.0, {1.0}, 0.0), PriorMean::Zero);
  Prediction p = m.predict(Eigen::VectorXd::Constant(1, 1.0));
  CHECK(p.mean == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(p.std * p.std == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("predict: interpolation, prior reversion, variance bound, determinism") {
  Engine eng(11);
  Dataset ds = random_dataset(eng, 20, 2);
  GpModel exact = GpModel::build(ds.x, ds.y, hyper(1.0, {1.0, 1.0}, 1e-9));
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i)
    CHECK(std::abs(exact.predict(Eigen::VectorXd(ds.x.row(i).transpose())).mean - ds.y[i]) < 1e-6);

  const Hyperparameters h = hyper(1.3, {0.8, 1.2}, 0.2);
  GpModel m = GpModel::build(ds.x, ds.y, h);
  Eigen::VectorXd far(2);
  far << 100.0, -100.0;
  Prediction pf = m.predict(far);
  CHECK(pf.mean == doctest::Approx(ds.y.mean()).epsilon(1e-9));
  CHECK(pf.std == doctest::Approx(std::sqrt(1.3 * 1.3 + 0.2 * 0.2)).epsilon(1e-9));

  const double prior_var = 1.3 * 1.3 + 0.2 * 0.2;
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd q(2);
    q << uniform(eng, -2, 7), uniform(eng, -2, 7);
    Prediction a = m.predict(q);
    Prediction b = m.predict(q);
    CHECK(a.std * a.std <= prior_var + 1e-9);
    CHECK(a.std > 0.0);
    CHECK(a.mean == b.mean);
    CHECK(a.std == b.std);
  }
}

TEST_CASE("factorization reconstructs the regularized kernel matrix") {
  Engine eng(3);
  for (int t = 0; t < 5; ++t) {
    Dataset ds = random_dataset(eng, 60, 3);
    const Hyperparameters h = hyper(1.5, {0.7, 1.4, 2.0}, 0.05);
    GpModel m = GpModel::build(ds.x, ds.y, h);
    Eigen::MatrixXd k = kernel_matrix(ds.x, h);
    k.diagonal().array() += 0.05 * 0.05 + m.jitter();
    const Eigen::MatrixXd rebuilt = m.factor() * m.factor().transpose();
    CHECK((rebuilt - k).norm() / k.norm() < 1e-8);
  }
}

TEST_CASE("log marginal likelihood: value and gradient against independent oracles") {
  Engine eng(2024);
  for (int t = 0; t < 10; ++t) {
    Dataset ds = random_dataset(eng, 20, 3);
    ds.y.array() -= ds.y.mean();
    const Hyperparameters h = hyper(uniform(eng, 0.5, 2.0), {uniform(eng, 0.5, 3.0), uniform(eng, 0.5, 3.0),
                                                             uniform(eng, 0.5, 3.0)},
                                    uniform(eng, 0.1, 0.5));
    const LikelihoodEval ev = log_marginal_likelihood(ds.x, ds.y, h);
    CHECK(ev.value == doctest::Approx(naive_lml(ds.x, ds.y, h, ev.jitter)).epsilon(1e-10));

    const Eigen::VectorXd p = h.to_log();
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Eigen::VectorXd up = p, down = p;
      up[i] += step;
      down[i] -= step;
      const double fd = (naive_lml(ds.x, ds.y, Hyperparameters::from_log(up), ev.jitter) -
                         naive_lml(ds.x, ds.y, Hyperparameters::from_log(down), ev.jitter)) /
                        (2 * step);
      const double rel = std::abs(ev.gradient[i] - fd) / std::max({std::abs(ev.gradient[i]), std::abs(fd), 1.0});
      CHECK(rel < 1e-5);
    }
  }
}

TEST_CASE("fit recovers known hyperparameters from GP samples") {
  // n = 200 inputs on [0, 30], sampled from sigma_f = 2, l = 1, sigma_n = 0.1.
  Engine eng(424242);
  const Eigen::Index n = 200;
  Eigen::MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = uniform(eng, 0.0, 30.0);
  const Hyperparameters truth = hyper(2.0, {1.0}, 0.1);
  Eigen::MatrixXd k = kernel_matrix(x, truth);
  k.diagonal().array() += 1e-8;
  const Eigen::MatrixXd l = k.llt().matrixL();
  Eigen::VectorXd w(n), noise(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = standard_normal(eng);
    noise[i] = 0.1 * standard_normal(eng);
  }
  const Eigen::VectorXd y = l * w + noise;

  FitOptions opt;
  opt.seed = 9;
  std::vector<RestartSummary> restarts;
  GpModel m = GpModel::fit(x, y, opt, &restarts);
  const Eigen::VectorXd got = m.hyper().to_log();
  const Eigen::VectorXd want = truth.to_log();
  for (Eigen::Index i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 0.3);

  CHECK(restarts.size() == 5);
  for (const RestartSummary& r : restarts) {
    CHECK(r.final_value >= r.initial_value);
    CHECK(m.log_likelihood() >= r.initial_value - 1e-9);
  }
}

TEST_CASE("fit on constant targets shrinks the signal and predicts the constant") {
  Engine eng(8);
  Dataset ds = random_dataset(eng, 30, 2);
  ds.y.setConstant(12.5);
  GpModel m = GpModel::fit(ds.x, ds.y, {});
  CHECK(m.hyper().signal_std < 1e-2);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd q(2);
    q << uniform(eng, 0, 5), uniform(eng, 0, 5);
    CHECK(m.predict(q).mean == doctest::Approx(12.5).epsilon(1e-6));
  }
}

TEST_CASE("fit rejects bad inputs") {
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  CHECK_THROWS_AS(GpModel::fit(x, Eigen::VectorXd::Ones(1)), DimensionError);
  Eigen::MatrixXd x2(2, 1);
  x2 << 1.0, std::nan("");
  CHECK_THROWS_AS(GpModel::fit(x2, Eigen::VectorXd::Ones(2)), DimensionError);
}

TEST_CASE("kernel matrices of random inputs factorize") {
  Engine eng(99);
  for (int t = 0; t < 5; ++t) {
    Dataset ds = random_dataset(eng, 200, 2);
    // Tiny noise makes the matrix nearly singular; jitter escalation must cope.
    CHECK_NOTHROW(GpModel::build(ds.x, ds.y, hyper(1.0, {3.0, 3.0}, 1e-6)));
  }
}

TEST_CASE("model JSON keeps metadata and checks the training digest") {
  Engine eng(4);
  Dataset ds = random_dataset(eng, 25, 2);
  GpModel m = GpModel::build(ds.x, ds.y, hyper(1.1, {0.9, 1.3}, 0.2))
                  .with_sensors({SensorId{3}, SensorId{5}}, SensorId{1});
  const auto doc = m.to_json();
  GpModel back = GpModel::from_json(doc, ds.x, ds.y);
  CHECK(back.neighbor_ids() == m.neighbor_ids());
  CHECK(back.target_sensor() == SensorId{1});
  Eigen::VectorXd q(2);
  q << 1.0, 2.0;
  CHECK(back.predict(q).mean == m.predict(q).mean);
  CHECK(back.predict(q).std == m.predict(q).std);

  Eigen::VectorXd y2 = ds.y;
  y2[0] += 1e-9;
  CHECK_THROWS_AS(GpModel::from_json(doc, ds.x, y2), DimensionError);
  CHECK_THROWS_AS(m.with_sensors({SensorId{3}, SensorId{3}}, SensorId{1}), DimensionError);
  CHECK_THROWS_AS(m.with_sensors({SensorId{3}, SensorId{1}}, SensorId{1}), DimensionError);
}

TEST_CASE("select_neighbors: nearest first, ties by id, too few sensors") {
  // Sensors on equator edges with midpoints at longitudes 3, 5, 7, 9.
  std::vector<Vertex> vs;
  for (std::uint64_t i = 1; i <= 5; ++i) vs.push_back({VertexId{i}, 0.0, 2.0 * static_cast<double>(i)});
  RoadNetwork net(vs, {edge(1, 1, 2, 100, 10, 30), edge(2, 2, 3, 100, 10, 20), edge(3, 3, 4, 100, 10, 10),
                       edge(4, 4, 5, 100, 10, 40)});
  CHECK(select_neighbors(net, SensorId{30}, 1) == std::vector<SensorId>{SensorId{20}});
  CHECK(select_neighbors(net, SensorId{30}, 3) == std::vector<SensorId>{SensorId{20}, SensorId{10}, SensorId{40}});
  // 20 sits between 30 and 10 at equal distance: lower id wins
  CHECK(select_neighbors(net, SensorId{20}, 1) == std::vector<SensorId>{SensorId{10}});
  CHECK_THROWS_AS(select_neighbors(net, SensorId{20}, 4), InsufficientSensors);
  CHECK(kDefaultNeighborCount == 10);
}
