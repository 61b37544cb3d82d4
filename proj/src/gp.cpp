#include "roadwatch/gp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <set>
#include <sstream>

#include "roadwatch/error.hpp"
#include "roadwatch/rng.hpp"

namespace roadwatch {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

struct Factorization {
  Eigen::MatrixXd lower;
  Eigen::VectorXd alpha;
  double log_det = 0.0;
};

std::optional<Factorization> factorize(const Eigen::MatrixXd& k_noisy, const Eigen::VectorXd& y) {
  Eigen::LLT<Eigen::MatrixXd> llt(k_noisy);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Factorization f;
  f.lower = llt.matrixL();
  const Eigen::VectorXd diag = f.lower.diagonal();
  if (!diag.allFinite() || (diag.array() <= 0.0).any()) return std::nullopt;
  f.alpha = llt.solve(y);
  if (!f.alpha.allFinite()) return std::nullopt;
  f.log_det = 2.0 * diag.array().log().sum();
  return f;
}

double column_scale(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 1.0;
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  return sd > 1e-12 ? sd : 1.0;
}

struct LogBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

}  // namespace

void Hyperparameters::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(signal_std) || !(std::isfinite(noise_std) && noise_std >= 0.0))
    throw DimensionError("signal_std must be positive and noise_std non-negative");
  for (Eigen::Index i = 0; i < length_scales.size(); ++i)
    if (!positive(length_scales[i])) throw DimensionError("length scales must be positive");
}

Eigen::VectorXd Hyperparameters::to_log() const {
  const Eigen::Index d = length_scales.size();
  Eigen::VectorXd p(d + 2);
  p.head(d) = length_scales.array().log();
  p[d] = std::log(signal_std);
  p[d + 1] = std::log(noise_std);
  return p;
}

Hyperparameters Hyperparameters::from_log(const Eigen::VectorXd& log_params) {
  const Eigen::Index d = log_params.size() - 2;
  Hyperparameters h;
  h.length_scales = log_params.head(d).array().exp();
  h.signal_std = std::exp(log_params[d]);
  h.noise_std = std::exp(log_params[d + 1]);
  return h;
}

double ard_se_kernel(std::span<const double> x, std::span<const double> x_prime, const Hyperparameters& hyper) {
  if (x.size() != hyper.dimension() || x_prime.size() != hyper.dimension()) {
    std::ostringstream os;
    os << "kernel inputs of size " << x.size() << " and " << x_prime.size() << ", expected "
       << hyper.dimension();
    throw DimensionError(os.str());
  }
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (x[i] - x_prime[i]) / hyper.length_scales[static_cast<Eigen::Index>(i)];
    r2 += u * u;
  }
  return hyper.signal_std * hyper.signal_std * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& inputs, const Hyperparameters& hyper) {
  if (static_cast<std::size_t>(inputs.cols()) != hyper.dimension())
    throw DimensionError("input columns do not match the number of length scales");
  const Eigen::Index n = inputs.rows();
  const Eigen::MatrixXd scaled = inputs.array().rowwise() / hyper.length_scales.transpose().array();
  const double sf2 = hyper.signal_std * hyper.signal_std;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = sf2;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = sf2 * std::exp(-0.5 * (scaled.row(i) - scaled.row(j)).squaredNorm());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

std::optional<LikelihoodEval> log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                                                      const Eigen::VectorXd& targets,
                                                      const Hyperparameters& hyper, double jitter) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  const Eigen::MatrixXd kf = kernel_matrix(inputs, hyper);
  const double noise_var = hyper.noise_std * hyper.noise_std;
  Eigen::MatrixXd ky = kf;
  ky.diagonal().array() += noise_var + jitter;

  auto f = factorize(ky, targets);
  if (!f) return std::nullopt;

  LikelihoodEval out;
  out.jitter = jitter;
  out.value = -0.5 * targets.dot(f->alpha) - 0.5 * f->log_det -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
  Eigen::MatrixXd k_inv = Eigen::MatrixXd::Identity(n, n);
  f->lower.triangularView<Eigen::Lower>().solveInPlace(k_inv);
  f->lower.triangularView<Eigen::Lower>().transpose().solveInPlace(k_inv);
  const Eigen::MatrixXd w = f->alpha * f->alpha.transpose() - k_inv;
  const Eigen::MatrixXd wk = w.cwiseProduct(kf);

  out.gradient.resize(d + 2);
  for (Eigen::Index dim = 0; dim < d; ++dim) {
    const double l2 = hyper.length_scales[dim] * hyper.length_scales[dim];
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        const double diff = inputs(i, dim) - inputs(j, dim);
        acc += wk(i, j) * diff * diff;
      }
    // Symmetric off-diagonal pairs counted once above, hence no factor 1/2.
    out.gradient[dim] = acc / l2;
  }
  out.gradient[d] = wk.sum();
  out.gradient[d + 1] = noise_var * w.trace();
  if (!std::isfinite(out.value) || !out.gradient.allFinite()) return std::nullopt;
  return out;
}

LikelihoodEval log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                       const Hyperparameters& hyper) {
  for (double jitter : kJitterSchedule)
    if (auto r = log_marginal_likelihood(inputs, targets, hyper, jitter)) return *r;
  throw IllConditioned("kernel matrix not positive definite after jitter escalation to 1e-2");
}

DataDigest digest(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) mix(inputs(i, j));
    mix(targets[i]);
  }
  return {static_cast<std::size_t>(inputs.rows()), h};
}

GpModel GpModel::build(Eigen::MatrixXd inputs, Eigen::VectorXd targets, Hyperparameters hyper,
                       PriorMean prior_mean) {
  hyper.validate();
  if (inputs.rows() != targets.size()) throw DimensionError("inputs and targets differ in row count");
  if (static_cast<std::size_t>(inputs.cols()) != hyper.dimension())
    throw DimensionError("input columns do not match the number of length scales");
  if (inputs.rows() < 1) throw DimensionError("at least one training row is required");
  if (static_cast<std::size_t>(inputs.rows()) > kMaxTrainingRows)
    throw DimensionError("training set exceeds 2016 rows");
  if (!all_finite(inputs) || !targets.allFinite()) throw DimensionError("non-finite training data");

  GpModel m;
  m.digest_ = digest(inputs, targets);
  m.prior_mean_ = prior_mean;
  m.target_mean_ = prior_mean == PriorMean::TrainingMean ? targets.mean() : 0.0;
  m.targets_ = targets.array() - m.target_mean_;
  m.inputs_ = std::move(inputs);
  m.hyper_ = std::move(hyper);

  Eigen::MatrixXd k = kernel_matrix(m.inputs_, m.hyper_);
  k.diagonal().array() += m.hyper_.noise_std * m.hyper_.noise_std;
  for (double jitter : kJitterSchedule) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    if (auto f = factorize(kj, m.targets_)) {
      m.factor_ = std::move(f->lower);
      m.alpha_ = std::move(f->alpha);
      m.jitter_ = jitter;
      m.log_likelihood_ = -0.5 * m.targets_.dot(m.alpha_) - 0.5 * f->log_det -
                          0.5 * static_cast<double>(m.targets_.size()) * std::log(2.0 * std::numbers::pi);
      return m;
    }
  }
  throw IllConditioned("kernel matrix not positive definite after jitter escalation to 1e-2");
}

GpModel GpModel::fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const FitOptions& options,
                     std::vector<RestartSummary>* diagnostics) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  if (n < 2) throw DimensionError("fit needs at least two training rows");
  if (targets.size() != n) throw DimensionError("inputs and targets differ in row count");
  if (!all_finite(inputs) || !targets.allFinite()) throw DimensionError("non-finite training data");
  if (options.restarts < 1) throw DimensionError("fit needs at least one restart");

  const double mean = options.prior_mean == PriorMean::TrainingMean ? targets.mean() : 0.0;
  const Eigen::VectorXd centered = targets.array() - mean;

  // Box constraints in log space, relative to the data scale.
  const double sy = column_scale(centered);
  LogBounds bounds{Eigen::VectorXd(d + 2), Eigen::VectorXd(d + 2)};
  Eigen::VectorXd col_scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    col_scale[j] = column_scale(inputs.col(j));
    bounds.lo[j] = std::log(1e-2 * col_scale[j]);
    bounds.hi[j] = std::log(1e2 * col_scale[j]);
  }
  bounds.lo[d] = std::log(1e-3 * sy);
  bounds.hi[d] = std::log(1e2 * sy);
  bounds.lo[d + 1] = std::log(1e-3 * sy);
  bounds.hi[d + 1] = std::log(1e1 * sy);
  auto project = [&bounds](Eigen::VectorXd p) {
    return Eigen::VectorXd(p.cwiseMax(bounds.lo).cwiseMin(bounds.hi));
  };
  auto evaluate = [&](const Eigen::VectorXd& p) -> std::optional<LikelihoodEval> {
    const Hyperparameters h = Hyperparameters::from_log(p);
    for (double jitter : kJitterSchedule)
      if (auto r = log_marginal_likelihood(inputs, centered, h, jitter)) return r;
    return std::nullopt;
  };

  Engine eng(derive_seed(options.seed, "gp-fit"));
  std::optional<Eigen::VectorXd> best;
  double best_value = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd p(d + 2);
    for (Eigen::Index j = 0; j < d; ++j) p[j] = std::log(col_scale[j]) + uniform(eng, -1.0, 1.0);
    p[d] = std::log(sy) + uniform(eng, -1.0, 1.0);
    p[d + 1] = std::log(sy) + uniform(eng, std::log(0.01), std::log(0.5));
    p = project(p);

    auto current = evaluate(p);
    if (!current) continue;
    RestartSummary summary{p, current->value, current->value, 0};

    // Quasi-Newton ascent: BFGS inverse-curvature estimate for the direction,
    // backtracking halving on the step. The first direction is the gradient,
    // capped per coordinate at `initial_step`.
    const Eigen::Index m = d + 2;
    const double first = options.initial_step / std::max(1.0, current->gradient.cwiseAbs().maxCoeff());
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(m, m) * first;
    for (int it = 0; it < options.max_iterations; ++it) {
      summary.iterations = it + 1;
      const Eigen::VectorXd g = current->gradient;
      Eigen::VectorXd dir = h_inv * g;
      if (!(g.dot(dir) > 0.0)) {
        h_inv = Eigen::MatrixXd::Identity(m, m) * first;
        dir = h_inv * g;
      }
      // Keep any single move within a factor of e^2 in parameter space.
      const double longest = dir.cwiseAbs().maxCoeff();
      if (longest > 2.0) dir *= 2.0 / longest;

      bool accepted = false;
      double gain = 0.0;
      for (double t = 1.0; t > 1e-10; t *= 0.5) {
        const Eigen::VectorXd trial = project(p + t * dir);
        auto next = evaluate(trial);
        if (next && next->value > current->value) {
          gain = next->value - current->value;
          const Eigen::VectorXd sv = trial - p;
          const Eigen::VectorXd yv = g - next->gradient;  // curvature of -LML
          const double sy = sv.dot(yv);
          if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(m, m) - rho * sv * yv.transpose();
            h_inv = left * h_inv * left.transpose() + rho * sv * sv.transpose();
          }
          p = trial;
          current = std::move(next);
          accepted = true;
          break;
        }
      }
      if (!accepted || gain < options.tolerance) break;
    }
    summary.final_value = current->value;
    if (diagnostics) diagnostics->push_back(summary);
    if (current->value > best_value) {
      best_value = current->value;
      best = p;
    }
  }
  if (!best) throw IllConditioned("no restart produced a positive-definite kernel matrix");
  return build(std::move(inputs), std::move(targets), Hyperparameters::from_log(*best), options.prior_mean);
}

Prediction GpModel::predict(std::span<const double> x) const {
  if (x.size() != hyper_.dimension()) throw DimensionError("prediction input has the wrong dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw DimensionError("non-finite prediction input");

  const Eigen::Index n = inputs_.rows();
  Eigen::VectorXd k_star(n);
  const Eigen::Map<const Eigen::RowVectorXd> xs(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::RowVectorXd inv_l = hyper_.length_scales.transpose().array().inverse();
  const double sf2 = hyper_.signal_std * hyper_.signal_std;
  for (Eigen::Index i = 0; i < n; ++i)
    k_star[i] = sf2 * std::exp(-0.5 * ((inputs_.row(i) - xs).cwiseProduct(inv_l)).squaredNorm());

  Prediction p;
  p.mean = k_star.dot(alpha_) + target_mean_;
  const Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>().solve(k_star);
  const double var = sf2 + hyper_.noise_std * hyper_.noise_std - v.squaredNorm();
  p.std = std::sqrt(std::max(var, std::numeric_limits<double>::min()));
  return p;
}

GpModel GpModel::with_sensors(std::vector<SensorId> neighbors, SensorId target) const {
  if (neighbors.size() != hyper_.dimension())
    throw DimensionError("neighbor count must equal the input dimension");
  std::set<SensorId> seen;
  for (SensorId s : neighbors) {
    if (s == target) throw DimensionError("neighbor set contains the target sensor");
    if (!seen.insert(s).second) throw DimensionError("duplicate neighbor sensor");
  }
  GpModel m = *this;
  m.neighbors_ = std::move(neighbors);
  m.target_ = target;
  return m;
}

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

nlohmann::json GpModel::to_json() const {
  nlohmann::json neighbors = nlohmann::json::array();
  for (SensorId s : neighbors_) neighbors.push_back(s.value);
  std::vector<double> ls(hyper_.length_scales.data(), hyper_.length_scales.data() + hyper_.length_scales.size());
  nlohmann::json j{
      {"neighbors", neighbors},
      {"signal_std", hyper_.signal_std},
      {"length_scales", ls},
      {"noise_std", hyper_.noise_std},
      {"target_mean", target_mean_},
      {"prior_mean", prior_mean_ == PriorMean::TrainingMean ? "training_mean" : "zero"},
      {"log_marginal_likelihood", log_likelihood_},
      {"training_digest", {{"rows", digest_.rows}, {"checksum", hex64(digest_.checksum)}}},
  };
  j["target_sensor"] = target_ ? nlohmann::json(target_->value) : nlohmann::json(nullptr);
  return j;
}

GpModel GpModel::from_json(const nlohmann::json& doc, Eigen::MatrixXd inputs, Eigen::VectorXd targets) {
  try {
    Hyperparameters h;
    h.signal_std = doc.at("signal_std").get<double>();
    h.noise_std = doc.at("noise_std").get<double>();
    const auto ls = doc.at("length_scales").get<std::vector<double>>();
    h.length_scales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    const PriorMean pm = doc.at("prior_mean").get<std::string>() == "zero" ? PriorMean::Zero : PriorMean::TrainingMean;

    const DataDigest supplied = digest(inputs, targets);
    const auto& dj = doc.at("training_digest");
    if (supplied.rows != dj.at("rows").get<std::size_t>() ||
        hex64(supplied.checksum) != dj.at("checksum").get<std::string>())
      throw DimensionError("training data does not match the model's stored digest");

    GpModel m = build(std::move(inputs), std::move(targets), std::move(h), pm);
    std::vector<SensorId> neighbors;
    for (std::uint64_t s : doc.at("neighbors").get<std::vector<std::uint64_t>>()) neighbors.emplace_back(s);
    if (!doc.at("target_sensor").is_null())
      m = m.with_sensors(std::move(neighbors), SensorId{doc.at("target_sensor").get<std::uint64_t>()});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DimensionError(std::string("malformed model document: ") + e.what());
  }
}

std::vector<SensorId> select_neighbors(const RoadNetwork& network, SensorId sensor, std::size_t d) {
  if (!network.has_sensor(sensor)) throw InsufficientSensors("target sensor is not in the network");
  const auto& all = network.sensors();
  if (all.size() <= d) {
    std::ostringstream os;
    os << "need more than " << d << " sensors to pick " << d << " neighbors, network has " << all.size();
    throw InsufficientSensors(os.str());
  }
  std::vector<std::pair<double, SensorId>> ranked;
  for (SensorId s : all)
    if (s != sensor) ranked.emplace_back(network.sensor_distance_m(sensor, s), s);
  std::sort(ranked.begin(), ranked.end());
  std::vector<SensorId> out;
  for (std::size_t i = 0; i < d; ++i) out.push_back(ranked[i].second);
  return out;
}

}  // namespace roadwatch
