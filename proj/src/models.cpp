#include "qlsd/models.hpp"

#include <algorithm>
#include <cmath>

#include "qlsd/errors.hpp"

namespace qlsd {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::GaussianQuadratic ? "gaussian" : "logistic";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gaussian") return ModelKind::GaussianQuadratic;
  if (s == "logistic") return ModelKind::LogisticRegression;
  throw ConfigError("unknown model kind '" + s + "'");
}

PotentialModel PotentialModel::gaussian(std::vector<Eigen::MatrixXd> observations) {
  if (observations.empty()) throw ConfigError("model needs at least one client");
  PotentialModel m;
  m.kind_ = ModelKind::GaussianQuadratic;
  m.d_ = static_cast<int>(observations.front().rows());
  if (m.d_ < 1) throw DimensionError("dimension must be >= 1");
  for (auto& y : observations) {
    if (y.rows() != m.d_) throw DimensionError("records must share one dimension");
    if (y.cols() < 1) throw ConfigError("every client needs at least one record");
    if (!y.allFinite()) throw DomainError("non-finite observation");
    m.n_total_ += static_cast<int>(y.cols());
    m.clients_.push_back(ClientDataset{std::move(y), Eigen::VectorXd()});
  }
  return m;
}

PotentialModel PotentialModel::logistic(std::vector<Eigen::MatrixXd> features,
                                        std::vector<Eigen::VectorXd> labels,
                                        double prior_variance) {
  if (features.empty()) throw ConfigError("model needs at least one client");
  if (features.size() != labels.size()) throw ConfigError("features/labels client count mismatch");
  if (!(prior_variance > 0)) throw ConfigError("prior variance must be positive");
  PotentialModel m;
  m.kind_ = ModelKind::LogisticRegression;
  m.prior_variance_ = prior_variance;
  m.d_ = static_cast<int>(features.front().rows());
  if (m.d_ < 1) throw DimensionError("dimension must be >= 1");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].rows() != m.d_) throw DimensionError("records must share one dimension");
    if (features[i].cols() < 1) throw ConfigError("every client needs at least one record");
    if (labels[i].size() != features[i].cols()) throw ConfigError("label count mismatch");
    for (Eigen::Index j = 0; j < labels[i].size(); ++j) {
      if (labels[i][j] != 0.0 && labels[i][j] != 1.0) throw ConfigError("labels must be 0 or 1");
    }
    if (!features[i].allFinite()) throw DomainError("non-finite feature");
    m.n_total_ += static_cast<int>(features[i].cols());
    m.clients_.push_back(ClientDataset{std::move(features[i]), std::move(labels[i])});
  }
  return m;
}

void PotentialModel::check_client(int i) const {
  if (i < 0 || i >= b()) throw IndexError("client index " + std::to_string(i) + " out of range");
}

void PotentialModel::check_record(int i, int j) const {
  check_client(i);
  if (j < 0 || j >= clients_[i].size()) {
    throw IndexError("record index " + std::to_string(j) + " out of range for client " +
                     std::to_string(i));
  }
}

int PotentialModel::client_size(int i) const {
  check_client(i);
  return clients_[i].size();
}

std::vector<int> PotentialModel::sizes() const {
  std::vector<int> out;
  for (const auto& c : clients_) out.push_back(c.size());
  return out;
}

const ClientDataset& PotentialModel::client(int i) const {
  check_client(i);
  return clients_[i];
}

double PotentialModel::prior_share(int i) const {
  check_client(i);
  if (kind_ != ModelKind::LogisticRegression) return 0.0;
  return 1.0 / (prior_variance_ * b() * clients_[i].size());
}

double PotentialModel::potential_component(int i, int j, const ParamVector& theta) const {
  check_record(i, j);
  const auto& c = clients_[i];
  if (kind_ == ModelKind::GaussianQuadratic) return 0.5 * (theta - c.features.col(j)).squaredNorm();
  const double z = c.features.col(j).dot(theta);
  return softplus(z) - c.labels[j] * z + 0.5 * prior_share(i) * theta.squaredNorm();
}

double PotentialModel::potential_client(int i, const ParamVector& theta) const {
  check_client(i);
  double u = 0.0;
  for (int j = 0; j < clients_[i].size(); ++j) u += potential_component(i, j, theta);
  return u;
}

double PotentialModel::potential(const ParamVector& theta) const {
  double u = 0.0;
  for (int i = 0; i < b(); ++i) u += potential_client(i, theta);
  return u;
}

void PotentialModel::add_grad_component(int i, int j, const ParamVector& theta, double scale,
                                        ParamVector& out) const {
  const auto& c = clients_[i];
  if (kind_ == ModelKind::GaussianQuadratic) {
    if (scale == 1.0) {
      out += theta - c.features.col(j);
    } else {
      out += scale * (theta - c.features.col(j));
    }
    return;
  }
  const double a = sigmoid(c.features.col(j).dot(theta)) - c.labels[j];
  const double ps = prior_share(i);
  if (scale == 1.0) {
    out += a * c.features.col(j) + ps * theta;
  } else {
    out += scale * (a * c.features.col(j) + ps * theta);
  }
}

ParamVector PotentialModel::grad_component(int i, int j, const ParamVector& theta) const {
  check_record(i, j);
  if (theta.size() != d_) throw DimensionError("theta has wrong dimension");
  ParamVector g = ParamVector::Zero(d_);
  add_grad_component(i, j, theta, 1.0, g);
  return g;
}

ParamVector PotentialModel::grad_client(int i, const ParamVector& theta) const {
  check_client(i);
  if (theta.size() != d_) throw DimensionError("theta has wrong dimension");
  ParamVector g = ParamVector::Zero(d_);
  for (int j = 0; j < clients_[i].size(); ++j) add_grad_component(i, j, theta, 1.0, g);
  return g;
}

ParamVector PotentialModel::grad(const ParamVector& theta) const {
  ParamVector g = ParamVector::Zero(d_);
  for (int i = 0; i < b(); ++i) g += grad_client(i, theta);
  return g;
}

ParamVector minimizer(const PotentialModel& model, double tol, int max_iterations) {
  if (!(tol > 0)) throw ConfigError("minimizer tolerance must be positive");
  const int d = model.d();
  if (model.kind() == ModelKind::GaussianQuadratic) {
    ParamVector sum = ParamVector::Zero(d);
    for (int i = 0; i < model.b(); ++i) {
      const auto& y = model.client(i).features;
      for (Eigen::Index j = 0; j < y.cols(); ++j) sum += y.col(j);
    }
    return sum / static_cast<double>(model.N_total());
  }

  // Gradient descent with Armijo backtracking; the trial step is the
  // Barzilai-Borwein estimate, falling back to 1/L.
  const SmoothnessProfile prof = smoothness_profile(model);
  ParamVector theta = ParamVector::Zero(d);
  double u = model.potential(theta);
  ParamVector g = model.grad(theta);
  ParamVector prev_theta, prev_g;
  double step = 1.0 / prof.L;
  for (int it = 0; it < max_iterations; ++it) {
    const double gn = g.norm();
    if (gn <= tol) return theta;
    if (it > 0) {
      const ParamVector s = theta - prev_theta;
      const ParamVector y = g - prev_g;
      const double sy = s.dot(y);
      step = sy > 0 ? s.squaredNorm() / sy : 1.0 / prof.L;
    }
    ParamVector trial;
    double u_trial = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      trial = theta - step * g;
      u_trial = model.potential(trial);
      if (u_trial <= u - 1e-4 * step * gn * gn) break;
      step *= 0.5;
    }
    if (!(u_trial <= u)) {
      // Function values stopped resolving progress; take a plain 1/L step.
      trial = theta - g / prof.L;
      u_trial = model.potential(trial);
    }
    prev_theta = theta;
    prev_g = g;
    theta = trial;
    u = u_trial;
    g = model.grad(theta);
  }
  const double gn = g.norm();
  if (gn <= tol) return theta;
  throw OptimizationError("minimizer did not converge within " + std::to_string(max_iterations) +
                              " iterations",
                          gn);
}

SmoothnessProfile smoothness_profile(const PotentialModel& model) {
  SmoothnessProfile p;
  p.N_total = model.N_total();
  if (model.kind() == ModelKind::GaussianQuadratic) {
    p.m = p.L = model.N_total();
    p.Mbar = 1.0;
    for (int i = 0; i < model.b(); ++i) p.M_per_client.push_back(model.client_size(i));
    return p;
  }
  p.m = 1.0 / model.prior_variance();
  p.L = p.m;
  p.Mbar = 0.0;
  for (int i = 0; i < model.b(); ++i) {
    const auto& x = model.client(i).features;
    const double share = model.prior_share(i);
    double Mi = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double curv = 0.25 * x.col(j).squaredNorm();
      p.L += curv;
      Mi += curv + share;
      p.Mbar = std::max(p.Mbar, curv + share);
    }
    p.M_per_client.push_back(Mi);
  }
  return p;
}

GaussianPosterior gaussian_posterior(const PotentialModel& model) {
  if (model.kind() != ModelKind::GaussianQuadratic) {
    throw ContractError("closed-form posterior only exists for the Gaussian model");
  }
  return GaussianPosterior{minimizer(model), 1.0 / model.N_total()};
}

PotentialModel make_gaussian_dataset(int b, int d, int N_min, int N_max, double tau,
                                     const RandomStream& stream) {
  if (b < 1 || d < 1) throw ConfigError("b and d must be >= 1");
  if (N_min < 1 || N_max < N_min) throw ConfigError("need 1 <= N_min <= N_max");
  if (!(tau >= 0)) throw ConfigError("heterogeneity must be >= 0");
  RandomStream sizes = stream.substream({label(StreamPurpose::DataSizes)});
  std::vector<Eigen::MatrixXd> obs;
  for (int i = 0; i < b; ++i) {
    const int n = N_min + static_cast<int>(sizes.below(static_cast<std::uint64_t>(N_max - N_min + 1)));
    RandomStream rs = stream.substream({label(StreamPurpose::DataClient), i});
    const ParamVector centre = tau * gaussian_draw(rs, d);
    Eigen::MatrixXd y(d, n);
    for (int j = 0; j < n; ++j) y.col(j) = centre + gaussian_draw(rs, d);
    obs.push_back(std::move(y));
  }
  return PotentialModel::gaussian(std::move(obs));
}

PotentialModel make_synthetic_logistic(double alpha, double beta, int b, int d, int N_min,
                                       int N_max, double prior_variance,
                                       const RandomStream& stream) {
  if (!(alpha >= 0) || !(beta >= 0)) throw ConfigError("alpha and beta must be >= 0");
  if (b < 1 || d < 1) throw ConfigError("b and d must be >= 1");
  if (N_min < 1 || N_max < N_min) throw ConfigError("need 1 <= N_min <= N_max");
  ParamVector feat_sd(d);
  for (int k = 0; k < d; ++k) feat_sd[k] = std::sqrt(std::pow(k + 1.0, -1.2));
  RandomStream sizes = stream.substream({label(StreamPurpose::DataSizes)});
  std::vector<Eigen::MatrixXd> xs;
  std::vector<Eigen::VectorXd> ys;
  for (int i = 0; i < b; ++i) {
    const int n = N_min + static_cast<int>(sizes.below(static_cast<std::uint64_t>(N_max - N_min + 1)));
    RandomStream hyper = stream.substream({label(StreamPurpose::DataHyper), i});
    const double u = std::sqrt(alpha) * hyper.normal();
    const double B = std::sqrt(beta) * hyper.normal();
    const ParamVector w = ParamVector::Constant(d, u) + gaussian_draw(hyper, d);
    const ParamVector v = ParamVector::Constant(d, B) + gaussian_draw(hyper, d);
    RandomStream rs = stream.substream({label(StreamPurpose::DataClient), i});
    Eigen::MatrixXd x(d, n);
    Eigen::VectorXd y(n);
    for (int j = 0; j < n; ++j) {
      x.col(j) = v + feat_sd.cwiseProduct(gaussian_draw(rs, d));
      y[j] = rs.uniform() < sigmoid(x.col(j).dot(w)) ? 1.0 : 0.0;
    }
    xs.push_back(std::move(x));
    ys.push_back(std::move(y));
  }
  return PotentialModel::logistic(std::move(xs), std::move(ys), prior_variance);
}

}  // namespace qlsd
