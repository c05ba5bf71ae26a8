#pragma once

#include <string>
#include <vector>

#include "qlsd/core.hpp"

namespace qlsd {

enum class ModelKind { GaussianQuadratic, LogisticRegression };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Records are stored column-wise: features.col(j) is record j.
// Gaussian: features holds the observation y_j, labels is empty.
// Logistic: features holds x_j, labels holds y_j in {0, 1}.
struct ClientDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  int size() const { return static_cast<int>(features.cols()); }
};

struct SmoothnessProfile {
  double m = 0.0;
  double L = 0.0;
  std::vector<double> M_per_client;
  double Mbar = 0.0;
  int N_total = 0;
};

struct GaussianPosterior {
  ParamVector mean;
  double variance = 0.0;  // isotropic, per coordinate
};

// U(theta) = sum_i sum_j U_ij(theta). Client and record indices are 0-based.
class PotentialModel {
 public:
  static PotentialModel gaussian(std::vector<Eigen::MatrixXd> observations);
  static PotentialModel logistic(std::vector<Eigen::MatrixXd> features,
                                 std::vector<Eigen::VectorXd> labels, double prior_variance);

  ModelKind kind() const { return kind_; }
  int b() const { return static_cast<int>(clients_.size()); }
  int d() const { return d_; }
  int client_size(int i) const;
  int N_total() const { return n_total_; }
  std::vector<int> sizes() const;
  double prior_variance() const { return prior_variance_; }
  const ClientDataset& client(int i) const;

  // Prior precision carried by each record of client i (logistic only).
  double prior_share(int i) const;

  double potential_component(int i, int j, const ParamVector& theta) const;
  double potential_client(int i, const ParamVector& theta) const;
  double potential(const ParamVector& theta) const;

  ParamVector grad_component(int i, int j, const ParamVector& theta) const;
  // out += scale * grad_component(i, j, theta), without temporaries.
  void add_grad_component(int i, int j, const ParamVector& theta, double scale,
                          ParamVector& out) const;
  ParamVector grad_client(int i, const ParamVector& theta) const;
  ParamVector grad(const ParamVector& theta) const;

 private:
  void check_client(int i) const;
  void check_record(int i, int j) const;

  ModelKind kind_ = ModelKind::GaussianQuadratic;
  std::vector<ClientDataset> clients_;
  int d_ = 0;
  int n_total_ = 0;
  double prior_variance_ = 0.0;
};

ParamVector minimizer(const PotentialModel& model, double tol = 1e-8,
                      int max_iterations = 100000);

SmoothnessProfile smoothness_profile(const PotentialModel& model);

// Exact posterior of the Gaussian model: N(global mean, I / N_total).
GaussianPosterior gaussian_posterior(const PotentialModel& model);

// Per client: N_i ~ U{N_min..N_max}, centre c_i ~ N(0, tau^2 I), y_ij ~ N(c_i, I).
PotentialModel make_gaussian_dataset(int b, int d, int N_min, int N_max, double tau,
                                     const RandomStream& stream);

// Heterogeneous logistic data: w_i ~ N(u_i, I), u_i ~ N(0, alpha); v_i ~ N(B_i, I),
// B_i ~ N(0, beta); x_ij ~ N(v_i, diag(k^-1.2)); y_ij ~ Bernoulli(sigmoid(x_ij . w_i)).
PotentialModel make_synthetic_logistic(double alpha, double beta, int b, int d, int N_min,
                                       int N_max, double prior_variance,
                                       const RandomStream& stream);

}  // namespace qlsd
