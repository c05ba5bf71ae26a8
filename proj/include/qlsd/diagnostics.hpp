#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlsd/core.hpp"
#include "qlsd/models.hpp"

namespace qlsd {

// Single-pass mean and diagonal variance; merging follows the pairwise update.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(int d);

  void add(const ParamVector& x);
  void merge(const MomentAccumulator& other);

  std::int64_t count() const { return count_; }
  const ParamVector& mean() const { return mean_; }
  // Population (1/n) variance per coordinate.
  ParamVector variance() const;
  ParamVector sample_variance() const;  // 1/(n-1)
  ParamVector second_moment() const;    // E[x_k^2]

 private:
  std::int64_t count_ = 0;
  ParamVector mean_;
  ParamVector m2_;
};

MomentAccumulator accumulate(const std::vector<ParamVector>& samples);

// W2^2 between N(m1, diag v1) and N(m2, diag v2).
double gaussian_w2(const ParamVector& mean1, const ParamVector& var1, const ParamVector& mean2,
                   const ParamVector& var2);

double norm_functional(const ParamVector& theta);

// (mean_k ||theta_k|| - reference)^2
double mse_test_functional(const std::vector<ParamVector>& samples, double reference);

// Monte Carlo E||theta|| under N(mean, variance I).
double gaussian_norm_reference(const ParamVector& mean, double variance, std::int64_t draws,
                               const RandomStream& stream);

// Linear-interpolation quantile (R type 7) at level q in [0, 1].
double quantile_type7(std::vector<double> values, double q);

struct HpdResult {
  double eta = 0.0;
  bool few_samples = false;  // fewer than 1/alpha samples
};

HpdResult hpd_eta_from_values(const std::vector<double>& potentials, double alpha);
HpdResult hpd_eta(const std::vector<ParamVector>& samples, const PotentialModel& model, double alpha);
double hpd_relative_error(double eta, double eta_reference);

double lyapunov_psi(const ParamVector& theta, const std::vector<ParamVector>& eta_list,
                    const ParamVector& theta_star, const std::vector<ParamVector>& grad_at_star_list,
                    double gamma, double alpha, const std::vector<double>& omega_list,
                    const std::vector<double>& p_list);

}  // namespace qlsd
