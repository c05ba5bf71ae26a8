#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qlsd/core.hpp"
#include "qlsd/models.hpp"

namespace qlsd {

enum class OracleVariant { Full, Minibatch, Star, Svrg };

std::string to_string(OracleVariant v);

struct OracleKind {
  OracleVariant variant = OracleVariant::Full;
  std::vector<int> minibatch;  // n_i per client; unused for Full
  ParamVector theta_star;      // Star only

  bool stochastic() const { return variant != OracleVariant::Full; }
  void validate(const PotentialModel& model) const;
};

// Sorted 0-based record indices.
struct MinibatchDraw {
  std::vector<int> indices;
};

// Uniform size-n subset of {0..N-1} by partial Fisher-Yates.
MinibatchDraw sample_minibatch(int N, int n, RandomStream& stream);

// All size-n subsets in lexicographic order (test and constant oracles).
std::vector<MinibatchDraw> enumerate_minibatches(int N, int n);

// grad_at_zeta optionally supplies a cached grad_client(i, zeta) for Svrg.
ParamVector oracle_eval(const OracleKind& kind, const PotentialModel& model, int i,
                        const ParamVector& theta, const ParamVector* zeta,
                        const MinibatchDraw* draw, const ParamVector* grad_at_zeta = nullptr);

// Per-client n_i = max(1, floor(N_i / divisor)).
std::vector<int> minibatch_fraction(const PotentialModel& model, int divisor);

// Exact variance of (N/n) sum_{j in S} a_j over uniform size-n subsets S.
double subset_sum_variance(const std::vector<ParamVector>& a, int n);

struct StarConstants {
  double sigma_star_sq = 0.0;   // E || sum_i H_i(theta*) ||^2
  double B_star_sum = 0.0;      // sum_i E ||H_i(theta*)||^2
  double B_star_max_b = 0.0;    // b * max_i E ||H_i(theta*)||^2
  std::vector<double> per_client_second_moment;
  double B_star() const { return B_star_sum > B_star_max_b ? B_star_sum : B_star_max_b; }
};

// Closed-form second moments of the oracle at theta_star.
StarConstants star_constants(const OracleKind& kind, const PotentialModel& model,
                             const ParamVector& theta_star);

}  // namespace qlsd
