#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qlsd/models.hpp"
#include "qlsd/oracles.hpp"

namespace qlsd {

struct BoundInputs {
  double m = 0.0;
  double L = 0.0;
  std::vector<double> M_per_client;
  double Mbar = 0.0;
  int d = 0;
  int b = 0;
  std::vector<double> omega_per_client;
  std::vector<double> p_per_client;
  std::vector<int> n_per_client;
  std::vector<int> N_per_client;
  double sigma_star = 0.0;
  double B_star = 0.0;
  int l = 1;
  // Step-size cap at which the bias constants are evaluated; 0 uses the admissible maximum.
  double gamma_bar = 0.0;
};

struct BoundReport {
  std::string algorithm;
  double gamma_max = 0.0;       // admissible step bound
  double gamma_bar = 0.0;       // cap used for the constants (<= gamma_max)
  double contraction = 0.0;     // 1 - gamma_bar m / 2
  double bias_B = 0.0;
  double transient_A = 0.0;
  double M_tilde = 0.0;
  double m = 0.0;
  std::vector<double> A_nN;
  double B_nN = 0.0;
  double C_nN = 0.0;
  double D_nN = 0.0;
  double gamma_alpha_1 = 0.0;
  double gamma_alpha_2 = 0.0;
  double alpha = 0.0;
  int l = 1;
  double participation_sum = 0.0;  // sum_i (omega_i + 1 - p_i) / p_i
};

struct BoundExtras {
  double psi0 = 0.0;            // Lyapunov functional at the start
  double memory_gap_sq = 0.0;   // sum_i ||grad U_i(theta*) - eta0_i||^2
};

double minibatch_constant(int n, int N);

BoundReport bound_qlsd(const BoundInputs& in);
BoundReport bound_qlsd_star(const BoundInputs& in);
BoundReport bound_qlsd_pp(const BoundInputs& in, double alpha);

// Right-hand side of the matching non-asymptotic W2^2 bound at iteration k.
double w2_bound_curve(const BoundReport& report, double gamma, long long k, double W2_init_sq,
                      double second_moment_init, const BoundExtras& extra = {});

// Bound inputs for a model with the given oracle and per-client compression / participation.
BoundInputs bound_inputs_for(const PotentialModel& model, const OracleKind& oracle,
                             const std::vector<double>& omega, const std::vector<double>& p,
                             const ParamVector& theta_star, int l = 1);

nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);

}  // namespace qlsd
