#include "qlsd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlsd/errors.hpp"

namespace qlsd {
namespace {

void validate(const BoundInputs& in, bool per_client_sizes) {
  if (!(in.m > 0)) throw DomainError("strong convexity constant m must be positive");
  if (in.L < in.m) throw DomainError("need m <= L");
  if (in.b < 1 || in.d < 1) throw DomainError("need b >= 1 and d >= 1");
  const auto b = static_cast<std::size_t>(in.b);
  if (in.M_per_client.size() != b || in.omega_per_client.size() != b || in.p_per_client.size() != b) {
    throw DomainError("per-client constants must have b entries");
  }
  if (per_client_sizes && (in.n_per_client.size() != b || in.N_per_client.size() != b)) {
    throw DomainError("minibatch and dataset sizes must have b entries");
  }
  for (std::size_t i = 0; i < b; ++i) {
    if (in.M_per_client[i] < 0 || in.omega_per_client[i] < 0) throw DomainError("negative constant");
    if (!(in.p_per_client[i] > 0 && in.p_per_client[i] <= 1)) throw DomainError("p_i must lie in (0, 1]");
  }
  if (in.Mbar < 0 || in.sigma_star < 0 || in.B_star < 0) throw DomainError("negative constant");
  if (in.gamma_bar < 0) throw DomainError("gamma_bar must be >= 0");
}

double discretisation(const BoundInputs& in, double g) {
  const double m = in.m, L = in.L;
  return (2.0 * in.d * L * L / m) * (1.0 / m + 5.0 * g) *
         (1.0 + g * L * L / (2.0 * m) + g * g * L * L / 12.0);
}

double pick_gamma(const BoundInputs& in, double gamma_max) {
  if (in.gamma_bar == 0.0) return gamma_max;
  if (in.gamma_bar > gamma_max) {
    throw DomainError("step size cap " + std::to_string(in.gamma_bar) +
                      " exceeds the admissible threshold gamma_max=" + std::to_string(gamma_max));
  }
  return in.gamma_bar;
}

double step_template(double m, double L, double M_tilde) {
  return std::min({2.0 / (5.0 * (m + L)), 1.0 / (m + L + M_tilde), 1.0 / (10.0 * m)});
}

double participation_sum(const BoundInputs& in) {
  double s = 0.0;
  for (int i = 0; i < in.b; ++i) {
    s += (in.omega_per_client[i] + 1.0 - in.p_per_client[i]) / in.p_per_client[i];
  }
  return s;
}

}  // namespace

double minibatch_constant(int n, int N) {
  if (n < 1 || n > N) throw DomainError("minibatch size must lie in [1, N]");
  if (N == 1) return 0.0;
  return static_cast<double>(N) * (N - n) / (static_cast<double>(n) * (N - 1));
}

BoundReport bound_qlsd(const BoundInputs& in) {
  validate(in, false);
  BoundReport r;
  r.algorithm = "qlsd";
  r.m = in.m;
  r.l = in.l;
  double max_mw = 0.0;
  double het = 0.0;
  for (int i = 0; i < in.b; ++i) {
    const double w = in.omega_per_client[i], p = in.p_per_client[i];
    max_mw = std::max(max_mw, in.M_per_client[i] * (1.0 + w) / p);
    het += (1.0 - p + w) / p;
  }
  r.M_tilde = 2.0 * max_mw;
  r.gamma_max = step_template(in.m, in.L, r.M_tilde);
  r.gamma_bar = pick_gamma(in, r.gamma_max);
  r.contraction = 1.0 - r.gamma_bar * in.m / 2.0;
  r.participation_sum = participation_sum(in);
  const double noise = in.sigma_star * in.sigma_star + (in.B_star / in.b) * het;
  const double m = in.m, L = in.L;
  r.bias_B = discretisation(in, r.gamma_bar) + 4.0 * noise / m +
             8.0 * L * max_mw * (in.d + r.gamma_bar * noise) / (m * m);
  r.transient_A = 2.0 * L * max_mw;
  return r;
}

BoundReport bound_qlsd_star(const BoundInputs& in) {
  validate(in, true);
  BoundReport r;
  r.algorithm = "qlsd-star";
  r.m = in.m;
  r.l = in.l;
  double worst = 0.0;
  for (int i = 0; i < in.b; ++i) {
    const double w = in.omega_per_client[i], p = in.p_per_client[i];
    const int N = in.N_per_client[i];
    const double A = minibatch_constant(in.n_per_client[i], N);
    r.A_nN.push_back(A);
    worst = std::max(worst, w * N + (w + 1.0) * (N * (1.0 - p) / p + A));
  }
  r.M_tilde = in.Mbar * worst;
  r.gamma_max = step_template(in.m, in.L, r.M_tilde);
  r.gamma_bar = pick_gamma(in, r.gamma_max);
  r.contraction = 1.0 - r.gamma_bar * in.m / 2.0;
  r.participation_sum = participation_sum(in);
  r.bias_B = discretisation(in, r.gamma_bar) + 4.0 * in.L * in.d * r.M_tilde / (in.m * in.m);
  r.transient_A = in.L * r.M_tilde;
  return r;
}

BoundReport bound_qlsd_pp(const BoundInputs& in, double alpha) {
  validate(in, true);
  double omega_max = 0.0;
  for (double w : in.omega_per_client) omega_max = std::max(omega_max, w);
  const double alpha_max = 1.0 / (1.0 + omega_max);
  if (!(alpha > 0) || alpha > alpha_max * (1 + 1e-12)) {
    throw DomainError("memory step alpha=" + std::to_string(alpha) +
                      " outside (0, 1/(1+omega_max)] with 1/(1+omega_max)=" + std::to_string(alpha_max));
  }
  if (in.l < 1) throw DomainError("refresh period l must be >= 1");
  BoundReport r;
  r.algorithm = "qlsd-pp";
  r.m = in.m;
  r.l = in.l;
  r.alpha = alpha;
  const double m = in.m, L = in.L, Mbar = in.Mbar;
  double sum_B = 0.0, sum_C = 0.0, sum_D = 0.0, sum_AM = 0.0, sum_bias = 0.0;
  double omega_tilde = 0.0, max_wp = 0.0;
  for (int i = 0; i < in.b; ++i) {
    const double w = in.omega_per_client[i], p = in.p_per_client[i], M = in.M_per_client[i];
    const double A = minibatch_constant(in.n_per_client[i], in.N_per_client[i]);
    r.A_nN.push_back(A);
    sum_B += M * M * (w + 1.0 - p) / p + ((w + 1.0) / p) * A * Mbar * M;
    sum_C += A * Mbar * M + M * M;
    sum_D += ((w + 1.0) / p) * A * M;
    sum_AM += A * M;
    sum_bias += M * (w + 1.0) * (M + Mbar * A) / p;
    omega_tilde = std::max(omega_tilde, (w + 1.0 - p) / p);
    max_wp = std::max(max_wp, (w + 1.0) / p);
  }
  r.participation_sum = participation_sum(in);
  r.B_nN = 2.0 * sum_B + L * L;
  r.C_nN = 2.0 * sum_C;
  r.D_nN = 2.0 * sum_B + 2.0 * Mbar * sum_D + 4.0 * r.C_nN * r.participation_sum;
  r.gamma_alpha_1 = std::min(m * m / (r.B_nN + 3.0 * omega_tilde * r.C_nN), alpha / 3.0) / m;
  const double denom = 16.0 * in.l * Mbar * max_wp * sum_AM;
  const double cube = denom > 0 ? std::cbrt(m / denom) : std::numeric_limits<double>::infinity();
  r.gamma_alpha_2 = std::min(r.gamma_alpha_1, cube);
  r.gamma_max = std::min(r.gamma_alpha_2, 1.0 / (10.0 * m));
  r.gamma_bar = pick_gamma(in, r.gamma_max);
  r.contraction = 1.0 - r.gamma_bar * m / 2.0;
  r.bias_B = discretisation(in, r.gamma_bar) + 96.0 * in.l * in.d * sum_bias / (m * m);
  r.transient_A = 0.0;
  return r;
}

double w2_bound_curve(const BoundReport& report, double gamma, long long k, double W2_init_sq,
                      double second_moment_init, const BoundExtras& extra) {
  if (!(gamma > 0)) throw DomainError("step size must be positive");
  if (gamma > report.gamma_bar * (1 + 1e-12)) {
    throw DomainError("step size " + std::to_string(gamma) + " exceeds gamma_bar=" +
                      std::to_string(report.gamma_bar) + "; the bound does not apply");
  }
  if (k < 0) throw DomainError("iteration must be >= 0");
  const double rho = 1.0 - gamma * report.m / 2.0;
  const double kd = static_cast<double>(k);
  double value = std::pow(rho, kd) * W2_init_sq + gamma * report.bias_B;
  if (report.algorithm == "qlsd-pp") {
    const double s = std::floor(kd / report.l);
    value += (2.0 * gamma / report.m) * std::pow(rho, s) * report.D_nN * extra.psi0;
    value += (4.0 * gamma / report.m) * report.participation_sum *
             std::pow(1.0 - report.alpha, kd) * extra.memory_gap_sq;
  } else if (k > 0) {
    value += gamma * gamma * report.transient_A * std::pow(rho, kd - 1.0) * kd * second_moment_init;
  }
  return value;
}

BoundInputs bound_inputs_for(const PotentialModel& model, const OracleKind& oracle,
                             const std::vector<double>& omega, const std::vector<double>& p,
                             const ParamVector& theta_star, int l) {
  const SmoothnessProfile prof = smoothness_profile(model);
  BoundInputs in;
  in.m = prof.m;
  in.L = prof.L;
  in.M_per_client = prof.M_per_client;
  in.Mbar = prof.Mbar;
  in.d = model.d();
  in.b = model.b();
  in.omega_per_client = omega;
  in.p_per_client = p;
  in.N_per_client = model.sizes();
  in.n_per_client = oracle.stochastic() ? oracle.minibatch : model.sizes();
  const StarConstants sc = star_constants(oracle, model, theta_star);
  in.sigma_star = std::sqrt(sc.sigma_star_sq);
  in.B_star = sc.B_star();
  in.l = l;
  return in;
}

nlohmann::json to_json(const BoundReport& r) {
  return nlohmann::json{{"algorithm", r.algorithm},
                        {"gamma_max", r.gamma_max},
                        {"gamma_bar", r.gamma_bar},
                        {"contraction", r.contraction},
                        {"B", r.bias_B},
                        {"A", r.transient_A},
                        {"M_tilde", r.M_tilde},
                        {"m", r.m},
                        {"A_nN", r.A_nN},
                        {"B_nN", r.B_nN},
                        {"C_nN", r.C_nN},
                        {"D_nN", r.D_nN},
                        {"gamma_alpha_1", r.gamma_alpha_1},
                        {"gamma_alpha_2", r.gamma_alpha_2},
                        {"alpha", r.alpha},
                        {"l", r.l},
                        {"participation_sum", r.participation_sum}};
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
  BoundReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.gamma_max = j.at("gamma_max").get<double>();
  r.gamma_bar = j.at("gamma_bar").get<double>();
  r.contraction = j.at("contraction").get<double>();
  r.bias_B = j.at("B").get<double>();
  r.transient_A = j.at("A").get<double>();
  r.M_tilde = j.at("M_tilde").get<double>();
  r.m = j.at("m").get<double>();
  r.A_nN = j.at("A_nN").get<std::vector<double>>();
  r.B_nN = j.at("B_nN").get<double>();
  r.C_nN = j.at("C_nN").get<double>();
  r.D_nN = j.at("D_nN").get<double>();
  r.gamma_alpha_1 = j.at("gamma_alpha_1").get<double>();
  r.gamma_alpha_2 = j.at("gamma_alpha_2").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.l = j.at("l").get<int>();
  r.participation_sum = j.at("participation_sum").get<double>();
  return r;
}

}  // namespace qlsd
