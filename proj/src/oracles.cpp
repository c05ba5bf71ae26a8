#include "qlsd/oracles.hpp"

#include <algorithm>
#include <numeric>

#include "qlsd/errors.hpp"

namespace qlsd {

std::string to_string(OracleVariant v) {
  switch (v) {
    case OracleVariant::Full: return "full";
    case OracleVariant::Minibatch: return "minibatch";
    case OracleVariant::Star: return "star";
    case OracleVariant::Svrg: return "svrg";
  }
  return "?";
}

void OracleKind::validate(const PotentialModel& model) const {
  if (!stochastic()) return;
  if (static_cast<int>(minibatch.size()) != model.b()) {
    throw ConfigError("need one minibatch size per client");
  }
  for (int i = 0; i < model.b(); ++i) {
    if (minibatch[i] < 1 || minibatch[i] > model.client_size(i)) {
      throw ConfigError("minibatch size for client " + std::to_string(i) + " must be in [1, N_i]");
    }
  }
  if (variant == OracleVariant::Star && theta_star.size() != model.d()) {
    throw ConfigError("star oracle needs the minimizer");
  }
}

MinibatchDraw sample_minibatch(int N, int n, RandomStream& stream) {
  if (n < 1 || n > N) {
    throw ConfigError("minibatch size " + std::to_string(n) + " not in [1, " + std::to_string(N) + "]");
  }
  MinibatchDraw draw;
  if (n == N) {
    draw.indices.resize(N);
    std::iota(draw.indices.begin(), draw.indices.end(), 0);
    return draw;
  }
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < n; ++t) {
    const int r = t + static_cast<int>(stream.below(static_cast<std::uint64_t>(N - t)));
    std::swap(perm[t], perm[r]);
  }
  draw.indices.assign(perm.begin(), perm.begin() + n);
  std::sort(draw.indices.begin(), draw.indices.end());
  return draw;
}

std::vector<MinibatchDraw> enumerate_minibatches(int N, int n) {
  if (n < 1 || n > N) throw ConfigError("minibatch size out of range");
  std::vector<MinibatchDraw> out;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(MinibatchDraw{idx});
    int t = n - 1;
    while (t >= 0 && idx[t] == N - n + t) --t;
    if (t < 0) break;
    ++idx[t];
    for (int u = t + 1; u < n; ++u) idx[u] = idx[u - 1] + 1;
  }
  return out;
}

ParamVector oracle_eval(const OracleKind& kind, const PotentialModel& model, int i,
                        const ParamVector& theta, const ParamVector* zeta,
                        const MinibatchDraw* draw, const ParamVector* grad_at_zeta) {
  if (kind.stochastic() && draw == nullptr) {
    throw ContractError(to_string(kind.variant) + " oracle needs a minibatch draw");
  }
  if (!kind.stochastic() && draw != nullptr) throw ContractError("full oracle takes no draw");
  if ((kind.variant == OracleVariant::Svrg) != (zeta != nullptr)) {
    throw ContractError("control variate must be given exactly for the svrg oracle");
  }
  if (kind.variant == OracleVariant::Full) return model.grad_client(i, theta);

  const int Ni = model.client_size(i);
  const int n = static_cast<int>(draw->indices.size());
  const double scale = static_cast<double>(Ni) / n;
  ParamVector acc = ParamVector::Zero(model.d());
  switch (kind.variant) {
    case OracleVariant::Minibatch:
      for (int j : draw->indices) model.add_grad_component(i, j, theta, 1.0, acc);
      return scale * acc;
    case OracleVariant::Star:
      for (int j : draw->indices) {
        model.add_grad_component(i, j, theta, 1.0, acc);
        model.add_grad_component(i, j, kind.theta_star, -1.0, acc);
      }
      return scale * acc;
    case OracleVariant::Svrg: {
      for (int j : draw->indices) {
        model.add_grad_component(i, j, theta, 1.0, acc);
        model.add_grad_component(i, j, *zeta, -1.0, acc);
      }
      ParamVector out = scale * acc;
      if (grad_at_zeta != nullptr) {
        out += *grad_at_zeta;
      } else {
        out += model.grad_client(i, *zeta);
      }
      return out;
    }
    case OracleVariant::Full: break;
  }
  return acc;
}

std::vector<int> minibatch_fraction(const PotentialModel& model, int divisor) {
  if (divisor < 1) throw ConfigError("minibatch divisor must be >= 1");
  std::vector<int> n;
  for (int i = 0; i < model.b(); ++i) n.push_back(std::max(1, model.client_size(i) / divisor));
  return n;
}

double subset_sum_variance(const std::vector<ParamVector>& a, int n) {
  const int N = static_cast<int>(a.size());
  if (n < 1 || n > N) throw ConfigError("subset size out of range");
  if (n == N) return 0.0;
  ParamVector sum = ParamVector::Zero(a.front().size());
  double sq = 0.0;
  for (const auto& v : a) {
    sum += v;
    sq += v.squaredNorm();
  }
  const double coef = static_cast<double>(N - n) / (static_cast<double>(n) * (N - 1));
  return std::max(0.0, coef * (N * sq - sum.squaredNorm()));
}

StarConstants star_constants(const OracleKind& kind, const PotentialModel& model,
                             const ParamVector& theta_star) {
  StarConstants out;
  double max_moment = 0.0;
  ParamVector total_mean = ParamVector::Zero(model.d());
  double total_var = 0.0;
  for (int i = 0; i < model.b(); ++i) {
    const int Ni = model.client_size(i);
    std::vector<ParamVector> a;
    a.reserve(Ni);
    for (int j = 0; j < Ni; ++j) {
      ParamVector g = model.grad_component(i, j, theta_star);
      if (kind.variant == OracleVariant::Star) g -= model.grad_component(i, j, kind.theta_star);
      a.push_back(std::move(g));
    }
    ParamVector mean = ParamVector::Zero(model.d());
    for (const auto& v : a) mean += v;
    if (kind.variant == OracleVariant::Svrg) {
      // Anchored at theta*, the svrg oracle is exactly grad U_i(theta*).
      total_mean += mean;
      out.per_client_second_moment.push_back(mean.squaredNorm());
      max_moment = std::max(max_moment, mean.squaredNorm());
      continue;
    }
    const double var = kind.stochastic() ? subset_sum_variance(a, kind.minibatch[i]) : 0.0;
    const double moment = mean.squaredNorm() + var;
    total_mean += mean;
    total_var += var;
    out.per_client_second_moment.push_back(moment);
    max_moment = std::max(max_moment, moment);
    out.B_star_sum += moment;
  }
  if (kind.variant == OracleVariant::Svrg) {
    for (double v : out.per_client_second_moment) out.B_star_sum += v;
  }
  out.sigma_star_sq = total_mean.squaredNorm() + total_var;
  out.B_star_max_b = model.b() * max_moment;
  return out;
}

}  // namespace qlsd
