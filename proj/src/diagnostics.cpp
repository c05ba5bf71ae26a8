#include "qlsd/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "qlsd/errors.hpp"

namespace qlsd {

MomentAccumulator::MomentAccumulator(int d) : mean_(ParamVector::Zero(d)), m2_(ParamVector::Zero(d)) {}

void MomentAccumulator::add(const ParamVector& x) {
  if (mean_.size() == 0) {
    mean_ = ParamVector::Zero(x.size());
    m2_ = ParamVector::Zero(x.size());
  }
  if (x.size() != mean_.size()) throw DimensionError("accumulator dimension mismatch");
  ++count_;
  const ParamVector delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(x - mean_);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.mean_.size() != mean_.size()) throw DimensionError("accumulator dimension mismatch");
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const ParamVector delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / n);
  count_ += other.count_;
}

ParamVector MomentAccumulator::variance() const {
  if (count_ == 0) throw StateError("empty accumulator");
  return m2_ / static_cast<double>(count_);
}

ParamVector MomentAccumulator::sample_variance() const {
  if (count_ < 2) throw StateError("sample variance needs two observations");
  return m2_ / static_cast<double>(count_ - 1);
}

ParamVector MomentAccumulator::second_moment() const {
  return variance() + mean_.cwiseProduct(mean_);
}

MomentAccumulator accumulate(const std::vector<ParamVector>& samples) {
  MomentAccumulator acc;
  for (const auto& s : samples) acc.add(s);
  return acc;
}

double gaussian_w2(const ParamVector& mean1, const ParamVector& var1, const ParamVector& mean2,
                   const ParamVector& var2) {
  const auto d = mean1.size();
  if (var1.size() != d || mean2.size() != d || var2.size() != d) {
    throw DimensionError("gaussian_w2 dimension mismatch");
  }
  if ((var1.array() <= 0).any() || (var2.array() <= 0).any()) {
    throw DomainError("gaussian_w2 needs positive variances");
  }
  return (mean1 - mean2).squaredNorm() +
         (var1.array().sqrt() - var2.array().sqrt()).square().sum();
}

double norm_functional(const ParamVector& theta) { return theta.norm(); }

double mse_test_functional(const std::vector<ParamVector>& samples, double reference) {
  if (samples.empty()) throw StateError("mse of an empty trace");
  double s = 0.0;
  for (const auto& x : samples) s += norm_functional(x);
  const double e = s / static_cast<double>(samples.size()) - reference;
  return e * e;
}

double gaussian_norm_reference(const ParamVector& mean, double variance, std::int64_t draws,
                               const RandomStream& stream) {
  if (draws < 1) throw ConfigError("reference needs at least one draw");
  if (!(variance > 0)) throw DomainError("reference variance must be positive");
  RandomStream rs = stream;
  const double sd = std::sqrt(variance);
  const int d = static_cast<int>(mean.size());
  // Summing in blocks keeps rounding error small over 1e7 terms.
  double total = 0.0;
  const std::int64_t block = 4096;
  for (std::int64_t start = 0; start < draws; start += block) {
    double part = 0.0;
    const std::int64_t end = std::min(draws, start + block);
    for (std::int64_t t = start; t < end; ++t) {
      double sq = 0.0;
      for (int k = 0; k < d; ++k) {
        const double x = mean[k] + sd * rs.normal();
        sq += x * x;
      }
      part += std::sqrt(sq);
    }
    total += part;
  }
  return total / static_cast<double>(draws);
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw StateError("quantile of no values");
  if (!(q >= 0 && q <= 1)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

HpdResult hpd_eta_from_values(const std::vector<double>& potentials, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("HPD level alpha must lie in (0, 1)");
  if (potentials.empty()) throw StateError("HPD of an empty trace");
  HpdResult r;
  r.eta = quantile_type7(potentials, 1.0 - alpha);
  r.few_samples = static_cast<double>(potentials.size()) < 1.0 / alpha;
  return r;
}

HpdResult hpd_eta(const std::vector<ParamVector>& samples, const PotentialModel& model, double alpha) {
  std::vector<double> u;
  u.reserve(samples.size());
  for (const auto& s : samples) u.push_back(model.potential(s));
  return hpd_eta_from_values(u, alpha);
}

double hpd_relative_error(double eta, double eta_reference) {
  if (eta_reference == 0.0) throw DomainError("reference HPD level is zero");
  return std::abs(eta - eta_reference) / std::abs(eta_reference);
}

double lyapunov_psi(const ParamVector& theta, const std::vector<ParamVector>& eta_list,
                    const ParamVector& theta_star, const std::vector<ParamVector>& grad_at_star_list,
                    double gamma, double alpha, const std::vector<double>& omega_list,
                    const std::vector<double>& p_list) {
  if (!(alpha > 0)) throw DomainError("lyapunov_psi needs alpha > 0");
  const std::size_t b = eta_list.size();
  if (grad_at_star_list.size() != b || omega_list.size() != b || p_list.size() != b) {
    throw ConfigError("lyapunov_psi per-client lists differ in length");
  }
  double coef = 0.0;
  double mem = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    coef = std::max(coef, (omega_list[i] + 1.0 - p_list[i]) / p_list[i]);
    mem += (grad_at_star_list[i] - eta_list[i]).squaredNorm();
  }
  return (theta - theta_star).squaredNorm() + (3.0 / alpha) * coef * gamma * gamma * mem;
}

}  // namespace qlsd
