#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "presets.hpp"
#include "qlsd/bounds.hpp"
#include "qlsd/compression.hpp"
#include "qlsd/diagnostics.hpp"
#include "qlsd/models.hpp"
#include "qlsd/oracles.hpp"
#include "qlsd/sampler.hpp"

using namespace qlsd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Atom {
  double prob;
  ParamVector value;
};

// Exact law of the stochastic quantizer applied to v: every coordinate rounds to one of
// its two neighbouring levels with the probabilities that make it unbiased.
std::vector<Atom> quantizer_law(const ParamVector& v, int s) {
  const int d = static_cast<int>(v.size());
  const QuantizerSpec spec = QuantizerSpec::Levels(s);
  const double norm = v.norm();
  if (norm == 0.0) return {{1.0, ParamVector::Zero(d)}};
  std::vector<std::int8_t> signs(d);
  std::vector<std::vector<std::pair<double, std::uint32_t>>> per_coord(d);
  for (int j = 0; j < d; ++j) {
    signs[j] = v[j] < 0 ? -1 : 1;
    const double r = s * std::abs(v[j]) / norm;
    const double lo = std::min(std::floor(r), static_cast<double>(s));
    const double up = r - lo;
    if (up > 0) {
      per_coord[j] = {{1.0 - up, static_cast<std::uint32_t>(lo)}, {up, static_cast<std::uint32_t>(lo) + 1}};
    } else {
      per_coord[j] = {{1.0, static_cast<std::uint32_t>(lo)}};
    }
  }
  std::vector<Atom> atoms;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    double prob = 1.0;
    std::vector<std::uint32_t> levels(d);
    for (int j = 0; j < d; ++j) {
      prob *= per_coord[j][idx[j]].first;
      levels[j] = per_coord[j][idx[j]].second;
    }
    atoms.push_back({prob, decode(make_message(spec, norm, signs, levels))});
    int j = 0;
    while (j < d && ++idx[j] == per_coord[j].size()) idx[j++] = 0;
    if (j == d) break;
  }
  return atoms;
}

// ---------------------------------------------------------------------------------------------

Outcome quantizer_contract() {
  ParamVector v(2);
  v << 3, 4;
  const auto law = quantizer_law(v, 1);
  double total = 0.0, err = 0.0, err_sq = 0.0;
  ParamVector mean = ParamVector::Zero(2), second = ParamVector::Zero(2);
  for (const auto& a : law) {
    total += a.prob;
    mean += a.prob * a.value;
    second += a.prob * a.value.cwiseAbs2();
    const double e = (a.value - v).squaredNorm();
    err += a.prob * e;
    err_sq += a.prob * e * e;
  }
  const double bound = omega(QuantizerSpec::Levels(1), 2) * v.squaredNorm();
  bool pass = std::abs(total - 1.0) < 1e-15 && (mean - v).norm() < 1e-12 && std::abs(err - 10.0) < 1e-12 &&
              err <= bound && std::abs(bound - 25.0 * std::sqrt(2.0)) < 1e-12;

  const int n = 100000;
  RandomStream stream = RandomStream(2024).substream({label(StreamPurpose::Quantizer)});
  ParamVector mc_mean = ParamVector::Zero(2);
  double mc_err = 0.0;
  for (int t = 0; t < n; ++t) {
    const ParamVector c = decode(quantize(v, QuantizerSpec::Levels(1), stream));
    mc_mean += c;
    mc_err += (c - v).squaredNorm();
  }
  mc_mean /= n;
  mc_err /= n;
  const ParamVector var = second - mean.cwiseAbs2();
  double worst = 0.0;
  for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(mc_mean[j] - v[j]) / std::sqrt(var[j] / n));
  worst = std::max(worst, std::abs(mc_err - err) / std::sqrt((err_sq - err * err) / n));
  pass = pass && worst < 5.0;
  return {pass, "exact E[C(v)]=(" + fmt("%.3g", mean[0]) + "," + fmt("%.3g", mean[1]) + "), E||C(v)-v||^2=" +
                    fmt("%.6g", err) + " <= " + fmt("%.6g", bound) + "; Monte Carlo worst deviation " +
                    fmt("%.2f", worst) + " sigma"};
}

// ---------------------------------------------------------------------------------------------

Outcome ula_variance() {
  const PotentialModel model = make_gaussian_dataset(2, 2, 50, 50, 1.0, RandomStream(7));
  const auto post = gaussian_posterior(model);
  SamplerConfig c;
  c.algorithm = Algorithm::Qlsd;
  c.gamma = 1e-3;
  c.burn_in = 10000;
  c.K = c.burn_in + 1000000;
  c.seed = 11;
  c.theta0 = post.mean;
  c.keep_samples = false;
  c.record_every = 0;
  MomentAccumulator acc(2);
  run_chain(c, model, [&](std::int64_t k, const ParamVector& theta, const StepInfo&) {
    if (k > c.burn_in) acc.add(theta);
  });
  const double target = 1.0 / (100.0 * (1.0 - 1e-3 * 100 / 2));
  const ParamVector var = acc.variance();
  double worst = 0.0;
  for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(var[j] / target - 1.0));
  return {worst <= 0.02, "variances (" + fmt("%.6f", var[0]) + ", " + fmt("%.6f", var[1]) + ") vs " +
                             fmt("%.6f", target) + ", worst relative gap " + fmt("%.4f", worst)};
}

// ---------------------------------------------------------------------------------------------

Outcome bound_validity() {
  const PotentialModel model = make_gaussian_dataset(20, 50, 10, 50, 2.0, RandomStream(3));
  const auto post = gaussian_posterior(model);
  const ParamVector& theta_star = post.mean;
  const ParamVector post_var = ParamVector::Constant(model.d(), post.variance);
  // The chains start from a point mass at the origin.
  const double W0 = post.mean.squaredNorm() + model.d() * post.variance;
  const std::vector<std::int64_t> checks = {100, 1000, 10000};
  const int replicas = 100;
  bool pass = true;
  std::string detail;
  for (Algorithm alg : {Algorithm::QlsdSharp, Algorithm::QlsdStar, Algorithm::QlsdPP}) {
    SamplerConfig c;
    c.algorithm = alg;
    c.p = {0.8};
    c.compressor = {QuantizerSpec::Levels(16)};
    c.minibatch = minibatch_fraction(model, 10);
    c.refresh_period = 100;
    c.theta_star = theta_star;
    c.K = checks.back();
    c.keep_samples = false;
    c.record_every = 0;
    c.snapshots = checks;
    c.gamma = 1.0;
    const SamplerSetup setup = prepare_sampler(c, model);
    const BoundInputs in = bound_inputs_for(model, setup.oracle, setup.omega, setup.p, theta_star, 100);
    BoundReport report;
    BoundExtras extras;
    if (alg == Algorithm::QlsdPP) {
      report = bound_qlsd_pp(in, setup.alpha);
      std::vector<ParamVector> grads, etas;
      for (int i = 0; i < model.b(); ++i) {
        grads.push_back(model.grad_client(i, theta_star));
        etas.push_back(ParamVector::Zero(model.d()));
        extras.memory_gap_sq += grads.back().squaredNorm();
      }
      extras.psi0 = lyapunov_psi(ParamVector::Zero(model.d()), etas, theta_star, grads, report.gamma_bar,
                                 setup.alpha, setup.omega, setup.p);
    } else if (alg == Algorithm::QlsdStar) {
      report = bound_qlsd_star(in);
    } else {
      report = bound_qlsd(in);
    }
    c.gamma = report.gamma_bar;
    std::map<std::int64_t, MomentAccumulator> snaps;
    for (int r = 0; r < replicas; ++r) {
      c.seed = 5000 + r;
      const Trace t = run_chain(c, model);
      for (auto k : checks) {
        if (!snaps.count(k)) snaps.emplace(k, MomentAccumulator(model.d()));
        snaps.at(k).add(t.snapshots.at(k));
      }
    }
    detail += to_string(alg) + " (gamma=" + fmt("%.3g", c.gamma) + "):";
    for (auto k : checks) {
      const auto& acc = snaps.at(k);
      const double emp = gaussian_w2(acc.mean(), acc.variance(), post.mean, post_var);
      const double bound = w2_bound_curve(report, c.gamma, k, W0, theta_star.squaredNorm(), extras);
      pass = pass && emp <= bound;
      detail += " k=" + std::to_string(k) + " " + fmt("%.3g", emp) + "<=" + fmt("%.3g", bound);
    }
    detail += "; ";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------------------------

struct ToySetup {
  PotentialModel model;
  cli::Preset preset;
  double reference = 0.0;
};

const ToySetup& toy() {
  static const ToySetup setup = [] {
    const cli::Preset& p = cli::find_preset("toy-gaussian");
    PotentialModel model = cli::generate(p.data);
    const auto post = gaussian_posterior(model);
    const double ref = gaussian_norm_reference(post.mean, post.variance, 10000000,
                                               RandomStream(0).substream({label(StreamPurpose::Reference)}));
    return ToySetup{std::move(model), p, ref};
  }();
  return setup;
}

constexpr std::int64_t kToyK = 20000;
constexpr std::int64_t kToyBurn = 10000;
constexpr int kToySeeds = 10;

// Running mean of ||theta_k|| after burn-in, sampled at every checkpoint, plus cumulative bits.
struct NormCurve {
  std::vector<std::int64_t> k;
  std::vector<double> mean_norm;
  std::vector<double> bits;
};

NormCurve toy_curve(Algorithm alg, std::optional<int> levels, std::uint64_t seed, std::int64_t every,
                    std::int64_t burn_in = kToyBurn) {
  const ToySetup& t = toy();
  SamplerConfig c = t.preset.sampler;
  c.algorithm = alg;
  c.K = kToyK;
  c.burn_in = burn_in;
  c.seed = seed;
  c.compressor = {levels ? QuantizerSpec::Levels(*levels) : QuantizerSpec::Identity()};
  c.minibatch = minibatch_fraction(t.model, t.preset.minibatch_divisor);
  c.keep_samples = false;
  c.record_every = 0;
  NormCurve curve;
  double sum = 0.0, bits = 0.0;
  std::int64_t count = 0;
  run_chain(c, t.model, [&](std::int64_t k, const ParamVector& theta, const StepInfo& info) {
    bits += info.bits;
    if (k > c.burn_in) {
      sum += theta.norm();
      ++count;
    }
    if (k % every == 0 && count > 0) {
      curve.k.push_back(k);
      curve.mean_norm.push_back(sum / count);
      curve.bits.push_back(bits);
    }
  });
  return curve;
}

Outcome variance_reduction_ordering() {
  const double ref = toy().reference;
  bool pass = true;
  std::string detail = "reference E||theta||=" + fmt("%.6f", ref) + ";";
  for (int s : {1 << 4, 1 << 8, 1 << 16}) {
    double mse_star = 0.0, mse_sharp = 0.0;
    for (int seed = 0; seed < kToySeeds; ++seed) {
      const double a = toy_curve(Algorithm::QlsdStar, s, 100 + seed, kToyK).mean_norm.back() - ref;
      const double b = toy_curve(Algorithm::QlsdSharp, s, 100 + seed, kToyK).mean_norm.back() - ref;
      mse_star += a * a / kToySeeds;
      mse_sharp += b * b / kToySeeds;
    }
    pass = pass && mse_star < mse_sharp;
    detail += " s=" + std::to_string(s) + ": qlsd-star " + fmt("%.3g", mse_star) + " < qlsd-sharp " +
              fmt("%.3g", mse_sharp) + ";";
  }
  return {pass, detail};
}

Outcome compression_efficiency() {
  const double ref = toy().reference;
  // A short burn-in so the running estimate has to converge; bits are counted from the start.
  const std::int64_t every = 50, burn = 100;
  std::vector<double> mse_lsd, mse_q, bits_lsd, bits_q;
  std::vector<std::int64_t> ks;
  for (int seed = 0; seed < kToySeeds; ++seed) {
    const NormCurve a = toy_curve(Algorithm::LsdStar, std::nullopt, 100 + seed, every, burn);
    const NormCurve b = toy_curve(Algorithm::QlsdStar, 1 << 16, 100 + seed, every, burn);
    if (ks.empty()) {
      ks = a.k;
      mse_lsd.assign(ks.size(), 0.0);
      mse_q.assign(ks.size(), 0.0);
      bits_lsd.assign(ks.size(), 0.0);
      bits_q.assign(ks.size(), 0.0);
    }
    for (std::size_t t = 0; t < ks.size(); ++t) {
      mse_lsd[t] += std::pow(a.mean_norm[t] - ref, 2) / kToySeeds;
      mse_q[t] += std::pow(b.mean_norm[t] - ref, 2) / kToySeeds;
      bits_lsd[t] += a.bits[t] / kToySeeds;
      bits_q[t] += b.bits[t] / kToySeeds;
    }
  }
  const double plateau = mse_lsd.back();
  auto reach = [&](const std::vector<double>& mse) -> std::optional<std::size_t> {
    for (std::size_t t = 0; t < mse.size(); ++t) {
      if (mse[t] <= 1.1 * plateau) return t;
    }
    return std::nullopt;
  };
  const auto tl = reach(mse_lsd), tq = reach(mse_q);
  if (!tl || !tq) return {false, "a chain never came within 10% of the plateau " + fmt("%.3g", plateau)};
  const double ratio = bits_lsd[*tl] / bits_q[*tq];
  return {bits_q[*tq] < bits_lsd[*tl],
          "plateau " + fmt("%.3g", plateau) + "; lsd-star reaches it at k=" + std::to_string(ks[*tl]) + " with " +
              fmt("%.4g", bits_lsd[*tl]) + " bits, qlsd-star(s=2^16) at k=" + std::to_string(ks[*tq]) +
              " with " + fmt("%.4g", bits_q[*tq]) + " bits; ratio " + fmt("%.3f", ratio)};
}

// ---------------------------------------------------------------------------------------------

PotentialModel replicate_records(const PotentialModel& base, int factor) {
  std::vector<Eigen::MatrixXd> clients;
  for (int i = 0; i < base.b(); ++i) {
    const Eigen::MatrixXd& x = base.client(i).features;
    Eigen::MatrixXd y(x.rows(), x.cols() * factor);
    for (int f = 0; f < factor; ++f) y.middleCols(f * x.cols(), x.cols()) = x;
    clients.push_back(y);
  }
  return PotentialModel::gaussian(clients);
}

// Stationary W2^2 to the posterior divided by the step size.
double empirical_floor(Algorithm alg, const PotentialModel& model, double gamma, std::int64_t K,
                       std::uint64_t seed) {
  const auto post = gaussian_posterior(model);
  SamplerConfig c;
  c.algorithm = alg;
  c.gamma = gamma;
  c.K = K;
  c.burn_in = K / 10;
  c.seed = seed;
  c.theta0 = post.mean;
  c.theta_star = post.mean;
  c.compressor = {QuantizerSpec::Levels(16)};
  c.minibatch = {5};
  c.keep_samples = false;
  c.record_every = 0;
  MomentAccumulator acc(model.d());
  run_chain(c, model, [&](std::int64_t k, const ParamVector& theta, const StepInfo&) {
    if (k > c.burn_in) acc.add(theta);
  });
  return gaussian_w2(acc.mean(), acc.variance(), post.mean, ParamVector::Constant(model.d(), post.variance)) /
         gamma;
}

Outcome big_data_consistency() {
  const PotentialModel base = make_gaussian_dataset(4, 5, 50, 50, 2.0, RandomStream(21));
  const PotentialModel big = replicate_records(base, 4);
  const double eta = 0.5;
  const std::int64_t K = 200000;
  bool pass = true;
  std::string detail;
  for (Algorithm alg : {Algorithm::QlsdSharp, Algorithm::QlsdStar, Algorithm::QlsdPP}) {
    const double f1 = empirical_floor(alg, base, eta / base.N_total(), K, 31);
    const double f4 = empirical_floor(alg, big, eta / big.N_total(), K, 31);
    const double ratio = f4 / f1;
    const bool ok = alg == Algorithm::QlsdSharp ? ratio >= 2.0 : (ratio <= 2.0 && ratio >= 0.5);
    pass = pass && ok;
    detail += to_string(alg) + " floor " + fmt("%.3g", f1) + " -> " + fmt("%.3g", f4) + " (x" +
              fmt("%.2f", ratio) + "); ";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------------------------

// Posterior mean and diagonal variance of a two-dimensional model by tensor-grid quadrature.
std::pair<ParamVector, ParamVector> grid_moments(const PotentialModel& model, int n) {
  const ParamVector center = minimizer(model, 1e-10);
  // Laplace scale along each axis from a finite-difference Hessian diagonal.
  ParamVector half(2);
  for (int j = 0; j < 2; ++j) {
    ParamVector e = ParamVector::Zero(2);
    const double h = 1e-4;
    e[j] = h;
    const double curv = (model.grad(center + e)[j] - model.grad(center - e)[j]) / (2 * h);
    half[j] = 10.0 / std::sqrt(curv);
  }
  const double u0 = model.potential(center);
  double z = 0.0;
  ParamVector m1 = ParamVector::Zero(2), m2 = ParamVector::Zero(2);
  ParamVector theta(2);
  for (int a = 0; a <= n; ++a) {
    theta[0] = center[0] - half[0] + 2 * half[0] * a / n;
    for (int c = 0; c <= n; ++c) {
      theta[1] = center[1] - half[1] + 2 * half[1] * c / n;
      const double w = std::exp(-(model.potential(theta) - u0));
      z += w;
      m1 += w * theta;
      m2 += w * theta.cwiseAbs2();
    }
  }
  m1 /= z;
  m2 /= z;
  return {m1, m2 - m1.cwiseAbs2()};
}

constexpr double kMemoryGamma = 1e-4;
constexpr std::int64_t kMemoryK = 60000;
constexpr std::int64_t kMemoryBurn = 10000;

double variance_error(const PotentialModel& model, const ParamVector& target_var, int s, bool memory,
                      std::uint64_t seed) {
  SamplerConfig c;
  c.algorithm = Algorithm::QlsdPP;
  c.gamma = kMemoryGamma;
  c.K = kMemoryK;
  c.burn_in = kMemoryBurn;
  c.seed = seed;
  c.compressor = {QuantizerSpec::Levels(s)};
  c.minibatch = minibatch_fraction(model, 10);
  c.refresh_period = 100;
  c.alpha = memory ? -1.0 : 0.0;
  c.keep_samples = false;
  c.record_every = 0;
  MomentAccumulator acc(2);
  run_chain(c, model, [&](std::int64_t k, const ParamVector& theta, const StepInfo&) {
    if (k > c.burn_in) acc.add(theta);
  });
  return (acc.variance() - target_var).norm();
}

Outcome memory_benefit() {
  const PotentialModel model = make_synthetic_logistic(1.0, 1.0, 50, 2, 20, 100, 1.0, RandomStream(41));
  const auto [mean, var] = grid_moments(model, 600);
  bool pass = true;
  std::string detail = "posterior variance (" + fmt("%.3g", var[0]) + ", " + fmt("%.3g", var[1]) + ");";
  const int seeds = 10;
  for (int s : {2, 4}) {
    double with = 0.0, without = 0.0;
    for (int seed = 0; seed < seeds; ++seed) {
      with += variance_error(model, var, s, true, 700 + seed) / seeds;
      without += variance_error(model, var, s, false, 700 + seed) / seeds;
    }
    pass = pass && with < without;
    detail += " s=" + std::to_string(s) + ": memory " + fmt("%.3g", with) + " < no memory " +
              fmt("%.3g", without) + ";";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------------------------

Outcome brute_force_unbiasedness() {
  const PotentialModel model = make_gaussian_dataset(2, 3, 3, 3, 1.0, RandomStream(13));
  const ParamVector theta_star = minimizer(model);
  const std::vector<double> p = {0.6, 0.35};
  const int s = 1;
  RandomStream rs(17);
  bool pass = true;
  double worst = 0.0;
  std::size_t atoms_seen = 0;
  for (OracleVariant variant : {OracleVariant::Full, OracleVariant::Minibatch, OracleVariant::Star}) {
    OracleKind kind;
    kind.variant = variant;
    if (kind.stochastic()) kind.minibatch = {1, 1};
    if (variant == OracleVariant::Star) kind.theta_star = theta_star;
    for (int trial = 0; trial < 3; ++trial) {
      const ParamVector theta = theta_star + gaussian_draw(rs, model.d());
      // Per-client law of the decoded message given participation.
      std::vector<std::vector<Atom>> client_law(2);
      for (int i = 0; i < 2; ++i) {
        std::vector<MinibatchDraw> draws;
        if (kind.stochastic()) {
          draws = enumerate_minibatches(model.client_size(i), 1);
        } else {
          draws.push_back({});
        }
        for (const auto& draw : draws) {
          const ParamVector h =
              oracle_eval(kind, model, i, theta, nullptr, kind.stochastic() ? &draw : nullptr);
          for (const auto& q : quantizer_law(h, s)) client_law[i].push_back({q.prob / draws.size(), q.value});
        }
      }
      ParamVector expect = ParamVector::Zero(model.d());
      double total = 0.0;
      for (int mask = 0; mask < 4; ++mask) {
        const bool a0 = mask & 1, a1 = mask & 2;
        const double pa = (a0 ? p[0] : 1 - p[0]) * (a1 ? p[1] : 1 - p[1]);
        const std::vector<Atom> none = {{1.0, ParamVector()}};
        for (const auto& x : a0 ? client_law[0] : none) {
          for (const auto& y : a1 ? client_law[1] : none) {
            std::vector<std::optional<ParamVector>> msgs(2);
            if (a0) msgs[0] = x.value;
            if (a1) msgs[1] = y.value;
            const double prob = pa * x.prob * y.prob;
            expect += prob * aggregate(msgs, p, Aggregation::Analytic, model.d());
            total += prob;
            ++atoms_seen;
          }
        }
      }
      const ParamVector g = model.grad(theta);
      const double err = (expect - g).norm() / std::max(1.0, g.norm());
      worst = std::max(worst, err);
      pass = pass && err <= 1e-12 && std::abs(total - 1.0) <= 1e-12;
    }
  }
  return {pass, std::to_string(atoms_seen) + " atoms over full, minibatch and fixed-point oracles; worst relative error " +
                    fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------------------------

bool identical(const Trace& a, const Trace& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t t = 0; t < a.samples.size(); ++t) {
    if (!(a.samples[t].array() == b.samples[t].array()).all()) return false;
  }
  return true;
}

double max_gap(const Trace& a, const Trace& b) {
  double g = 0.0;
  for (std::size_t t = 0; t < a.samples.size(); ++t) {
    g = std::max(g, (a.samples[t] - b.samples[t]).norm() / (1.0 + a.samples[t].norm()));
  }
  return g;
}

Outcome trajectory_equivalences() {
  const PotentialModel het = make_gaussian_dataset(5, 10, 10, 30, 2.0, RandomStream(23));
  SamplerConfig base;
  base.gamma = 1e-3;
  base.K = 1000;
  base.seed = 77;
  base.minibatch = {3};
  base.p = {0.7};

  SamplerConfig lsd_star = base, qlsd_star = base, lsd_pp = base, qlsd_pp = base;
  lsd_star.algorithm = Algorithm::LsdStar;
  qlsd_star.algorithm = Algorithm::QlsdStar;
  qlsd_star.compressor = {QuantizerSpec::Identity()};
  lsd_pp.algorithm = Algorithm::LsdPP;
  qlsd_pp.algorithm = Algorithm::QlsdPP;
  qlsd_pp.compressor = {QuantizerSpec::Identity()};
  const bool e1 = identical(run_chain(lsd_star, het), run_chain(qlsd_star, het));
  const bool e2 = identical(run_chain(lsd_pp, het), run_chain(qlsd_pp, het));

  // Balanced dyadic records: the minimizer is exactly 1 and every client gradient vanishes there.
  Eigen::MatrixXd x(4, 4);
  x << 0.5, 1.5, 0.5, 1.5, 1.5, 0.5, 0.5, 1.5, 0.5, 0.5, 1.5, 1.5, 1.5, 1.5, 0.5, 0.5;
  const PotentialModel balanced = PotentialModel::gaussian({x, x, x});
  auto star_vs_pp = [&](const PotentialModel& model, const ParamVector& ts) {
    SamplerConfig a = base, b = base;
    a.p = b.p = {1.0};
    a.algorithm = Algorithm::QlsdStar;
    a.theta_star = ts;
    b.algorithm = Algorithm::QlsdPP;
    b.fixed_anchor = ts;
    b.alpha = 0.0;
    return std::pair{run_chain(a, model), run_chain(b, model)};
  };
  const auto [s1, p1] = star_vs_pp(balanced, ParamVector::Ones(4));
  const bool e3 = identical(s1, p1);
  const auto [s2, p2] = star_vs_pp(het, minimizer(het, 1e-12));
  const double gap = max_gap(s2, p2);
  return {e1 && e2 && e3 && gap <= 1e-10,
          std::string("lsd-star==qlsd-star+identity: ") + (e1 ? "bit-identical" : "differs") +
              "; lsd-pp==qlsd-pp+identity: " + (e2 ? "bit-identical" : "differs") +
              "; qlsd-star==qlsd-pp(anchor theta*, alpha=0, eta=0): " + (e3 ? "bit-identical" : "differs") +
              " on balanced data, max relative gap " + fmt("%.1e", gap) + " on heterogeneous data"};
}

// ---------------------------------------------------------------------------------------------

Outcome hpd_sanity() {
  const PotentialModel model = make_synthetic_logistic(1.0, 1.0, 10, 2, 20, 100, 1.0, RandomStream(51));
  SamplerConfig c;
  c.algorithm = Algorithm::QlsdPP;
  c.gamma = 1e-4;
  c.K = 20000;
  c.burn_in = 5000;
  c.seed = 61;
  c.compressor = {QuantizerSpec::Levels(4)};
  c.minibatch = minibatch_fraction(model, 10);
  c.record_every = 0;
  const auto a = hpd_eta(run_chain(c, model).samples, model, 0.1);
  const auto b = hpd_eta(run_chain(c, model).samples, model, 0.1);
  SamplerConfig perturbed = c;
  perturbed.gamma = 2e-4;
  const auto d = hpd_eta(run_chain(perturbed, model).samples, model, 0.1);
  const double same = hpd_relative_error(b.eta, a.eta);
  const double diff = hpd_relative_error(d.eta, a.eta);
  return {same == 0.0 && diff > 0.0 && !a.few_samples,
          "eta=" + fmt("%.6g", a.eta) + "; identical configs error " + fmt("%.3g", same) +
              ", doubled step size error " + fmt("%.3g", diff)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"quantizer contract", quantizer_contract},
      {"ULA stationary variance", ula_variance},
      {"convergence bound validity", bound_validity},
      {"variance reduction ordering", variance_reduction_ordering},
      {"compression efficiency ordering", compression_efficiency},
      {"big-data consistency", big_data_consistency},
      {"memory benefit", memory_benefit},
      {"brute-force unbiasedness", brute_force_unbiasedness},
      {"trajectory equivalences", trajectory_equivalences},
      {"HPD pipeline sanity", hpd_sanity},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::stoi(argv[a]));
  int failures = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    const int id = static_cast<int>(n) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[n].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
