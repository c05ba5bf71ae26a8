#include "qlsd/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "qlsd/errors.hpp"

namespace qlsd {
namespace {

constexpr double kDivergenceNorm = 1e12;

template <typename T>
std::vector<T> expand(const std::vector<T>& v, int b, const T& fallback, const char* what) {
  if (v.empty()) return std::vector<T>(b, fallback);
  if (v.size() == 1) return std::vector<T>(b, v.front());
  if (static_cast<int>(v.size()) != b) {
    throw ConfigError(std::string(what) + " needs 1 or b=" + std::to_string(b) + " entries");
  }
  return v;
}

ParamVector ordered_sum(const std::vector<ParamVector>& vs, int d) {
  ParamVector s = ParamVector::Zero(d);
  for (const auto& v : vs) s += v;
  return s;
}

void advance_theta(ServerState& state, const SamplerSetup& setup, const ParamVector& g) {
  const double gamma = setup.config.gamma;
  state.theta -= gamma * g;
  if (setup.config.inject_noise) {
    RandomStream z = setup.root.substream({label(StreamPurpose::Noise), state.k});
    state.theta += std::sqrt(2.0 * gamma) * gaussian_draw(z, static_cast<int>(state.theta.size()));
  }
  ++state.k;
  if (!state.theta.allFinite() || state.theta.norm() > kDivergenceNorm) {
    throw DivergenceError(state.k);
  }
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Qlsd: return "qlsd";
    case Algorithm::QlsdSharp: return "qlsd-sharp";
    case Algorithm::QlsdStar: return "qlsd-star";
    case Algorithm::QlsdPP: return "qlsd-pp";
    case Algorithm::LsdStar: return "lsd-star";
    case Algorithm::LsdPP: return "lsd-pp";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  for (Algorithm a : {Algorithm::Qlsd, Algorithm::QlsdSharp, Algorithm::QlsdStar, Algorithm::QlsdPP,
                      Algorithm::LsdStar, Algorithm::LsdPP}) {
    if (to_string(a) == s) return a;
  }
  if (s == "qlsd#") return Algorithm::QlsdSharp;
  if (s == "qlsd*") return Algorithm::QlsdStar;
  if (s == "qlsd++") return Algorithm::QlsdPP;
  if (s == "lsd*") return Algorithm::LsdStar;
  if (s == "lsd++") return Algorithm::LsdPP;
  throw ConfigError("unknown algorithm '" + s + "'");
}

std::string to_string(Aggregation a) { return a == Aggregation::Analytic ? "analytic" : "algorithmic"; }

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "analytic") return Aggregation::Analytic;
  if (s == "algorithmic") return Aggregation::Algorithmic;
  throw ConfigError("unknown aggregation rule '" + s + "'");
}

bool uses_memory(Algorithm a) { return a == Algorithm::QlsdPP || a == Algorithm::LsdPP; }

OracleVariant default_oracle(Algorithm a) {
  switch (a) {
    case Algorithm::Qlsd: return OracleVariant::Full;
    case Algorithm::QlsdSharp: return OracleVariant::Minibatch;
    case Algorithm::QlsdStar:
    case Algorithm::LsdStar: return OracleVariant::Star;
    case Algorithm::QlsdPP:
    case Algorithm::LsdPP: return OracleVariant::Svrg;
  }
  return OracleVariant::Full;
}

SamplerSetup prepare_sampler(const SamplerConfig& config, const PotentialModel& model) {
  const int b = model.b();
  const int d = model.d();
  if (!(config.gamma > 0) || !std::isfinite(config.gamma)) throw ConfigError("gamma must be > 0");
  if (config.K < 1) throw ConfigError("K must be >= 1");
  if (config.burn_in < 0 || config.burn_in >= config.K) throw ConfigError("need 0 <= burn_in < K");
  if (config.thinning < 1) throw ConfigError("thinning must be >= 1");
  if (config.record_every < 0) throw ConfigError("record_every must be >= 0");

  SamplerSetup setup;
  setup.config = config;
  setup.root = RandomStream(config.seed);
  setup.p = expand(config.p, b, 1.0, "participation");
  for (double pi : setup.p) {
    if (!(pi > 0 && pi <= 1)) throw ConfigError("participation probabilities must lie in (0, 1]");
  }
  const bool lossless = config.algorithm == Algorithm::LsdStar || config.algorithm == Algorithm::LsdPP;
  setup.compressor = expand(config.compressor, b, QuantizerSpec::Identity(), "compressor");
  if (lossless) {
    for (const auto& c : setup.compressor) {
      if (!c.identity) throw ConfigError(to_string(config.algorithm) + " sends uncompressed gradients");
    }
  }
  double omega_max = 0.0;
  for (const auto& c : setup.compressor) {
    setup.omega.push_back(omega(c, d));
    omega_max = std::max(omega_max, setup.omega.back());
  }

  setup.oracle.variant = config.oracle.value_or(default_oracle(config.algorithm));
  if (setup.oracle.stochastic()) {
    setup.oracle.minibatch = expand(config.minibatch, b, 0, "minibatch");
    for (int i = 0; i < b; ++i) {
      if (setup.oracle.minibatch[i] == 0) setup.oracle.minibatch[i] = model.client_size(i);
    }
  }
  if (setup.oracle.variant == OracleVariant::Star) {
    setup.oracle.theta_star = config.theta_star ? *config.theta_star : minimizer(model, config.minimizer_tol);
    setup.config.theta_star = setup.oracle.theta_star;
  }
  setup.oracle.validate(model);

  if (uses_memory(config.algorithm)) {
    if (config.refresh_period < 1) throw ConfigError("refresh period must be >= 1");
    const double alpha_max = 1.0 / (omega_max + 1.0);
    setup.alpha = config.alpha < 0 ? alpha_max : config.alpha;
    if (setup.alpha > alpha_max * (1 + 1e-12)) {
      throw ConfigError("memory step alpha=" + std::to_string(setup.alpha) +
                        " exceeds 1/(omega+1)=" + std::to_string(alpha_max));
    }
    if (!config.eta0.empty() && static_cast<int>(config.eta0.size()) != b) {
      throw ConfigError("initial memories need one vector per client");
    }
    for (const auto& e : config.eta0) {
      if (e.size() != d) throw DimensionError("initial memory has wrong dimension");
    }
    if (config.fixed_anchor && config.fixed_anchor->size() != d) {
      throw DimensionError("anchor has wrong dimension");
    }
  }
  if (config.theta0 && config.theta0->size() != d) throw DimensionError("theta0 has wrong dimension");
  return setup;
}

ServerState initial_state(const SamplerSetup& setup, const PotentialModel& model) {
  const int d = model.d();
  ServerState st;
  st.theta = setup.config.theta0 ? *setup.config.theta0 : ParamVector::Zero(d);
  require_finite(st.theta, "theta0");
  st.zeta = st.theta;
  if (setup.config.eta0.empty()) {
    st.eta.assign(model.b(), ParamVector::Zero(d));
  } else {
    st.eta = setup.config.eta0;
  }
  st.eta_sum = ordered_sum(st.eta, d);
  if (uses_memory(setup.config.algorithm) && setup.config.fixed_anchor) {
    st.zeta = *setup.config.fixed_anchor;
    for (int i = 0; i < model.b(); ++i) st.grad_at_zeta.push_back(model.grad_client(i, st.zeta));
  }
  return st;
}

std::vector<bool> participation_draw(const std::vector<double>& p, const RandomStream& stream) {
  std::vector<bool> active(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= 1.0) {
      active[i] = true;
      continue;
    }
    RandomStream s = stream.substream({static_cast<std::int64_t>(i)});
    active[i] = s.uniform_open_left() <= p[i];
  }
  return active;
}

ParamVector aggregate(const std::vector<std::optional<ParamVector>>& messages,
                      const std::vector<double>& p, Aggregation rule, int d) {
  ParamVector g = ParamVector::Zero(d);
  int count = 0;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (!messages[i]) continue;
    ++count;
    if (rule == Aggregation::Analytic) {
      if (p[i] == 1.0) {
        g += *messages[i];
      } else {
        g += *messages[i] / p[i];
      }
    } else {
      g += *messages[i];
    }
  }
  if (rule == Aggregation::Algorithmic && count > 0 && count != static_cast<int>(messages.size())) {
    g *= static_cast<double>(messages.size()) / count;
  }
  return g;
}

namespace {

// Runs every client for iteration state.k; `shift` subtracts the client memory first.
std::vector<std::optional<ParamVector>> client_round(const ServerState& state,
                                                     const SamplerSetup& setup,
                                                     const PotentialModel& model, bool shift,
                                                     StepInfo& info) {
  const int b = model.b();
  const std::vector<bool> active = participation_draw(
      setup.p, setup.root.substream({label(StreamPurpose::Participation), state.k}));
  std::vector<std::optional<ParamVector>> out(b);
  const bool svrg = setup.oracle.variant == OracleVariant::Svrg;
  for (int i = 0; i < b; ++i) {
    if (!active[i]) continue;
    ++info.active_count;
    std::optional<MinibatchDraw> draw;
    if (setup.oracle.stochastic()) {
      RandomStream ms = setup.root.substream({label(StreamPurpose::Minibatch), state.k, i});
      draw = sample_minibatch(model.client_size(i), setup.oracle.minibatch[i], ms);
    }
    ParamVector h = oracle_eval(setup.oracle, model, i, state.theta, svrg ? &state.zeta : nullptr,
                                draw ? &*draw : nullptr,
                                svrg && !state.grad_at_zeta.empty() ? &state.grad_at_zeta[i] : nullptr);
    if (shift) h -= state.eta[i];
    RandomStream qs = setup.root.substream({label(StreamPurpose::Quantizer), state.k, i});
    const CompressedMessage msg = quantize(h, setup.compressor[i], qs);
    info.bits += bit_cost(msg);
    out[i] = decode(msg);
  }
  return out;
}

}  // namespace

StepInfo qlsd_step(ServerState& state, const SamplerSetup& setup, const PotentialModel& model) {
  if (uses_memory(setup.config.algorithm)) throw ContractError("qlsd_step runs memoryless variants");
  StepInfo info;
  auto msgs = client_round(state, setup, model, false, info);
  const ParamVector g = aggregate(msgs, setup.p, setup.config.aggregation, model.d());
  advance_theta(state, setup, g);
  if (setup.keep_messages) info.messages = std::move(msgs);
  return info;
}

StepInfo qlsd_pp_step(ServerState& state, const SamplerSetup& setup, const PotentialModel& model) {
  if (!uses_memory(setup.config.algorithm)) throw ContractError("qlsd_pp_step runs memory variants");
  const int b = model.b();
  if (!setup.config.fixed_anchor && state.k % setup.config.refresh_period == 0) {
    state.zeta = state.theta;
    state.grad_at_zeta.clear();
    if (setup.oracle.variant == OracleVariant::Svrg) {
      for (int i = 0; i < b; ++i) state.grad_at_zeta.push_back(model.grad_client(i, state.zeta));
    }
  }
  StepInfo info;
  auto msgs = client_round(state, setup, model, true, info);
  ParamVector g = state.eta_sum;
  g += aggregate(msgs, setup.p, setup.config.aggregation, model.d());
  advance_theta(state, setup, g);
  if (setup.alpha != 0.0) {
    for (int i = 0; i < b; ++i) {
      if (msgs[i]) state.eta[i] += setup.alpha * *msgs[i];
    }
    state.eta_sum = ordered_sum(state.eta, model.d());
  }
  if (setup.keep_messages) info.messages = std::move(msgs);
  return info;
}

StepInfo sampler_step(ServerState& state, const SamplerSetup& setup, const PotentialModel& model) {
  return uses_memory(setup.config.algorithm) ? qlsd_pp_step(state, setup, model)
                                             : qlsd_step(state, setup, model);
}

Trace run_chain(const SamplerConfig& config, const PotentialModel& model,
                const StepObserver& observer) {
  const SamplerSetup setup = prepare_sampler(config, model);
  ServerState state = initial_state(setup, model);
  Trace trace;
  const auto& cfg = setup.config;
  std::vector<std::int64_t> snaps = cfg.snapshots;
  std::sort(snaps.begin(), snaps.end());
  auto next_snap = snaps.begin();
  auto take_snapshot = [&]() {
    while (next_snap != snaps.end() && *next_snap == state.k) {
      trace.snapshots[state.k] = state.theta;
      ++next_snap;
    }
  };
  take_snapshot();
  if (cfg.keep_samples) {
    trace.samples.reserve(static_cast<std::size_t>((cfg.K - cfg.burn_in + cfg.thinning - 1) / cfg.thinning));
  }
  for (std::int64_t k = 0; k < cfg.K; ++k) {
    const StepInfo info = sampler_step(state, setup, model);
    trace.bit_ledger.record(info.bits);
    const std::int64_t kk = state.k;
    if (cfg.record_every > 0 && kk % cfg.record_every == 0) {
      trace.records.push_back(IterationRecord{kk, state.theta, info.bits, info.active_count});
    }
    if (cfg.keep_samples && kk > cfg.burn_in && (kk - cfg.burn_in - 1) % cfg.thinning == 0) {
      trace.samples.push_back(state.theta);
    }
    take_snapshot();
    if (observer) observer(kk, state.theta, info);
  }
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace qlsd
