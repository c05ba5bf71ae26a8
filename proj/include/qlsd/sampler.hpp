#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlsd/compression.hpp"
#include "qlsd/core.hpp"
#include "qlsd/models.hpp"
#include "qlsd/oracles.hpp"

namespace qlsd {

enum class Algorithm { Qlsd, QlsdSharp, QlsdStar, QlsdPP, LsdStar, LsdPP };
enum class Aggregation { Analytic, Algorithmic };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);
bool uses_memory(Algorithm a);
OracleVariant default_oracle(Algorithm a);

struct SamplerConfig {
  Algorithm algorithm = Algorithm::Qlsd;
  double gamma = 1e-3;
  std::int64_t K = 1000;
  std::int64_t burn_in = 0;
  std::int64_t thinning = 1;
  std::uint64_t seed = 0;
  // Per-client vectors; empty means the default, one entry is broadcast to all clients.
  std::vector<double> p;                   // default 1
  std::vector<QuantizerSpec> compressor;   // default identity
  std::vector<int> minibatch;              // default N_i
  double alpha = -1.0;                     // negative: 1 / (max omega + 1)
  int refresh_period = 100;
  Aggregation aggregation = Aggregation::Analytic;
  std::optional<OracleVariant> oracle;     // override the algorithm's oracle
  std::optional<ParamVector> theta0;       // default zero
  std::vector<ParamVector> eta0;           // default zero
  std::optional<ParamVector> theta_star;   // computed when needed and absent
  std::optional<ParamVector> fixed_anchor; // memory variants: never refresh, zeta = anchor
  bool inject_noise = true;
  std::int64_t record_every = 1;           // 0 keeps no IterationRecords
  bool keep_samples = true;
  std::vector<std::int64_t> snapshots;     // iterations whose theta is kept
  double minimizer_tol = 1e-8;
};

// Config with per-client settings expanded and checked against a model.
struct SamplerSetup {
  SamplerConfig config;
  OracleKind oracle;
  std::vector<double> p;
  std::vector<QuantizerSpec> compressor;
  std::vector<double> omega;
  double alpha = 0.0;
  RandomStream root;
  bool keep_messages = false;
};

SamplerSetup prepare_sampler(const SamplerConfig& config, const PotentialModel& model);

struct ServerState {
  ParamVector theta;
  ParamVector zeta;
  std::vector<ParamVector> eta;
  ParamVector eta_sum;
  std::vector<ParamVector> grad_at_zeta;  // cached grad U_i(zeta)
  std::int64_t k = 0;
};

ServerState initial_state(const SamplerSetup& setup, const PotentialModel& model);

struct StepInfo {
  std::uint64_t bits = 0;
  int active_count = 0;
  std::vector<std::optional<ParamVector>> messages;  // decoded, filled when keep_messages
};

// Independent Bernoulli(p_i) per client, each client on its own substream of `stream`.
std::vector<bool> participation_draw(const std::vector<double>& p, const RandomStream& stream);

// Analytic: sum_{i in A} g_i / p_i. Algorithmic: (b / |A|) sum_{i in A} g_i. Empty A gives 0.
ParamVector aggregate(const std::vector<std::optional<ParamVector>>& messages,
                      const std::vector<double>& p, Aggregation rule, int d);

StepInfo qlsd_step(ServerState& state, const SamplerSetup& setup, const PotentialModel& model);
StepInfo qlsd_pp_step(ServerState& state, const SamplerSetup& setup, const PotentialModel& model);
StepInfo sampler_step(ServerState& state, const SamplerSetup& setup, const PotentialModel& model);

struct Trace {
  std::vector<ParamVector> samples;
  std::vector<IterationRecord> records;
  BitLedger bit_ledger;
  std::map<std::int64_t, ParamVector> snapshots;
  ServerState final_state;
};

using StepObserver =
    std::function<void(std::int64_t k, const ParamVector& theta, const StepInfo& info)>;

Trace run_chain(const SamplerConfig& config, const PotentialModel& model,
                const StepObserver& observer = {});

}  // namespace qlsd
