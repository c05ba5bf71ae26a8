#include "presets.hpp"

#include "qlsd/errors.hpp"

namespace qlsd::cli {

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> v;

    Preset toy;
    toy.name = "toy-gaussian";
    toy.description = "Gaussian toy model, b=20, d=50, N_i in [10, 200], gamma=4.9e-4, n_i=N_i/10";
    toy.data = DataSpec{};
    toy.sampler.algorithm = Algorithm::QlsdStar;
    toy.sampler.gamma = 4.9e-4;
    toy.sampler.K = 20000;
    toy.sampler.burn_in = 10000;
    toy.sampler.compressor = {QuantizerSpec::Bits(16)};
    v.push_back(toy);

    Preset smoke = toy;
    smoke.name = "smoke";
    smoke.description = "toy-gaussian with K=1000";
    smoke.sampler.K = 1000;
    smoke.sampler.burn_in = 500;
    v.push_back(smoke);

    Preset small;
    small.name = "gaussian-small";
    small.description = "Gaussian model, b=2, N_i=50, d=2, homogeneous";
    small.data.b = 2;
    small.data.d = 2;
    small.data.n_min = small.data.n_max = 50;
    small.data.tau = 0.0;
    small.sampler.algorithm = Algorithm::Qlsd;
    small.sampler.gamma = 1e-3;
    small.sampler.K = 10000;
    small.sampler.burn_in = 1000;
    v.push_back(small);

    Preset logit;
    logit.name = "synthetic-logistic";
    logit.description = "SYNTHETIC(1,1) logistic regression, d=2, b=50, gamma=1e-5, l=100";
    logit.data.kind = ModelKind::LogisticRegression;
    logit.data.b = 50;
    logit.data.d = 2;
    logit.data.n_min = 20;
    logit.data.n_max = 100;
    logit.data.alpha = 1.0;
    logit.data.beta = 1.0;
    logit.data.prior_variance = 1.0;
    logit.sampler.algorithm = Algorithm::QlsdPP;
    logit.sampler.gamma = 1e-5;
    logit.sampler.K = 500000;
    logit.sampler.burn_in = 450000;
    logit.sampler.refresh_period = 100;
    logit.sampler.compressor = {QuantizerSpec::Levels(4)};
    v.push_back(logit);
    return v;
  }();
  return all;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += " " + p.name;
  throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
}

PotentialModel generate(const DataSpec& s) {
  const RandomStream root(s.seed);
  if (s.kind == ModelKind::GaussianQuadratic) {
    return make_gaussian_dataset(s.b, s.d, s.n_min, s.n_max, s.tau, root);
  }
  return make_synthetic_logistic(s.alpha, s.beta, s.b, s.d, s.n_min, s.n_max, s.prior_variance, root);
}

nlohmann::json to_json(const DataSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}, {"b", s.b},         {"d", s.d},
                   {"n_min", s.n_min},          {"n_max", s.n_max}, {"seed", s.seed}};
  if (s.kind == ModelKind::GaussianQuadratic) {
    j["tau"] = s.tau;
  } else {
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
    j["prior_variance"] = s.prior_variance;
  }
  return j;
}

DataSpec data_spec_from_json(const nlohmann::json& j, DataSpec s) {
  try {
    if (j.contains("kind")) s.kind = model_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("b")) s.b = j["b"].get<int>();
    if (j.contains("d")) s.d = j["d"].get<int>();
    if (j.contains("n_min")) s.n_min = j["n_min"].get<int>();
    if (j.contains("n_max")) s.n_max = j["n_max"].get<int>();
    if (j.contains("tau")) s.tau = j["tau"].get<double>();
    if (j.contains("alpha")) s.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) s.beta = j["beta"].get<double>();
    if (j.contains("prior_variance")) s.prior_variance = j["prior_variance"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed data spec: ") + e.what());
  }
  return s;
}

}  // namespace qlsd::cli
