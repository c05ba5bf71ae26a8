#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qlsd/models.hpp"
#include "qlsd/sampler.hpp"

namespace qlsd::cli {

struct DataSpec {
  ModelKind kind = ModelKind::GaussianQuadratic;
  int b = 20;
  int d = 50;
  int n_min = 10;
  int n_max = 200;
  double tau = 2.0;             // gaussian: spread of client centres
  double alpha = 1.0;           // logistic: model heterogeneity
  double beta = 1.0;            // logistic: feature heterogeneity
  double prior_variance = 1.0;  // logistic
  std::uint64_t seed = 1;
};

struct Preset {
  std::string name;
  std::string description;
  DataSpec data;
  SamplerConfig sampler;
  int minibatch_divisor = 10;  // n_i = max(1, N_i / divisor) unless explicit sizes are given
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

PotentialModel generate(const DataSpec& spec);
nlohmann::json to_json(const DataSpec& spec);
DataSpec data_spec_from_json(const nlohmann::json& j, DataSpec base = {});

}  // namespace qlsd::cli
