#include "qlsd/io.hpp"

#include <openssl/sha.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qlsd/errors.hpp"

namespace qlsd {

using nlohmann::json;

json dataset_to_json(const PotentialModel& model, const json& generator) {
  json doc;
  doc["format"] = "qlsd-dataset";
  doc["version"] = 1;
  doc["kind"] = to_string(model.kind());
  doc["b"] = model.b();
  doc["d"] = model.d();
  doc["sizes"] = model.sizes();
  if (model.kind() == ModelKind::LogisticRegression) doc["prior_variance"] = model.prior_variance();
  if (!generator.is_null()) doc["generator"] = generator;
  std::vector<double> payload;
  for (int i = 0; i < model.b(); ++i) {
    const auto& c = model.client(i);
    for (int j = 0; j < c.size(); ++j) {
      for (int k = 0; k < model.d(); ++k) payload.push_back(c.features(k, j));
      if (model.kind() == ModelKind::LogisticRegression) payload.push_back(c.labels[j]);
    }
  }
  doc["payload"] = std::move(payload);
  return doc;
}

PotentialModel dataset_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "qlsd-dataset") throw ConfigError("not a dataset file");
    const ModelKind kind = model_kind_from_string(doc.at("kind").get<std::string>());
    const int d = doc.at("d").get<int>();
    const auto sizes = doc.at("sizes").get<std::vector<int>>();
    const auto& payload = doc.at("payload");
    if (static_cast<int>(sizes.size()) != doc.at("b").get<int>()) throw ConfigError("b and sizes disagree");
    const int stride = kind == ModelKind::LogisticRegression ? d + 1 : d;
    std::size_t expected = 0;
    for (int n : sizes) expected += static_cast<std::size_t>(n) * stride;
    if (payload.size() != expected) throw ConfigError("payload length does not match header");
    std::size_t pos = 0;
    std::vector<Eigen::MatrixXd> feats;
    std::vector<Eigen::VectorXd> labels;
    for (int n : sizes) {
      Eigen::MatrixXd x(d, n);
      Eigen::VectorXd y(kind == ModelKind::LogisticRegression ? n : 0);
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < d; ++k) x(k, j) = payload[pos++].get<double>();
        if (kind == ModelKind::LogisticRegression) y[j] = payload[pos++].get<double>();
      }
      feats.push_back(std::move(x));
      labels.push_back(std::move(y));
    }
    if (kind == ModelKind::GaussianQuadratic) return PotentialModel::gaussian(std::move(feats));
    return PotentialModel::logistic(std::move(feats), std::move(labels),
                                    doc.at("prior_variance").get<double>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed dataset: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

void save_dataset(const std::string& path, const PotentialModel& model, const json& generator) {
  write_file(path, dataset_to_json(model, generator).dump() + "\n");
}

PotentialModel load_dataset(const std::string& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("dataset " + path + " is not valid JSON: " + e.what());
  }
  return dataset_from_json(doc);
}

std::string content_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream hex;
  for (unsigned char c : digest) hex << std::hex << std::setw(2) << std::setfill('0') << int{c};
  return hex.str();
}

namespace {

json vec_to_json(const ParamVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ParamVector vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const ParamVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json config_to_json(const SamplerConfig& c) {
  json j;
  j["algorithm"] = to_string(c.algorithm);
  j["gamma"] = c.gamma;
  j["K"] = c.K;
  j["burn_in"] = c.burn_in;
  j["thinning"] = c.thinning;
  j["seed"] = c.seed;
  j["p"] = c.p;
  std::vector<std::string> comp;
  for (const auto& q : c.compressor) comp.push_back(to_string(q));
  j["compressor"] = comp;
  j["minibatch"] = c.minibatch;
  j["alpha"] = c.alpha;
  j["refresh_period"] = c.refresh_period;
  j["aggregation"] = to_string(c.aggregation);
  if (c.oracle) j["oracle"] = to_string(*c.oracle);
  if (c.theta0) j["theta0"] = vec_to_json(*c.theta0);
  if (!c.eta0.empty()) {
    json e = json::array();
    for (const auto& v : c.eta0) e.push_back(vec_to_json(v));
    j["eta0"] = e;
  }
  if (c.theta_star) j["theta_star"] = vec_to_json(*c.theta_star);
  if (c.fixed_anchor) j["fixed_anchor"] = vec_to_json(*c.fixed_anchor);
  j["inject_noise"] = c.inject_noise;
  j["record_every"] = c.record_every;
  j["minimizer_tol"] = c.minimizer_tol;
  return j;
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig c;
  try {
    if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("K")) c.K = j["K"].get<std::int64_t>();
    if (j.contains("burn_in")) c.burn_in = j["burn_in"].get<std::int64_t>();
    if (j.contains("thinning")) c.thinning = j["thinning"].get<std::int64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("p")) c.p = j["p"].get<std::vector<double>>();
    if (j.contains("compressor")) {
      const auto& cj = j["compressor"];
      if (cj.is_string()) {
        c.compressor = {quantizer_from_string(cj.get<std::string>())};
      } else {
        for (const auto& q : cj) c.compressor.push_back(quantizer_from_string(q.get<std::string>()));
      }
    }
    if (j.contains("minibatch")) c.minibatch = j["minibatch"].get<std::vector<int>>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("refresh_period")) c.refresh_period = j["refresh_period"].get<int>();
    if (j.contains("aggregation")) c.aggregation = aggregation_from_string(j["aggregation"].get<std::string>());
    if (j.contains("oracle")) {
      const auto name = j["oracle"].get<std::string>();
      bool found = false;
      for (OracleVariant v : {OracleVariant::Full, OracleVariant::Minibatch, OracleVariant::Star,
                              OracleVariant::Svrg}) {
        if (to_string(v) == name) {
          c.oracle = v;
          found = true;
        }
      }
      if (!found) throw ConfigError("unknown oracle '" + name + "'");
    }
    if (j.contains("theta0")) c.theta0 = vec_from_json(j["theta0"]);
    if (j.contains("eta0")) {
      for (const auto& e : j["eta0"]) c.eta0.push_back(vec_from_json(e));
    }
    if (j.contains("theta_star")) c.theta_star = vec_from_json(j["theta_star"]);
    if (j.contains("fixed_anchor")) c.fixed_anchor = vec_from_json(j["fixed_anchor"]);
    if (j.contains("inject_noise")) c.inject_noise = j["inject_noise"].get<bool>();
    if (j.contains("record_every")) c.record_every = j["record_every"].get<std::int64_t>();
    if (j.contains("minimizer_tol")) c.minimizer_tol = j["minimizer_tol"].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sampler config: ") + e.what());
  }
  return c;
}

void write_trace_csv(const std::string& path, const Trace& trace, int d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "k";
  for (int k = 0; k < d; ++k) out << ",theta_" << (k + 1);
  out << ",bits_uplink,active_count\n";
  char buf[32];
  for (const auto& r : trace.records) {
    out << r.k;
    for (int k = 0; k < d; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", r.theta[k]);
      out << ',' << buf;
    }
    out << ',' << r.bits_uplink << ',' << r.active_count << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace qlsd
