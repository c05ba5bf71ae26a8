#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "presets.hpp"
#include "qlsd/bounds.hpp"
#include "qlsd/diagnostics.hpp"
#include "qlsd/errors.hpp"
#include "qlsd/io.hpp"

namespace qlsd::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kArtifactVersion = "1.0.0";

struct Options {
  std::string preset = "toy-gaussian";
  std::string config_path;
  std::string data_path;
  std::string out;

  // data overrides
  std::optional<int> b, d, n_min, n_max;
  std::optional<double> tau, data_alpha, beta, prior_variance;
  std::optional<std::uint64_t> data_seed;

  // sampler overrides
  std::optional<std::string> algorithm, aggregation;
  std::optional<double> gamma, memory_step;
  std::optional<std::int64_t> K, burn_in, thinning, record_every;
  std::optional<std::uint64_t> seed;
  std::vector<double> p;
  std::vector<std::string> compressor;
  std::vector<int> minibatch;
  std::optional<int> minibatch_divisor, refresh;
  std::int64_t checkpoint_every = 0;

  // compare
  std::vector<std::string> runs;
  std::optional<double> reference;
  std::int64_t reference_draws = 1000000;
};

struct Experiment {
  Preset preset;
  std::string data_path;
  std::optional<DataSpec> data;
};

void add_data_flags(CLI::App* app, Options& o) {
  app->add_option("--b", o.b, "number of clients");
  app->add_option("--d", o.d, "parameter dimension");
  app->add_option("--n-min", o.n_min, "smallest client dataset");
  app->add_option("--n-max", o.n_max, "largest client dataset");
  app->add_option("--tau", o.tau, "spread of Gaussian client centres");
  app->add_option("--data-alpha", o.data_alpha, "SYNTHETIC alpha");
  app->add_option("--beta", o.beta, "SYNTHETIC beta");
  app->add_option("--prior-variance", o.prior_variance, "logistic prior variance");
  app->add_option("--data-seed", o.data_seed, "dataset seed");
}

void add_source_flags(CLI::App* app, Options& o) {
  app->add_option("--preset", o.preset, "named experiment preset");
  app->add_option("--config", o.config_path, "JSON experiment file");
}

void add_sampler_flags(CLI::App* app, Options& o) {
  app->add_option("--data", o.data_path, "dataset file written by gen-data");
  app->add_option("--algorithm", o.algorithm,
                  "qlsd | qlsd-sharp | qlsd-star | qlsd-pp | lsd-star | lsd-pp");
  app->add_option("--gamma", o.gamma, "step size");
  app->add_option("--K", o.K, "iterations");
  app->add_option("--burn-in", o.burn_in, "burn-in iterations");
  app->add_option("--thinning", o.thinning, "keep every n-th sample");
  app->add_option("--seed", o.seed, "chain seed");
  app->add_option("--p", o.p, "participation probability (one value or one per client)");
  app->add_option("--compressor", o.compressor, "identity | s=<levels> | bits=<p> (one or per client)");
  app->add_option("--minibatch", o.minibatch, "minibatch size (one value or one per client)");
  app->add_option("--minibatch-divisor", o.minibatch_divisor, "n_i = max(1, N_i / divisor)");
  app->add_option("--memory-step", o.memory_step, "memory step alpha for qlsd-pp / lsd-pp");
  app->add_option("--refresh", o.refresh, "control-variate refresh period l");
  app->add_option("--aggregation", o.aggregation, "analytic | algorithmic");
  app->add_option("--record-every", o.record_every, "write every n-th iterate to the trace");
}

Experiment load_experiment(const Options& o) {
  Experiment e;
  json cfg;
  std::string preset_name = o.preset;
  if (!o.config_path.empty()) {
    try {
      cfg = json::parse(read_file(o.config_path));
    } catch (const json::exception& ex) {
      throw ConfigError("config " + o.config_path + " is not valid JSON: " + ex.what());
    }
    if (cfg.contains("preset")) preset_name = cfg["preset"].get<std::string>();
  }
  e.preset = find_preset(preset_name);
  if (cfg.contains("data")) e.preset.data = data_spec_from_json(cfg["data"], e.preset.data);
  if (cfg.contains("data_path")) e.data_path = cfg["data_path"].get<std::string>();
  if (cfg.contains("sampler")) {
    json merged = config_to_json(e.preset.sampler);
    merged.update(cfg["sampler"]);
    e.preset.sampler = config_from_json(merged);
  }
  if (cfg.contains("minibatch_divisor")) e.preset.minibatch_divisor = cfg["minibatch_divisor"].get<int>();

  DataSpec& ds = e.preset.data;
  if (o.b) ds.b = *o.b;
  if (o.d) ds.d = *o.d;
  if (o.n_min) ds.n_min = *o.n_min;
  if (o.n_max) ds.n_max = *o.n_max;
  if (o.tau) ds.tau = *o.tau;
  if (o.data_alpha) ds.alpha = *o.data_alpha;
  if (o.beta) ds.beta = *o.beta;
  if (o.prior_variance) ds.prior_variance = *o.prior_variance;
  if (o.data_seed) ds.seed = *o.data_seed;
  if (!o.data_path.empty()) e.data_path = o.data_path;
  if (e.data_path.empty()) e.data = ds;

  SamplerConfig& sc = e.preset.sampler;
  if (o.algorithm) sc.algorithm = algorithm_from_string(*o.algorithm);
  if (o.aggregation) sc.aggregation = aggregation_from_string(*o.aggregation);
  if (o.gamma) sc.gamma = *o.gamma;
  if (o.memory_step) sc.alpha = *o.memory_step;
  if (o.K) sc.K = *o.K;
  if (o.burn_in) sc.burn_in = *o.burn_in;
  if (o.thinning) sc.thinning = *o.thinning;
  if (o.record_every) sc.record_every = *o.record_every;
  if (o.seed) sc.seed = *o.seed;
  if (!o.p.empty()) sc.p = o.p;
  if (!o.compressor.empty()) {
    sc.compressor.clear();
    for (const auto& c : o.compressor) sc.compressor.push_back(quantizer_from_string(c));
  }
  if (sc.algorithm == Algorithm::LsdStar || sc.algorithm == Algorithm::LsdPP) {
    bool all_identity = true;
    for (const auto& c : sc.compressor) all_identity = all_identity && c.identity;
    // Preset compressors are dropped for the uncompressed variants; explicit ones are checked later.
    if (o.compressor.empty() && !all_identity) sc.compressor = {QuantizerSpec::Identity()};
  }
  if (!o.minibatch.empty()) sc.minibatch = o.minibatch;
  if (o.minibatch_divisor) e.preset.minibatch_divisor = *o.minibatch_divisor;
  if (o.refresh) sc.refresh_period = *o.refresh;
  return e;
}

PotentialModel load_model(const Experiment& e, std::string* serialized = nullptr) {
  if (!e.data_path.empty()) {
    if (serialized) *serialized = read_file(e.data_path);
    return load_dataset(e.data_path);
  }
  PotentialModel model = generate(*e.data);
  if (serialized) *serialized = dataset_to_json(model, to_json(*e.data)).dump() + "\n";
  return model;
}

SamplerConfig finalize_sampler(const Experiment& e, const PotentialModel& model) {
  SamplerConfig sc = e.preset.sampler;
  if (sc.minibatch.empty()) sc.minibatch = minibatch_fraction(model, e.preset.minibatch_divisor);
  return sc;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("gen-data needs --out");
  const Experiment e = load_experiment(o);
  if (!e.data) throw ConfigError("gen-data generates data; do not pass --data");
  const PotentialModel model = generate(*e.data);
  const std::string text = dataset_to_json(model, to_json(*e.data)).dump() + "\n";
  write_file(o.out, text);
  json manifest{{"artifact_version", kArtifactVersion},
                {"dataset", o.out},
                {"dataset_hash", content_hash(text)},
                {"generator", to_json(*e.data)},
                {"seed", e.data->seed},
                {"b", model.b()},
                {"d", model.d()},
                {"N_total", model.N_total()}};
  write_file(o.out + ".manifest.json", manifest.dump(2) + "\n");
  out << manifest.dump(2) << "\n";
  return kOk;
}

int cmd_run(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("run needs --out <directory>");
  const Experiment e = load_experiment(o);
  std::string dataset_text;
  const PotentialModel model = load_model(e, &dataset_text);
  const SamplerConfig sc = finalize_sampler(e, model);
  ensure_dir(o.out);

  const std::int64_t every = o.checkpoint_every > 0 ? o.checkpoint_every : std::max<std::int64_t>(1, sc.K / 100);
  std::ostringstream ledger;
  ledger << "k,bits,cumulative_bits\n";
  std::uint64_t since = 0, cumulative = 0;
  const Trace trace = run_chain(sc, model, [&](std::int64_t k, const ParamVector&, const StepInfo& info) {
    since += info.bits;
    cumulative += info.bits;
    if (k % every == 0 || k == sc.K) {
      ledger << k << ',' << since << ',' << cumulative << '\n';
      since = 0;
    }
  });

  const std::string dataset_file = o.out + "/dataset.json";
  write_file(dataset_file, dataset_text);
  write_trace_csv(o.out + "/trace.csv", trace, model.d());
  write_file(o.out + "/ledger.csv", ledger.str());
  const json cfg = config_to_json(sc);
  json manifest{{"artifact_version", kArtifactVersion},
                {"config", cfg},
                {"config_hash", content_hash(cfg.dump())},
                {"dataset", "dataset.json"},
                {"dataset_hash", content_hash(dataset_text)},
                {"seed", sc.seed},
                {"minibatch_divisor", e.preset.minibatch_divisor},
                {"model", {{"kind", to_string(model.kind())}, {"b", model.b()}, {"d", model.d()}, {"sizes", model.sizes()}}},
                {"total_bits", trace.bit_ledger.total},
                {"samples", trace.samples.size()},
                {"checkpoint_every", every}};
  if (e.data) manifest["generator"] = to_json(*e.data);
  write_file(o.out + "/manifest.json", manifest.dump(2) + "\n");
  out << "ran " << to_string(sc.algorithm) << " for " << sc.K << " iterations, " << trace.bit_ledger.total
      << " uplink bits, outputs in " << o.out << "\n";
  return kOk;
}

int cmd_bounds(const Options& o, std::ostream& out) {
  const Experiment e = load_experiment(o);
  const PotentialModel model = load_model(e);
  SamplerConfig sc = finalize_sampler(e, model);
  // The memory step is range-checked by the bound itself so the threshold is reported.
  const double requested_alpha = sc.alpha;
  sc.alpha = -1.0;
  const SamplerSetup setup = prepare_sampler(sc, model);
  const double alpha = requested_alpha < 0 ? setup.alpha : requested_alpha;
  const ParamVector theta_star = minimizer(model, sc.minimizer_tol);
  BoundInputs in = bound_inputs_for(model, setup.oracle, setup.omega, setup.p, theta_star,
                                    sc.refresh_period);
  if (o.gamma) in.gamma_bar = *o.gamma;
  BoundReport report;
  switch (sc.algorithm) {
    case Algorithm::Qlsd:
    case Algorithm::QlsdSharp: report = bound_qlsd(in); break;
    case Algorithm::QlsdStar:
    case Algorithm::LsdStar: report = bound_qlsd_star(in); break;
    case Algorithm::QlsdPP:
    case Algorithm::LsdPP: report = bound_qlsd_pp(in, alpha); break;
  }
  json j = to_json(report);
  j["inputs"] = {{"m", in.m},         {"L", in.L},     {"M", in.M_per_client}, {"Mbar", in.Mbar},
                 {"d", in.d},         {"b", in.b},     {"omega", in.omega_per_client},
                 {"p", in.p_per_client}, {"n", in.n_per_client}, {"N", in.N_per_client},
                 {"sigma_star", in.sigma_star}, {"B_star", in.B_star}, {"l", in.l}};
  const std::string text = j.dump(2) + "\n";
  if (!o.out.empty()) write_file(o.out, text);
  out << text;
  return kOk;
}

struct RunData {
  std::string label;
  json manifest;
  std::vector<std::pair<std::int64_t, std::uint64_t>> checkpoints;  // k, cumulative bits
  std::vector<std::pair<std::int64_t, double>> norms;              // k, ||theta_k||
};

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw IoError(path + " is empty");
  return rows;
}

RunData load_run(const std::string& dir) {
  RunData r;
  r.label = fs::path(dir).filename().string();
  if (r.label.empty()) r.label = fs::path(dir).parent_path().filename().string();
  try {
    r.manifest = json::parse(read_file(dir + "/manifest.json"));
  } catch (const json::exception& ex) {
    throw ConfigError(dir + "/manifest.json is not valid JSON: " + ex.what());
  }
  const auto ledger = read_csv(dir + "/ledger.csv");
  for (std::size_t t = 1; t < ledger.size(); ++t) {
    r.checkpoints.emplace_back(std::stoll(ledger[t].at(0)), std::stoull(ledger[t].at(2)));
  }
  const auto trace = read_csv(dir + "/trace.csv");
  const std::size_t d = trace.front().size() - 3;
  for (std::size_t t = 1; t < trace.size(); ++t) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double x = std::stod(trace[t].at(1 + k));
      sq += x * x;
    }
    r.norms.emplace_back(std::stoll(trace[t][0]), std::sqrt(sq));
  }
  return r;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.runs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::vector<RunData> runs;
  for (const auto& dir : o.runs) runs.push_back(load_run(dir));
  const std::string hash = runs.front().manifest.at("dataset_hash").get<std::string>();
  std::map<std::string, int> seen;
  for (auto& r : runs) {
    if (r.manifest.at("dataset_hash").get<std::string>() != hash) {
      throw ConfigError("runs were produced on different datasets");
    }
    if (r.checkpoints.size() != runs.front().checkpoints.size()) {
      throw ConfigError("runs have different ledger checkpoints");
    }
    for (std::size_t t = 0; t < r.checkpoints.size(); ++t) {
      if (r.checkpoints[t].first != runs.front().checkpoints[t].first) {
        throw ConfigError("runs have different ledger checkpoints");
      }
    }
    const int n = seen[r.label]++;
    if (n > 0) r.label += "_" + std::to_string(n + 1);
  }

  double reference = 0.0;
  if (o.reference) {
    reference = *o.reference;
  } else {
    const PotentialModel model = load_dataset(o.runs.front() + "/dataset.json");
    if (model.kind() != ModelKind::GaussianQuadratic) {
      throw ConfigError("pass --reference for non-Gaussian models");
    }
    const GaussianPosterior post = gaussian_posterior(model);
    reference = gaussian_norm_reference(post.mean, post.variance, o.reference_draws,
                                        RandomStream(0).substream({label(StreamPurpose::Reference)}));
  }

  std::ostringstream table;
  table << "k";
  for (const auto& r : runs) table << ',' << r.label << "_bits," << r.label << "_mse";
  table << '\n';
  for (std::size_t t = 0; t < runs.front().checkpoints.size(); ++t) {
    const std::int64_t k = runs.front().checkpoints[t].first;
    table << k;
    for (const auto& r : runs) {
      const std::int64_t burn = r.manifest.at("config").at("burn_in").get<std::int64_t>();
      double sum = 0.0;
      std::int64_t count = 0;
      for (const auto& [kk, v] : r.norms) {
        if (kk > burn && kk <= k) {
          sum += v;
          ++count;
        }
      }
      table << ',' << r.checkpoints[t].second << ',';
      if (count > 0) {
        const double e = sum / count - reference;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", e * e);
        table << buf;
      } else {
        table << "nan";
      }
    }
    table << '\n';
  }
  if (!o.out.empty()) write_file(o.out, table.str());
  out << table.str();
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Federated quantised Langevin sampling simulator", "qlsd"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a federated dataset");
  add_source_flags(gen, o);
  add_data_flags(gen, o);
  gen->add_option("--out", o.out, "dataset file")->required();

  auto* run = app.add_subcommand("run", "run a sampler and write trace, ledger and manifest");
  add_source_flags(run, o);
  add_data_flags(run, o);
  add_sampler_flags(run, o);
  run->add_option("--out", o.out, "output directory")->required();
  run->add_option("--checkpoint-every", o.checkpoint_every, "ledger checkpoint spacing");

  auto* bounds = app.add_subcommand("bounds", "evaluate the convergence-bound constants");
  add_source_flags(bounds, o);
  add_data_flags(bounds, o);
  add_sampler_flags(bounds, o);
  bounds->add_option("--out", o.out, "write the report here as well as stdout");

  auto* compare = app.add_subcommand("compare", "tabulate cumulative bits and MSE of ||theta|| across runs");
  compare->add_option("runs", o.runs, "run directories")->required();
  compare->add_option("--reference", o.reference, "reference value of E||theta||");
  compare->add_option("--reference-draws", o.reference_draws, "Monte Carlo draws for the reference");
  compare->add_option("--out", o.out, "write the table here as well as stdout");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    if (*gen) return cmd_gen_data(o, out);
    if (*run) return cmd_run(o, out);
    if (*bounds) return cmd_bounds(o, out);
    if (*compare) return cmd_compare(o, out);
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IndexError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const OptimizationError& e) {
    err << "optimization error: " << e.what() << "\n";
    return kOptimization;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace qlsd::cli
