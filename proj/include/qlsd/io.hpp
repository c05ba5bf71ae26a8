#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "qlsd/models.hpp"
#include "qlsd/sampler.hpp"

namespace qlsd {

// Self-describing dataset document: header fields plus a flat "payload" array.
// Gaussian payload: every record's d coordinates, client by client.
// Logistic payload: every record's d features followed by its label.
nlohmann::json dataset_to_json(const PotentialModel& model, const nlohmann::json& generator = {});
PotentialModel dataset_from_json(const nlohmann::json& doc);

void save_dataset(const std::string& path, const PotentialModel& model,
                  const nlohmann::json& generator = {});
PotentialModel load_dataset(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Hex SHA-1 of "blob <size>\0<content>", the way git names file contents.
std::string content_hash(const std::string& content);

nlohmann::json config_to_json(const SamplerConfig& config);
SamplerConfig config_from_json(const nlohmann::json& j);

// Header: k, theta_1..theta_d, bits_uplink, active_count.
void write_trace_csv(const std::string& path, const Trace& trace, int d);

}  // namespace qlsd
