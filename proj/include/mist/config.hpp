#pragma once

// JSON form of every configuration block. Readers accept partial objects
// (missing keys keep their built-in defaults) but reject unknown keys;
// writers always emit every key.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mist/models.hpp"
#include "mist/synth.hpp"
#include "mist/training.hpp"

namespace mist {

struct EvalConfig {
  std::size_t probe_epochs = 50;
  std::size_t probe_batch_size = 32;
  double probe_learning_rate = 1e-3;
  std::uint64_t probe_seed = 1234;
  std::vector<std::uint64_t> seeds{42, 43, 44};
  std::vector<double> lambda_list{0.05, 0.1, 0.2, 0.5};
};

struct RunConfig {
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
};

nlohmann::json dataset_config_to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const nlohmann::json& j, DatasetConfig base = {});
nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json eval_config_to_json(const EvalConfig& c);
EvalConfig eval_config_from_json(const nlohmann::json& j, EvalConfig base = {});

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Stable hash of the canonical JSON echo.
std::string config_hash(const RunConfig& c);

/// Validation errors (bad values, unknown keys).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const RunConfig& c);

}  // namespace mist
