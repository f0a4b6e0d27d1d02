#pragma once

// Checkpoint file: one JSON object whose keys are parameter names, each
// mapping to {"shape": [...], "values": [row-major]}, plus "config" (the full
// run configuration echo) and "rng_state" (named stream states).

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mist/gradcheck.hpp"

namespace mist {

struct Checkpoint {
  ParamList params;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json rng_state = nlohmann::json::object();

  /// Subset whose names start with `prefix`.
  ParamList with_prefix(const std::string& prefix) const;
  bool has(const std::string& name) const;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mist
