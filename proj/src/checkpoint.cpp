#include "mist/checkpoint.hpp"

#include <stdexcept>

#include "mist/io.hpp"

namespace mist {

using nlohmann::json;

ParamList Checkpoint::with_prefix(const std::string& prefix) const {
  ParamList out;
  for (const auto& p : params)
    if (p.name.rfind(prefix, 0) == 0) out.push_back(p);
  return out;
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return true;
  return false;
}

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json j = json::object();
  for (const auto& p : ckpt.params) {
    auto v = p.tensor.values();
    j[p.name] = {{"shape", p.tensor.shape()}, {"values", std::vector<double>(v.begin(), v.end())}};
  }
  j["config"] = ckpt.config;
  j["rng_state"] = ckpt.rng_state;
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("checkpoint: expected a JSON object");
  Checkpoint ckpt;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") {
      ckpt.config = value;
    } else if (key == "rng_state") {
      ckpt.rng_state = value;
    } else {
      ckpt.params.push_back(
          {key, Tensor::from(value.at("shape").get<Shape>(), value.at("values").get<std::vector<double>>())});
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  atomic_write(path, checkpoint_to_string(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  return checkpoint_from_string(read_text(path));
}

}  // namespace mist
