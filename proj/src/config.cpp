#include "mist/config.hpp"

#include <set>

#include "mist/io.hpp"

namespace mist {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& block) {
  if (!j.is_object()) throw ConfigError("config block '" + block + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "' in config block '" + block + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& block) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + block + "." + key + "': " + e.what());
  }
}

std::set<std::string> keys_of(const json& j) {
  std::set<std::string> s;
  for (const auto& [k, v] : j.items()) s.insert(k);
  return s;
}

}  // namespace

json dataset_config_to_json(const DatasetConfig& c) {
  return {{"seed", c.seed},
          {"vocab", c.vocab},
          {"num_styles", c.num_styles},
          {"frame_dim", c.frame_dim},
          {"noise", c.noise},
          {"gain_min", c.gain_min},
          {"gain_max", c.gain_max},
          {"offset_scale", c.offset_scale},
          {"codebook_scale", c.codebook_scale},
          {"min_length", c.min_length},
          {"max_length", c.max_length},
          {"pretrain_size", c.pretrain_size},
          {"heldout_size", c.heldout_size},
          {"train_size", c.train_size},
          {"eval_pairs", c.eval_pairs}};
}

DatasetConfig dataset_config_from_json(const json& j, DatasetConfig c) {
  const std::string b = "dataset";
  reject_unknown(j, keys_of(dataset_config_to_json(c)), b);
  read(j, "seed", c.seed, b);
  read(j, "vocab", c.vocab, b);
  read(j, "num_styles", c.num_styles, b);
  read(j, "frame_dim", c.frame_dim, b);
  read(j, "noise", c.noise, b);
  read(j, "gain_min", c.gain_min, b);
  read(j, "gain_max", c.gain_max, b);
  read(j, "offset_scale", c.offset_scale, b);
  read(j, "codebook_scale", c.codebook_scale, b);
  read(j, "min_length", c.min_length, b);
  read(j, "max_length", c.max_length, b);
  read(j, "pretrain_size", c.pretrain_size, b);
  read(j, "heldout_size", c.heldout_size, b);
  read(j, "train_size", c.train_size, b);
  read(j, "eval_pairs", c.eval_pairs, b);
  return c;
}

json model_config_to_json(const ModelConfig& c) {
  return {{"vocab", c.vocab},
          {"embed_dim", c.embed_dim},
          {"content_dim", c.content_dim},
          {"style_dim", c.style_dim},
          {"frame_dim", c.frame_dim},
          {"style_hidden", c.style_hidden},
          {"num_tokens", c.num_tokens},
          {"decoder_hidden", c.decoder_hidden},
          {"pretrain_decoder_hidden", c.pretrain_decoder_hidden},
          {"statistics_hidden", c.statistics_hidden},
          {"pooling", c.pooling == Pooling::kMean ? "mean" : "max"}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  const std::string b = "model";
  reject_unknown(j, keys_of(model_config_to_json(c)), b);
  read(j, "vocab", c.vocab, b);
  read(j, "embed_dim", c.embed_dim, b);
  read(j, "content_dim", c.content_dim, b);
  read(j, "style_dim", c.style_dim, b);
  read(j, "frame_dim", c.frame_dim, b);
  read(j, "style_hidden", c.style_hidden, b);
  read(j, "num_tokens", c.num_tokens, b);
  read(j, "decoder_hidden", c.decoder_hidden, b);
  read(j, "pretrain_decoder_hidden", c.pretrain_decoder_hidden, b);
  read(j, "statistics_hidden", c.statistics_hidden, b);
  if (j.contains("pooling")) {
    const auto p = j.at("pooling").get<std::string>();
    if (p == "mean") c.pooling = Pooling::kMean;
    else if (p == "max") c.pooling = Pooling::kMax;
    else throw ConfigError("model.pooling must be 'mean' or 'max', got '" + p + "'");
  }
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"mine_learning_rate", c.mine_learning_rate},
          {"pretrain_epochs", c.pretrain_epochs},
          {"train_epochs", c.train_epochs},
          {"pretrain_seed", c.pretrain_seed},
          {"train_seed", c.train_seed},
          {"clip_mi", c.clip_mi},
          {"ema_denominator", c.ema_denominator},
          {"ema_decay", c.ema_decay},
          {"optimizer", to_string(c.optimizer)},
          {"use_mi_estimator", c.use_mi_estimator},
          {"pretrain_l1_threshold", c.pretrain_l1_threshold}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  const std::string b = "train";
  reject_unknown(j, keys_of(train_config_to_json(c)), b);
  read(j, "lambda", c.lambda, b);
  read(j, "batch_size", c.batch_size, b);
  read(j, "learning_rate", c.learning_rate, b);
  read(j, "mine_learning_rate", c.mine_learning_rate, b);
  read(j, "pretrain_epochs", c.pretrain_epochs, b);
  read(j, "train_epochs", c.train_epochs, b);
  read(j, "pretrain_seed", c.pretrain_seed, b);
  read(j, "train_seed", c.train_seed, b);
  read(j, "clip_mi", c.clip_mi, b);
  read(j, "ema_denominator", c.ema_denominator, b);
  read(j, "ema_decay", c.ema_decay, b);
  if (j.contains("optimizer")) {
    try {
      c.optimizer = optimizer_kind_from_string(j.at("optimizer").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("train.optimizer: ") + e.what());
    }
  }
  read(j, "use_mi_estimator", c.use_mi_estimator, b);
  read(j, "pretrain_l1_threshold", c.pretrain_l1_threshold, b);
  return c;
}

json eval_config_to_json(const EvalConfig& c) {
  return {{"probe_epochs", c.probe_epochs},
          {"probe_batch_size", c.probe_batch_size},
          {"probe_learning_rate", c.probe_learning_rate},
          {"probe_seed", c.probe_seed},
          {"seeds", c.seeds},
          {"lambda_list", c.lambda_list}};
}

EvalConfig eval_config_from_json(const json& j, EvalConfig c) {
  const std::string b = "eval";
  reject_unknown(j, keys_of(eval_config_to_json(c)), b);
  read(j, "probe_epochs", c.probe_epochs, b);
  read(j, "probe_batch_size", c.probe_batch_size, b);
  read(j, "probe_learning_rate", c.probe_learning_rate, b);
  read(j, "probe_seed", c.probe_seed, b);
  read(j, "seeds", c.seeds, b);
  read(j, "lambda_list", c.lambda_list, b);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return {{"dataset", dataset_config_to_json(c.dataset)},
          {"model", model_config_to_json(c.model)},
          {"train", train_config_to_json(c.train)},
          {"eval", eval_config_to_json(c.eval)}};
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"dataset", "model", "train", "eval"}, "<root>");
  RunConfig c;
  if (j.contains("dataset")) c.dataset = dataset_config_from_json(j.at("dataset"));
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("eval")) c.eval = eval_config_from_json(j.at("eval"));
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& c) { return short_hash(run_config_to_json(c).dump()); }

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.train.lambda >= 0.0, "train.lambda must be >= 0");
  require(c.train.batch_size >= 1, "train.batch_size must be >= 1");
  require(c.train.learning_rate >= 0.0 && c.train.mine_learning_rate >= 0.0, "learning rates must be >= 0");
  require(c.train.ema_decay > 0.0 && c.train.ema_decay < 1.0, "train.ema_decay must be in (0, 1)");
  require(c.model.vocab == c.dataset.vocab, "model.vocab must equal dataset.vocab");
  require(c.model.frame_dim == c.dataset.frame_dim, "model.frame_dim must equal dataset.frame_dim");
  require(c.model.num_tokens >= 1, "model.num_tokens must be >= 1");
  require(c.dataset.min_length >= 1 && c.dataset.max_length >= c.dataset.min_length, "dataset length range invalid");
  require(c.dataset.noise >= 0.0, "dataset.noise must be >= 0");
  require(c.dataset.gain_min > 0.0 && c.dataset.gain_max >= c.dataset.gain_min, "dataset gain range invalid");
  require(c.eval.probe_batch_size >= 2, "eval.probe_batch_size must be >= 2");
  for (double l : c.eval.lambda_list) require(l > 0.0, "eval.lambda_list entries must be positive");
  require(!c.eval.seeds.empty(), "eval.seeds must not be empty");
}

}  // namespace mist
