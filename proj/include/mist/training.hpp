#pragma once

// Two-stage training.
//
// Stage 1 fits the content encoder together with a content-only decoder on
// single-style data, then freezes the encoder. Stage 2 trains a fresh style
// encoder and decoder against reconstruction plus a clipped MI penalty, while
// the statistics network ascends the MI bound, one update each per step.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mist/checkpoint.hpp"
#include "mist/mine.hpp"
#include "mist/models.hpp"
#include "mist/optim.hpp"
#include "mist/rng.hpp"
#include "mist/synth.hpp"

namespace mist {

struct TrainConfig {
  double lambda = 0.1;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;       // style encoder + decoder (and stage 1)
  double mine_learning_rate = 1e-3;  // statistics network
  std::size_t pretrain_epochs = 40;
  std::size_t train_epochs = 200;
  std::uint64_t pretrain_seed = 42;
  std::uint64_t train_seed = 42;
  bool clip_mi = true;
  bool ema_denominator = false;
  double ema_decay = 0.99;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  bool use_mi_estimator = true;  // false: skip the MI term entirely (same RNG draws)
  double pretrain_l1_threshold = 0.1;
};

struct StepMetrics {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double recon_loss = 0.0;
  double mi_raw = 0.0;
  double mi_clipped = 0.0;
  double total_loss = 0.0;
};

/// Raised when a loss turns non-finite; names the step.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stage-2 model: frozen content encoder plus the trained parts.
struct SynthesisModel {
  ModelConfig config;
  ContentEncoder content;
  StyleEncoder style;
  Decoder decoder;
  StatisticsNetwork statistics;

  /// Fresh style encoder, decoder and statistics network from `seed`.
  static SynthesisModel initialize(const ModelConfig& cfg, ContentEncoder content, std::uint64_t seed);

  /// D(E_C(content), E_S(reference)).
  Frames synthesize(std::span<const std::size_t> content, const Frames& reference) const;
  /// Style coefficients and vector for one reference.
  StyleCode style_of(const Frames& reference) const;

  ParamList params() const;            // all four networks
  ParamList trainable_params() const;  // style encoder + decoder
};

// ---- stage 1 ---------------------------------------------------------------

struct PretrainResult {
  ContentEncoder content_encoder;  // frozen
  PretrainDecoder decoder;         // kept only for inspection; stage 2 re-initializes
  std::vector<double> epoch_loss;
  double heldout_l1 = 0.0;  // mean |error| per frame element
  bool converged = false;   // heldout_l1 < pretrain_l1_threshold
  Checkpoint checkpoint;
};

/// Throws std::invalid_argument when the data mixes styles.
PretrainResult pretrain(const std::vector<Utterance>& data, const std::vector<Utterance>& heldout,
                        const ModelConfig& model_cfg, const TrainConfig& cfg);

/// Rebuilds the frozen content encoder from a stage-1 or stage-2 checkpoint.
ContentEncoder content_encoder_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& cfg);

/// Mean |D(E_C(c)) - x| per element for a content-only decoder.
double pretrain_l1(const ContentEncoder& enc, const PretrainDecoder& dec, const std::vector<Utterance>& data);

// ---- stage 2 ---------------------------------------------------------------

struct TrainStreams {
  Rng data_order;
  Rng content_sample;
  Rng permutation;

  explicit TrainStreams(std::uint64_t seed);
  nlohmann::json state() const;
};

/// One mini-batch stacked for the per-position networks, with the step's
/// random draws (sampled content positions, marginal permutation) fixed.
struct PreparedBatch {
  Tensor frames;  // [N, d_x]
  std::vector<std::size_t> tokens;
  Segments segments;
  std::vector<std::size_t> owner;        // row -> utterance in batch
  std::vector<std::size_t> sampled_row;  // per utterance, stacked row of its MI content vector
  std::vector<std::size_t> permutation;
};

struct ForwardPass {
  Tensor recon;  // scalar
  MineEstimate mi;
  Tensor total;             // recon + lambda * (clipped or raw) MI
  MineBatch statistics_batch;  // detached (y, z) pairs the statistics network ascends on
  Tensor z;                 // [b, d_s]
};

class MistTrainer {
 public:
  MistTrainer(const std::vector<Utterance>& data, SynthesisModel model, const TrainConfig& cfg);

  PreparedBatch prepare(std::span<const std::size_t> utterances);
  ForwardPass forward(const PreparedBatch& batch);
  /// Full update: style encoder/decoder descend the total loss, then the
  /// statistics network ascends the raw bound; both gradients come from one forward.
  StepMetrics update(const PreparedBatch& batch, std::size_t epoch, std::size_t step);
  /// One pass over the data in a freshly shuffled order; returns per-step metrics.
  std::vector<StepMetrics> run_epoch(std::size_t epoch);

  SynthesisModel& model() { return model_; }
  const SynthesisModel& model() const { return model_; }
  const TrainStreams& streams() const { return streams_; }
  const Optimizer& synthesis_optimizer() const { return synth_opt_; }
  const Optimizer& statistics_optimizer() const { return stat_opt_; }

 private:
  const std::vector<Utterance>& data_;
  SynthesisModel model_;
  TrainConfig cfg_;
  TrainStreams streams_;
  Optimizer synth_opt_;
  Optimizer stat_opt_;
  EmaDenominator ema_;
  std::size_t global_step_ = 0;
};

struct TrainHooks {
  std::function<void(const StepMetrics&)> on_step;
  std::function<void(std::size_t epoch, const MistTrainer&)> on_epoch_end;
};

struct TrainResult {
  SynthesisModel model;
  std::vector<StepMetrics> metrics;
  std::vector<double> epoch_recon;  // mean recon_loss per epoch
  Checkpoint checkpoint;
};

/// Rejects a content encoder that is not frozen.
TrainResult train_mist(const std::vector<Utterance>& data, const ContentEncoder& content,
                       const ModelConfig& model_cfg, const TrainConfig& cfg, const TrainHooks& hooks = {});

Checkpoint make_checkpoint(const SynthesisModel& model, const nlohmann::json& config, const nlohmann::json& rng_state);
SynthesisModel model_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& cfg);

std::string metrics_csv(const std::vector<StepMetrics>& metrics);

}  // namespace mist
