#pragma once

// Desk-scale versions of the three experiments: content leakage under
// mismatched references, a post-hoc MI probe against a frozen model, and the
// lambda sweep / clipping ablation built on paired-seed training runs.

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "mist/config.hpp"
#include "mist/synth.hpp"
#include "mist/training.hpp"

namespace mist {

struct LeakageReport {
  std::vector<double> ter;                   // one per eval pair
  std::vector<std::size_t> recognized_style;  // oracle style of each synthesized output
  double mean_ter = 0.0;
  double style_match_rate = 0.0;
  nlohmann::json config = nlohmann::json::object();
};

using Synthesizer = std::function<Frames(const EvalPair&)>;

LeakageReport evaluate_leakage(const Synthesizer& synthesize, const World& world, const std::vector<EvalPair>& pairs);
LeakageReport evaluate_leakage(const SynthesisModel& model, const World& world, const std::vector<EvalPair>& pairs);

nlohmann::json leakage_report_json(const LeakageReport& r);
std::string leakage_report_csv(const LeakageReport& r);

// ---- MI probe --------------------------------------------------------------

enum class ProbeSource {
  kModel,             // z = E_S(x) of the frozen model
  kIndependentNoise,  // z ~ N(0, I), redrawn every batch
  kCopy,              // z := the sampled content vector itself
};

struct MiProbeOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t hidden = 64;
  std::uint64_t seed = 1234;
};

struct MiProbeCurve {
  std::vector<double> estimate;  // mean raw bound per probe epoch (index 0 = epoch 1)
};

/// Trains a fresh statistics network against the frozen model's
/// (sampled content vector, style vector) pairs.
MiProbeCurve mi_probe(const SynthesisModel& model, const std::vector<Utterance>& data, const MiProbeOptions& opts,
                      ProbeSource source = ProbeSource::kModel);

std::string probe_curve_csv(const MiProbeCurve& c);

// ---- paired-seed experiments ----------------------------------------------

struct ArmSpec {
  double lambda = 0.1;
  bool clip_mi = true;
  std::uint64_t seed = 42;

  auto operator<=>(const ArmSpec&) const = default;
};

struct ArmResult {
  ArmSpec spec;
  TrainResult training;
  LeakageReport leakage;
};

/// Runs and caches stage-1 (per seed) and stage-2 (per arm) trainings over one
/// dataset so that comparative experiments share everything but the knob
/// being varied. Thread-safe.
class ExperimentRunner {
 public:
  ExperimentRunner(Dataset data, RunConfig base);

  const PretrainResult& stage1(std::uint64_t seed);
  const ArmResult& arm(const ArmSpec& spec);
  TrainConfig train_config(const ArmSpec& spec) const;

  const Dataset& data() const { return data_; }
  const RunConfig& base() const { return base_; }

 private:
  Dataset data_;
  RunConfig base_;
  std::mutex mu_;
  std::map<std::uint64_t, std::unique_ptr<PretrainResult>> stage1_;
  std::map<ArmSpec, std::unique_ptr<ArmResult>> arms_;
};

struct SweepRow {
  double lambda = 0.0;
  double mean_ter = 0.0;
  std::vector<double> seed_ter;
};

/// One arm per (lambda, seed); rows sorted ascending by lambda.
std::vector<SweepRow> lambda_sweep(ExperimentRunner& runner, std::vector<double> lambdas,
                                   const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct ClipAblation {
  double ter_clipped = 0.0;
  double ter_unclipped = 0.0;
  bool clipped_finite = false;
  bool unclipped_finite = false;
  bool shared_pretraining = false;  // both arms used a bit-identical stage-1 checkpoint
};

ClipAblation clip_ablation(ExperimentRunner& runner, double lambda, std::uint64_t seed);

}  // namespace mist
