#include "mist/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

namespace mist {

using nlohmann::json;

LeakageReport evaluate_leakage(const Synthesizer& synthesize, const World& world, const std::vector<EvalPair>& pairs) {
  LeakageReport r;
  std::size_t matches = 0;
  for (const auto& p : pairs) {
    Frames out = synthesize(p);
    if (out.length != p.content.size())
      throw std::invalid_argument("evaluate_leakage: synthesized " + std::to_string(out.length) + " frames for " +
                                  std::to_string(p.content.size()) + " tokens");
    Recognition rec = oracle_recognize(world, out);
    r.ter.push_back(token_error_rate(rec.tokens, p.content));
    r.recognized_style.push_back(rec.style);
    matches += rec.style == p.ref_style;
  }
  if (!pairs.empty()) {
    double sum = 0.0;
    for (double t : r.ter) sum += t;
    r.mean_ter = sum / static_cast<double>(pairs.size());
    r.style_match_rate = static_cast<double>(matches) / static_cast<double>(pairs.size());
  }
  return r;
}

LeakageReport evaluate_leakage(const SynthesisModel& model, const World& world, const std::vector<EvalPair>& pairs) {
  if (model.config.frame_dim != world.config.frame_dim || model.config.vocab != world.config.vocab)
    throw std::invalid_argument("evaluate_leakage: model dimensions do not match the dataset");
  return evaluate_leakage([&](const EvalPair& p) { return model.synthesize(p.content, p.reference); }, world, pairs);
}

json leakage_report_json(const LeakageReport& r) {
  return {{"mean_ter", r.mean_ter},
          {"style_match_rate", r.style_match_rate},
          {"num_pairs", r.ter.size()},
          {"ter", r.ter},
          {"recognized_style", r.recognized_style},
          {"config", r.config}};
}

std::string leakage_report_csv(const LeakageReport& r) {
  std::string out = "pair,ter,recognized_style\n";
  char buf[96];
  for (std::size_t i = 0; i < r.ter.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu\n", i, r.ter[i], r.recognized_style[i]);
    out += buf;
  }
  return out;
}

// ---- MI probe --------------------------------------------------------------

MiProbeCurve mi_probe(const SynthesisModel& model, const std::vector<Utterance>& data, const MiProbeOptions& opts,
                      ProbeSource source) {
  if (data.empty()) throw std::invalid_argument("mi_probe: empty dataset");
  const std::size_t dc = model.config.content_dim;
  const std::size_t dz = source == ProbeSource::kCopy ? dc : model.config.style_dim;

  // The model is frozen for the whole probe: precompute its outputs once.
  std::vector<std::vector<double>> content(data.size());
  std::vector<std::vector<double>> style(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Tensor y = model.content.encode(data[i].content);
    content[i].assign(y.values().begin(), y.values().end());
    if (source == ProbeSource::kModel) {
      Tensor z = model.style_of(data[i].frames).z;
      style[i].assign(z.values().begin(), z.values().end());
    }
  }

  Rng init = Rng::stream(opts.seed, "probe.init");
  Rng order_rng = Rng::stream(opts.seed, "probe.data_order");
  Rng sample_rng = Rng::stream(opts.seed, "probe.content_sample");
  Rng perm_rng = Rng::stream(opts.seed, "probe.permutation");
  Rng noise_rng = Rng::stream(opts.seed, "probe.noise");
  StatisticsNetwork net(dc, dz, opts.hidden, init);
  Optimizer opt(net.params(), opts.learning_rate);

  MiProbeCurve curve;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    auto order = order_rng.permutation(data.size());
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + 1 < order.size(); start += opts.batch_size) {
      const std::size_t b = std::min(opts.batch_size, order.size() - start);
      std::vector<double> yv, zv;
      for (std::size_t k = 0; k < b; ++k) {
        const std::size_t u = order[start + k];
        const std::size_t len = content[u].size() / dc;
        const std::size_t row = sample_content_index(len, sample_rng);
        yv.insert(yv.end(), content[u].begin() + static_cast<std::ptrdiff_t>(row * dc),
                  content[u].begin() + static_cast<std::ptrdiff_t>((row + 1) * dc));
        switch (source) {
          case ProbeSource::kModel: zv.insert(zv.end(), style[u].begin(), style[u].end()); break;
          case ProbeSource::kIndependentNoise:
            for (std::size_t j = 0; j < dz; ++j) zv.push_back(noise_rng.normal());
            break;
          case ProbeSource::kCopy:
            zv.insert(zv.end(), yv.end() - static_cast<std::ptrdiff_t>(dc), yv.end());
            break;
        }
      }
      Tensor y = Tensor::from({b, dc}, std::move(yv));
      Tensor z = Tensor::from({b, dz}, std::move(zv));
      MineEstimate est = dv_lower_bound(net, make_mine_batch(y, z, perm_rng));
      opt.zero_grad();
      backward(est.raw);
      opt.ascend();
      sum += est.raw_value();
      ++batches;
    }
    curve.estimate.push_back(sum / static_cast<double>(batches));
  }
  return curve;
}

std::string probe_curve_csv(const MiProbeCurve& c) {
  std::string out = "probe_epoch,mi_estimate\n";
  char buf[64];
  for (std::size_t i = 0; i < c.estimate.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, c.estimate[i]);
    out += buf;
  }
  return out;
}

// ---- experiments -----------------------------------------------------------

ExperimentRunner::ExperimentRunner(Dataset data, RunConfig base) : data_(std::move(data)), base_(std::move(base)) {}

TrainConfig ExperimentRunner::train_config(const ArmSpec& spec) const {
  TrainConfig t = base_.train;
  t.lambda = spec.lambda;
  t.clip_mi = spec.clip_mi;
  t.pretrain_seed = spec.seed;
  t.train_seed = spec.seed;
  return t;
}

const PretrainResult& ExperimentRunner::stage1(std::uint64_t seed) {
  {
    std::lock_guard lock(mu_);
    if (auto it = stage1_.find(seed); it != stage1_.end()) return *it->second;
  }
  TrainConfig t = train_config({.lambda = base_.train.lambda, .clip_mi = base_.train.clip_mi, .seed = seed});
  auto r = std::make_unique<PretrainResult>(pretrain(data_.splits.pretrain, data_.splits.heldout, base_.model, t));
  std::lock_guard lock(mu_);
  auto [it, inserted] = stage1_.emplace(seed, std::move(r));
  return *it->second;
}

const ArmResult& ExperimentRunner::arm(const ArmSpec& spec) {
  {
    std::lock_guard lock(mu_);
    if (auto it = arms_.find(spec); it != arms_.end()) return *it->second;
  }
  const PretrainResult& s1 = stage1(spec.seed);
  auto r = std::make_unique<ArmResult>();
  r->spec = spec;
  r->training = train_mist(data_.splits.train, s1.content_encoder, base_.model, train_config(spec));
  r->leakage = evaluate_leakage(r->training.model, data_.world, data_.splits.eval_pairs);
  RunConfig echo = base_;
  echo.train = train_config(spec);
  r->leakage.config = run_config_to_json(echo);
  std::lock_guard lock(mu_);
  auto [it, inserted] = arms_.emplace(spec, std::move(r));
  return *it->second;
}

std::vector<SweepRow> lambda_sweep(ExperimentRunner& runner, std::vector<double> lambdas,
                                   const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  for (double l : lambdas)
    if (!(l > 0.0)) throw std::invalid_argument("lambda_sweep: lambda values must be positive");
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  std::vector<ArmSpec> specs;
  for (double l : lambdas)
    for (auto s : seeds) specs.push_back({.lambda = l, .clip_mi = runner.base().train.clip_mi, .seed = s});
  for (auto s : seeds) runner.stage1(s);  // shared stage 1 before fanning out

  if (jobs <= 1) {
    for (const auto& s : specs) runner.arm(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (std::size_t j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
          try {
            runner.arm(specs[i]);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<SweepRow> rows;
  for (double l : lambdas) {
    SweepRow row;
    row.lambda = l;
    for (auto s : seeds) row.seed_ter.push_back(runner.arm({.lambda = l, .clip_mi = runner.base().train.clip_mi, .seed = s}).leakage.mean_ter);
    double sum = 0.0;
    for (double t : row.seed_ter) sum += t;
    row.mean_ter = sum / static_cast<double>(row.seed_ter.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,mean_ter,num_seeds\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", r.lambda, r.mean_ter, r.seed_ter.size());
    out += buf;
  }
  return out;
}

ClipAblation clip_ablation(ExperimentRunner& runner, double lambda, std::uint64_t seed) {
  ClipAblation a;
  const PretrainResult& s1 = runner.stage1(seed);
  const ParamList shared = clone_params(s1.content_encoder.params());
  auto run = [&](bool clip, double& ter, bool& finite) {
    try {
      const ArmResult& r = runner.arm({.lambda = lambda, .clip_mi = clip, .seed = seed});
      ter = r.leakage.mean_ter;
      finite = std::all_of(r.training.metrics.begin(), r.training.metrics.end(),
                           [](const StepMetrics& m) { return std::isfinite(m.total_loss); });
      return params_equal(r.training.model.content.params(), shared);
    } catch (const TrainingDiverged&) {
      ter = 1.0;
      finite = false;
      return true;
    }
  };
  const bool same_a = run(true, a.ter_clipped, a.clipped_finite);
  const bool same_b = run(false, a.ter_unclipped, a.unclipped_finite);
  a.shared_pretraining = same_a && same_b;
  return a;
}

}  // namespace mist
