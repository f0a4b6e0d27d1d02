#include "mist/training.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mist/config.hpp"

namespace mist {

using nlohmann::json;

namespace {

struct StackedBatch {
  Tensor frames;
  std::vector<std::size_t> tokens;
  std::vector<std::size_t> lengths;
};

StackedBatch stack(const std::vector<Utterance>& data, std::span<const std::size_t> indices) {
  StackedBatch b;
  std::vector<double> values;
  std::size_t dim = 0;
  for (std::size_t i : indices) {
    const Utterance& u = data.at(i);
    if (dim == 0) dim = u.frames.dim;
    if (u.frames.dim != dim) throw ShapeError("batch: frame width differs between utterances");
    values.insert(values.end(), u.frames.values.begin(), u.frames.values.end());
    b.tokens.insert(b.tokens.end(), u.content.begin(), u.content.end());
    b.lengths.push_back(u.content.size());
  }
  b.frames = Tensor::from({b.tokens.size(), dim}, std::move(values));
  return b;
}

ParamList concat_params(ParamList a, const ParamList& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json library_config_echo(const ModelConfig& m, const TrainConfig& t) {
  return {{"model", model_config_to_json(m)}, {"train", train_config_to_json(t)}};
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

// ---- SynthesisModel --------------------------------------------------------

SynthesisModel SynthesisModel::initialize(const ModelConfig& cfg, ContentEncoder content, std::uint64_t seed) {
  Rng init = Rng::stream(seed, "train.init");
  SynthesisModel m;
  m.config = cfg;
  m.content = std::move(content);
  m.style = StyleEncoder(cfg, init);
  m.decoder = Decoder(cfg, init);
  m.statistics = StatisticsNetwork(cfg.content_dim, cfg.style_dim, cfg.statistics_hidden, init);
  return m;
}

Frames SynthesisModel::synthesize(std::span<const std::size_t> content_tokens, const Frames& reference) const {
  Tensor y = content.encode(content_tokens);
  StyleCode code = style.encode(reference.tensor());
  return Frames::from_tensor(decoder.decode_sequence(y, code.z));
}

StyleCode SynthesisModel::style_of(const Frames& reference) const { return style.encode(reference.tensor()); }

ParamList SynthesisModel::params() const {
  return concat_params(concat_params(content.params(), style.params()),
                       concat_params(decoder.params(), statistics.params()));
}

ParamList SynthesisModel::trainable_params() const { return concat_params(style.params(), decoder.params()); }

// ---- stage 1 ---------------------------------------------------------------

double pretrain_l1(const ContentEncoder& enc, const PretrainDecoder& dec, const std::vector<Utterance>& data) {
  if (data.empty()) throw std::invalid_argument("pretrain_l1: empty data");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& u : data) {
    Tensor pred = dec.decode(enc.encode(u.content));
    auto pv = pred.values();
    for (std::size_t i = 0; i < pv.size(); ++i) total += std::fabs(pv[i] - u.frames.values[i]);
    count += pv.size();
  }
  return total / static_cast<double>(count);
}

PretrainResult pretrain(const std::vector<Utterance>& data, const std::vector<Utterance>& heldout,
                        const ModelConfig& model_cfg, const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("pretrain: empty dataset");
  for (const auto* set : {&data, &heldout})
    for (const auto& u : *set)
      if (u.style != data.front().style)
        throw std::invalid_argument("pretrain: dataset must be single-style (found styles " +
                                    std::to_string(data.front().style) + " and " + std::to_string(u.style) + ")");

  Rng init = Rng::stream(cfg.pretrain_seed, "pretrain.init");
  Rng order = Rng::stream(cfg.pretrain_seed, "pretrain.data_order");
  PretrainResult r;
  r.content_encoder = ContentEncoder(model_cfg, init);
  r.decoder = PretrainDecoder(model_cfg, init);
  Optimizer opt(concat_params(r.content_encoder.params(), r.decoder.params()), cfg.learning_rate, cfg.optimizer);

  for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    auto perm = order.permutation(data.size());
    double sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(perm.size(), start + cfg.batch_size);
      StackedBatch b = stack(data, std::span(perm).subspan(start, end - start));
      Tensor pred = r.decoder.decode(r.content_encoder.encode(b.tokens));
      Tensor loss = mean(abs(sub(pred, b.frames)));
      if (!finite(loss.item()))
        throw TrainingDiverged("pretrain: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                               std::to_string(steps + 1));
      opt.zero_grad();
      backward(loss);
      opt.descend();
      sum += loss.item();
      ++steps;
    }
    r.epoch_loss.push_back(sum / static_cast<double>(steps));
  }

  r.heldout_l1 = heldout.empty() ? pretrain_l1(r.content_encoder, r.decoder, data)
                                 : pretrain_l1(r.content_encoder, r.decoder, heldout);
  r.converged = r.heldout_l1 < cfg.pretrain_l1_threshold;
  r.content_encoder.freeze();
  r.checkpoint.params = clone_params(concat_params(r.content_encoder.params(), r.decoder.params()));
  r.checkpoint.config = library_config_echo(model_cfg, cfg);
  r.checkpoint.rng_state = {{"pretrain.data_order", order.state()}};
  return r;
}

ContentEncoder content_encoder_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& cfg) {
  Rng scratch(0);
  ContentEncoder enc(cfg, scratch);
  assign_params(enc.params(), ckpt.with_prefix("content_encoder."));
  enc.freeze();
  return enc;
}

// ---- stage 2 ---------------------------------------------------------------

TrainStreams::TrainStreams(std::uint64_t seed)
    : data_order(Rng::stream(seed, "train.data_order")),
      content_sample(Rng::stream(seed, "train.content_sample")),
      permutation(Rng::stream(seed, "train.permutation")) {}

json TrainStreams::state() const {
  return {{"train.data_order", data_order.state()},
          {"train.content_sample", content_sample.state()},
          {"train.permutation", permutation.state()}};
}

MistTrainer::MistTrainer(const std::vector<Utterance>& data, SynthesisModel model, const TrainConfig& cfg)
    : data_(data),
      model_(std::move(model)),
      cfg_(cfg),
      streams_(cfg.train_seed),
      synth_opt_(model_.trainable_params(), cfg.learning_rate, cfg.optimizer),
      stat_opt_(model_.statistics.params(), cfg.mine_learning_rate, cfg.optimizer),
      ema_(cfg.ema_decay) {
  if (!model_.content.frozen())
    throw std::invalid_argument("train: pretrained content encoder required (content encoder is not frozen)");
  if (data_.empty()) throw std::invalid_argument("train: empty dataset");
}

PreparedBatch MistTrainer::prepare(std::span<const std::size_t> utterances) {
  StackedBatch s = stack(data_, utterances);
  PreparedBatch b;
  b.frames = std::move(s.frames);
  b.tokens = std::move(s.tokens);
  b.segments = make_segments(s.lengths);
  b.owner = segment_owner(b.segments);
  // draw order: one content position per utterance, then the permutation
  for (const auto& [begin, end] : b.segments)
    b.sampled_row.push_back(begin + sample_content_index(end - begin, streams_.content_sample));
  b.permutation = streams_.permutation.permutation(utterances.size());
  return b;
}

ForwardPass MistTrainer::forward(const PreparedBatch& batch) {
  ForwardPass f;
  Tensor y = model_.content.encode(batch.tokens);
  StyleCode code = model_.style.encode(batch.frames, batch.segments);
  f.z = code.z;
  Tensor pred = model_.decoder.decode(y, gather_rows(code.z, batch.owner));
  f.recon = mean(abs(sub(pred, batch.frames)));
  if (!cfg_.use_mi_estimator) {
    f.mi = MineEstimate{Tensor::scalar(0.0), Tensor::scalar(0.0)};
    f.total = f.recon;
    return f;
  }
  Tensor y_sampled = gather_rows(y, batch.sampled_row);
  f.mi = dv_lower_bound(model_.statistics, make_mine_batch(y_sampled, code.z, batch.permutation));
  f.total = add(f.recon, scale(cfg_.clip_mi ? f.mi.clipped : f.mi.raw, cfg_.lambda));
  // statistics-network objective on detached inputs, so its backward pass
  // touches only the statistics network
  f.statistics_batch = make_mine_batch(y_sampled.detach(), code.z.detach(), batch.permutation);
  return f;
}

StepMetrics MistTrainer::update(const PreparedBatch& batch, std::size_t epoch, std::size_t step) {
  ForwardPass f = forward(batch);
  StepMetrics m{epoch, step, f.recon.item(), f.mi.raw_value(), f.mi.clipped_value(), f.total.item()};
  if (!finite(m.total_loss) || !finite(m.recon_loss) || !finite(m.mi_raw)) {
    std::ostringstream os;
    os << "train: non-finite loss at epoch " << epoch << " step " << step << " (recon=" << m.recon_loss
       << ", mi_raw=" << m.mi_raw << ", total=" << m.total_loss << ")";
    throw TrainingDiverged(os.str());
  }
  synth_opt_.zero_grad();
  stat_opt_.zero_grad();
  backward(f.total);
  synth_opt_.descend();
  if (cfg_.use_mi_estimator) {
    const MineBatch& d = f.statistics_batch;
    Tensor objective = cfg_.ema_denominator
                           ? ema_.surrogate(model_.statistics(d.y, d.z), model_.statistics(d.y_shuffled, d.z))
                           : dv_lower_bound(model_.statistics, d).raw;
    stat_opt_.zero_grad();
    backward(objective);
    stat_opt_.ascend();
  }
  ++global_step_;
  return m;
}

std::vector<StepMetrics> MistTrainer::run_epoch(std::size_t epoch) {
  auto order = streams_.data_order.permutation(data_.size());
  std::vector<StepMetrics> out;
  std::size_t step = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    PreparedBatch b = prepare(std::span(order).subspan(start, end - start));
    out.push_back(update(b, epoch, ++step));
  }
  return out;
}

TrainResult train_mist(const std::vector<Utterance>& data, const ContentEncoder& content, const ModelConfig& model_cfg,
                       const TrainConfig& cfg, const TrainHooks& hooks) {
  if (!content.frozen())
    throw std::invalid_argument("train: pretrained content encoder required (content encoder is not frozen)");
  MistTrainer trainer(data, SynthesisModel::initialize(model_cfg, content, cfg.train_seed), cfg);
  TrainResult r;
  for (std::size_t epoch = 1; epoch <= cfg.train_epochs; ++epoch) {
    auto steps = trainer.run_epoch(epoch);
    double sum = 0.0;
    for (const auto& m : steps) {
      sum += m.recon_loss;
      if (hooks.on_step) hooks.on_step(m);
    }
    r.epoch_recon.push_back(sum / static_cast<double>(steps.size()));
    r.metrics.insert(r.metrics.end(), steps.begin(), steps.end());
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, trainer);
  }
  r.model = trainer.model();
  r.checkpoint = make_checkpoint(r.model, library_config_echo(model_cfg, cfg), trainer.streams().state());
  return r;
}

Checkpoint make_checkpoint(const SynthesisModel& model, const json& config, const json& rng_state) {
  return Checkpoint{clone_params(model.params()), config, rng_state};
}

SynthesisModel model_from_checkpoint(const Checkpoint& ckpt, const ModelConfig& cfg) {
  SynthesisModel m = SynthesisModel::initialize(cfg, content_encoder_from_checkpoint(ckpt, cfg), 0);
  assign_params(concat_params(m.style.params(), concat_params(m.decoder.params(), m.statistics.params())),
                ckpt.params);
  return m;
}

std::string metrics_csv(const std::vector<StepMetrics>& metrics) {
  std::string out = "epoch,step,recon_loss,mi_raw,mi_clipped,total_loss\n";
  char buf[256];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", m.epoch, m.step, m.recon_loss, m.mi_raw,
                  m.mi_clipped, m.total_loss);
    out += buf;
  }
  return out;
}

}  // namespace mist
