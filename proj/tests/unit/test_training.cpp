#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "mist/training.hpp"
#include "support.hpp"

namespace mist {
namespace {

using testing::small_config;

struct Fixture {
  RunConfig cfg = small_config();
  Dataset data = testing::make_dataset(cfg.dataset);
  PretrainResult stage1 = pretrain(data.splits.pretrain, data.splits.heldout, cfg.model, cfg.train);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

ParamList trained_part(const SynthesisModel& m) {
  ParamList p = m.style.params();
  for (auto& t : m.decoder.params()) p.push_back(t);
  return p;
}

std::vector<std::size_t> first_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(Pretrain, RejectsMultiStyleData) {
  const auto& f = fx();
  EXPECT_THROW(pretrain(f.data.splits.train, f.data.splits.heldout, f.cfg.model, f.cfg.train), std::invalid_argument);
  EXPECT_THROW(pretrain({}, f.data.splits.heldout, f.cfg.model, f.cfg.train), std::invalid_argument);
}

TEST(Pretrain, FreezesEncoderAndReportsHeldoutL1) {
  const auto& f = fx();
  EXPECT_TRUE(f.stage1.content_encoder.frozen());
  EXPECT_EQ(f.stage1.epoch_loss.size(), f.cfg.train.pretrain_epochs);
  EXPECT_DOUBLE_EQ(f.stage1.heldout_l1, pretrain_l1(f.stage1.content_encoder, f.stage1.decoder, f.data.splits.heldout));
  EXPECT_EQ(f.stage1.converged, f.stage1.heldout_l1 < f.cfg.train.pretrain_l1_threshold);
  EXPECT_LT(f.stage1.epoch_loss.back(), f.stage1.epoch_loss.front());
}

TEST(Pretrain, CheckpointRebuildsEncoder) {
  const auto& f = fx();
  ContentEncoder back = content_encoder_from_checkpoint(checkpoint_from_string(checkpoint_to_string(f.stage1.checkpoint)),
                                                        f.cfg.model);
  EXPECT_TRUE(back.frozen());
  EXPECT_TRUE(params_equal(back.params(), f.stage1.content_encoder.params()));
}

TEST(Train, RejectsUnfrozenEncoder) {
  const auto& f = fx();
  Rng rng(1);
  ContentEncoder fresh(f.cfg.model, rng);
  EXPECT_THROW(train_mist(f.data.splits.train, fresh, f.cfg.model, f.cfg.train), std::invalid_argument);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto& f = fx();
  TrainConfig t = f.cfg.train;
  t.train_epochs = 0;
  TrainResult r = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, t);
  SynthesisModel init = SynthesisModel::initialize(f.cfg.model, f.stage1.content_encoder, t.train_seed);
  EXPECT_TRUE(params_equal(r.checkpoint.params, init.params()));
  EXPECT_TRUE(r.metrics.empty());
}

TEST(Train, SameSeedIsBitIdentical) {
  const auto& f = fx();
  TrainResult a = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, f.cfg.train);
  TrainResult b = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, f.cfg.train);
  EXPECT_TRUE(params_equal(a.model.params(), b.model.params()));
  EXPECT_EQ(metrics_csv(a.metrics), metrics_csv(b.metrics));
  TrainConfig t = f.cfg.train;
  t.train_seed = 43;
  TrainResult c = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, t);
  EXPECT_FALSE(params_equal(a.model.params(), c.model.params()));
}

TEST(Train, ContentEncoderStaysBitFrozen) {
  const auto& f = fx();
  const ParamList before = clone_params(f.stage1.content_encoder.params());
  TrainResult r = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, f.cfg.train);
  EXPECT_TRUE(params_equal(r.model.content.params(), before));
}

TEST(Train, TotalLossDecomposes) {
  const auto& f = fx();
  for (bool clip : {true, false}) {
    TrainConfig t = f.cfg.train;
    t.clip_mi = clip;
    t.lambda = 0.3;
    TrainResult r = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, t);
    for (const auto& m : r.metrics) {
      EXPECT_NEAR(m.total_loss, m.recon_loss + t.lambda * (clip ? m.mi_clipped : m.mi_raw), 1e-9);
      EXPECT_EQ(m.mi_clipped, std::max(0.0, m.mi_raw));
    }
  }
}

TEST(Train, LambdaZeroMatchesDisabledEstimator) {
  const auto& f = fx();
  TrainConfig a = f.cfg.train, b = f.cfg.train;
  a.lambda = 0.0;
  b.use_mi_estimator = false;
  TrainResult ra = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, a);
  TrainResult rb = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, b);
  EXPECT_TRUE(params_equal(trained_part(ra.model), trained_part(rb.model)));
  ASSERT_EQ(ra.metrics.size(), rb.metrics.size());
  for (std::size_t i = 0; i < ra.metrics.size(); ++i) EXPECT_EQ(ra.metrics[i].recon_loss, rb.metrics[i].recon_loss);
}

TEST(Train, ReconstructionImproves) {
  const auto& f = fx();
  TrainConfig t = f.cfg.train;
  t.train_epochs = 6;
  TrainResult r = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, t);
  ASSERT_EQ(r.epoch_recon.size(), 6u);
  EXPECT_LT(r.epoch_recon.back(), r.epoch_recon.front());
}

TEST(Train, NonFiniteLossNamesTheStep) {
  const auto& f = fx();
  TrainConfig t = f.cfg.train;
  t.lambda = std::nan("");
  try {
    train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, t);
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1 step 1"), std::string::npos) << e.what();
  }
}

// With the bound clipped to zero, the MI term contributes nothing to E_S/D:
// the step equals one taken with the estimator disabled.
TEST(Trainer, ClippedNonPositiveBoundLeavesEncoderStepUnchanged) {
  const auto& f = fx();
  TrainConfig t = f.cfg.train;
  t.lambda = 5.0;
  TrainConfig off = t;
  off.use_mi_estimator = false;
  SynthesisModel init = SynthesisModel::initialize(f.cfg.model, f.stage1.content_encoder, 3);
  init.statistics.zero_output_layer();  // T constant: raw bound exactly 0
  MistTrainer a(f.data.splits.train, init, t);
  MistTrainer b(f.data.splits.train, SynthesisModel::initialize(f.cfg.model, f.stage1.content_encoder, 3), off);
  assign_params(b.model().params(), a.model().params());
  PreparedBatch pa = a.prepare(first_n(16)), pb = b.prepare(first_n(16));
  ForwardPass fp = a.forward(pa);
  ASSERT_LE(fp.mi.raw_value(), 0.0);
  a.update(pa, 1, 1);
  b.update(pb, 1, 1);
  EXPECT_TRUE(params_equal(trained_part(a.model()), trained_part(b.model())));
}

TEST(Trainer, StatisticsStepIncreasesBoundAtTinyRate) {
  const auto& f = fx();
  TrainConfig t = f.cfg.train;
  t.mine_learning_rate = 1e-6;
  t.optimizer = OptimizerKind::kSgd;
  MistTrainer tr(f.data.splits.train, SynthesisModel::initialize(f.cfg.model, f.stage1.content_encoder, 5), t);
  Rng rng(6);
  for (std::size_t step = 1; step <= 10; ++step) {
    auto idx = rng.permutation(f.data.splits.train.size());
    idx.resize(t.batch_size);
    PreparedBatch b = tr.prepare(idx);
    ForwardPass fp = tr.forward(b);
    const double before = dv_lower_bound(tr.model().statistics, fp.statistics_batch).raw_value();
    tr.update(b, 1, step);
    const double after = dv_lower_bound(tr.model().statistics, fp.statistics_batch).raw_value();
    EXPECT_GT(after, before) << "step " << step;
  }
}

TEST(Trainer, StatisticsStepWithAdamIncreasesBoundOnFirstStep) {
  const auto& f = fx();
  TrainConfig t = f.cfg.train;
  t.mine_learning_rate = 1e-6;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    t.train_seed = seed;
    MistTrainer tr(f.data.splits.train, SynthesisModel::initialize(f.cfg.model, f.stage1.content_encoder, seed), t);
    PreparedBatch b = tr.prepare(first_n(t.batch_size));
    ForwardPass fp = tr.forward(b);
    const double before = dv_lower_bound(tr.model().statistics, fp.statistics_batch).raw_value();
    tr.update(b, 1, 1);
    EXPECT_GT(dv_lower_bound(tr.model().statistics, fp.statistics_batch).raw_value(), before) << seed;
  }
}

TEST(Trainer, PrepareDrawsOnePositionPerUtterance) {
  const auto& f = fx();
  MistTrainer tr(f.data.splits.train, SynthesisModel::initialize(f.cfg.model, f.stage1.content_encoder, 1),
                 f.cfg.train);
  PreparedBatch b = tr.prepare(first_n(8));
  ASSERT_EQ(b.sampled_row.size(), 8u);
  ASSERT_EQ(b.permutation.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_GE(b.sampled_row[i], b.segments[i].first);
    EXPECT_LT(b.sampled_row[i], b.segments[i].second);
    EXPECT_EQ(b.owner[b.sampled_row[i]], i);
  }
}

TEST(Checkpoint, SynthesisModelRoundTrip) {
  const auto& f = fx();
  TrainResult r = train_mist(f.data.splits.train, f.stage1.content_encoder, f.cfg.model, f.cfg.train);
  Checkpoint back = checkpoint_from_string(checkpoint_to_string(r.checkpoint));
  SynthesisModel m = model_from_checkpoint(back, f.cfg.model);
  EXPECT_TRUE(params_equal(m.params(), r.model.params()));
  EXPECT_TRUE(back.rng_state.contains("train.permutation"));
  const auto& p = f.data.splits.eval_pairs[0];
  EXPECT_EQ(m.synthesize(p.content, p.reference), r.model.synthesize(p.content, p.reference));
}

// Oracle: with bias-corrected moments, Adam's first step is lr * g / (|g| + eps).
TEST(Optimizer, AdamFirstStepIdentity) {
  Tensor w = Tensor::from({4}, {0.5, -1.0, 2.0, 0.0}, true);
  Optimizer opt({{"w", w}}, 0.01);
  const std::vector<double> start(w.values().begin(), w.values().end());
  backward(sum(mul(w, Tensor::from({4}, {3.0, -0.25, 1e-3, 0.0}))));
  const std::vector<double> g(w.grad().begin(), w.grad().end());
  opt.descend();
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_NEAR(w.values()[i], start[i] - 0.01 * g[i] / (std::fabs(g[i]) + Optimizer::kEps), 1e-15) << i;
  EXPECT_EQ(opt.steps_taken(), 1u);
}

TEST(Optimizer, ZeroGradientLeavesParametersUnchanged) {
  for (auto kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    Tensor w = Tensor::from({3}, {0.1, 0.2, 0.3}, true);
    Optimizer opt({{"w", w}}, 0.1, kind);
    backward(sum(mul(w, Tensor::zeros({3}))));
    opt.ascend();
    EXPECT_EQ(std::vector<double>(w.values().begin(), w.values().end()), (std::vector<double>{0.1, 0.2, 0.3}));
  }
}

TEST(Optimizer, SgdStep) {
  Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
  Optimizer opt({{"w", w}}, 0.5, OptimizerKind::kSgd);
  backward(sum(mul(w, w)));
  opt.ascend();
  EXPECT_DOUBLE_EQ(w.values()[0], 2.0);
  EXPECT_DOUBLE_EQ(w.values()[1], 4.0);
  EXPECT_THROW(optimizer_kind_from_string("rmsprop"), std::exception);
}

}  // namespace
}  // namespace mist
