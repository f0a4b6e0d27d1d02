#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "mist/mine.hpp"
#include "mist/optim.hpp"
#include "support.hpp"

namespace mist {
namespace {

using testing::random_tensor;

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// Independent oracle: the bound computed directly from its definition.
double dv_reference(const std::vector<double>& joint, const std::vector<double>& marginal) {
  double mj = 0.0, se = 0.0;
  for (double v : joint) mj += v;
  for (double v : marginal) se += std::exp(v);
  return mj / joint.size() - std::log(se / marginal.size());
}

TEST(Dv, MatchesDefinition) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor j = random_tensor({9, 1}, rng, -3, 3), m = random_tensor({9, 1}, rng, -3, 3);
    MineEstimate e = dv_from_statistics(j, m);
    const double ref = dv_reference({j.values().begin(), j.values().end()}, {m.values().begin(), m.values().end()});
    EXPECT_NEAR(e.raw_value(), ref, 1e-12);
    EXPECT_EQ(e.clipped_value(), std::max(0.0, e.raw_value()));
  }
}

TEST(Dv, ConstantStatisticsGiveExactlyZero) {
  for (double c : {0.0, 0.7, -3.25, 1e4, 123.456}) {
    MineEstimate e = dv_from_statistics(Tensor::full({32, 1}, c), Tensor::full({32, 1}, c));
    EXPECT_EQ(e.raw_value(), 0.0) << c;
    EXPECT_EQ(e.clipped_value(), 0.0) << c;
  }
  Rng rng(2);
  StatisticsNetwork t(5, 4, 16, rng);
  t.zero_output_layer();
  MineBatch b = make_mine_batch(random_tensor({20, 5}, rng), random_tensor({20, 4}, rng), rng);
  EXPECT_EQ(dv_lower_bound(t, b).raw_value(), 0.0);
}

TEST(Dv, IdentityPermutationIsNonPositive) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    StatisticsNetwork t(3, 2, 8, rng);
    const std::size_t b = 2 + rng.index(40);
    MineBatch batch = make_mine_batch(random_tensor({b, 3}, rng, -2, 2), random_tensor({b, 2}, rng, -2, 2), identity(b));
    EXPECT_LE(dv_lower_bound(t, batch).raw_value(), 0.0);
  }
}

TEST(Dv, ShiftStability) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor j = random_tensor({16, 1}, rng, -5, 5), m = random_tensor({16, 1}, rng, -5, 5);
    std::vector<double> js(j.values().begin(), j.values().end()), ms(m.values().begin(), m.values().end());
    for (double& v : js) v += 1e4;
    for (double& v : ms) v += 1e4;
    const double base = dv_from_statistics(j, m).raw_value();
    const double shifted = dv_from_statistics(Tensor::from({16, 1}, js), Tensor::from({16, 1}, ms)).raw_value();
    EXPECT_TRUE(std::isfinite(shifted));
    EXPECT_NEAR(shifted, base, 1e-9);
  }
}

TEST(Dv, ClippedIsNeverNegative) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    MineEstimate e = dv_from_statistics(random_tensor({8, 1}, rng, -4, 4), random_tensor({8, 1}, rng, -4, 4));
    EXPECT_GE(e.clipped_value(), 0.0);
  }
}

TEST(Dv, ClipBlocksGradientToEncoderWhenRawNonPositive) {
  ModelConfig cfg;
  Rng rng(6);
  StyleEncoder style(cfg, rng);
  StatisticsNetwork t(cfg.content_dim, cfg.style_dim, 16, rng);
  Tensor frames = random_tensor({10, cfg.frame_dim}, rng);
  StyleCode code = style.encode(frames, make_segments(std::vector<std::size_t>{3, 3, 4}));
  Tensor y = random_tensor({3, cfg.content_dim}, rng);
  MineEstimate e = dv_lower_bound(t, make_mine_batch(y, code.z, identity(3)));
  ASSERT_LE(e.raw_value(), 0.0);
  backward(e.clipped);
  for (const auto& p : style.params())
    for (double g : p.tensor.grad()) EXPECT_EQ(g, 0.0) << p.name;
}

TEST(MineBatch, PermutationPreservesMultiset) {
  Rng rng(7);
  Tensor y = random_tensor({12, 3}, rng), z = random_tensor({12, 2}, rng);
  MineBatch b = make_mine_batch(y, z, rng);
  ASSERT_EQ(b.y_shuffled.shape(), y.shape());
  std::vector<std::vector<double>> rows_y, rows_s;
  for (std::size_t i = 0; i < 12; ++i) {
    rows_y.emplace_back(y.values().begin() + i * 3, y.values().begin() + i * 3 + 3);
    rows_s.emplace_back(b.y_shuffled.values().begin() + i * 3, b.y_shuffled.values().begin() + i * 3 + 3);
    EXPECT_EQ(rows_s.back()[0], y.at(b.permutation[i], 0));
  }
  std::sort(rows_y.begin(), rows_y.end());
  std::sort(rows_s.begin(), rows_s.end());
  EXPECT_EQ(rows_y, rows_s);
}

TEST(MineBatch, RejectsInvalidPermutation) {
  Rng rng(8);
  Tensor y = random_tensor({3, 2}, rng), z = random_tensor({3, 2}, rng);
  EXPECT_THROW(make_mine_batch(y, z, std::vector<std::size_t>{0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(make_mine_batch(y, z, std::vector<std::size_t>{0, 1}), std::invalid_argument);
  EXPECT_THROW(make_mine_batch(y, random_tensor({4, 2}, rng), rng), ShapeError);
}

TEST(ContentSampling, UniformOverPositions) {
  Rng rng(9);
  std::vector<int> counts(6);
  for (int i = 0; i < 60000; ++i) ++counts[sample_content_index(6, rng)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
  EXPECT_THROW(sample_content_index(0, rng), std::invalid_argument);
  EXPECT_EQ(sample_content_vector(random_tensor({5, 4}, rng), rng).shape(), (Shape{1, 4}));
}

TEST(Ema, FirstStepDenominatorIsBatchMean) {
  EmaDenominator ema(0.99);
  Tensor j = Tensor::from({2, 1}, {1.0, 3.0});
  Tensor m = Tensor::from({2, 1}, {0.0, std::log(3.0)});
  // first call: ema = mean(exp(m)) = 2, surrogate = mean(j) - 2 / 2
  EXPECT_NEAR(ema.surrogate(j, m).item(), 1.0, 1e-15);
}

// Running mean of the bound on independent (y, z) while T ascends it.
TEST(Dv, IndependentRunningMeanStaysSmall) {
  Rng rng(10);
  StatisticsNetwork t(4, 4, 32, rng);
  Optimizer opt(t.params(), 1e-3);
  double total = 0.0;
  for (int step = 0; step < 500; ++step) {
    Tensor y = random_tensor({32, 4}, rng), z = random_tensor({32, 4}, rng);
    MineEstimate e = dv_lower_bound(t, make_mine_batch(y, z, rng));
    opt.zero_grad();
    backward(e.raw);
    opt.ascend();
    total += e.raw_value();
  }
  EXPECT_LT(total / 500, 0.05);
}

TEST(GaussianMi, IndependentIsNearZero) {
  Rng rng(11);
  EXPECT_LT(std::fabs(estimate_gaussian_mi(0.0, 2000, rng)), 0.05);
  EXPECT_THROW(estimate_gaussian_mi(1.0, 1, rng), std::invalid_argument);
}

}  // namespace
}  // namespace mist
