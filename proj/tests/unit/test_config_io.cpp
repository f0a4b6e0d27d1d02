#include <filesystem>

#include <gtest/gtest.h>

#include "mist/checkpoint.hpp"
#include "mist/config.hpp"
#include "mist/io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace mist {
namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mist_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Config, RoundTripsEveryKey) {
  RunConfig c;
  c.train.lambda = 0.25;
  c.model.num_tokens = 50;
  c.model.pooling = Pooling::kMax;
  c.eval.seeds = {1, 2};
  const auto j = run_config_to_json(c);
  EXPECT_EQ(run_config_to_json(run_config_from_json(j)), j);
  EXPECT_TRUE(j.at("train").contains("ema_denominator"));
  EXPECT_TRUE(j.at("train").contains("clip_mi"));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(run_config_from_json({{"train", {{"lamda", 0.1}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"trian", nlohmann::json::object()}}), ConfigError);
}

TEST(Config, PartialBlocksKeepDefaults) {
  RunConfig c = run_config_from_json({{"train", {{"lambda", 0.5}}}});
  EXPECT_EQ(c.train.lambda, 0.5);
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_TRUE(c.train.clip_mi);
  EXPECT_FALSE(c.train.ema_denominator);
}

TEST(Config, ValidationRejectsBadValues) {
  EXPECT_THROW(run_config_from_json({{"train", {{"lambda", -0.1}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"model", {{"pooling", "median"}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"model", {{"vocab", 12}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"train", {{"optimizer", "rmsprop"}}}}), ConfigError);
  EXPECT_THROW(run_config_from_json({{"train", {{"lambda", "big"}}}}), ConfigError);
}

TEST(Config, HashTracksContent) {
  RunConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.train.lambda = 0.2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Io, AtomicWriteReplacesContent) {
  fs::path d = temp_dir("atomic");
  atomic_write(d / "f.txt", "one");
  atomic_write(d / "f.txt", "two");
  EXPECT_EQ(read_text(d / "f.txt"), "two");
  for (const auto& e : fs::directory_iterator(d)) EXPECT_EQ(e.path().filename(), "f.txt");
}

TEST(Io, AtomicWriteNeedsParent) {
  fs::path d = temp_dir("atomic_parent");
  EXPECT_THROW(atomic_write(d / "missing" / "f.txt", "x"), std::runtime_error);
}

TEST(Io, ReadTextMissingFileThrows) { EXPECT_THROW(read_text("/nonexistent/mist/file"), std::runtime_error); }

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(3);
  Checkpoint c;
  c.params = {{"a.weight", testing::random_tensor({3, 2}, rng)}, {"a.bias", testing::random_tensor({2}, rng)}};
  c.config = {{"x", 1}};
  c.rng_state = {{"s", Rng(5).state()}};
  Checkpoint back = checkpoint_from_string(checkpoint_to_string(c));
  EXPECT_TRUE(params_equal(c.params, back.params));
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.rng_state, c.rng_state);
  EXPECT_TRUE(back.has("a.bias"));
  EXPECT_EQ(back.with_prefix("a.").size(), 2u);

  const auto j = nlohmann::json::parse(checkpoint_to_string(c));
  EXPECT_EQ(j.at("a.weight").at("shape"), nlohmann::json({3, 2}));
  EXPECT_EQ(j.at("a.weight").at("values").size(), 6u);
}

TEST(Checkpoint, MissingFileNamesPath) {
  try {
    load_checkpoint("/nonexistent/ckpt.json");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/ckpt.json"), std::string::npos);
  }
}

}  // namespace
}  // namespace mist
