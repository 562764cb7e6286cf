#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "sttn/errors.hpp"
#include "sttn/io/attention_dump.hpp"
#include "sttn/io/checkpoint.hpp"
#include "sttn/io/config.hpp"
#include "sttn/model/sttn.hpp"

namespace sttn::io {
namespace {

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.epochs, 50u);
  EXPECT_EQ(c.batch_size, 50u);
  EXPECT_EQ(c.model.window, 12u);
}

TEST(Config, ParsesKeysAndComments) {
  const auto c = parse_config(
      "# small run\n"
      "epochs = 3\n"
      "d_G=16   # channels\n"
      "h_S = 2\n"
      "a_T = 2\n"
      "lr0 = 5e-4\n"
      "dynamic_spatial = off\n"
      "head_input = sum\n"
      "\n"
      "kernel_sigma = 1500\n");
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.model.channels, 16u);
  EXPECT_EQ(c.model.spatial_layers, 2u);
  EXPECT_EQ(c.model.temporal_heads, 2u);
  EXPECT_EQ(c.lr0, 5e-4);
  EXPECT_FALSE(c.model.dynamic_spatial);
  EXPECT_EQ(c.model.head_input, model::HeadInput::kSumBlocks);
  EXPECT_EQ(c.kernel_sigma, 1500.0);
}

TEST(Config, ErrorsNameTheLine) {
  try {
    parse_config("epochs = 3\nbogus = 1\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs\n"), ConfigError);
  EXPECT_THROW(parse_config("d_G = 6\na_S = 4\n"), ConfigError);
}

TEST(Config, FormatRoundTrips) {
  auto c = parse_config("epochs = 7\nd_G = 8\nseed = 99\nlr0 = 0.1\nlocal_mask_k = 2\n");
  c.model.n_nodes = 5;
  const auto back = parse_config(format_config(c));
  EXPECT_EQ(format_config(back), format_config(c));
  EXPECT_EQ(back.lr0, 0.1);
  EXPECT_EQ(back.model.n_nodes, 5u);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(1);
    config.model.n_nodes = 4;
    config.model.window = 3;
    config.model.horizon = 2;
    config.model.channels = 16;
    config.model.cheb_order = 2;
    config.model.spatial_layers = 1;
    config.model.temporal_layers = 1;
    adjacency = testing::random_adjacency(4, rng, 0.9);
    ckpt = {config, {57.5, 6.25}, model::init_params(config.model, adjacency, 3)};
    window = testing::random_tensor({3, 4}, rng);
  }
  train::TrainConfig config;
  Matrix adjacency;
  Checkpoint ckpt;
  ad::Tensor window;
};

TEST_F(CheckpointTest, RoundTripPreservesForwardBitwise) {
  const auto path = (std::filesystem::temp_directory_path() / "sttn_ckpt_test.bin").string();
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.stats.mean, 57.5);
  EXPECT_EQ(back.stats.std, 6.25);
  EXPECT_EQ(format_config(back.config), format_config(config));
  const auto a = ckpt.params.named(), b = back.params.named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(ad::bitwise_equal(a[i].tensor.detach(), b[i].tensor.detach())) << a[i].name;
  }
  const graph::TrafficGraph g(adjacency, 2);
  EXPECT_TRUE(ad::bitwise_equal(model::sttn_forward(window, g, config.model, ckpt.params),
                                model::sttn_forward(window, g, back.config.model, back.params)));
}

TEST_F(CheckpointTest, TruncatedBlobIsCorrupt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 8), "t"), CorruptCheckpointError);
  EXPECT_THROW(parse_checkpoint(bytes + "x", "t"), CorruptCheckpointError);
  EXPECT_THROW(parse_checkpoint("not a checkpoint\n", "t"), CorruptCheckpointError);
}

TEST_F(CheckpointTest, ChannelMismatchNamesTensor) {
  const std::string bytes = serialize_checkpoint(ckpt);
  train::TrainConfig wider = config;
  wider.model.channels = 32;
  try {
    parse_checkpoint(bytes, "t", wider);
    FAIL();
  } catch (const CorruptCheckpointError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("shape mismatch for '"), std::string::npos) << what;
    EXPECT_NE(what.find("input_lift"), std::string::npos) << what;
  }
}

TEST_F(CheckpointTest, UnknownOrMissingTensorIsCorrupt) {
  std::string bytes = serialize_checkpoint(ckpt);
  const auto pos = bytes.find("head.w2 ");
  ASSERT_NE(pos, std::string::npos);
  std::string renamed = bytes;
  renamed.replace(pos, 7, "head.wX");
  EXPECT_THROW(parse_checkpoint(renamed, "t"), CorruptCheckpointError);
}

TEST(AttentionDump, HeaderAndRowCount) {
  model::AttentionTrace trace;
  trace.push_back({0, model::TransformerKind::kTemporal, 1, 0,
                   ad::Tensor({2, 2, 2}, {0.5, 0.5, 1, 0, 0.25, 0.75, 0, 1})});
  std::ostringstream out;
  write_attention_csv(out, trace);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "block,kind,layer,head,slice,row,col,value");
  std::size_t rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  EXPECT_EQ(rows, 8u);
  EXPECT_EQ(last, "0,temporal,1,0,1,1,1,1");
}

}  // namespace
}  // namespace sttn::io
