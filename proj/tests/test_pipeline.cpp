#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mclf/pipeline.hpp"
#include "mclf/synthetic.hpp"
#include "test_util.hpp"

using namespace mclf;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.channels = {8, 8, 8, 8};
  c.heads = 2;
  c.seg_width = 8;
  return c;
}

ImagePair random_pair(std::mt19937_64& gen, std::size_t H, std::size_t W) {
  return ImagePair{testutil::uniform(gen, {3, H, W}, 0.0, 1.0), testutil::uniform(gen, {1, H, W}, 0.0, 1.0),
                   std::nullopt};
}

}  // namespace

TEST(ConfigTest, JsonRoundTripAndOverrides) {
  PipelineConfig c = small_config();
  c.seed = 123;
  c.loss.focal.gamma = 1.5;
  c.swap_enhance_base = true;
  const PipelineConfig back = PipelineConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());

  const PipelineConfig partial = PipelineConfig::from_json(R"({"seed": 9, "height": 96})", c);
  EXPECT_EQ(partial.seed, 9u);
  EXPECT_EQ(partial.height, 96u);
  EXPECT_EQ(partial.channels, c.channels);
  EXPECT_TRUE(partial.swap_enhance_base);
}

TEST(ConfigTest, Rejections) {
  EXPECT_THROW(PipelineConfig::from_json(R"({"sede": 1})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json("{not json"), ParseError);
  PipelineConfig c;
  c.height = 48;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PipelineConfig{};
  c.channels = {16, 16, 30, 32};
  EXPECT_THROW(c.validate(), ConfigError);
  c = PipelineConfig{};
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PipelineTest, ShapeContractAcrossSizes) {
  std::mt19937_64 gen(1);
  const Model model(small_config());
  for (auto [H, W] : {std::pair<std::size_t, std::size_t>{32, 32}, {64, 96}, {96, 64}}) {
    const PipelineOutput out = run_pipeline(model, random_pair(gen, H, W));
    EXPECT_EQ(out.seg.classes.shape(), (Shape{H, W}));
    EXPECT_EQ(out.seg.logits.shape(), (Shape{5, H, W}));
    EXPECT_EQ(out.fused.pixels.shape(), (Shape{1, H, W}));
    for (double v : out.fused.pixels.data()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    for (double v : out.seg.classes.data()) ASSERT_TRUE(v >= 0.0 && v < 5.0);
    for (std::size_t s = 0; s < 4; ++s) {
      EXPECT_EQ(out.ev[s].dim(2), H / kStageStrides[s]);
      EXPECT_EQ(out.features[s].width, W / kStageStrides[s]);
    }
  }
  EXPECT_THROW(run_pipeline(model, random_pair(gen, 48, 64)), DimensionError);
}

TEST(PipelineTest, DeterministicAndSeedSensitive) {
  std::mt19937_64 gen(2);
  const ImagePair pair = random_pair(gen, 64, 64);
  const PipelineOutput a = run_pipeline(Model(small_config()), pair);
  const PipelineOutput b = run_pipeline(Model(small_config()), pair);
  EXPECT_EQ(a.seg.logits, b.seg.logits);
  EXPECT_EQ(a.fused.pixels, b.fused.pixels);
  PipelineConfig other = small_config();
  other.seed = 8;
  EXPECT_NE(run_pipeline(Model(other), pair).seg.logits, a.seg.logits);
}

TEST(PipelineTest, SwapFlagChangesEnhancement) {
  std::mt19937_64 gen(3);
  const ImagePair pair = random_pair(gen, 32, 32);
  PipelineConfig swapped = small_config();
  swapped.swap_enhance_base = true;
  EXPECT_NE(run_pipeline(Model(small_config()), pair).ev[0], run_pipeline(Model(swapped), pair).ev[0]);
}

TEST(PipelineTest, PadPairRoundsUpWithZeros) {
  const LabeledSample s = render_clean(random_scene(4, 40, 50, Regime::normal, 0.0));
  const ImagePair padded = pad_pair(s.pair);
  EXPECT_EQ(padded.height(), 64u);
  EXPECT_EQ(padded.width(), 64u);
  EXPECT_EQ(padded.visible(1, 10, 20), s.pair.visible(1, 10, 20));
  EXPECT_EQ(padded.visible(0, 45, 10), 0.0);
  EXPECT_EQ(padded.infrared(0, 10, 55), 0.0);
  ASSERT_TRUE(padded.mask.has_value());
  EXPECT_EQ(padded.mask->shape(), (Shape{64, 64}));
}
