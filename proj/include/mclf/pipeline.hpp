#pragma once

#include <array>
#include <string>

#include "mclf/blocks.hpp"
#include "mclf/encoder_heads.hpp"
#include "mclf/image.hpp"
#include "mclf/losses.hpp"

namespace mclf {

/// Every free constant of a run. Serialised as flat JSON.
struct PipelineConfig {
  std::uint64_t seed = 7;
  std::size_t height = 64, width = 64;
  std::array<std::size_t, 4> channels{16, 16, 32, 32};
  std::size_t heads = 4;
  Window window{4, 4};
  std::size_t state_dim = 4;
  std::size_t classes = 5;
  std::size_t seg_width = 64;
  LossConfig loss;
  bool swap_enhance_base = false;
  std::string out_dir = "out";

  /// Size divisible by 32, channels divisible by 4 and by the head count.
  void validate() const;

  /// Keys missing from `text` keep their value in `base`. Unknown keys are an error.
  static PipelineConfig from_json(const std::string& text, const PipelineConfig& base);
  static PipelineConfig from_json(const std::string& text);
  std::string to_json() const;
};

/// Frozen weights of the whole network, a pure function of the config seed.
struct Model {
  PipelineConfig config;
  EncoderStub encoder;
  std::array<FsecParams, 4> fsec;
  std::array<GmiaParams, 4> gmia;
  std::array<SvcaParams, 4> svca;
  SegHeadParams seg;
  FusionHeadParams fusion;

  explicit Model(const PipelineConfig& config);
};

struct PipelineOutput {
  SegMap seg;
  FusedImage fused;
  std::array<Tensor, 4> ev, ei;  // per-scale enhanced maps
  std::array<FusedFeature, 4> features;
};

/// Maps are padded up to a multiple of lcm(4, window) around the enhancement
/// step and cropped back. Input H and W must be divisible by 32.
PipelineOutput run_pipeline(const Model& model, const ImagePair& pair);

/// Zero-pads a registered pair on the bottom/right to multiples of 32.
ImagePair pad_pair(const ImagePair& pair);

}  // namespace mclf
