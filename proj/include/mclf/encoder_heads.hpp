#pragma once

#include <array>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "mclf/blocks.hpp"
#include "mclf/image.hpp"
#include "mclf/ops.hpp"
#include "mclf/random.hpp"

namespace mclf {

inline constexpr std::array<std::size_t, 4> kStageStrides{4, 8, 16, 32};

/// Per-scale features of both modalities, each 1 x C_s x H/stride x W/stride.
struct ModalityFeatures {
  std::array<Tensor, 4> visible;
  std::array<Tensor, 4> infrared;
};

/// Frozen stand-in backbone: stride x stride mean-pooled patches, a fixed
/// linear projection and a per-stage layer norm over channels.
class EncoderStub {
 public:
  struct Stage {
    std::size_t stride;
    std::size_t channels;
    Eigen::MatrixXd proj_visible;  // C_s x 3
    Eigen::VectorXd bias_visible;
    Eigen::MatrixXd proj_infrared;  // C_s x 1
    Eigen::VectorXd bias_infrared;
  };

  EncoderStub(const ParamSet& ps, const std::array<std::size_t, 4>& channels);

  const std::array<Stage, 4>& stages() const noexcept { return stages_; }

  /// H and W must be divisible by 32.
  ModalityFeatures encode(const ImagePair& pair) const;

 private:
  std::array<Stage, 4> stages_;
};

/// C x H x W -> 1 x C x H/stride x W/stride of non-overlapping patch means.
Tensor patch_means(const Tensor& image, std::size_t stride);

/// Integer class map plus the logits it was taken from.
struct SegMap {
  Tensor classes;  // H x W
  Tensor logits;   // K x H x W
};

/// Per-pixel argmax over the leading axis of K x H x W. Ties go to the lower id.
Tensor argmax_classes(const Tensor& logits);

struct SegHeadParams {
  std::array<Eigen::MatrixXd, 4> proj;  // D x C_s
  std::array<Eigen::VectorXd, 4> proj_b;
  std::array<Tensor, 4> refine_w;  // D x D x 3 x 3
  std::array<Eigen::VectorXd, 4> refine_b;
  Eigen::MatrixXd classify;  // K x 4D
  Eigen::VectorXd classify_b;

  static SegHeadParams random(const ParamSet& ps, std::string_view prefix, const std::array<std::size_t, 4>& channels,
                              std::size_t width, std::size_t classes);
};

/// Reshape, project, refine, upsample every scale to (height, width), concat, 1x1 classify.
SegMap segmentation_head(std::span<const FusedFeature> fused, std::size_t height, std::size_t width,
                         const SegHeadParams& p);

/// Single-channel fused image in [0, 1].
struct FusedImage {
  Tensor pixels;  // 1 x H x W
};

struct FusionHeadParams {
  std::array<Eigen::MatrixXd, 4> compress_v, compress_i;  // r x C_s
  std::array<Eigen::VectorXd, 4> compress_v_b, compress_i_b;
  Tensor conv1_w;  // hidden x (8r + 2) x 3 x 3
  Eigen::VectorXd conv1_b;
  Tensor conv2_w;  // 1 x hidden x 3 x 3
  Eigen::VectorXd conv2_b;

  static FusionHeadParams random(const ParamSet& ps, std::string_view prefix,
                                 const std::array<std::size_t, 4>& channels, std::size_t compressed = 4,
                                 std::size_t hidden = 8);
};

FusedImage fusion_head(std::span<const Tensor> ev_scales, std::span<const Tensor> ei_scales, const ImagePair& pair,
                       const FusionHeadParams& p);

}  // namespace mclf
