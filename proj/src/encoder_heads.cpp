#include "mclf/encoder_heads.hpp"

#include <cmath>
#include <string>

namespace mclf {

EncoderStub::EncoderStub(const ParamSet& ps, const std::array<std::size_t, 4>& channels) {
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string pre = "encoder.stage" + std::to_string(s);
    const auto C = static_cast<Eigen::Index>(channels[s]);
    stages_[s] = Stage{kStageStrides[s],
                       channels[s],
                       ps.matrix(pre + ".proj_visible", C, 3, 1.0),
                       ps.vector(pre + ".bias_visible", C, 0.5),
                       ps.matrix(pre + ".proj_infrared", C, 1, 1.0),
                       ps.vector(pre + ".bias_infrared", C, 0.5)};
  }
}

Tensor patch_means(const Tensor& image, std::size_t stride) {
  if (image.rank() != 3) throw DimensionError("patch_means expects C x H x W");
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  if (stride == 0 || H % stride != 0 || W % stride != 0) {
    throw DimensionError("image " + shape_string(image.shape()) + " not divisible by stride " +
                         std::to_string(stride));
  }
  return pool(PoolKind::mean, image.reshape({C, H / stride, stride, W / stride, stride}), {2, 4})
      .reshape({1, C, H / stride, W / stride});
}

ModalityFeatures EncoderStub::encode(const ImagePair& pair) const {
  pair.validate();
  if (pair.height() % 32 != 0 || pair.width() % 32 != 0) {
    throw DimensionError("encoder input " + std::to_string(pair.height()) + "x" + std::to_string(pair.width()) +
                         " is not divisible by 32");
  }
  ModalityFeatures f;
  for (std::size_t s = 0; s < 4; ++s) {
    const Stage& st = stages_[s];
    f.visible[s] = layer_norm(channel_linear(patch_means(pair.visible, st.stride), st.proj_visible, st.bias_visible), 1);
    f.infrared[s] =
        layer_norm(channel_linear(patch_means(pair.infrared, st.stride), st.proj_infrared, st.bias_infrared), 1);
  }
  return f;
}

Tensor argmax_classes(const Tensor& logits) {
  if (logits.rank() != 3) throw DimensionError("argmax_classes expects K x H x W");
  const std::size_t K = logits.dim(0), n = logits.dim(1) * logits.dim(2);
  Tensor classes(Shape{logits.dim(1), logits.dim(2)});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (logits[k * n + i] > logits[best * n + i]) best = k;
    }
    classes[i] = static_cast<double>(best);
  }
  return classes;
}

SegHeadParams SegHeadParams::random(const ParamSet& ps, std::string_view prefix,
                                    const std::array<std::size_t, 4>& channels, std::size_t width,
                                    std::size_t classes) {
  const std::string pre(prefix);
  const auto D = static_cast<Eigen::Index>(width);
  SegHeadParams p;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string sp = pre + ".scale" + std::to_string(s);
    p.proj[s] = ps.linear(sp + ".proj", D, static_cast<Eigen::Index>(channels[s]));
    p.proj_b[s] = Eigen::VectorXd::Zero(D);
    p.refine_w[s] = ps.tensor(sp + ".refine", {width, width, 3, 3}, 1.0 / std::sqrt(9.0 * static_cast<double>(width)));
    p.refine_b[s] = Eigen::VectorXd::Zero(D);
  }
  p.classify = ps.linear(pre + ".classify", static_cast<Eigen::Index>(classes), 4 * D);
  p.classify_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
  return p;
}

SegMap segmentation_head(std::span<const FusedFeature> fused, std::size_t height, std::size_t width,
                         const SegHeadParams& p) {
  if (fused.size() != 4) {
    throw ConfigError("segmentation_head needs 4 scales, got " + std::to_string(fused.size()));
  }
  std::vector<Tensor> upsampled;
  for (std::size_t s = 0; s < 4; ++s) {
    if (fused[s].tokens.dim(0) != 1) throw DimensionError("segmentation_head expects batch size 1");
    Tensor z = channel_linear(fused[s].map(), p.proj[s], p.proj_b[s]);
    z = conv2d(z, p.refine_w[s], p.refine_b[s]);
    upsampled.push_back(upsample_bilinear(z, height, width));
  }
  const Tensor logits = channel_linear(concat(upsampled, 1), p.classify, p.classify_b);
  SegMap out;
  out.logits = logits.reshape({logits.dim(1), height, width});
  out.classes = argmax_classes(out.logits);
  return out;
}

FusionHeadParams FusionHeadParams::random(const ParamSet& ps, std::string_view prefix,
                                          const std::array<std::size_t, 4>& channels, std::size_t compressed,
                                          std::size_t hidden) {
  const std::string pre(prefix);
  const auto r = static_cast<Eigen::Index>(compressed);
  FusionHeadParams p;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string sp = pre + ".scale" + std::to_string(s);
    const auto C = static_cast<Eigen::Index>(channels[s]);
    p.compress_v[s] = ps.linear(sp + ".compress_v", r, C);
    p.compress_i[s] = ps.linear(sp + ".compress_i", r, C);
    p.compress_v_b[s] = Eigen::VectorXd::Zero(r);
    p.compress_i_b[s] = Eigen::VectorXd::Zero(r);
  }
  const std::size_t in = 8 * compressed + 2;
  p.conv1_w = ps.tensor(pre + ".conv1", {hidden, in, 3, 3}, 1.0 / std::sqrt(9.0 * static_cast<double>(in)));
  p.conv1_b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden));
  p.conv2_w = ps.tensor(pre + ".conv2", {1, hidden, 3, 3}, 1.0 / std::sqrt(9.0 * static_cast<double>(hidden)));
  p.conv2_b = Eigen::VectorXd::Zero(1);
  return p;
}

FusedImage fusion_head(std::span<const Tensor> ev_scales, std::span<const Tensor> ei_scales, const ImagePair& pair,
                       const FusionHeadParams& p) {
  if (ev_scales.size() != 4 || ei_scales.size() != 4) throw ConfigError("fusion_head needs 4 scales per modality");
  pair.validate();
  const std::size_t H = pair.height(), W = pair.width();
  std::vector<Tensor> parts;
  for (std::size_t s = 0; s < 4; ++s) {
    parts.push_back(upsample_bilinear(channel_linear(ev_scales[s], p.compress_v[s], p.compress_v_b[s]), H, W));
  }
  for (std::size_t s = 0; s < 4; ++s) {
    parts.push_back(upsample_bilinear(channel_linear(ei_scales[s], p.compress_i[s], p.compress_i_b[s]), H, W));
  }
  parts.push_back(to_gray(pair.visible).reshape({1, 1, H, W}));
  parts.push_back(pair.infrared.reshape({1, 1, H, W}));
  const Tensor hidden = relu(conv2d(concat(parts, 1), p.conv1_w, p.conv1_b));
  return {sigmoid(conv2d(hidden, p.conv2_w, p.conv2_b)).reshape({1, H, W})};
}

}  // namespace mclf
