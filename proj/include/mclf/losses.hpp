#pragma once

#include <map>
#include <string>
#include <vector>

#include "mclf/encoder_heads.hpp"
#include "mclf/image.hpp"
#include "mclf/tensor.hpp"

namespace mclf {

struct LossValue {
  double value = 0.0;
  Tensor grad;  // same shape as the prediction argument
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// Mean over pixels of alpha (1 - p_t)^gamma (-log p_t), p_t the softmax
/// probability of the target class. Gradient is w.r.t. the K x H x W logits.
LossValue focal_loss(const Tensor& logits, const Tensor& target, FocalParams params = {});

/// Classes entering the soft IoU mean: present in the target or the argmax of `probs`.
std::vector<std::size_t> iou_classes(const Tensor& probs, const Tensor& target);

/// 1 - mean_c sum(y p) / (sum y + sum p - sum(y p) + eps). Gradient w.r.t. probs.
LossValue iou_loss(const Tensor& probs, const Tensor& target, double eps = 1e-6);

/// focal(logits) + iou(softmax(logits)); gradient w.r.t. logits.
LossValue segmentation_loss(const Tensor& logits, const Tensor& target, FocalParams focal = {}, double eps = 1e-6);

struct FusionLossWeights {
  double beta1 = 0.5;
  double beta2 = 0.5;
  double beta3 = 1.0;

  void validate() const;
};

enum class SobelAxis { x, y };

/// 3x3 Sobel response of an H x W (or 1 x H x W) image, zero padded.
Tensor sobel(const Tensor& image, SobelAxis axis);

/// Per-pixel gradient target: on each axis, the source response with the
/// larger magnitude, keeping its sign. Visible wins ties.
Tensor max_gradient_target(const Tensor& a, const Tensor& b);

/// beta1 mean|F - V| + beta2 mean|F - I| + beta3 mean_p(|Sx F - Tx| + |Sy F - Ty|),
/// V the luma of the visible image. Subgradient uses sign(0) = 0.
LossValue fusion_loss(const FusedImage& fused, const ImagePair& pair, FusionLossWeights w = {});

/// True when moving pixel `index` by less than `threshold` can cross an L1 kink
/// of fusion_loss.
bool fusion_loss_near_kink(const FusedImage& fused, const ImagePair& pair, std::size_t index, double threshold);

struct LossParts {
  double focal = 0.0;
  double iou = 0.0;
  double fus = 0.0;
};

/// seg = focal + iou, total = seg + 0.1 fus.
struct LossReport {
  double focal = 0.0, iou = 0.0, seg = 0.0, fus = 0.0, total = 0.0;
  std::map<std::string, Tensor> gradients;
};

inline constexpr double kFusionWeight = 0.1;

LossReport total_loss(const LossParts& parts);

struct LossConfig {
  FocalParams focal;
  double iou_eps = 1e-6;
  FusionLossWeights fusion;
};

/// All losses for one sample, with gradients keyed "focal" and "seg" (w.r.t.
/// logits), "iou" (w.r.t. probabilities) and "fus" (w.r.t. fused pixels).
LossReport evaluate_losses(const SegMap& seg, const FusedImage& fused, const ImagePair& pair, const LossConfig& cfg);

std::string loss_report_json(const LossReport& r);

}  // namespace mclf
