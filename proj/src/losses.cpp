#include "mclf/losses.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mclf/ops.hpp"

namespace mclf {
namespace {

constexpr double kProbFloor = 1e-12;

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

const int (&sobel_kernel(SobelAxis axis))[3][3] { return axis == SobelAxis::x ? kSobelX : kSobelY; }

std::size_t class_at(const Tensor& target, std::size_t i, std::size_t classes) {
  const double v = target[i];
  if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(classes)) {
    throw DimensionError("target class id " + std::to_string(v) + " outside [0, " + std::to_string(classes) + ")");
  }
  return static_cast<std::size_t>(v);
}

void check_prediction(const Tensor& pred, const Tensor& target, const char* who) {
  if (pred.rank() != 3 || target.rank() != 2 || pred.dim(1) != target.dim(0) || pred.dim(2) != target.dim(1)) {
    throw DimensionError(std::string(who) + ": prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
}

// Transposed Sobel applied to per-pixel weights: d/dF of sum_p w_p (S F)_p.
void sobel_adjoint_add(const Tensor& weights, SobelAxis axis, std::size_t H, std::size_t W, double scale,
                       Tensor& grad) {
  const auto& k = sobel_kernel(axis);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const double w = weights[y * W + x];
      if (w == 0.0) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto qy = static_cast<std::ptrdiff_t>(y) + dy, qx = static_cast<std::ptrdiff_t>(x) + dx;
          if (qy < 0 || qx < 0 || qy >= static_cast<std::ptrdiff_t>(H) || qx >= static_cast<std::ptrdiff_t>(W)) continue;
          grad[static_cast<std::size_t>(qy) * W + static_cast<std::size_t>(qx)] += scale * k[dy + 1][dx + 1] * w;
        }
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct FusionResiduals {
  Tensor intensity_v, intensity_i;  // F - V, F - I
  Tensor grad_x, grad_y;            // S F - T per axis
};

FusionResiduals fusion_residuals(const FusedImage& fused, const ImagePair& pair) {
  pair.validate();
  const std::size_t H = pair.height(), W = pair.width();
  if (fused.pixels.shape() != Shape{1, H, W}) {
    throw DimensionError("fused image " + shape_string(fused.pixels.shape()) + " does not match input pair");
  }
  const Tensor f = fused.pixels.reshape({H, W});
  const Tensor v = to_gray(pair.visible).reshape({H, W});
  const Tensor ir = pair.infrared.reshape({H, W});
  return {f - v, f - ir, sobel(f, SobelAxis::x) - max_gradient_target(sobel(v, SobelAxis::x), sobel(ir, SobelAxis::x)),
          sobel(f, SobelAxis::y) - max_gradient_target(sobel(v, SobelAxis::y), sobel(ir, SobelAxis::y))};
}

}  // namespace

LossValue focal_loss(const Tensor& logits, const Tensor& target, FocalParams params) {
  check_prediction(logits, target, "focal_loss");
  if (params.gamma < 0.0 || !(params.alpha > 0.0 && params.alpha <= 1.0)) {
    throw ConfigError("focal_loss: need gamma >= 0 and alpha in (0, 1]");
  }
  const std::size_t K = logits.dim(0), P = target.size();
  const Tensor probs = softmax(logits, 0);
  LossValue out{0.0, Tensor(logits.shape())};
  const double inv_p = 1.0 / static_cast<double>(P);
  for (std::size_t i = 0; i < P; ++i) {
    const std::size_t t = class_at(target, i, K);
    const double p_raw = probs[t * P + i];
    const double pt = std::max(p_raw, kProbFloor);
    const double nll = -std::log(pt);
    const double rest = 1.0 - p_raw;
    const double weight = std::pow(rest, params.gamma);
    out.value += params.alpha * weight * nll;

    // coef = dL/dp_t * p_t, so that dL/dz_j = coef * (delta_jt - p_j).
    const double focus_term =
        (params.gamma > 0.0 && rest > 0.0) ? params.gamma * std::pow(rest, params.gamma - 1.0) * nll * p_raw : 0.0;
    const double coef = p_raw < kProbFloor ? 0.0 : params.alpha * (-focus_term - weight);
    for (std::size_t j = 0; j < K; ++j) {
      out.grad[j * P + i] = coef * ((j == t ? 1.0 : 0.0) - probs[j * P + i]) * inv_p;
    }
  }
  out.value *= inv_p;
  return out;
}

std::vector<std::size_t> iou_classes(const Tensor& probs, const Tensor& target) {
  check_prediction(probs, target, "iou_classes");
  const std::size_t K = probs.dim(0), P = target.size();
  std::vector<bool> used(K, false);
  const Tensor predicted = argmax_classes(probs);
  for (std::size_t i = 0; i < P; ++i) {
    used[class_at(target, i, K)] = true;
    used[static_cast<std::size_t>(predicted[i])] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < K; ++c) {
    if (used[c]) out.push_back(c);
  }
  return out;
}

LossValue iou_loss(const Tensor& probs, const Tensor& target, double eps) {
  const std::vector<std::size_t> classes = iou_classes(probs, target);
  const std::size_t P = target.size();
  LossValue out{0.0, Tensor(probs.shape())};
  const double inv_n = 1.0 / static_cast<double>(classes.size());
  double iou_sum = 0.0;
  for (std::size_t c : classes) {
    double inter = 0.0, sum_y = 0.0, sum_p = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      const double y = target[i] == static_cast<double>(c) ? 1.0 : 0.0;
      const double p = probs[c * P + i];
      inter += y * p;
      sum_y += y;
      sum_p += p;
    }
    const double uni = sum_y + sum_p - inter + eps;
    iou_sum += inter / uni;
    const double inv_u2 = 1.0 / (uni * uni);
    for (std::size_t i = 0; i < P; ++i) {
      const double y = target[i] == static_cast<double>(c) ? 1.0 : 0.0;
      out.grad[c * P + i] = -inv_n * (y * uni - inter * (1.0 - y)) * inv_u2;
    }
  }
  out.value = 1.0 - iou_sum * inv_n;
  return out;
}

LossValue segmentation_loss(const Tensor& logits, const Tensor& target, FocalParams focal, double eps) {
  const Tensor probs = softmax(logits, 0);
  LossValue f = focal_loss(logits, target, focal);
  const LossValue iou = iou_loss(probs, target, eps);
  const std::size_t K = logits.dim(0), P = target.size();
  // Softmax Jacobian: dL/dz_j = p_j (g_j - sum_k p_k g_k).
  for (std::size_t i = 0; i < P; ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < K; ++k) dot += probs[k * P + i] * iou.grad[k * P + i];
    for (std::size_t j = 0; j < K; ++j) f.grad[j * P + i] += probs[j * P + i] * (iou.grad[j * P + i] - dot);
  }
  f.value += iou.value;
  return f;
}

void FusionLossWeights::validate() const {
  if (beta1 < 0.0 || beta2 < 0.0 || beta3 < 0.0) throw ConfigError("fusion loss weights must be nonnegative");
}

Tensor sobel(const Tensor& image, SobelAxis axis) {
  if (image.rank() < 2 || image.size() != image.dim(image.rank() - 2) * image.dim(image.rank() - 1)) {
    throw DimensionError("sobel expects a single-channel image, got " + shape_string(image.shape()));
  }
  const std::size_t H = image.dim(image.rank() - 2), W = image.dim(image.rank() - 1);
  const auto& k = sobel_kernel(axis);
  Tensor out(image.shape());
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto qy = static_cast<std::ptrdiff_t>(y) + dy, qx = static_cast<std::ptrdiff_t>(x) + dx;
          if (qy < 0 || qx < 0 || qy >= static_cast<std::ptrdiff_t>(H) || qx >= static_cast<std::ptrdiff_t>(W)) continue;
          acc += k[dy + 1][dx + 1] * image[static_cast<std::size_t>(qy) * W + static_cast<std::size_t>(qx)];
        }
      out[y * W + x] = acc;
    }
  return out;
}

Tensor max_gradient_target(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("max_gradient_target: shape mismatch");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i]) >= std::abs(b[i]) ? a[i] : b[i];
  return out;
}

LossValue fusion_loss(const FusedImage& fused, const ImagePair& pair, FusionLossWeights w) {
  w.validate();
  const FusionResiduals r = fusion_residuals(fused, pair);
  const std::size_t H = pair.height(), W = pair.width(), P = H * W;
  const double inv_p = 1.0 / static_cast<double>(P);

  double l1_v = 0.0, l1_i = 0.0, l1_g = 0.0;
  Tensor grad(Shape{H, W});
  Tensor sx(Shape{H, W}), sy(Shape{H, W});
  for (std::size_t i = 0; i < P; ++i) {
    l1_v += std::abs(r.intensity_v[i]);
    l1_i += std::abs(r.intensity_i[i]);
    l1_g += std::abs(r.grad_x[i]) + std::abs(r.grad_y[i]);
    grad[i] = (w.beta1 * sign(r.intensity_v[i]) + w.beta2 * sign(r.intensity_i[i])) * inv_p;
    sx[i] = sign(r.grad_x[i]);
    sy[i] = sign(r.grad_y[i]);
  }
  sobel_adjoint_add(sx, SobelAxis::x, H, W, w.beta3 * inv_p, grad);
  sobel_adjoint_add(sy, SobelAxis::y, H, W, w.beta3 * inv_p, grad);
  return {(w.beta1 * l1_v + w.beta2 * l1_i + w.beta3 * l1_g) * inv_p, grad.reshape({1, H, W})};
}

bool fusion_loss_near_kink(const FusedImage& fused, const ImagePair& pair, std::size_t index, double threshold) {
  const FusionResiduals r = fusion_residuals(fused, pair);
  const std::size_t H = pair.height(), W = pair.width();
  if (std::abs(r.intensity_v[index]) < threshold || std::abs(r.intensity_i[index]) < threshold) return true;
  const auto y = static_cast<std::ptrdiff_t>(index / W), x = static_cast<std::ptrdiff_t>(index % W);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const auto qy = y + dy, qx = x + dx;
      if (qy < 0 || qx < 0 || qy >= static_cast<std::ptrdiff_t>(H) || qx >= static_cast<std::ptrdiff_t>(W)) continue;
      const std::size_t q = static_cast<std::size_t>(qy) * W + static_cast<std::size_t>(qx);
      if (std::abs(r.grad_x[q]) < threshold || std::abs(r.grad_y[q]) < threshold) return true;
    }
  return false;
}

LossReport total_loss(const LossParts& parts) {
  LossReport r;
  r.focal = parts.focal;
  r.iou = parts.iou;
  r.fus = parts.fus;
  r.seg = parts.focal + parts.iou;
  r.total = r.seg + kFusionWeight * parts.fus;
  return r;
}

LossReport evaluate_losses(const SegMap& seg, const FusedImage& fused, const ImagePair& pair, const LossConfig& cfg) {
  if (!pair.mask) throw ConfigError("evaluate_losses needs a truth mask");
  const Tensor& target = *pair.mask;
  LossValue focal = focal_loss(seg.logits, target, cfg.focal);
  LossValue iou = iou_loss(softmax(seg.logits, 0), target, cfg.iou_eps);
  LossValue seg_total = segmentation_loss(seg.logits, target, cfg.focal, cfg.iou_eps);
  LossValue fus = fusion_loss(fused, pair, cfg.fusion);
  LossReport r = total_loss({focal.value, iou.value, fus.value});
  r.gradients.emplace("focal", std::move(focal.grad));
  r.gradients.emplace("iou", std::move(iou.grad));
  r.gradients.emplace("seg", std::move(seg_total.grad));
  r.gradients.emplace("fus", std::move(fus.grad));
  return r;
}

std::string loss_report_json(const LossReport& r) {
  nlohmann::ordered_json j;
  j["focal"] = r.focal;
  j["iou"] = r.iou;
  j["seg"] = r.seg;
  j["fus"] = r.fus;
  j["total"] = r.total;
  return j.dump(2) + "\n";
}

}  // namespace mclf
