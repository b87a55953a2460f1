#include "mclf/pipeline.hpp"

#include <numeric>

#include <json.hpp>

#include "mclf/error.hpp"

namespace mclf {
namespace {

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

Tensor pad_image(const Tensor& img, std::size_t H, std::size_t W) {
  Tensor map = img.reshape({1, img.dim(0), img.dim(1), img.dim(2)});
  map = pad_to(map, H, W);
  return map.reshape({img.dim(0), H, W});
}

}  // namespace

void PipelineConfig::validate() const {
  if (height == 0 || width == 0 || height % 32 || width % 32) {
    throw ConfigError("image size " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not a positive multiple of 32");
  }
  if (heads == 0) throw ConfigError("head count must be positive");
  for (std::size_t c : channels) {
    if (c == 0 || c % 4 || c % heads) {
      throw ConfigError("channel count " + std::to_string(c) + " must be divisible by 4 and by " +
                        std::to_string(heads) + " heads");
    }
  }
  if (window.height == 0 || window.width == 0) throw ConfigError("scan window must be non-empty");
  if (state_dim == 0) throw ConfigError("state dimension must be positive");
  if (classes < 2 || classes > 256) throw ConfigError("class count must lie in [2, 256]");
  if (seg_width == 0) throw ConfigError("segmentation width must be positive");
  if (!(loss.focal.alpha > 0.0) || !(loss.focal.gamma >= 0.0) || !(loss.iou_eps > 0.0)) {
    throw ConfigError("focal alpha and iou eps must be positive, gamma non-negative");
  }
  loss.fusion.validate();
}

PipelineConfig PipelineConfig::from_json(const std::string& text, const PipelineConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c = base;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "height") c.height = v.get<std::size_t>();
      else if (key == "width") c.width = v.get<std::size_t>();
      else if (key == "channels") c.channels = v.get<std::array<std::size_t, 4>>();
      else if (key == "heads") c.heads = v.get<std::size_t>();
      else if (key == "window_h") c.window.height = v.get<std::size_t>();
      else if (key == "window_w") c.window.width = v.get<std::size_t>();
      else if (key == "state_dim") c.state_dim = v.get<std::size_t>();
      else if (key == "classes") c.classes = v.get<std::size_t>();
      else if (key == "seg_width") c.seg_width = v.get<std::size_t>();
      else if (key == "alpha") c.loss.focal.alpha = v.get<double>();
      else if (key == "gamma") c.loss.focal.gamma = v.get<double>();
      else if (key == "beta1") c.loss.fusion.beta1 = v.get<double>();
      else if (key == "beta2") c.loss.fusion.beta2 = v.get<double>();
      else if (key == "beta3") c.loss.fusion.beta3 = v.get<double>();
      else if (key == "eps") c.loss.iou_eps = v.get<double>();
      else if (key == "swap_enhance_base") c.swap_enhance_base = v.get<bool>();
      else if (key == "out_dir") c.out_dir = v.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::from_json(const std::string& text) { return from_json(text, PipelineConfig{}); }

std::string PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["height"] = height;
  j["width"] = width;
  j["channels"] = channels;
  j["heads"] = heads;
  j["window_h"] = window.height;
  j["window_w"] = window.width;
  j["state_dim"] = state_dim;
  j["classes"] = classes;
  j["seg_width"] = seg_width;
  j["alpha"] = loss.focal.alpha;
  j["gamma"] = loss.focal.gamma;
  j["beta1"] = loss.fusion.beta1;
  j["beta2"] = loss.fusion.beta2;
  j["beta3"] = loss.fusion.beta3;
  j["eps"] = loss.iou_eps;
  j["swap_enhance_base"] = swap_enhance_base;
  j["out_dir"] = out_dir;
  return j.dump(2) + "\n";
}

Model::Model(const PipelineConfig& cfg)
    : config(cfg), encoder(ParamSet(cfg.seed), cfg.channels) {
  config.validate();
  const ParamSet ps(cfg.seed);
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string tag = "scale" + std::to_string(s);
    fsec[s] = FsecParams::random(ps, tag + ".fsec", cfg.channels[s], cfg.state_dim);
    gmia[s] = GmiaParams::random(ps, tag + ".gmia", cfg.channels[s], cfg.heads);
    svca[s] = SvcaParams::random(ps, tag + ".svca", cfg.channels[s]);
  }
  seg = SegHeadParams::random(ps, "seg_head", cfg.channels, cfg.seg_width, cfg.classes);
  fusion = FusionHeadParams::random(ps, "fusion_head", cfg.channels);
}

PipelineOutput run_pipeline(const Model& model, const ImagePair& pair) {
  pair.validate();
  const PipelineConfig& cfg = model.config;
  const ModalityFeatures feats = model.encoder.encode(pair);
  const std::size_t mh = std::lcm<std::size_t>(4, cfg.window.height);
  const std::size_t mw = std::lcm<std::size_t>(4, cfg.window.width);
  const FsecOptions opt{cfg.window, cfg.swap_enhance_base};

  PipelineOutput out;
  for (std::size_t s = 0; s < 4; ++s) {
    const Tensor& xv = feats.visible[s];
    const Tensor& xi = feats.infrared[s];
    const std::size_t h = xv.dim(2), w = xv.dim(3);
    const std::size_t ph = round_up(h, mh), pw = round_up(w, mw);
    const EnhancedPair e = fsec(pad_to(xv, ph, pw), pad_to(xi, ph, pw), model.fsec[s], opt);
    out.ev[s] = crop_to(e.ev, h, w);
    out.ei[s] = crop_to(e.ei, h, w);
    const GmiaOutput g = gmia(out.ev[s], out.ei[s], model.gmia[s]);
    out.features[s] = FusedFeature::from_map(svca(g.fused, model.svca[s]));
  }
  out.seg = segmentation_head(out.features, pair.height(), pair.width(), model.seg);
  out.fused = fusion_head(out.ev, out.ei, pair, model.fusion);
  return out;
}

ImagePair pad_pair(const ImagePair& pair) {
  pair.validate();
  const std::size_t H = round_up(pair.height(), 32), W = round_up(pair.width(), 32);
  ImagePair out{pad_image(pair.visible, H, W), pad_image(pair.infrared, H, W), std::nullopt};
  if (pair.mask) {
    out.mask = pad_image(pair.mask->reshape({1, pair.height(), pair.width()}), H, W).reshape({H, W});
  }
  return out;
}

}  // namespace mclf
