#include "mclf/metrics.hpp"

#include <array>
#include <cmath>

#include <json.hpp>

#include "mclf/image_io.hpp"

namespace mclf {

std::string class_name(std::size_t id, std::size_t classes) {
  static constexpr std::array<const char*, kDefaultClasses> names{"background", "cargo_ship", "fishing_boat",
                                                                  "sand_dredger", "speedboat"};
  if (classes == kDefaultClasses && id < names.size()) return names[id];
  return "class_" + std::to_string(id);
}

std::vector<ClassCounts> confusion_counts(const Tensor& pred, const Tensor& truth, std::size_t classes) {
  if (pred.shape() != truth.shape()) {
    throw DimensionError("iou_eval: prediction " + shape_string(pred.shape()) + " vs truth " +
                         shape_string(truth.shape()));
  }
  std::vector<ClassCounts> counts(classes);
  auto id = [&](double v) {
    if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(classes)) {
      throw DimensionError("class id " + std::to_string(v) + " outside [0, " + std::to_string(classes) + ")");
    }
    return static_cast<std::size_t>(v);
  };
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t p = id(pred[i]), t = id(truth[i]);
    if (p == t) {
      ++counts[p].tp;
    } else {
      ++counts[p].fp;
      ++counts[t].fn;
    }
  }
  return counts;
}

void accumulate(std::vector<ClassCounts>& into, const std::vector<ClassCounts>& more) {
  if (into.empty()) into.resize(more.size());
  if (into.size() != more.size()) throw DimensionError("accumulate: class count mismatch");
  for (std::size_t c = 0; c < more.size(); ++c) {
    into[c].tp += more[c].tp;
    into[c].fp += more[c].fp;
    into[c].fn += more[c].fn;
  }
}

EvalResult summarize(std::vector<ClassCounts> counts, bool include_background) {
  EvalResult r;
  r.include_background = include_background;
  r.iou.resize(counts.size());
  double total = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::uint64_t denom = counts[c].tp + counts[c].fp + counts[c].fn;
    if (denom == 0) continue;
    r.iou[c] = static_cast<double>(counts[c].tp) / static_cast<double>(denom);
    if (c == 0 && !include_background) continue;
    total += *r.iou[c];
    ++defined;
  }
  if (defined) r.miou = total / static_cast<double>(defined);
  r.counts = std::move(counts);
  return r;
}

EvalResult iou_eval(const Tensor& pred, const Tensor& truth, std::size_t classes, bool include_background) {
  return summarize(confusion_counts(pred, truth, classes), include_background);
}

EvalResult iou_eval(const SegMap& pred, const Tensor& truth, std::size_t classes, bool include_background) {
  return iou_eval(pred.classes, truth, classes, include_background);
}

std::string metrics_json(const EvalResult& r) {
  const std::size_t K = r.counts.size();
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < K; ++c) {
    const std::string name = class_name(c, K);
    per_class[name] = r.iou[c] ? nlohmann::ordered_json(*r.iou[c]) : nlohmann::ordered_json(nullptr);
    counts[name] = {{"tp", r.counts[c].tp}, {"fp", r.counts[c].fp}, {"fn", r.counts[c].fn}};
  }
  nlohmann::ordered_json j;
  j["per_class"] = per_class;
  j["miou"] = r.miou ? nlohmann::ordered_json(*r.miou) : nlohmann::ordered_json(nullptr);
  j["counts"] = counts;
  j["include_background"] = r.include_background;
  return j.dump(2) + "\n";
}

EvalResult parse_metrics_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("metrics json: ") + e.what(), e.byte);
  }
  EvalResult r;
  r.include_background = j.value("include_background", false);
  for (const auto& [name, c] : j.at("counts").items()) {
    r.counts.push_back({c.at("tp").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                        c.at("fn").get<std::uint64_t>()});
    const auto& v = j.at("per_class").at(name);
    r.iou.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  if (!j.at("miou").is_null()) r.miou = j.at("miou").get<double>();
  return r;
}

void write_metrics(const EvalResult& r, const std::filesystem::path& path) { write_file(path, metrics_json(r)); }

}  // namespace mclf
