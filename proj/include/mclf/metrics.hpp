#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mclf/encoder_heads.hpp"
#include "mclf/tensor.hpp"

namespace mclf {

inline constexpr std::size_t kDefaultClasses = 5;

/// "background", "cargo_ship", ... for the default 5 classes, "class_<i>" otherwise.
std::string class_name(std::size_t id, std::size_t classes);

struct ClassCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct EvalResult {
  std::vector<ClassCounts> counts;         // indexed by class id
  std::vector<std::optional<double>> iou;  // nullopt when the class is absent from both maps
  std::optional<double> miou;              // mean of the defined IoUs over evaluated classes
  bool include_background = false;
};

/// Hard per-class confusion counts. Shapes must match, ids < classes.
std::vector<ClassCounts> confusion_counts(const Tensor& pred, const Tensor& truth, std::size_t classes);
void accumulate(std::vector<ClassCounts>& into, const std::vector<ClassCounts>& more);

/// IoU_c = tp / (tp + fp + fn); background (class 0) is left out of the mean
/// unless `include_background`.
EvalResult summarize(std::vector<ClassCounts> counts, bool include_background = false);

EvalResult iou_eval(const Tensor& pred, const Tensor& truth, std::size_t classes, bool include_background = false);
EvalResult iou_eval(const SegMap& pred, const Tensor& truth, std::size_t classes, bool include_background = false);

std::string metrics_json(const EvalResult& r);
EvalResult parse_metrics_json(const std::string& text);
void write_metrics(const EvalResult& r, const std::filesystem::path& path);

}  // namespace mclf
