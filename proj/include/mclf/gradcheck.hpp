#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mclf/tensor.hpp"

namespace mclf {

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t min_coords = 64;
  double tolerance = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 0;
  /// Coordinates for which this returns true are skipped (L1 kinks).
  std::function<bool(std::size_t)> near_kink;
};

struct GradCheckReport {
  std::string loss;
  std::size_t coords_checked = 0;
  double max_rel_err = 0.0;
  std::size_t skipped_kinks = 0;
  std::vector<std::size_t> skipped;
  bool passed = false;

  std::string to_json() const;
};

/// Central differences (f(x + h e) - f(x - h e)) / 2h on a random subset of
/// coordinates, compared against `analytic`.
GradCheckReport gradient_check(std::string name, const std::function<double(const Tensor&)>& f,
                               const Tensor& analytic, const Tensor& point, const GradCheckOptions& opt = {});

}  // namespace mclf
