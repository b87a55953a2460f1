#pragma once

#include <string>
#include <vector>

#include "mclf/gradcheck.hpp"
#include "mclf/pipeline.hpp"

namespace mclf {

struct SelftestOptions {
  PipelineConfig config;
  /// Debug hook: scales the analytic focal gradient so its check must fail.
  bool corrupt_gradient = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  std::vector<GradCheckReport> gradients;

  bool passed() const;
  std::string to_json() const;
};

/// Central-difference checks of the focal, soft IoU and fusion losses at
/// seeded random points, 64 coordinates each, kinks excluded.
std::vector<GradCheckReport> loss_gradient_checks(std::uint64_t seed, bool corrupt_focal = false);

SelftestReport run_selftest(const SelftestOptions& opt);

}  // namespace mclf
