#include "mclf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "mclf/random.hpp"

namespace mclf {

std::string GradCheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["loss"] = loss;
  j["coords_checked"] = coords_checked;
  j["max_rel_err"] = max_rel_err;
  j["skipped_kinks"] = skipped_kinks;
  return j.dump();
}

GradCheckReport gradient_check(std::string name, const std::function<double(const Tensor&)>& f,
                               const Tensor& analytic, const Tensor& point, const GradCheckOptions& opt) {
  if (analytic.shape() != point.shape()) {
    throw DimensionError("gradient_check: gradient " + shape_string(analytic.shape()) + " vs point " +
                         shape_string(point.shape()));
  }
  GradCheckReport report;
  report.loss = std::move(name);

  // Random visiting order; kinked coordinates are replaced by later ones.
  std::vector<std::size_t> order(point.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opt.seed, fnv1a64("gradient_check"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  Tensor probe = point;
  for (std::size_t idx : order) {
    if (report.coords_checked >= opt.min_coords) break;
    if (opt.near_kink && opt.near_kink(idx)) {
      ++report.skipped_kinks;
      report.skipped.push_back(idx);
      continue;
    }
    const double x0 = point[idx];
    probe[idx] = x0 + opt.step;
    const double up = f(probe);
    probe[idx] = x0 - opt.step;
    const double down = f(probe);
    probe[idx] = x0;
    const double numeric = (up - down) / (2.0 * opt.step);
    const double a = analytic[idx];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
    report.max_rel_err = std::max(report.max_rel_err, std::isfinite(rel) ? rel : INFINITY);
    ++report.coords_checked;
  }
  report.passed = report.coords_checked >= std::max<std::size_t>(opt.min_coords, 1) && report.max_rel_err < opt.tolerance;
  return report;
}

}  // namespace mclf
