#include "mclf/random.hpp"

#include <cmath>
#include <numbers>

namespace mclf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)) {}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Tensor Rng::uniform_tensor(Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(lo, hi);
  return t;
}

Eigen::MatrixXd ParamSet::matrix(std::string_view name, Eigen::Index rows, Eigen::Index cols,
                                 double scale) const {
  Rng rng = stream(name);
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill order keeps the draw sequence independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  return m;
}

Eigen::VectorXd ParamSet::vector(std::string_view name, Eigen::Index n, double scale) const {
  Rng rng = stream(name);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

Tensor ParamSet::tensor(std::string_view name, Shape shape, double scale) const {
  Rng rng = stream(name);
  return rng.uniform_tensor(std::move(shape), -scale, scale);
}

Eigen::MatrixXd ParamSet::linear(std::string_view name, Eigen::Index out, Eigen::Index in) const {
  return matrix(name, out, in, 1.0 / std::sqrt(static_cast<double>(in)));
}

}  // namespace mclf
