#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

#include "mclf/tensor.hpp"

namespace mclf {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministic random source keyed by (seed, stream). Only the raw
/// mt19937_64 output is used; the float and normal draws are derived here
/// so sequences match across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  Tensor uniform_tensor(Shape shape, double lo, double hi);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Source of frozen pseudo-random weights. Each named parameter draws from
/// its own stream, so adding a parameter never perturbs the others.
class ParamSet {
 public:
  explicit ParamSet(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  Rng stream(std::string_view name) const { return Rng(seed_, fnv1a64(name)); }

  /// Entries uniform in [-scale, scale].
  Eigen::MatrixXd matrix(std::string_view name, Eigen::Index rows, Eigen::Index cols, double scale) const;
  Eigen::VectorXd vector(std::string_view name, Eigen::Index n, double scale) const;
  Tensor tensor(std::string_view name, Shape shape, double scale) const;

  /// Uniform scale 1/sqrt(fan_in).
  Eigen::MatrixXd linear(std::string_view name, Eigen::Index out, Eigen::Index in) const;

 private:
  std::uint64_t seed_;
};

}  // namespace mclf
