// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace tiersim {

/// Seeded random source with hand-rolled inverse-CDF / Box-Muller sampling.
///
/// The standard <random> distributions are implementation-defined, which
/// would tie generated workloads to one standard library. Everything here
/// is specified arithmetic on top of mt19937_64, so a seed reproduces the
/// same stream on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Unit-mean exponential variate.
  double exponential() {
    // 1 - uniform01() is in (0, 1], keeping the log finite.
    return -std::log(1.0 - uniform01());
  }

  /// Standard normal variate (Box-Muller, pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::acos(-1.0) * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Lognormal variate parameterized by mean and coefficient of variation.
  double lognormal_mean_cv(double mean, double cv) {
    if (cv <= 0.0) return mean;
    const double sigma2 = std::log1p(cv * cv);
    const double mu = std::log(mean) - 0.5 * sigma2;
    return std::exp(mu + std::sqrt(sigma2) * normal());
  }

  /// Uniform pick from a non-empty list.
  template <typename T>
  const T& choice(std::span<const T> values) {
    const auto idx = static_cast<std::size_t>(uniform01() * static_cast<double>(values.size()));
    return values[idx < values.size() ? idx : values.size() - 1];
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tiersim
