// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tiersim/types.hpp"

namespace tiersim {

/// Affine latency model: seconds = intercept + slope * tokens.
struct LinearCostModel {
  double slope = 0.0;      ///< seconds per token
  double intercept = 0.0;  ///< seconds
};

/// Fit result; clamped flags report coefficients forced up to zero.
struct LinearFit {
  LinearCostModel model;
  bool slope_clamped = false;
  bool intercept_clamped = false;
};

/// One profiling observation: how long an operation on `tokens` tokens took.
struct TokenSample {
  std::int64_t tokens = 0;
  double seconds = 0.0;
};

/// Ordinary least squares through the samples. Negative fitted coefficients
/// are clamped to zero (costs are physical) and flagged.
/// Throws DegenerateFit when fewer than two distinct token counts appear.
LinearFit fit_linear(std::span<const TokenSample> samples);

double predict(const LinearCostModel& model, std::int64_t tokens);

/// Per-request service cost used as the scheduling signal.
struct ServiceCost {
  double t_load = 0.0;
  double t_comp = 0.0;
  double total() const noexcept { return t_load + t_comp; }
};

/// Loading and compute models together.
struct CostModelPair {
  LinearCostModel load;
  LinearCostModel comp;
};

/// Estimated (t_load, t_comp) for one request.
///
/// A measured_cost override is returned verbatim. Otherwise the loading term
/// is evaluated on the cached token count (zero when nothing is cached) and
/// the compute term on the computed token count, plus the optional quadratic
/// correction from the config.
ServiceCost estimate_service_cost(const RequestSpec& spec, const LinearCostModel& load_model,
                                  const LinearCostModel& comp_model, const ClusterConfig& config);

/// Cost models synthesized from the cluster calibration itself, i.e. the
/// result an exact offline profiling run of this cluster would produce:
/// loading covers both transfer hops of a block-aligned prefix, compute is
/// the prefill launch plus the per-token term.
CostModelPair cost_models_from_config(const ClusterConfig& config);

/// Reads profiling samples from a two-column CSV (tokens, seconds). A header
/// line is skipped if present.
std::vector<TokenSample> read_samples_csv(const std::filesystem::path& path);

}  // namespace tiersim
