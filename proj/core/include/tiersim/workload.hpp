// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tiersim/cost_model.hpp"
#include "tiersim/types.hpp"

namespace tiersim {

/// Shape of one request stream: how many requests and how long their
/// context/query parts are on average. Lengths are drawn lognormal with the
/// given coefficient of variation.
struct DatasetProfile {
  std::string name;
  std::int64_t num_requests = 0;
  double context_tokens_mean = 0.0;
  double context_tokens_cv = 0.5;
  double query_tokens_mean = 0.0;
  double query_tokens_cv = 0.5;

  void validate() const;
};

/// Built-in profiles: "loogle", "icl", "code". Throws UnknownProfile.
DatasetProfile builtin_profile(std::string_view name);

/// Per-request cache-hit ratio source: a fixed value or a uniform pick from
/// a set (drawn from a dedicated stream so lengths stay identical across
/// hit-ratio variants of the same seed).
struct HitRatioSource {
  enum class Kind : std::uint8_t { Fixed, UniformChoice };
  Kind kind = Kind::Fixed;
  double fixed_value = 1.0;
  std::vector<double> choices;

  static HitRatioSource fixed(double value) { return {Kind::Fixed, value, {}}; }
  static HitRatioSource uniform_choice(std::vector<double> values) {
    return {Kind::UniformChoice, 0.0, std::move(values)};
  }
  void validate() const;
};

struct WorkloadSpec {
  DatasetProfile profile;
  double qps = 1.0;
  std::int64_t count = 0;  ///< 0 means profile.num_requests
  HitRatioSource hit_ratio_source = HitRatioSource::fixed(1.0);
  std::vector<double> slo_factors;  ///< empty: no deadlines assigned
  std::uint64_t seed = 0;

  std::int64_t effective_count() const {
    return count > 0 ? count : profile.num_requests;
  }
  void validate() const;
};

/// Generates the request stream: Poisson arrivals at `qps` (inter-arrival
/// gaps are seed-determined unit exponentials scaled by 1/qps, floored at
/// 1 us), lognormal lengths, hit ratios from the configured source. Fully
/// determined by the seed.
std::vector<RequestSpec> generate_workload(const WorkloadSpec& spec);

/// TTFT of this request alone in an otherwise empty decoupled-mode system;
/// the interference-free baseline used for SLO assignment.
double solo_baseline_ttft(const RequestSpec& spec, const ClusterConfig& config,
                          const CostModelPair& models);

/// Fills in deadlines: deadline = arrival + factor * solo baseline, with the
/// factor drawn uniformly from `factors` under `seed`.
std::vector<RequestSpec> assign_slos(std::vector<RequestSpec> requests,
                                     const ClusterConfig& config, const CostModelPair& models,
                                     std::span<const double> factors, std::uint64_t seed);

/// Workload export/import as JSON lines, one request per line; lets the
/// same stream be replayed across policies and runs.
void write_requests_jsonl(const std::filesystem::path& path, std::span<const RequestSpec> requests);
std::vector<RequestSpec> read_requests_jsonl(const std::filesystem::path& path);

}  // namespace tiersim
