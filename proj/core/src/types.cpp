// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/types.hpp"

#include <cmath>
#include <string>

namespace tiersim {

const char* tier_name(Tier tier) {
  switch (tier) {
    case Tier::L3: return "l3";
    case Tier::L2: return "l2";
    case Tier::L1: return "l1";
  }
  return "?";
}

const char* allocation_mode_name(AllocationMode mode) {
  return mode == AllocationMode::Proactive ? "proactive" : "reactive";
}

const char* control_mode_name(ControlMode mode) {
  return mode == ControlMode::Coupled ? "coupled" : "decoupled";
}

std::optional<AllocationMode> allocation_mode_from_name(const std::string& name) {
  if (name == "proactive") return AllocationMode::Proactive;
  if (name == "reactive") return AllocationMode::Reactive;
  return std::nullopt;
}

std::optional<ControlMode> control_mode_from_name(const std::string& name) {
  if (name == "coupled") return ControlMode::Coupled;
  if (name == "decoupled") return ControlMode::Decoupled;
  return std::nullopt;
}

void RequestSpec::validate() const {
  const std::string where = "request " + std::to_string(id);
  if (context_tokens < 0)
    throw ValidationError(where + ": context_tokens must be >= 0");
  if (query_tokens < 1)
    throw ValidationError(where + ": query_tokens must be >= 1");
  if (!(cache_hit_ratio >= 0.0 && cache_hit_ratio <= 1.0))
    throw ValidationError(where + ": cache_hit_ratio must be in [0, 1]");
  if (deadline && !(*deadline > arrival_time))
    throw ValidationError(where + ": deadline must be greater than arrival_time");
  if (measured_cost && (measured_cost->t_load < 0.0 || measured_cost->t_comp < 0.0))
    throw ValidationError(where + ": measured_cost components must be >= 0");
  if (!std::isfinite(arrival_time))
    throw ValidationError(where + ": arrival_time must be finite");
}

void ClusterConfig::validate() const {
  if (!(network_bandwidth > 0.0))
    throw ValidationError("cluster: network_bandwidth must be > 0");
  if (!(pcie_bandwidth > 0.0))
    throw ValidationError("cluster: pcie_bandwidth must be > 0");
  if (transfer_base_latency < 0.0)
    throw ValidationError("cluster: transfer_base_latency must be >= 0");
  if (l1_capacity <= 0 || l2_capacity <= 0)
    throw ValidationError("cluster: tier capacities must be > 0");
  if (bytes_per_token <= 0)
    throw ValidationError("cluster: bytes_per_token must be > 0");
  if (block_size_tokens < 1)
    throw ValidationError("cluster: block_size_tokens must be >= 1");
  if (compute_base < 0.0 || compute_per_token < 0.0 || compute_quadratic < 0.0)
    throw ValidationError("cluster: compute coefficients must be >= 0");
}

std::int64_t cached_token_count(const RequestSpec& spec, const ClusterConfig& config) {
  const double hit_tokens =
      static_cast<double>(spec.context_tokens) * spec.cache_hit_ratio;
  const auto blocks = static_cast<std::int64_t>(
      std::floor(hit_tokens / static_cast<double>(config.block_size_tokens)));
  return blocks * config.block_size_tokens;
}

std::int64_t compute_token_count(const RequestSpec& spec, const ClusterConfig& config) {
  return spec.context_tokens + spec.query_tokens - cached_token_count(spec, config);
}

std::vector<KVBlock> derive_block_plan(const RequestSpec& spec, const ClusterConfig& config) {
  spec.validate();
  const std::int64_t cached = cached_token_count(spec, config);
  std::vector<KVBlock> plan;
  if (cached == 0) return plan;
  const std::int64_t count = cached / config.block_size_tokens;
  plan.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    KVBlock block;
    block.request_id = spec.id;
    block.block_index = static_cast<std::int32_t>(i);
    block.tokens = config.block_size_tokens;
    block.bytes = block.tokens * config.bytes_per_token;
    plan.push_back(block);
  }
  return plan;
}

RequestState make_request_state(const RequestSpec& spec, const ClusterConfig& config) {
  RequestState state;
  state.spec = spec;
  state.cached_tokens = cached_token_count(spec, config);
  state.compute_tokens = compute_token_count(spec, config);
  state.blocks = derive_block_plan(spec, config);
  state.ts.arrival = spec.arrival_time;
  return state;
}

std::int64_t kv_bytes_per_token(std::int64_t layers, std::int64_t kv_heads,
                                std::int64_t head_dim, std::int64_t dtype_bytes) {
  if (layers < 1 || kv_heads < 1 || head_dim < 1 || dtype_bytes < 1)
    throw ValidationError("kv_bytes_per_token: all arguments must be >= 1");
  return 2 * layers * kv_heads * head_dim * dtype_bytes;
}

}  // namespace tiersim
