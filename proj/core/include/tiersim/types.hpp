// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tiersim/error.hpp"

namespace tiersim {

// ============================================================================
// Storage tiers
// ============================================================================

/// KVCache storage hierarchy: remote DRAM pool -> local DRAM -> GPU HBM.
enum class Tier : std::uint8_t { L3, L2, L1 };

const char* tier_name(Tier tier);

/// Small set of tiers; tracks where destination space has been reserved.
class TierSet {
 public:
  bool contains(Tier tier) const noexcept { return (mask_ & bit(tier)) != 0; }
  void insert(Tier tier) noexcept { mask_ |= bit(tier); }
  void erase(Tier tier) noexcept { mask_ &= static_cast<std::uint8_t>(~bit(tier)); }
  bool empty() const noexcept { return mask_ == 0; }
  bool operator==(const TierSet&) const = default;

 private:
  static std::uint8_t bit(Tier tier) noexcept {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(tier));
  }
  std::uint8_t mask_ = 0;
};

// ============================================================================
// Requests
// ============================================================================

/// Profiled service cost override: replays measured (load, compute) seconds
/// verbatim instead of deriving stage durations from bandwidth arithmetic.
struct MeasuredCost {
  double t_load = 0.0;
  double t_comp = 0.0;
};

/// One inference request as submitted to the serving pipeline.
struct RequestSpec {
  std::int64_t id = 0;
  double arrival_time = 0.0;       ///< seconds on the simulated clock
  std::int64_t context_tokens = 0;
  std::int64_t query_tokens = 1;
  double cache_hit_ratio = 1.0;    ///< fraction of context found in the cache pool
  std::optional<double> deadline;  ///< absolute seconds; must exceed arrival_time
  std::optional<MeasuredCost> measured_cost;
  std::string dataset_tag;

  /// Throws ValidationError if any invariant is violated.
  void validate() const;
};

// ============================================================================
// Cluster configuration
// ============================================================================

enum class AllocationMode : std::uint8_t { Proactive, Reactive };
enum class ControlMode : std::uint8_t { Coupled, Decoupled };

const char* allocation_mode_name(AllocationMode mode);
const char* control_mode_name(ControlMode mode);
std::optional<AllocationMode> allocation_mode_from_name(const std::string& name);
std::optional<ControlMode> control_mode_from_name(const std::string& name);

/// Static description of the serving cluster and its calibration.
///
/// Defaults model one 80 GB GPU with 128 GB host DRAM behind a 400 Gbps
/// network link, serving an 8B-parameter model in fp16.
struct ClusterConfig {
  double network_bandwidth = 50e9;       ///< bytes/s, L3 -> L2
  double pcie_bandwidth = 64e9;          ///< bytes/s, L2 -> L1
  double transfer_base_latency = 10e-6;  ///< fixed seconds per transfer
  std::int64_t l1_capacity = 80'000'000'000;
  std::int64_t l2_capacity = 128'000'000'000;
  std::int64_t bytes_per_token = 131072;
  std::int64_t block_size_tokens = 256;
  double compute_base = 2e-3;       ///< seconds per prefill launch
  double compute_per_token = 4e-5;  ///< seconds per computed token
  double compute_quadratic = 0.0;   ///< seconds per computed token^2
  AllocationMode allocation_mode = AllocationMode::Proactive;
  ControlMode control_mode = ControlMode::Decoupled;

  void validate() const;
};

// ============================================================================
// Blocks
// ============================================================================

/// Unit of KVCache transfer and residency.
struct KVBlock {
  std::int64_t request_id = 0;
  std::int32_t block_index = 0;
  std::int64_t tokens = 0;
  std::int64_t bytes = 0;  ///< always tokens * bytes_per_token
  Tier residency = Tier::L3;
  TierSet allocated_at;  ///< tiers where destination space is reserved
};

// ============================================================================
// Per-request runtime state
// ============================================================================

/// Absolute timestamps collected while a request moves through the pipeline.
/// Fields stay unset for phases a request never enters (e.g. loading when
/// nothing is cached). All set fields are non-decreasing in member order.
struct Timestamps {
  double arrival = 0.0;
  std::optional<double> scheduled;
  std::optional<double> net_first_dispatch;
  std::optional<double> l2_resident;
  std::optional<double> l1_resident;
  std::optional<double> compute_start;
  std::optional<double> first_token;
};

struct RequestState {
  RequestSpec spec;
  std::int64_t cached_tokens = 0;   ///< block-granular prefix found in the pool
  std::int64_t compute_tokens = 0;  ///< tokens actually prefilled
  std::vector<KVBlock> blocks;
  Timestamps ts;
};

// ============================================================================
// Operations
// ============================================================================

/// Cached prefix length, rounded down to whole blocks. Partially hit blocks
/// are recomputed rather than loaded.
std::int64_t cached_token_count(const RequestSpec& spec, const ClusterConfig& config);

/// Tokens the prefill has to process: context + query - cached prefix.
std::int64_t compute_token_count(const RequestSpec& spec, const ClusterConfig& config);

/// Block plan covering exactly cached_token_count() tokens; all blocks are
/// full under the floor rule. Empty when nothing is cached.
std::vector<KVBlock> derive_block_plan(const RequestSpec& spec, const ClusterConfig& config);

RequestState make_request_state(const RequestSpec& spec, const ClusterConfig& config);

/// KVCache bytes for one token: K and V across all layers.
std::int64_t kv_bytes_per_token(std::int64_t layers, std::int64_t kv_heads,
                                std::int64_t head_dim, std::int64_t dtype_bytes);

}  // namespace tiersim
