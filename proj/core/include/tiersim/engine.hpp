// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "tiersim/cost_model.hpp"
#include "tiersim/metrics.hpp"
#include "tiersim/scheduler.hpp"
#include "tiersim/types.hpp"

namespace tiersim {

/// Byte-granular reservation ledger for one storage tier.
///
/// Reservations that do not fit are queued and granted strictly FIFO as
/// space frees; a proactive reservation under memory pressure thereby
/// degrades to reactive timing instead of failing.
class TierLedger {
 public:
  enum class Outcome : std::uint8_t { Granted, Deferred };

  struct Pending {
    std::int64_t request_id = 0;
    std::int32_t block_index = 0;
    std::int64_t bytes = 0;
  };

  TierLedger(Tier tier, std::int64_t capacity);

  /// Reserves `bytes` now if they fit and no older reservation is waiting;
  /// otherwise queues the reservation. Throws CapacityError when `bytes`
  /// exceeds the tier capacity outright.
  Outcome request(std::int64_t request_id, std::int32_t block_index, std::int64_t bytes);

  /// Returns `bytes` to the ledger and grants queued reservations in FIFO
  /// order while they fit. Returns the reservations granted by this call.
  std::vector<Pending> release(std::int64_t bytes);

  Tier tier() const noexcept { return tier_; }
  std::int64_t capacity() const noexcept { return capacity_; }
  std::int64_t reserved() const noexcept { return reserved_; }
  std::size_t deferred_count() const noexcept { return deferred_.size(); }

 private:
  Tier tier_;
  std::int64_t capacity_;
  std::int64_t reserved_ = 0;
  std::deque<Pending> deferred_;
};

struct RunOptions {
  bool record_trace = true;
  /// Pending-queue length that triggers a (non-fatal) overload warning.
  std::size_t overload_queue_bound = 100000;
  SummaryOptions summary;
};

/// Runs the three-stage pipeline simulation to completion.
///
/// Requests must be sorted by arrival time and carry unique ids. The run is
/// deterministic: identical inputs produce an identical event trace. Throws
/// CapacityError when a single request can never fit a tier, and
/// MissingDeadline when a deadline policy meets a request without one.
RunReport run_simulation(const std::vector<RequestSpec>& requests, const ClusterConfig& config,
                         PolicyKind policy, const CostModelPair& models, std::uint64_t seed,
                         const RunOptions& options = {});

/// Stable 64-bit hash of the run inputs, recorded in report metadata.
std::uint64_t config_fingerprint(const ClusterConfig& config, PolicyKind policy,
                                 std::uint64_t seed);

}  // namespace tiersim
