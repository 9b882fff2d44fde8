// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tiersim/cost_model.hpp"
#include "tiersim/types.hpp"

namespace tiersim {

/// Queue-ordering policies.
///
/// SjfPt orders by the number of tokens the prefill will actually process
/// (prompt minus the cache-hit prefix); it is the cost proxy that ignores
/// loading delay. SjfCost orders by the full estimated service cost.
enum class PolicyKind : std::uint8_t { Fifo, SjfPt, SjfCost, Edf, Lstf };

std::optional<PolicyKind> policy_from_name(std::string_view name);
std::string_view policy_name(PolicyKind policy);

/// All known policy names, in declaration order.
std::span<const PolicyKind> all_policies();

/// Ordering key: smaller is more urgent. Ties break on arrival, then id,
/// so selection is a deterministic total order.
struct PriorityKey {
  double primary = 0.0;
  double arrival = 0.0;
  std::int64_t id = 0;

  friend bool operator<(const PriorityKey& a, const PriorityKey& b) {
    if (a.primary != b.primary) return a.primary < b.primary;
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.id < b.id;
  }
};

/// Number of tokens a prefill of this request would process, estimated
/// without block-granularity knowledge: context + query - hit prefix.
double prefill_token_estimate(const RequestSpec& spec);

/// Priority key for one request under one policy. `now` is accepted for
/// interface stability; within a single scheduling instant it does not
/// change the relative order.
/// Throws MissingDeadline for Edf/Lstf requests without a deadline.
PriorityKey priority_key(const RequestSpec& spec, PolicyKind policy, const ServiceCost& cost,
                         double now);

using CostMap = std::unordered_map<std::int64_t, ServiceCost>;

/// Index of the minimum-key request in `queue`, or nullopt when empty.
std::optional<std::size_t> best_request_index(std::span<const RequestSpec> queue,
                                              PolicyKind policy, const CostMap& costs,
                                              double now);

/// Removes and returns the minimum-key request; nullopt when the queue is
/// empty. Selection is non-preemptive: a picked request never re-enters.
std::optional<RequestSpec> pick_next(std::vector<RequestSpec>& queue, PolicyKind policy,
                                     const CostMap& costs, double now);

}  // namespace tiersim
