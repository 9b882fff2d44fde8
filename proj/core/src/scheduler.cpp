// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/scheduler.hpp"

#include <array>
#include <cmath>
#include <string>

namespace tiersim {

namespace {
constexpr std::array<PolicyKind, 5> kAllPolicies = {
    PolicyKind::Fifo, PolicyKind::SjfPt, PolicyKind::SjfCost, PolicyKind::Edf, PolicyKind::Lstf};
}

std::optional<PolicyKind> policy_from_name(std::string_view name) {
  if (name == "fifo") return PolicyKind::Fifo;
  if (name == "sjf-pt") return PolicyKind::SjfPt;
  if (name == "sjf-cost") return PolicyKind::SjfCost;
  if (name == "edf") return PolicyKind::Edf;
  if (name == "lstf") return PolicyKind::Lstf;
  return std::nullopt;
}

std::string_view policy_name(PolicyKind policy) {
  switch (policy) {
    case PolicyKind::Fifo: return "fifo";
    case PolicyKind::SjfPt: return "sjf-pt";
    case PolicyKind::SjfCost: return "sjf-cost";
    case PolicyKind::Edf: return "edf";
    case PolicyKind::Lstf: return "lstf";
  }
  return "?";
}

std::span<const PolicyKind> all_policies() { return kAllPolicies; }

double prefill_token_estimate(const RequestSpec& spec) {
  const double hit_tokens =
      std::floor(static_cast<double>(spec.context_tokens) * spec.cache_hit_ratio);
  return static_cast<double>(spec.context_tokens + spec.query_tokens) - hit_tokens;
}

PriorityKey priority_key(const RequestSpec& spec, PolicyKind policy, const ServiceCost& cost,
                         double now) {
  (void)now;
  PriorityKey key;
  key.arrival = spec.arrival_time;
  key.id = spec.id;
  switch (policy) {
    case PolicyKind::Fifo:
      key.primary = spec.arrival_time;
      break;
    case PolicyKind::SjfPt:
      key.primary = prefill_token_estimate(spec);
      break;
    case PolicyKind::SjfCost:
      key.primary = cost.total();
      break;
    case PolicyKind::Edf:
      if (!spec.deadline)
        throw MissingDeadline("edf: request " + std::to_string(spec.id) + " has no deadline");
      key.primary = *spec.deadline;
      break;
    case PolicyKind::Lstf:
      if (!spec.deadline)
        throw MissingDeadline("lstf: request " + std::to_string(spec.id) + " has no deadline");
      key.primary = *spec.deadline - cost.total();
      break;
  }
  return key;
}

std::optional<std::size_t> best_request_index(std::span<const RequestSpec> queue,
                                              PolicyKind policy, const CostMap& costs,
                                              double now) {
  if (queue.empty()) return std::nullopt;
  std::size_t best = 0;
  PriorityKey best_key;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const auto it = costs.find(queue[i].id);
    const ServiceCost cost = it != costs.end() ? it->second : ServiceCost{};
    const PriorityKey key = priority_key(queue[i], policy, cost, now);
    if (i == 0 || key < best_key) {
      best = i;
      best_key = key;
    }
  }
  return best;
}

std::optional<RequestSpec> pick_next(std::vector<RequestSpec>& queue, PolicyKind policy,
                                     const CostMap& costs, double now) {
  const auto idx = best_request_index(queue, policy, costs, now);
  if (!idx) return std::nullopt;
  RequestSpec picked = std::move(queue[*idx]);
  queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(*idx));
  return picked;
}

}  // namespace tiersim
