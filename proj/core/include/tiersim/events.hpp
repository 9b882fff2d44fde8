// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tiersim/types.hpp"

namespace tiersim {

/// Pipeline stages. Net moves blocks L3 -> L2, Pcie moves them L2 -> L1.
enum class Stage : std::uint8_t { Net, Pcie, Compute };

const char* stage_name(Stage stage);

enum class EventKind : std::uint8_t {
  Arrival,
  TransferDone,
  AllocationGrant,
  ComputeDone,
  DispatchWake,
};

const char* event_kind_name(EventKind kind);

/// One row of the simulation event trace, ordered by (time, seq); seq is
/// unique across the run, so the trace is a total order.
struct TraceEvent {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Arrival;
  std::optional<Stage> stage;  ///< set for TransferDone / ComputeDone / DispatchWake
  std::optional<Tier> tier;    ///< set for AllocationGrant
  std::int64_t request_id = -1;
  std::int32_t block_index = -1;
  std::int64_t bytes = 0;
};

/// Writes the trace as CSV with columns
/// (time, seq, kind, stage, request_id, block_index, bytes).
void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEvent> trace);

}  // namespace tiersim
