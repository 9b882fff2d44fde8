// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/events.hpp"

#include <cstdio>
#include <fstream>

#include "tiersim/error.hpp"

namespace tiersim {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Net: return "net";
    case Stage::Pcie: return "pcie";
    case Stage::Compute: return "compute";
  }
  return "?";
}

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Arrival: return "arrival";
    case EventKind::TransferDone: return "transfer_done";
    case EventKind::AllocationGrant: return "allocation_grant";
    case EventKind::ComputeDone: return "compute_done";
    case EventKind::DispatchWake: return "dispatch_wake";
  }
  return "?";
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEvent> trace) {
  std::ofstream out(path);
  if (!out) throw Error("write_trace_csv: cannot open " + path.string());
  out << "time,seq,kind,stage,request_id,block_index,bytes\n";
  char buf[64];
  for (const auto& ev : trace) {
    std::snprintf(buf, sizeof(buf), "%.9f", ev.time);
    out << buf << ',' << ev.seq << ',' << event_kind_name(ev.kind) << ',';
    if (ev.stage)
      out << stage_name(*ev.stage);
    else if (ev.tier)
      out << tier_name(*ev.tier);
    out << ',' << ev.request_id << ',' << ev.block_index << ',' << ev.bytes << '\n';
  }
}

}  // namespace tiersim
