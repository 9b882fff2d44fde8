// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiersim/events.hpp"
#include "tiersim/types.hpp"

namespace tiersim {

/// Outcome of one request.
struct RequestRecord {
  std::int64_t id = 0;
  double arrival = 0.0;
  double first_token = 0.0;
  double ttft = 0.0;
  std::optional<double> deadline;
  bool slo_met = true;  ///< requests without a deadline count as met
  Timestamps ts;
};

struct ThroughputPoint {
  double time = 0.0;  ///< bucket start
  double bytes_per_s = 0.0;
};

struct RunMetadata {
  std::string policy;
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Everything a finished run reports: per-request outcomes, TTFT and SLO
/// aggregates, per-stage throughput, and the raw event trace.
struct RunReport {
  std::vector<RequestRecord> records;
  double mean_ttft = 0.0;
  double median_ttft = 0.0;
  double p95_ttft = 0.0;
  double p99_ttft = 0.0;
  double slo_attainment = 1.0;
  double makespan = 0.0;
  /// Peak average throughput over any window placement; absent for stages
  /// with no traffic or when the trace is shorter than the window.
  std::map<Stage, double> peak_throughput;
  std::map<Stage, std::vector<ThroughputPoint>> throughput_timeline;
  RunMetadata meta;
  std::vector<std::string> warnings;
  std::vector<TraceEvent> trace;
};

struct SummaryOptions {
  double throughput_window = 20.0;  ///< seconds
  double timeline_bucket = 1.0;     ///< seconds
};

/// Builds the report from a trace and the per-request end states.
/// Throws IncompleteTrace when any request lacks a first_token timestamp.
RunReport summarize_run(std::vector<TraceEvent> trace, std::span<const RequestState> requests,
                        const SummaryOptions& options = {}, RunMetadata meta = {});

/// Peak average throughput of one stage within any `window`-second interval,
/// sliding over transfer-completion events. Bytes count at the completion
/// instant. Throws WindowTooLong when the trace is shorter than the window.
double windowed_peak_throughput(std::span<const TraceEvent> trace, Stage stage, double window);

/// Raw form: `completions` are (time, bytes) pairs sorted by time inside
/// the trace interval [t_begin, t_end].
double windowed_peak_throughput(std::span<const std::pair<double, double>> completions,
                                double t_begin, double t_end, double window);

/// TTFT percentile with linear interpolation; q in [0, 1].
double ttft_percentile(std::span<const RequestRecord> records, double q);

/// Writes `<stem>_summary.json`, `<stem>_requests.csv` and
/// `<stem>_throughput.csv` under `dir`.
void write_report_files(const RunReport& report, const std::filesystem::path& dir,
                        const std::string& stem);

}  // namespace tiersim
