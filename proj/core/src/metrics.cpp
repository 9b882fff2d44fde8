// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "json.hpp"
#include "tiersim/error.hpp"

namespace tiersim {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<std::pair<double, double>> stage_completions(std::span<const TraceEvent> trace,
                                                         Stage stage) {
  std::vector<std::pair<double, double>> out;
  const EventKind want =
      stage == Stage::Compute ? EventKind::ComputeDone : EventKind::TransferDone;
  for (const auto& ev : trace) {
    if (ev.kind == want && ev.stage == stage)
      out.emplace_back(ev.time, static_cast<double>(ev.bytes));
  }
  return out;
}

}  // namespace

double ttft_percentile(std::span<const RequestRecord> records, double q) {
  if (records.empty()) return 0.0;
  std::vector<double> ttfts;
  ttfts.reserve(records.size());
  for (const auto& r : records) ttfts.push_back(r.ttft);
  std::sort(ttfts.begin(), ttfts.end());
  const double pos = q * static_cast<double>(ttfts.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, ttfts.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return ttfts[lo] + frac * (ttfts[hi] - ttfts[lo]);
}

double windowed_peak_throughput(std::span<const std::pair<double, double>> completions,
                                double t_begin, double t_end, double window) {
  if (!(window > 0.0)) throw ValidationError("windowed_peak_throughput: window must be > 0");
  if (t_end - t_begin < window)
    throw WindowTooLong("windowed_peak_throughput: trace shorter than window");

  // The max over continuous window placements is attained with the window's
  // right edge on a completion event; slide a two-pointer sum over (e-w, e].
  double best = 0.0;
  double sum = 0.0;
  std::size_t left = 0;
  for (std::size_t right = 0; right < completions.size(); ++right) {
    const double edge = std::max(completions[right].first, t_begin + window);
    sum += completions[right].second;
    while (left <= right && completions[left].first <= edge - window) {
      sum -= completions[left].second;
      ++left;
    }
    best = std::max(best, sum);
  }
  return best / window;
}

double windowed_peak_throughput(std::span<const TraceEvent> trace, Stage stage, double window) {
  if (trace.empty()) throw WindowTooLong("windowed_peak_throughput: empty trace");
  const auto completions = stage_completions(trace, stage);
  return windowed_peak_throughput(completions, trace.front().time, trace.back().time, window);
}

RunReport summarize_run(std::vector<TraceEvent> trace, std::span<const RequestState> requests,
                        const SummaryOptions& options, RunMetadata meta) {
  RunReport report;
  report.meta = std::move(meta);
  report.records.reserve(requests.size());

  double total_ttft = 0.0;
  std::size_t met = 0;
  for (const auto& req : requests) {
    if (!req.ts.first_token)
      throw IncompleteTrace("summarize_run: request " + std::to_string(req.spec.id) +
                            " has no first_token");
    RequestRecord rec;
    rec.id = req.spec.id;
    rec.arrival = req.spec.arrival_time;
    rec.first_token = *req.ts.first_token;
    rec.ttft = rec.first_token - rec.arrival;
    rec.deadline = req.spec.deadline;
    rec.slo_met = !rec.deadline || rec.ttft <= *rec.deadline - rec.arrival;
    rec.ts = req.ts;
    total_ttft += rec.ttft;
    met += rec.slo_met ? 1 : 0;
    report.makespan = std::max(report.makespan, rec.first_token);
    report.records.push_back(rec);
  }

  if (!report.records.empty()) {
    report.mean_ttft = total_ttft / static_cast<double>(report.records.size());
    report.median_ttft = ttft_percentile(report.records, 0.50);
    report.p95_ttft = ttft_percentile(report.records, 0.95);
    report.p99_ttft = ttft_percentile(report.records, 0.99);
    report.slo_attainment =
        static_cast<double>(met) / static_cast<double>(report.records.size());
  }

  if (!trace.empty()) {
    report.makespan = std::max(report.makespan, trace.back().time);
    const double t0 = trace.front().time;
    const double t1 = trace.back().time;
    for (const Stage stage : {Stage::Net, Stage::Pcie, Stage::Compute}) {
      const auto completions = stage_completions(trace, stage);
      if (completions.empty()) continue;

      // Bucketed timeline for plotting.
      auto& timeline = report.throughput_timeline[stage];
      const double bucket = options.timeline_bucket;
      for (const auto& [time, bytes] : completions) {
        const auto slot = static_cast<std::size_t>(std::max(0.0, (time - t0) / bucket));
        while (timeline.size() <= slot)
          timeline.push_back({t0 + bucket * static_cast<double>(timeline.size()), 0.0});
        timeline[slot].bytes_per_s += bytes / bucket;
      }

      if (t1 - t0 >= options.throughput_window) {
        report.peak_throughput[stage] =
            windowed_peak_throughput(completions, t0, t1, options.throughput_window);
      }
    }
    report.trace = std::move(trace);
  }
  return report;
}

void write_report_files(const RunReport& report, const std::filesystem::path& dir,
                        const std::string& stem) {
  std::filesystem::create_directories(dir);

  {
    nlohmann::json summary;
    summary["policy"] = report.meta.policy;
    summary["mode"] = report.meta.mode;
    summary["seed"] = report.meta.seed;
    summary["config_hash"] = report.meta.config_hash;
    summary["requests"] = report.records.size();
    summary["mean_ttft"] = report.mean_ttft;
    summary["median_ttft"] = report.median_ttft;
    summary["p95_ttft"] = report.p95_ttft;
    summary["p99_ttft"] = report.p99_ttft;
    summary["slo_attainment"] = report.slo_attainment;
    summary["makespan"] = report.makespan;
    for (const auto& [stage, peak] : report.peak_throughput)
      summary["peak_throughput"][stage_name(stage)] = peak;
    if (!report.warnings.empty()) summary["warnings"] = report.warnings;
    std::ofstream out(dir / (stem + "_summary.json"));
    if (!out) throw Error("write_report_files: cannot open summary for " + stem);
    out << summary.dump(2) << '\n';
  }

  {
    std::ofstream out(dir / (stem + "_requests.csv"));
    if (!out) throw Error("write_report_files: cannot open requests csv for " + stem);
    out << "id,arrival,ttft,deadline,slo_met\n";
    for (const auto& rec : report.records) {
      out << rec.id << ',' << fmt_double(rec.arrival) << ',' << fmt_double(rec.ttft) << ',';
      if (rec.deadline) out << fmt_double(*rec.deadline);
      out << ',' << (rec.slo_met ? 1 : 0) << '\n';
    }
  }

  {
    std::ofstream out(dir / (stem + "_throughput.csv"));
    if (!out) throw Error("write_report_files: cannot open throughput csv for " + stem);
    out << "t,stage,bytes_per_s\n";
    for (const auto& [stage, timeline] : report.throughput_timeline) {
      for (const auto& point : timeline) {
        out << fmt_double(point.time) << ',' << stage_name(stage) << ','
            << fmt_double(point.bytes_per_s) << '\n';
      }
    }
  }
}

}  // namespace tiersim
