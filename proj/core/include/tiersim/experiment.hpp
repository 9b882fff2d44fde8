// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tiersim/engine.hpp"
#include "tiersim/scheduler.hpp"
#include "tiersim/types.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

/// One experiment grid: a cluster, a workload recipe, and the (policy, mode,
/// repetition) cells to run over it.
struct ExperimentConfig {
  ClusterConfig cluster;
  WorkloadSpec workload;
  std::vector<PolicyKind> policies;
  std::vector<ControlMode> modes;
  int repetitions = 1;
  std::uint64_t seeds = 0;  ///< base seed; repetition r uses seeds + r
  std::filesystem::path output_dir = "out";

  void validate() const;
};

/// Parses the single-document JSON config. Key names mirror the struct
/// fields exactly; unknown keys are rejected. Throws ConfigError with the
/// offending field path.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Round-trips a config back to its canonical JSON form.
std::string experiment_config_to_json(const ExperimentConfig& config);

struct CellResult {
  std::string policy;
  std::string mode;
  int repetition = 0;
  std::uint64_t seed = 0;
  double qps = 0.0;
  double mean_ttft = 0.0;
  double p95_ttft = 0.0;
  double slo_attainment = 0.0;
  double peak_net = 0.0;   ///< bytes/s over the report window; 0 if undefined
  double peak_pcie = 0.0;
  std::string error;  ///< non-empty when this cell failed
};

struct ExperimentResult {
  std::vector<CellResult> cells;
};

struct ExperimentOptions {
  bool write_files = true;
  bool write_trace = false;
};

/// Runs every (policy, mode, repetition) cell. Within one repetition all
/// cells share a byte-identical request list (the workload seed does not
/// depend on policy or mode), so comparisons are paired. A failing cell is
/// reported in its result row without aborting the others.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentOptions& options = {});

void write_comparison_csv(const ExperimentResult& result, const std::filesystem::path& path);
std::string comparison_table_text(const ExperimentResult& result);

/// Applies `--param path --values v` style overrides: `param_path` is a
/// dot-separated JSON path (e.g. "workload.qps"), `value` is parsed as JSON.
/// Returns the patched config JSON. Throws ConfigError on a bad path.
std::string patch_config_json(const std::string& json_text, const std::string& param_path,
                              const std::string& value);

/// Built-in two-request replay scenario with measured costs; paired with
/// coupled mode it reproduces the motivating FIFO-versus-cost-aware numbers.
std::vector<RequestSpec> replay_example_requests();
ClusterConfig replay_example_cluster();

}  // namespace tiersim
