// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner for the tiered-KVCache serving simulator.
//
//   tiersim run <config.json>        run a (policy x mode x repetition) grid
//   tiersim replay-paper-example     built-in two-request scheduling scenario
//   tiersim sweep --param p --values v1,v2 <config.json>
//                                    re-run the grid for each parameter value

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tiersim/engine.hpp"
#include "tiersim/experiment.hpp"
#include "tiersim/metrics.hpp"

namespace {

using namespace tiersim;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

void apply_overrides(ExperimentConfig& config, const std::string& output_dir,
                     std::int64_t seed_override) {
  if (!output_dir.empty()) config.output_dir = output_dir;
  if (seed_override >= 0) config.seeds = static_cast<std::uint64_t>(seed_override);
}

int cmd_run(const std::string& config_path, const std::string& output_dir,
            std::int64_t seed_override, bool trace) {
  ExperimentConfig config = parse_experiment_config(read_file(config_path));
  apply_overrides(config, output_dir, seed_override);
  ExperimentOptions options;
  options.write_trace = trace;
  const ExperimentResult result = run_experiment(config, options);
  std::cout << comparison_table_text(result);
  std::cout << "reports written to " << config.output_dir.string() << "\n";
  for (const auto& cell : result.cells) {
    if (!cell.error.empty()) return 3;
  }
  return 0;
}

int cmd_replay(const std::string& output_dir, bool trace) {
  const auto requests = replay_example_requests();
  const auto cluster = replay_example_cluster();
  const auto models = cost_models_from_config(cluster);

  std::printf("%-10s %-10s %12s\n", "policy", "mode", "mean_ttft");
  for (const PolicyKind policy : {PolicyKind::Fifo, PolicyKind::SjfCost}) {
    RunOptions options;
    const RunReport report = run_simulation(requests, cluster, policy, models, 0, options);
    std::printf("%-10s %-10s %12.3f\n", std::string(policy_name(policy)).c_str(),
                control_mode_name(cluster.control_mode), report.mean_ttft);
    if (!output_dir.empty()) {
      const std::string stem = "replay_" + std::string(policy_name(policy));
      write_report_files(report, output_dir, stem);
      if (trace) write_trace_csv(std::filesystem::path(output_dir) / (stem + "_trace.csv"),
                                 report.trace);
    }
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, const std::string& output_dir,
              std::int64_t seed_override, bool trace) {
  const std::string base_json = read_file(config_path);
  const auto values = split_csv(values_csv);
  if (values.empty()) throw ConfigError("--values", "no sweep values given");

  // One sub-directory per sweep value plus a combined comparison CSV.
  std::filesystem::path root;
  std::vector<std::pair<std::string, ExperimentResult>> blocks;
  for (const auto& value : values) {
    ExperimentConfig config = parse_experiment_config(patch_config_json(base_json, param, value));
    apply_overrides(config, output_dir, seed_override);
    root = config.output_dir;
    config.output_dir /= value;
    ExperimentOptions options;
    options.write_trace = trace;
    std::cout << param << " = " << value << "\n";
    blocks.emplace_back(value, run_experiment(config, options));
    std::cout << comparison_table_text(blocks.back().second);
  }

  std::filesystem::create_directories(root);
  std::ofstream out(root / "sweep_comparison.csv");
  out << "param,value,policy,mode,repetition,seed,qps,mean_ttft,p95_ttft,slo_attainment,"
         "peak_net,peak_pcie,error\n";
  for (const auto& [value, result] : blocks) {
    for (const auto& cell : result.cells) {
      out << param << ',' << value << ',' << cell.policy << ',' << cell.mode << ','
          << cell.repetition << ',' << cell.seed << ',' << cell.qps << ',' << cell.mean_ttft
          << ',' << cell.p95_ttft << ',' << cell.slo_attainment << ',' << cell.peak_net << ','
          << cell.peak_pcie << ',' << cell.error << '\n';
    }
  }
  std::cout << "sweep comparison written to " << (root / "sweep_comparison.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for tiered-KVCache LLM serving"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string param;
  std::string values_csv;
  std::int64_t seed_override = -1;
  bool trace = false;

  auto* run = app.add_subcommand("run", "Run the experiment grid from a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--output-dir", output_dir, "Override the config output directory");
  run->add_option("--seed", seed_override, "Override the base seed");
  run->add_flag("--trace", trace, "Write per-cell event-trace CSVs");

  auto* replay = app.add_subcommand(
      "replay-paper-example", "Replay the built-in two-request scheduling scenario");
  replay->add_option("--output-dir", output_dir, "Write report files here");
  replay->add_flag("--trace", trace, "Write event-trace CSVs (requires --output-dir)");

  auto* sweep = app.add_subcommand("sweep", "Re-run the grid for each value of one parameter");
  sweep->add_option("--param", param, "Dot path into the config, e.g. workload.qps")->required();
  sweep->add_option("--values", values_csv, "Comma-separated values")->required();
  sweep->add_option("config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--output-dir", output_dir, "Override the config output directory");
  sweep->add_option("--seed", seed_override, "Override the base seed");
  sweep->add_flag("--trace", trace, "Write per-cell event-trace CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output_dir, seed_override, trace);
    if (replay->parsed()) return cmd_replay(output_dir, trace);
    if (sweep->parsed())
      return cmd_sweep(config_path, param, values_csv, output_dir, seed_override, trace);
  } catch (const tiersim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const tiersim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
