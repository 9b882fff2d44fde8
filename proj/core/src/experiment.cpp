// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tiersim/metrics.hpp"

namespace tiersim {

using nlohmann::json;

void ExperimentConfig::validate() const {
  cluster.validate();
  workload.validate();
  if (policies.empty()) throw ConfigError("policies", "at least one policy required");
  if (modes.empty()) throw ConfigError("modes", "at least one mode required");
  if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
}

// ---------------------------------------------------------------------------
// JSON parsing (strict: unknown keys rejected, errors carry field paths)
// ---------------------------------------------------------------------------

namespace {

void expect_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.contains(key)) throw ConfigError(path + "." + key, "unknown key");
  }
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(path + "." + key, "missing required key");
    return fallback;
  }
  if (!obj.at(key).is_number()) throw ConfigError(path + "." + key, "expected a number");
  return obj.at(key).get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& path, const std::string& key,
                         std::int64_t fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(path + "." + key, "missing required key");
    return fallback;
  }
  if (!obj.at(key).is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
  return obj.at(key).get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       const std::string& fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(path + "." + key, "missing required key");
    return fallback;
  }
  if (!obj.at(key).is_string()) throw ConfigError(path + "." + key, "expected a string");
  return obj.at(key).get<std::string>();
}

ClusterConfig parse_cluster(const json& obj, const std::string& path) {
  expect_keys(obj, path,
              {"network_bandwidth", "pcie_bandwidth", "transfer_base_latency", "l1_capacity",
               "l2_capacity", "bytes_per_token", "block_size_tokens", "compute_base",
               "compute_per_token", "compute_quadratic", "allocation_mode", "control_mode"});
  ClusterConfig cfg;
  cfg.network_bandwidth = get_number(obj, path, "network_bandwidth", cfg.network_bandwidth);
  cfg.pcie_bandwidth = get_number(obj, path, "pcie_bandwidth", cfg.pcie_bandwidth);
  cfg.transfer_base_latency =
      get_number(obj, path, "transfer_base_latency", cfg.transfer_base_latency);
  cfg.l1_capacity = get_integer(obj, path, "l1_capacity", cfg.l1_capacity);
  cfg.l2_capacity = get_integer(obj, path, "l2_capacity", cfg.l2_capacity);
  cfg.bytes_per_token = get_integer(obj, path, "bytes_per_token", cfg.bytes_per_token);
  cfg.block_size_tokens = get_integer(obj, path, "block_size_tokens", cfg.block_size_tokens);
  cfg.compute_base = get_number(obj, path, "compute_base", cfg.compute_base);
  cfg.compute_per_token = get_number(obj, path, "compute_per_token", cfg.compute_per_token);
  cfg.compute_quadratic = get_number(obj, path, "compute_quadratic", cfg.compute_quadratic);
  if (obj.contains("allocation_mode")) {
    const auto name = get_string(obj, path, "allocation_mode", "");
    const auto mode = allocation_mode_from_name(name);
    if (!mode) throw ConfigError(path + ".allocation_mode", "expected proactive|reactive");
    cfg.allocation_mode = *mode;
  }
  if (obj.contains("control_mode")) {
    const auto name = get_string(obj, path, "control_mode", "");
    const auto mode = control_mode_from_name(name);
    if (!mode) throw ConfigError(path + ".control_mode", "expected coupled|decoupled");
    cfg.control_mode = *mode;
  }
  return cfg;
}

DatasetProfile parse_profile(const json& value, const std::string& path) {
  if (value.is_string()) {
    try {
      return builtin_profile(value.get<std::string>());
    } catch (const UnknownProfile& e) {
      throw ConfigError(path, e.what());
    }
  }
  expect_keys(value, path,
              {"name", "num_requests", "context_tokens_mean", "context_tokens_cv",
               "query_tokens_mean", "query_tokens_cv"});
  DatasetProfile profile;
  profile.name = get_string(value, path, "name", "custom");
  profile.num_requests = get_integer(value, path, "num_requests", 0, true);
  profile.context_tokens_mean = get_number(value, path, "context_tokens_mean", 0.0, true);
  profile.context_tokens_cv = get_number(value, path, "context_tokens_cv", 0.5);
  profile.query_tokens_mean = get_number(value, path, "query_tokens_mean", 0.0, true);
  profile.query_tokens_cv = get_number(value, path, "query_tokens_cv", 0.5);
  return profile;
}

HitRatioSource parse_hit_source(const json& value, const std::string& path) {
  if (value.is_number()) return HitRatioSource::fixed(value.get<double>());
  expect_keys(value, path, {"fixed", "uniform"});
  if (value.contains("fixed") == value.contains("uniform"))
    throw ConfigError(path, "expected exactly one of fixed|uniform");
  if (value.contains("fixed")) {
    if (!value.at("fixed").is_number()) throw ConfigError(path + ".fixed", "expected a number");
    return HitRatioSource::fixed(value.at("fixed").get<double>());
  }
  if (!value.at("uniform").is_array())
    throw ConfigError(path + ".uniform", "expected an array of numbers");
  std::vector<double> choices;
  for (const auto& v : value.at("uniform")) {
    if (!v.is_number()) throw ConfigError(path + ".uniform", "expected an array of numbers");
    choices.push_back(v.get<double>());
  }
  return HitRatioSource::uniform_choice(std::move(choices));
}

WorkloadSpec parse_workload(const json& obj, const std::string& path) {
  expect_keys(obj, path,
              {"profile", "qps", "count", "hit_ratio_source", "slo_factors", "seed"});
  WorkloadSpec spec;
  if (!obj.contains("profile")) throw ConfigError(path + ".profile", "missing required key");
  spec.profile = parse_profile(obj.at("profile"), path + ".profile");
  spec.qps = get_number(obj, path, "qps", spec.qps, true);
  spec.count = get_integer(obj, path, "count", 0);
  if (obj.contains("hit_ratio_source"))
    spec.hit_ratio_source = parse_hit_source(obj.at("hit_ratio_source"), path + ".hit_ratio_source");
  if (obj.contains("slo_factors")) {
    if (!obj.at("slo_factors").is_array())
      throw ConfigError(path + ".slo_factors", "expected an array of numbers");
    for (const auto& v : obj.at("slo_factors")) {
      if (!v.is_number()) throw ConfigError(path + ".slo_factors", "expected an array of numbers");
      spec.slo_factors.push_back(v.get<double>());
    }
  }
  spec.seed = static_cast<std::uint64_t>(get_integer(obj, path, "seed", 0));
  return spec;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  expect_keys(doc, "config",
              {"cluster", "workload", "policies", "modes", "repetitions", "seeds", "output_dir"});

  ExperimentConfig config;
  if (doc.contains("cluster")) config.cluster = parse_cluster(doc.at("cluster"), "cluster");
  if (!doc.contains("workload")) throw ConfigError("workload", "missing required key");
  config.workload = parse_workload(doc.at("workload"), "workload");

  if (!doc.contains("policies")) throw ConfigError("policies", "missing required key");
  if (!doc.at("policies").is_array()) throw ConfigError("policies", "expected an array");
  for (const auto& v : doc.at("policies")) {
    if (!v.is_string()) throw ConfigError("policies", "expected policy names");
    const auto policy = policy_from_name(v.get<std::string>());
    if (!policy)
      throw ConfigError("policies", "expected fifo|sjf-pt|sjf-cost|edf|lstf, got " +
                                        v.get<std::string>());
    config.policies.push_back(*policy);
  }

  if (doc.contains("modes")) {
    if (!doc.at("modes").is_array()) throw ConfigError("modes", "expected an array");
    for (const auto& v : doc.at("modes")) {
      if (!v.is_string()) throw ConfigError("modes", "expected mode names");
      const auto mode = control_mode_from_name(v.get<std::string>());
      if (!mode) throw ConfigError("modes", "expected coupled|decoupled, got " + v.get<std::string>());
      config.modes.push_back(*mode);
    }
  } else {
    config.modes.push_back(config.cluster.control_mode);
  }

  config.repetitions = static_cast<int>(get_integer(doc, "config", "repetitions", 1));
  config.seeds = static_cast<std::uint64_t>(get_integer(doc, "config", "seeds", 0));
  config.output_dir = get_string(doc, "config", "output_dir", config.output_dir.string());

  try {
    config.validate();
  } catch (const ValidationError& e) {
    throw ConfigError("", e.what());
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["cluster"] = {
      {"network_bandwidth", config.cluster.network_bandwidth},
      {"pcie_bandwidth", config.cluster.pcie_bandwidth},
      {"transfer_base_latency", config.cluster.transfer_base_latency},
      {"l1_capacity", config.cluster.l1_capacity},
      {"l2_capacity", config.cluster.l2_capacity},
      {"bytes_per_token", config.cluster.bytes_per_token},
      {"block_size_tokens", config.cluster.block_size_tokens},
      {"compute_base", config.cluster.compute_base},
      {"compute_per_token", config.cluster.compute_per_token},
      {"compute_quadratic", config.cluster.compute_quadratic},
      {"allocation_mode", allocation_mode_name(config.cluster.allocation_mode)},
      {"control_mode", control_mode_name(config.cluster.control_mode)},
  };
  doc["workload"]["profile"] = {
      {"name", config.workload.profile.name},
      {"num_requests", config.workload.profile.num_requests},
      {"context_tokens_mean", config.workload.profile.context_tokens_mean},
      {"context_tokens_cv", config.workload.profile.context_tokens_cv},
      {"query_tokens_mean", config.workload.profile.query_tokens_mean},
      {"query_tokens_cv", config.workload.profile.query_tokens_cv},
  };
  doc["workload"]["qps"] = config.workload.qps;
  doc["workload"]["count"] = config.workload.count;
  if (config.workload.hit_ratio_source.kind == HitRatioSource::Kind::Fixed)
    doc["workload"]["hit_ratio_source"] = {{"fixed", config.workload.hit_ratio_source.fixed_value}};
  else
    doc["workload"]["hit_ratio_source"] = {{"uniform", config.workload.hit_ratio_source.choices}};
  doc["workload"]["slo_factors"] = config.workload.slo_factors;
  doc["workload"]["seed"] = config.workload.seed;
  doc["policies"] = json::array();
  for (const auto policy : config.policies) doc["policies"].push_back(policy_name(policy));
  doc["modes"] = json::array();
  for (const auto mode : config.modes) doc["modes"].push_back(control_mode_name(mode));
  doc["repetitions"] = config.repetitions;
  doc["seeds"] = config.seeds;
  doc["output_dir"] = config.output_dir.string();
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Running the grid
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string cell_stem(const CellResult& cell) {
  return cell.policy + "_" + cell.mode + "_rep" + std::to_string(cell.repetition);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
  config.validate();
  ExperimentResult result;
  const CostModelPair models = cost_models_from_config(config.cluster);

  for (int rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t seed = config.seeds + static_cast<std::uint64_t>(rep);
    WorkloadSpec workload = config.workload;
    workload.seed = seed;
    std::vector<RequestSpec> requests = generate_workload(workload);
    if (!workload.slo_factors.empty())
      requests = assign_slos(std::move(requests), config.cluster, models,
                             workload.slo_factors, seed);

    for (const ControlMode mode : config.modes) {
      ClusterConfig cluster = config.cluster;
      cluster.control_mode = mode;
      for (const PolicyKind policy : config.policies) {
        CellResult cell;
        cell.policy = std::string(policy_name(policy));
        cell.mode = control_mode_name(mode);
        cell.repetition = rep;
        cell.seed = seed;
        cell.qps = workload.qps;
        try {
          RunOptions run_options;
          run_options.record_trace = true;
          const RunReport report =
              run_simulation(requests, cluster, policy, models, seed, run_options);
          cell.mean_ttft = report.mean_ttft;
          cell.p95_ttft = report.p95_ttft;
          cell.slo_attainment = report.slo_attainment;
          if (auto it = report.peak_throughput.find(Stage::Net);
              it != report.peak_throughput.end())
            cell.peak_net = it->second;
          if (auto it = report.peak_throughput.find(Stage::Pcie);
              it != report.peak_throughput.end())
            cell.peak_pcie = it->second;
          if (options.write_files) {
            write_report_files(report, config.output_dir, cell_stem(cell));
            if (options.write_trace)
              write_trace_csv(config.output_dir / (cell_stem(cell) + "_trace.csv"), report.trace);
          }
        } catch (const Error& e) {
          cell.error = e.what();
        }
        result.cells.push_back(std::move(cell));
      }
    }
  }

  if (options.write_files) {
    std::filesystem::create_directories(config.output_dir);
    write_comparison_csv(result, config.output_dir / "comparison.csv");
    std::ofstream out(config.output_dir / "summary.txt");
    out << comparison_table_text(result);
  }
  return result;
}

void write_comparison_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_comparison_csv: cannot open " + path.string());
  out << "policy,mode,repetition,seed,qps,mean_ttft,p95_ttft,slo_attainment,peak_net,peak_pcie,"
         "error\n";
  for (const auto& cell : result.cells) {
    out << cell.policy << ',' << cell.mode << ',' << cell.repetition << ',' << cell.seed << ','
        << fmt_double(cell.qps) << ',' << fmt_double(cell.mean_ttft) << ','
        << fmt_double(cell.p95_ttft) << ',' << fmt_double(cell.slo_attainment) << ','
        << fmt_double(cell.peak_net) << ',' << fmt_double(cell.peak_pcie) << ',' << cell.error
        << '\n';
  }
}

std::string comparison_table_text(const ExperimentResult& result) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-10s %4s %10s %12s %12s %10s\n", "policy", "mode",
                "rep", "qps", "mean_ttft", "p95_ttft", "slo");
  out << line;
  for (const auto& cell : result.cells) {
    if (!cell.error.empty()) {
      std::snprintf(line, sizeof(line), "%-10s %-10s %4d   error: %s\n", cell.policy.c_str(),
                    cell.mode.c_str(), cell.repetition, cell.error.c_str());
      out << line;
      continue;
    }
    std::snprintf(line, sizeof(line), "%-10s %-10s %4d %10.4g %12.6g %12.6g %10.4g\n",
                  cell.policy.c_str(), cell.mode.c_str(), cell.repetition, cell.qps,
                  cell.mean_ttft, cell.p95_ttft, cell.slo_attainment);
    out << line;
  }
  return out.str();
}

std::string patch_config_json(const std::string& json_text, const std::string& param_path,
                              const std::string& value) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  json parsed_value;
  try {
    parsed_value = json::parse(value);
  } catch (const json::exception&) {
    parsed_value = value;  // fall back to a plain string
  }

  json* node = &doc;
  std::string::size_type start = 0;
  std::vector<std::string> parts;
  while (start <= param_path.size()) {
    const auto dot = param_path.find('.', start);
    parts.push_back(param_path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (parts.empty() || parts.front().empty()) throw ConfigError(param_path, "empty --param path");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError(param_path, "path does not address an object");
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = parsed_value;
  return doc.dump();
}

// ---------------------------------------------------------------------------
// Built-in replay scenario
// ---------------------------------------------------------------------------

std::vector<RequestSpec> replay_example_requests() {
  RequestSpec r1;
  r1.id = 1;
  r1.arrival_time = 0.0;
  r1.context_tokens = 2610;
  r1.query_tokens = 30;
  r1.cache_hit_ratio = 1.0;
  r1.measured_cost = MeasuredCost{0.361, 0.019};
  r1.dataset_tag = "replay";

  RequestSpec r2 = r1;
  r2.id = 2;
  r2.context_tokens = 1440;
  r2.measured_cost = MeasuredCost{0.199, 0.025};
  return {r1, r2};
}

ClusterConfig replay_example_cluster() {
  ClusterConfig cluster;
  cluster.control_mode = ControlMode::Coupled;
  return cluster;
}

}  // namespace tiersim
