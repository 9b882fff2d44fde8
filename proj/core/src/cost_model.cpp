// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/cost_model.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace tiersim {

LinearFit fit_linear(std::span<const TokenSample> samples) {
  if (samples.size() < 2)
    throw DegenerateFit("fit_linear: need at least two samples");

  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& s : samples) {
    mean_x += static_cast<double>(s.tokens);
    mean_y += s.seconds;
  }
  const auto n = static_cast<double>(samples.size());
  mean_x /= n;
  mean_y /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = static_cast<double>(s.tokens) - mean_x;
    sxx += dx * dx;
    sxy += dx * (s.seconds - mean_y);
  }
  if (sxx == 0.0)
    throw DegenerateFit("fit_linear: all token counts are equal");

  LinearFit fit;
  fit.model.slope = sxy / sxx;
  fit.model.intercept = mean_y - fit.model.slope * mean_x;
  if (fit.model.slope < 0.0) {
    fit.model.slope = 0.0;
    fit.slope_clamped = true;
  }
  if (fit.model.intercept < 0.0) {
    fit.model.intercept = 0.0;
    fit.intercept_clamped = true;
  }
  return fit;
}

double predict(const LinearCostModel& model, std::int64_t tokens) {
  return model.intercept + model.slope * static_cast<double>(tokens);
}

ServiceCost estimate_service_cost(const RequestSpec& spec, const LinearCostModel& load_model,
                                  const LinearCostModel& comp_model, const ClusterConfig& config) {
  if (spec.measured_cost)
    return ServiceCost{spec.measured_cost->t_load, spec.measured_cost->t_comp};

  ServiceCost cost;
  const std::int64_t cached = cached_token_count(spec, config);
  if (cached > 0) cost.t_load = predict(load_model, cached);
  const std::int64_t to_compute = compute_token_count(spec, config);
  cost.t_comp = predict(comp_model, to_compute);
  if (config.compute_quadratic > 0.0) {
    const auto ct = static_cast<double>(to_compute);
    cost.t_comp += config.compute_quadratic * ct * ct;
  }
  return cost;
}

CostModelPair cost_models_from_config(const ClusterConfig& config) {
  CostModelPair models;
  const auto bpt = static_cast<double>(config.bytes_per_token);
  // Each cached block makes one network and one PCIe hop, each paying the
  // fixed transfer latency on top of the bandwidth term.
  models.load.slope = bpt * (1.0 / config.network_bandwidth + 1.0 / config.pcie_bandwidth) +
                      2.0 * config.transfer_base_latency /
                          static_cast<double>(config.block_size_tokens);
  models.load.intercept = 0.0;
  models.comp.slope = config.compute_per_token;
  models.comp.intercept = config.compute_base;
  return models;
}

namespace {

bool parse_sample_line(const std::string& line, TokenSample& out) {
  std::string cleaned = line;
  for (auto& ch : cleaned) {
    if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
  }
  std::istringstream in(cleaned);
  double tokens = 0.0;
  double seconds = 0.0;
  if (!(in >> tokens >> seconds)) return false;
  out.tokens = static_cast<std::int64_t>(tokens);
  out.seconds = seconds;
  return true;
}

}  // namespace

std::vector<TokenSample> read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_samples_csv: cannot open " + path.string());

  std::vector<TokenSample> samples;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    TokenSample sample;
    if (parse_sample_line(line, sample)) {
      samples.push_back(sample);
    } else if (!first) {
      throw Error("read_samples_csv: malformed line in " + path.string() + ": " + line);
    }
    first = false;  // a non-numeric first line is treated as the header
  }
  return samples;
}

}  // namespace tiersim
