// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"
#include "tiersim/engine.hpp"
#include "tiersim/rng.hpp"

namespace tiersim {

namespace {
constexpr std::uint64_t kHitStreamSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kSloStreamSalt = 0xd1b54a32d192ed03ull;
constexpr double kMinArrivalGap = 1e-6;
}  // namespace

void DatasetProfile::validate() const {
  if (num_requests < 1) throw ValidationError("profile: num_requests must be >= 1");
  if (!(context_tokens_mean > 0.0) || !(query_tokens_mean > 0.0))
    throw ValidationError("profile: token means must be > 0");
  if (context_tokens_cv < 0.0 || query_tokens_cv < 0.0)
    throw ValidationError("profile: token cv must be >= 0");
}

DatasetProfile builtin_profile(std::string_view name) {
  if (name == "loogle") return {"loogle", 120, 28100.0, 0.5, 28.0, 0.5};
  if (name == "icl") return {"icl", 120, 28300.0, 0.5, 61.0, 0.5};
  if (name == "code") return {"code", 100, 38300.0, 0.5, 209.0, 0.5};
  throw UnknownProfile("unknown dataset profile: " + std::string(name));
}

void HitRatioSource::validate() const {
  if (kind == Kind::Fixed) {
    if (!(fixed_value >= 0.0 && fixed_value <= 1.0))
      throw ValidationError("hit_ratio_source: fixed value must be in [0, 1]");
    return;
  }
  if (choices.empty()) throw ValidationError("hit_ratio_source: uniform set must be non-empty");
  for (const double v : choices) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("hit_ratio_source: choices must be in [0, 1]");
  }
}

void WorkloadSpec::validate() const {
  profile.validate();
  hit_ratio_source.validate();
  if (!(qps > 0.0)) throw ValidationError("workload: qps must be > 0");
  if (effective_count() < 1) throw ValidationError("workload: count must be >= 1");
  for (const double f : slo_factors) {
    if (!(f > 1.0)) throw ValidationError("workload: slo factors must be > 1");
  }
}

namespace {

std::int64_t sample_tokens(Rng& rng, double mean, double cv) {
  const double drawn = rng.lognormal_mean_cv(mean, cv);
  return std::max<std::int64_t>(1, std::llround(drawn));
}

}  // namespace

std::vector<RequestSpec> generate_workload(const WorkloadSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Rng hit_rng(spec.seed ^ kHitStreamSalt);

  const std::int64_t count = spec.effective_count();
  std::vector<RequestSpec> requests;
  requests.reserve(static_cast<std::size_t>(count));

  double clock = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    RequestSpec req;
    req.id = i + 1;
    clock += std::max(rng.exponential() / spec.qps, kMinArrivalGap);
    req.arrival_time = clock;
    req.context_tokens =
        sample_tokens(rng, spec.profile.context_tokens_mean, spec.profile.context_tokens_cv);
    req.query_tokens =
        sample_tokens(rng, spec.profile.query_tokens_mean, spec.profile.query_tokens_cv);
    if (spec.hit_ratio_source.kind == HitRatioSource::Kind::Fixed) {
      req.cache_hit_ratio = spec.hit_ratio_source.fixed_value;
    } else {
      req.cache_hit_ratio =
          hit_rng.choice(std::span<const double>(spec.hit_ratio_source.choices));
    }
    req.dataset_tag = spec.profile.name;
    requests.push_back(std::move(req));
  }
  return requests;
}

double solo_baseline_ttft(const RequestSpec& spec, const ClusterConfig& config,
                          const CostModelPair& models) {
  RequestSpec solo = spec;
  solo.arrival_time = 0.0;
  solo.deadline.reset();

  ClusterConfig solo_config = config;
  solo_config.control_mode = ControlMode::Decoupled;

  RunOptions options;
  options.record_trace = false;
  const RunReport report =
      run_simulation({solo}, solo_config, PolicyKind::Fifo, models, 0, options);
  return report.records.front().ttft;
}

std::vector<RequestSpec> assign_slos(std::vector<RequestSpec> requests,
                                     const ClusterConfig& config, const CostModelPair& models,
                                     std::span<const double> factors, std::uint64_t seed) {
  if (factors.empty()) throw ValidationError("assign_slos: factor set must be non-empty");
  for (const double f : factors) {
    if (!(f > 1.0)) throw ValidationError("assign_slos: factors must be > 1");
  }
  Rng rng(seed ^ kSloStreamSalt);
  for (auto& req : requests) {
    const double baseline = solo_baseline_ttft(req, config, models);
    const double factor = rng.choice(factors);
    req.deadline = req.arrival_time + factor * baseline;
  }
  return requests;
}

// ---------------------------------------------------------------------------
// JSONL import/export
// ---------------------------------------------------------------------------

namespace {

nlohmann::json request_to_json(const RequestSpec& req) {
  nlohmann::json j;
  j["id"] = req.id;
  j["arrival_time"] = req.arrival_time;
  j["context_tokens"] = req.context_tokens;
  j["query_tokens"] = req.query_tokens;
  j["cache_hit_ratio"] = req.cache_hit_ratio;
  if (req.deadline) j["deadline"] = *req.deadline;
  if (req.measured_cost) {
    j["measured_cost"] = {{"t_load", req.measured_cost->t_load},
                          {"t_comp", req.measured_cost->t_comp}};
  }
  if (!req.dataset_tag.empty()) j["dataset_tag"] = req.dataset_tag;
  return j;
}

RequestSpec request_from_json(const nlohmann::json& j) {
  RequestSpec req;
  req.id = j.at("id").get<std::int64_t>();
  req.arrival_time = j.at("arrival_time").get<double>();
  req.context_tokens = j.at("context_tokens").get<std::int64_t>();
  req.query_tokens = j.at("query_tokens").get<std::int64_t>();
  req.cache_hit_ratio = j.at("cache_hit_ratio").get<double>();
  if (j.contains("deadline")) req.deadline = j.at("deadline").get<double>();
  if (j.contains("measured_cost")) {
    MeasuredCost cost;
    cost.t_load = j.at("measured_cost").at("t_load").get<double>();
    cost.t_comp = j.at("measured_cost").at("t_comp").get<double>();
    req.measured_cost = cost;
  }
  if (j.contains("dataset_tag")) req.dataset_tag = j.at("dataset_tag").get<std::string>();
  return req;
}

}  // namespace

void write_requests_jsonl(const std::filesystem::path& path,
                          std::span<const RequestSpec> requests) {
  std::ofstream out(path);
  if (!out) throw Error("write_requests_jsonl: cannot open " + path.string());
  for (const auto& req : requests) out << request_to_json(req).dump() << '\n';
}

std::vector<RequestSpec> read_requests_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_requests_jsonl: cannot open " + path.string());
  std::vector<RequestSpec> requests;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      requests.push_back(request_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error("read_requests_jsonl: " + path.string() + ":" + std::to_string(line_no) +
                  ": " + e.what());
    }
  }
  return requests;
}

}  // namespace tiersim
