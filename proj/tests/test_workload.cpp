// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "tiersim/workload.hpp"

using namespace tiersim;

TEST_CASE("builtin profiles carry the dataset statistics") {
  const auto loogle = builtin_profile("loogle");
  CHECK(loogle.num_requests == 120);
  CHECK(loogle.context_tokens_mean == doctest::Approx(28100));
  CHECK(loogle.query_tokens_mean == doctest::Approx(28));

  const auto icl = builtin_profile("icl");
  CHECK(icl.num_requests == 120);
  CHECK(icl.context_tokens_mean == doctest::Approx(28300));
  CHECK(icl.query_tokens_mean == doctest::Approx(61));

  const auto code = builtin_profile("code");
  CHECK(code.num_requests == 100);
  CHECK(code.context_tokens_mean == doctest::Approx(38300));
  CHECK(code.query_tokens_mean == doctest::Approx(209));

  CHECK_THROWS_AS(builtin_profile("unknown"), UnknownProfile);
}

namespace {

WorkloadSpec small_spec(std::uint64_t seed, double qps = 1.0, std::int64_t count = 100) {
  WorkloadSpec spec;
  spec.profile = builtin_profile("loogle");
  spec.qps = qps;
  spec.count = count;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("poisson arrivals have the right mean gap") {
  WorkloadSpec spec = small_spec(1, 1.2, 10000);
  const auto requests = generate_workload(spec);
  REQUIRE(requests.size() == 10000);
  double prev = 0.0;
  double total_gap = 0.0;
  for (const auto& req : requests) {
    CHECK(req.arrival_time > prev);  // strictly increasing
    total_gap += req.arrival_time - prev;
    prev = req.arrival_time;
  }
  const double mean_gap = total_gap / 10000.0;
  CHECK(mean_gap == doctest::Approx(1.0 / 1.2).epsilon(0.02));
}

TEST_CASE("zero cv degenerates to the mean") {
  WorkloadSpec spec = small_spec(2);
  spec.profile.context_tokens_cv = 0.0;
  spec.profile.query_tokens_cv = 0.0;
  for (const auto& req : generate_workload(spec)) {
    CHECK(req.context_tokens == 28100);
    CHECK(req.query_tokens == 28);
  }
}

TEST_CASE("generation is seed-deterministic") {
  const auto a = generate_workload(small_spec(77));
  const auto b = generate_workload(small_spec(77));
  const auto c = generate_workload(small_spec(78));
  REQUIRE(a.size() == b.size());
  bool all_equal = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && a[i].arrival_time == b[i].arrival_time &&
                a[i].context_tokens == b[i].context_tokens &&
                a[i].query_tokens == b[i].query_tokens &&
                a[i].cache_hit_ratio == b[i].cache_hit_ratio;
  }
  CHECK(all_equal);
  bool any_diff = false;
  for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i)
    any_diff = any_diff || a[i].context_tokens != c[i].context_tokens;
  CHECK(any_diff);
}

TEST_CASE("hit ratio variants keep lengths and arrivals paired") {
  WorkloadSpec low = small_spec(5);
  low.hit_ratio_source = HitRatioSource::fixed(0.25);
  WorkloadSpec high = small_spec(5);
  high.hit_ratio_source = HitRatioSource::fixed(1.0);
  WorkloadSpec mixed = small_spec(5);
  mixed.hit_ratio_source = HitRatioSource::uniform_choice({0.25, 0.5, 0.75, 1.0});

  const auto a = generate_workload(low);
  const auto b = generate_workload(high);
  const auto c = generate_workload(mixed);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].arrival_time == b[i].arrival_time);
    CHECK(a[i].context_tokens == b[i].context_tokens);
    CHECK(a[i].query_tokens == c[i].query_tokens);
    CHECK(a[i].cache_hit_ratio == 0.25);
    CHECK(b[i].cache_hit_ratio == 1.0);
  }
  std::map<double, int> seen;
  for (const auto& req : c) seen[req.cache_hit_ratio]++;
  CHECK(seen.size() == 4);
}

TEST_CASE("qps only rescales the arrival process") {
  const auto slow = generate_workload(small_spec(6, 0.5));
  const auto fast = generate_workload(small_spec(6, 2.0));
  for (std::size_t i = 0; i < slow.size(); ++i) {
    CHECK(slow[i].context_tokens == fast[i].context_tokens);
    CHECK(slow[i].arrival_time == doctest::Approx(4.0 * fast[i].arrival_time).epsilon(1e-9));
  }
}

TEST_CASE("solo baseline of a measured-cost request is its serial sum") {
  ClusterConfig cfg;
  const auto models = cost_models_from_config(cfg);
  RequestSpec spec;
  spec.id = 1;
  spec.context_tokens = 2610;
  spec.query_tokens = 30;
  spec.measured_cost = MeasuredCost{0.361, 0.019};
  CHECK(solo_baseline_ttft(spec, cfg, models) == doctest::Approx(0.380).epsilon(1e-9));
}

TEST_CASE("slo assignment scales the interference-free baseline") {
  ClusterConfig cfg;
  const auto models = cost_models_from_config(cfg);

  WorkloadSpec spec = small_spec(9, 1.0, 20);
  auto requests = generate_workload(spec);

  const std::vector<double> single_factor = {4.0};
  const auto with_slo = assign_slos(requests, cfg, models, single_factor, 123);
  for (std::size_t i = 0; i < with_slo.size(); ++i) {
    REQUIRE(with_slo[i].deadline.has_value());
    const double baseline = solo_baseline_ttft(requests[i], cfg, models);
    CHECK(*with_slo[i].deadline ==
          doctest::Approx(requests[i].arrival_time + 4.0 * baseline).epsilon(1e-9));
    CHECK(*with_slo[i].deadline > with_slo[i].arrival_time);
  }
}

TEST_CASE("slo factors are sampled uniformly") {
  // Tiny single-block requests keep the 30k solo baselines cheap.
  WorkloadSpec spec;
  spec.profile = DatasetProfile{"tiny", 30000, 256.0, 0.0, 4.0, 0.0};
  spec.qps = 10.0;
  spec.seed = 11;

  ClusterConfig cfg;
  const auto models = cost_models_from_config(cfg);
  const std::vector<double> factors = {2.0, 4.0, 8.0};
  const auto requests = assign_slos(generate_workload(spec), cfg, models, factors, 999);

  // All requests are identical (cv 0), so they share one solo baseline and
  // the factor can be recovered from each deadline.
  const double baseline = solo_baseline_ttft(requests.front(), cfg, models);
  std::map<double, int> counts;
  for (const auto& req : requests) {
    const double ratio = (*req.deadline - req.arrival_time) / baseline;
    double closest = factors.front();
    for (const double f : factors) {
      if (std::abs(ratio - f) < std::abs(ratio - closest)) closest = f;
    }
    REQUIRE(std::abs(ratio - closest) < 1e-6);
    counts[closest] += 1;
  }
  REQUIRE(counts.size() == 3);
  for (const auto& [factor, count] : counts) {
    (void)factor;
    // Uniform sampling: each factor lands near 1/3 (+-2 points of frequency).
    CHECK(static_cast<double>(count) / 30000.0 == doctest::Approx(1.0 / 3.0).epsilon(0.06));
  }
}

TEST_CASE("jsonl round trip preserves every field") {
  WorkloadSpec spec = small_spec(13, 2.0, 50);
  spec.hit_ratio_source = HitRatioSource::uniform_choice({0.25, 0.5, 0.75, 1.0});
  auto requests = generate_workload(spec);
  requests[0].measured_cost = MeasuredCost{0.361, 0.019};
  requests[1].deadline = requests[1].arrival_time + 3.0;

  const auto path = std::filesystem::temp_directory_path() / "tiersim_workload.jsonl";
  write_requests_jsonl(path, requests);
  const auto loaded = read_requests_jsonl(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.size() == requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    CHECK(loaded[i].id == requests[i].id);
    CHECK(loaded[i].arrival_time == requests[i].arrival_time);
    CHECK(loaded[i].context_tokens == requests[i].context_tokens);
    CHECK(loaded[i].query_tokens == requests[i].query_tokens);
    CHECK(loaded[i].cache_hit_ratio == requests[i].cache_hit_ratio);
    CHECK(loaded[i].deadline == requests[i].deadline);
    CHECK(loaded[i].measured_cost.has_value() == requests[i].measured_cost.has_value());
    CHECK(loaded[i].dataset_tag == requests[i].dataset_tag);
  }
  CHECK(loaded[0].measured_cost->t_load == 0.361);
}

TEST_CASE("workload validation") {
  WorkloadSpec spec = small_spec(1);
  spec.qps = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec = small_spec(1);
  spec.slo_factors = {0.5};
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec = small_spec(1);
  spec.hit_ratio_source = HitRatioSource::uniform_choice({});
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
