// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include "tiersim/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <string>
#include <unordered_map>

namespace tiersim {

// ---------------------------------------------------------------------------
// TierLedger
// ---------------------------------------------------------------------------

TierLedger::TierLedger(Tier tier, std::int64_t capacity) : tier_(tier), capacity_(capacity) {
  if (capacity <= 0) throw ValidationError("TierLedger: capacity must be > 0");
}

TierLedger::Outcome TierLedger::request(std::int64_t request_id, std::int32_t block_index,
                                        std::int64_t bytes) {
  if (bytes <= 0) throw ValidationError("TierLedger: reservation bytes must be > 0");
  if (bytes > capacity_)
    throw CapacityError(std::string(tier_name(tier_)) + ": reservation of " +
                        std::to_string(bytes) + " bytes exceeds capacity " +
                        std::to_string(capacity_));
  // Granting past a waiting reservation would starve it; keep strict FIFO.
  if (deferred_.empty() && reserved_ + bytes <= capacity_) {
    reserved_ += bytes;
    return Outcome::Granted;
  }
  deferred_.push_back({request_id, block_index, bytes});
  return Outcome::Deferred;
}

std::vector<TierLedger::Pending> TierLedger::release(std::int64_t bytes) {
  if (bytes < 0 || bytes > reserved_)
    throw ValidationError("TierLedger: releasing more than reserved");
  reserved_ -= bytes;
  std::vector<Pending> granted;
  while (!deferred_.empty() && reserved_ + deferred_.front().bytes <= capacity_) {
    reserved_ += deferred_.front().bytes;
    granted.push_back(deferred_.front());
    deferred_.pop_front();
  }
  return granted;
}

// ---------------------------------------------------------------------------
// Simulation engine
// ---------------------------------------------------------------------------

namespace {

struct BlockRt {
  std::int64_t tokens = 0;
  std::int64_t bytes = 0;
  double net_duration = 0.0;
  double pcie_duration = 0.0;
  Tier residency = Tier::L3;
  bool l2_granted = false;
  bool l1_granted = false;
  bool net_issued = false;
  bool pcie_issued = false;
};

struct ReqRt {
  RequestState st;
  ServiceCost cost;
  PriorityKey key;
  std::vector<BlockRt> blocks;
  double compute_duration = 0.0;
  std::int64_t total_bytes = 0;
  std::size_t next_net = 0;    // next block to issue on the network stage
  std::size_t next_pcie = 0;   // next block to issue on the PCIe stage
  std::size_t net_done = 0;
  std::size_t pcie_done = 0;
  std::int64_t l1_held = 0;    // granted L1 bytes, released at compute completion
  bool admitted = false;
  bool compute_ready = false;
  bool compute_started = false;
  bool finished = false;
};

enum class EvType : std::uint8_t { Arrival, NetDone, PcieDone, ComputeDone };

struct Ev {
  double time = 0.0;
  std::uint64_t seq = 0;
  EvType type = EvType::Arrival;
  std::size_t req = 0;
  std::size_t block = 0;
};

struct EvAfter {
  bool operator()(const Ev& a, const Ev& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

class SimEngine {
 public:
  SimEngine(const std::vector<RequestSpec>& requests, const ClusterConfig& config,
            PolicyKind policy, const CostModelPair& models, const RunOptions& options)
      : cfg_(config),
        policy_(policy),
        opts_(options),
        l2_(Tier::L2, config.l2_capacity),
        l1_(Tier::L1, config.l1_capacity) {
    cfg_.validate();
    const bool needs_deadline = policy == PolicyKind::Edf || policy == PolicyKind::Lstf;

    reqs_.reserve(requests.size());
    double prev_arrival = -1.0;
    for (const auto& spec : requests) {
      spec.validate();
      if (spec.arrival_time < prev_arrival)
        throw ValidationError("run_simulation: requests must be sorted by arrival_time");
      prev_arrival = spec.arrival_time;
      if (needs_deadline && !spec.deadline)
        throw MissingDeadline(std::string(policy_name(policy)) + ": request " +
                              std::to_string(spec.id) + " has no deadline");
      if (!index_by_id_.emplace(spec.id, reqs_.size()).second)
        throw ValidationError("run_simulation: duplicate request id " + std::to_string(spec.id));

      ReqRt rt;
      rt.st = make_request_state(spec, cfg_);
      rt.cost = estimate_service_cost(spec, models.load, models.comp, cfg_);
      rt.key = priority_key(spec, policy, rt.cost, spec.arrival_time);
      build_blocks(rt);
      reqs_.push_back(std::move(rt));
    }

    for (std::size_t i = 0; i < reqs_.size(); ++i)
      push_event(reqs_[i].st.spec.arrival_time, EvType::Arrival, i, 0);
  }

  void run() {
    while (!pq_.empty()) {
      // Drain every event of this instant before dispatching, so scheduling
      // decisions see all simultaneous arrivals and completions.
      now_ = pq_.top().time;
      while (!pq_.empty() && pq_.top().time == now_) {
        const Ev ev = pq_.top();
        pq_.pop();
        handle(ev);
      }
      pump();
    }
    for (const auto& r : reqs_) {
      if (!r.finished)
        throw Error("run_simulation: request " + std::to_string(r.st.spec.id) +
                    " stalled; simulation ended without completing it");
    }
  }

  std::vector<RequestState> take_states() {
    std::vector<RequestState> states;
    states.reserve(reqs_.size());
    for (auto& r : reqs_) {
      // Mirror final block runtime state into the reported plan.
      r.st.blocks.resize(r.blocks.size());
      for (std::size_t b = 0; b < r.blocks.size(); ++b) {
        auto& kv = r.st.blocks[b];
        kv.request_id = r.st.spec.id;
        kv.block_index = static_cast<std::int32_t>(b);
        kv.tokens = r.blocks[b].tokens;
        kv.bytes = r.blocks[b].bytes;
        kv.residency = r.blocks[b].residency;
        if (r.blocks[b].l2_granted) kv.allocated_at.insert(Tier::L2);
        if (r.blocks[b].l1_granted) kv.allocated_at.insert(Tier::L1);
      }
      states.push_back(std::move(r.st));
    }
    return states;
  }

  std::vector<TraceEvent> take_trace() { return std::move(trace_); }
  std::vector<std::string> take_warnings() { return std::move(warnings_); }

 private:
  void build_blocks(ReqRt& rt) {
    const auto& spec = rt.st.spec;
    if (spec.measured_cost) {
      // Replay path: one pseudo-block whose network hop lasts exactly the
      // measured loading time; the PCIe hop is folded into it.
      if (spec.measured_cost->t_load > 0.0) {
        BlockRt blk;
        blk.tokens = std::max<std::int64_t>(rt.st.cached_tokens, 1);
        blk.bytes = blk.tokens * cfg_.bytes_per_token;
        blk.net_duration = spec.measured_cost->t_load;
        blk.pcie_duration = 0.0;
        rt.blocks.push_back(blk);
      }
      rt.compute_duration = spec.measured_cost->t_comp;
    } else {
      for (const auto& kv : rt.st.blocks) {
        BlockRt blk;
        blk.tokens = kv.tokens;
        blk.bytes = kv.bytes;
        blk.net_duration =
            cfg_.transfer_base_latency + static_cast<double>(kv.bytes) / cfg_.network_bandwidth;
        blk.pcie_duration =
            cfg_.transfer_base_latency + static_cast<double>(kv.bytes) / cfg_.pcie_bandwidth;
        rt.blocks.push_back(blk);
      }
      const auto ct = static_cast<double>(rt.st.compute_tokens);
      rt.compute_duration =
          cfg_.compute_base + cfg_.compute_per_token * ct + cfg_.compute_quadratic * ct * ct;
    }
    for (const auto& blk : rt.blocks) rt.total_bytes += blk.bytes;
    if (rt.total_bytes > cfg_.l1_capacity || rt.total_bytes > cfg_.l2_capacity)
      throw CapacityError("request " + std::to_string(spec.id) + ": " +
                          std::to_string(rt.total_bytes) + " resident bytes can never fit");
  }

  // --- event plumbing ------------------------------------------------------

  void push_event(double time, EvType type, std::size_t req, std::size_t block) {
    pq_.push(Ev{time, pq_seq_++, type, req, block});
  }

  void record(EventKind kind, std::optional<Stage> stage, std::optional<Tier> tier,
              std::int64_t request_id, std::int32_t block_index, std::int64_t bytes) {
    const std::uint64_t seq = trace_seq_++;
    if (!opts_.record_trace) return;
    trace_.push_back(TraceEvent{now_, seq, kind, stage, tier, request_id, block_index, bytes});
  }

  void handle(const Ev& ev) {
    ReqRt& r = reqs_[ev.req];
    switch (ev.type) {
      case EvType::Arrival: {
        record(EventKind::Arrival, std::nullopt, std::nullopt, r.st.spec.id, -1, 0);
        pending_.push_back(ev.req);
        if (pending_.size() > opts_.overload_queue_bound && !overload_warned_) {
          overload_warned_ = true;
          warnings_.push_back("OverloadWarning: pending queue exceeded " +
                              std::to_string(opts_.overload_queue_bound) + " requests at t=" +
                              std::to_string(now_));
        }
        break;
      }
      case EvType::NetDone: {
        BlockRt& blk = r.blocks[ev.block];
        record(EventKind::TransferDone, Stage::Net, std::nullopt, r.st.spec.id,
               static_cast<std::int32_t>(ev.block), blk.bytes);
        blk.residency = Tier::L2;
        ++r.net_done;
        if (r.net_done == r.blocks.size()) r.st.ts.l2_resident = now_;
        if (cfg_.allocation_mode == AllocationMode::Reactive) request_l1(ev.req, ev.block);
        net_busy_ = false;
        break;
      }
      case EvType::PcieDone: {
        BlockRt& blk = r.blocks[ev.block];
        record(EventKind::TransferDone, Stage::Pcie, std::nullopt, r.st.spec.id,
               static_cast<std::int32_t>(ev.block), blk.bytes);
        blk.residency = Tier::L1;
        ++r.pcie_done;
        release_ledger(l2_, blk.bytes);  // L2 copy evicted right after the hop
        if (r.pcie_done == r.blocks.size()) {
          r.st.ts.l1_resident = now_;
          r.compute_ready = true;
          ++ready_waiting_;
        }
        pcie_busy_ = false;
        break;
      }
      case EvType::ComputeDone: {
        record(EventKind::ComputeDone, Stage::Compute, std::nullopt, r.st.spec.id, -1,
               r.st.compute_tokens * cfg_.bytes_per_token);
        r.st.ts.first_token = now_;
        r.finished = true;
        --active_count_;
        compute_busy_ = false;
        const std::int64_t held = r.l1_held;
        r.l1_held = 0;
        if (held > 0) release_ledger(l1_, held);
        break;
      }
    }
  }

  /// Drives admission and the three dispatchers to a fixpoint. The fixed
  /// order makes every run deterministic.
  void pump() {
    // Completed requests accumulate at the front of the pick-order list.
    while (admitted_head_ < admitted_.size() && reqs_[admitted_[admitted_head_]].finished)
      ++admitted_head_;
    bool progress = true;
    while (progress) {
      progress = false;
      progress |= try_admit();
      progress |= net_dispatch();
      progress |= pcie_dispatch();
      progress |= try_start_compute();
    }
  }

  // --- scheduling ----------------------------------------------------------

  std::size_t best_pending() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pending_.size(); ++i) {
      if (reqs_[pending_[i]].key < reqs_[pending_[best]].key) best = i;
    }
    return best;
  }

  bool net_backlog() const { return unissued_blocks_ > 0; }
  bool compute_ready_waiting() const { return ready_waiting_ > 0; }
  bool any_active() const { return active_count_ > 0; }

  bool try_admit() {
    if (pending_.empty()) return false;

    if (cfg_.control_mode == ControlMode::Coupled) {
      // Baseline: one request traverses every stage before the next starts.
      if (any_active()) return false;
      admit(best_pending());
      return true;
    }

    // Decoupled: the scheduler fires when the request's first stage would
    // otherwise idle, so the queue keeps re-sorting until the last moment.
    const std::size_t i = best_pending();
    const ReqRt& r = reqs_[pending_[i]];
    if (!r.blocks.empty()) {
      if (net_busy_ || net_backlog()) return false;
    } else {
      if (compute_busy_ || compute_ready_waiting()) return false;
    }
    admit(i);
    return true;
  }

  void admit(std::size_t pending_index) {
    const std::size_t idx = pending_[pending_index];
    pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(pending_index));
    ReqRt& r = reqs_[idx];
    r.admitted = true;
    r.st.ts.scheduled = now_;
    admitted_.push_back(idx);
    ++active_count_;
    unissued_blocks_ += static_cast<std::int64_t>(r.blocks.size());
    for (std::size_t b = 0; b < r.blocks.size(); ++b) request_l2(idx, b);
    if (r.blocks.empty()) {
      r.compute_ready = true;
      ++ready_waiting_;
    }
  }

  // --- allocation ----------------------------------------------------------

  void request_l2(std::size_t idx, std::size_t block) {
    ReqRt& r = reqs_[idx];
    if (l2_.request(r.st.spec.id, static_cast<std::int32_t>(block), r.blocks[block].bytes) ==
        TierLedger::Outcome::Granted)
      grant_l2(idx, block);
  }

  void request_l1(std::size_t idx, std::size_t block) {
    ReqRt& r = reqs_[idx];
    if (l1_.request(r.st.spec.id, static_cast<std::int32_t>(block), r.blocks[block].bytes) ==
        TierLedger::Outcome::Granted)
      grant_l1(idx, block);
  }

  void grant_l2(std::size_t idx, std::size_t block) {
    ReqRt& r = reqs_[idx];
    r.blocks[block].l2_granted = true;
    record(EventKind::AllocationGrant, std::nullopt, Tier::L2, r.st.spec.id,
           static_cast<std::int32_t>(block), r.blocks[block].bytes);
  }

  void grant_l1(std::size_t idx, std::size_t block) {
    ReqRt& r = reqs_[idx];
    r.blocks[block].l1_granted = true;
    r.l1_held += r.blocks[block].bytes;
    record(EventKind::AllocationGrant, std::nullopt, Tier::L1, r.st.spec.id,
           static_cast<std::int32_t>(block), r.blocks[block].bytes);
  }

  void release_ledger(TierLedger& ledger, std::int64_t bytes) {
    for (const auto& grant : ledger.release(bytes)) {
      const std::size_t idx = index_by_id_.at(grant.request_id);
      const auto block = static_cast<std::size_t>(grant.block_index);
      if (ledger.tier() == Tier::L2)
        grant_l2(idx, block);
      else
        grant_l1(idx, block);
    }
  }

  // --- dispatchers ---------------------------------------------------------

  // A block may start a hop only once its destination space is reserved.
  // Grants are FIFO in admission order, so scanning admitted requests in
  // pick order always serves the highest-priority eligible block first.

  bool net_dispatch() {
    if (net_busy_) return false;
    for (std::size_t i = admitted_head_; i < admitted_.size(); ++i) {
      const std::size_t idx = admitted_[i];
      ReqRt& r = reqs_[idx];
      if (r.next_net >= r.blocks.size()) continue;
      BlockRt& blk = r.blocks[r.next_net];
      if (!blk.l2_granted) continue;
      const std::size_t b = r.next_net++;
      --unissued_blocks_;
      blk.net_issued = true;
      if (!r.st.ts.net_first_dispatch) r.st.ts.net_first_dispatch = now_;
      record(EventKind::DispatchWake, Stage::Net, std::nullopt, r.st.spec.id,
             static_cast<std::int32_t>(b), blk.bytes);
      if (cfg_.allocation_mode == AllocationMode::Proactive) request_l1(idx, b);
      net_busy_ = true;
      push_event(now_ + blk.net_duration, EvType::NetDone, idx, b);
      return true;
    }
    return false;
  }

  bool pcie_dispatch() {
    if (pcie_busy_) return false;
    for (std::size_t i = admitted_head_; i < admitted_.size(); ++i) {
      const std::size_t idx = admitted_[i];
      ReqRt& r = reqs_[idx];
      if (r.next_pcie >= r.blocks.size()) continue;
      // Coupled control drains the whole network phase before PCIe starts.
      if (cfg_.control_mode == ControlMode::Coupled && r.net_done < r.blocks.size()) continue;
      BlockRt& blk = r.blocks[r.next_pcie];
      if (blk.residency != Tier::L2 || !blk.l1_granted) continue;
      const std::size_t b = r.next_pcie++;
      blk.pcie_issued = true;
      record(EventKind::DispatchWake, Stage::Pcie, std::nullopt, r.st.spec.id,
             static_cast<std::int32_t>(b), blk.bytes);
      pcie_busy_ = true;
      push_event(now_ + blk.pcie_duration, EvType::PcieDone, idx, b);
      return true;
    }
    return false;
  }

  bool try_start_compute() {
    if (compute_busy_ || ready_waiting_ == 0) return false;
    // Among fully resident requests, prefill the highest-priority one; the
    // loading stages already serve in pick order, but residency can outrun
    // the compute stage, and then priority decides who prefills next.
    const ReqRt* best = nullptr;
    std::size_t best_idx = 0;
    for (std::size_t i = admitted_head_; i < admitted_.size(); ++i) {
      const std::size_t idx = admitted_[i];
      const ReqRt& r = reqs_[idx];
      if (!r.compute_ready || r.compute_started) continue;
      if (!best || r.key < best->key) {
        best = &r;
        best_idx = idx;
      }
    }
    if (!best) return false;
    ReqRt& r = reqs_[best_idx];
    r.compute_started = true;
    --ready_waiting_;
    r.st.ts.compute_start = now_;
    record(EventKind::DispatchWake, Stage::Compute, std::nullopt, r.st.spec.id, -1, 0);
    compute_busy_ = true;
    push_event(now_ + r.compute_duration, EvType::ComputeDone, best_idx, 0);
    return true;
  }

  ClusterConfig cfg_;
  PolicyKind policy_;
  RunOptions opts_;
  std::vector<ReqRt> reqs_;
  std::unordered_map<std::int64_t, std::size_t> index_by_id_;
  std::vector<std::size_t> pending_;   // arrived, not yet picked
  std::vector<std::size_t> admitted_;  // in pick order
  std::size_t admitted_head_ = 0;      // first possibly-unfinished entry
  std::int64_t unissued_blocks_ = 0;   // network work not yet dispatched
  int ready_waiting_ = 0;              // resident requests awaiting prefill
  int active_count_ = 0;               // admitted and not finished
  TierLedger l2_;
  TierLedger l1_;
  bool net_busy_ = false;
  bool pcie_busy_ = false;
  bool compute_busy_ = false;
  std::priority_queue<Ev, std::vector<Ev>, EvAfter> pq_;
  std::uint64_t pq_seq_ = 0;
  std::uint64_t trace_seq_ = 0;
  double now_ = 0.0;
  std::vector<TraceEvent> trace_;
  std::vector<std::string> warnings_;
  bool overload_warned_ = false;
};

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

template <typename T>
std::uint64_t fnv1a_value(std::uint64_t hash, const T& value) {
  return fnv1a(hash, &value, sizeof(value));
}

}  // namespace

std::uint64_t config_fingerprint(const ClusterConfig& config, PolicyKind policy,
                                 std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a_value(h, config.network_bandwidth);
  h = fnv1a_value(h, config.pcie_bandwidth);
  h = fnv1a_value(h, config.transfer_base_latency);
  h = fnv1a_value(h, config.l1_capacity);
  h = fnv1a_value(h, config.l2_capacity);
  h = fnv1a_value(h, config.bytes_per_token);
  h = fnv1a_value(h, config.block_size_tokens);
  h = fnv1a_value(h, config.compute_base);
  h = fnv1a_value(h, config.compute_per_token);
  h = fnv1a_value(h, config.compute_quadratic);
  h = fnv1a_value(h, config.allocation_mode);
  h = fnv1a_value(h, config.control_mode);
  h = fnv1a_value(h, policy);
  h = fnv1a_value(h, seed);
  return h;
}

RunReport run_simulation(const std::vector<RequestSpec>& requests, const ClusterConfig& config,
                         PolicyKind policy, const CostModelPair& models, std::uint64_t seed,
                         const RunOptions& options) {
  SimEngine engine(requests, config, policy, models, options);
  engine.run();

  RunMetadata meta;
  meta.policy = std::string(policy_name(policy));
  meta.mode = control_mode_name(config.control_mode);
  meta.seed = seed;
  meta.config_hash = config_fingerprint(config, policy, seed);

  const auto states = engine.take_states();
  RunReport report = summarize_run(engine.take_trace(), states, options.summary, std::move(meta));
  report.warnings = engine.take_warnings();
  return report;
}

}  // namespace tiersim
