#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>

namespace gridvad {

/// Plain snapshot of a CallLedger.
struct CallCounts {
  std::int64_t vlm_calls = 0;
  std::int64_t scc_calls = 0;
  std::int64_t grounding_calls = 0;
  std::int64_t propagation_calls = 0;
  double wall_time_s = 0.0;

  /// VLM budget as reported in efficiency tables: proposal calls plus SCC calls.
  std::int64_t language_model_calls() const { return vlm_calls + scc_calls; }

  CallCounts operator-(const CallCounts& o) const {
    return {vlm_calls - o.vlm_calls, scc_calls - o.scc_calls,
            grounding_calls - o.grounding_calls, propagation_calls - o.propagation_calls,
            wall_time_s - o.wall_time_s};
  }
  CallCounts& operator+=(const CallCounts& o) {
    vlm_calls += o.vlm_calls;
    scc_calls += o.scc_calls;
    grounding_calls += o.grounding_calls;
    propagation_calls += o.propagation_calls;
    wall_time_s += o.wall_time_s;
    return *this;
  }
};

/// Thread-safe per-stage call counters. Wall time accumulates the monotonic
/// duration spent inside backend calls only.
class CallLedger {
 public:
  void add_vlm() { vlm_.fetch_add(1, std::memory_order_relaxed); }
  void add_scc() { scc_.fetch_add(1, std::memory_order_relaxed); }
  void add_grounding() { grounding_.fetch_add(1, std::memory_order_relaxed); }
  void add_propagation() { propagation_.fetch_add(1, std::memory_order_relaxed); }
  void add_wall_time(std::chrono::nanoseconds d) {
    wall_ns_.fetch_add(d.count(), std::memory_order_relaxed);
  }

  /// Adds a snapshot taken elsewhere (e.g. a per-clip ledger).
  void add(const CallCounts& c) {
    vlm_.fetch_add(c.vlm_calls, std::memory_order_relaxed);
    scc_.fetch_add(c.scc_calls, std::memory_order_relaxed);
    grounding_.fetch_add(c.grounding_calls, std::memory_order_relaxed);
    propagation_.fetch_add(c.propagation_calls, std::memory_order_relaxed);
    wall_ns_.fetch_add(static_cast<std::int64_t>(std::llround(c.wall_time_s * 1e9)),
                       std::memory_order_relaxed);
  }

  /// Runs `fn` and charges its duration to the wall-time counter.
  template <typename Fn>
  decltype(auto) timed(Fn&& fn) {
    struct Charge {
      CallLedger& ledger;
      std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
      ~Charge() { ledger.add_wall_time(std::chrono::steady_clock::now() - t0); }
    } charge{*this};
    return std::forward<Fn>(fn)();
  }

  CallCounts snapshot() const {
    return {vlm_.load(), scc_.load(), grounding_.load(), propagation_.load(),
            static_cast<double>(wall_ns_.load()) * 1e-9};
  }

 private:
  std::atomic<std::int64_t> vlm_{0}, scc_{0}, grounding_{0}, propagation_{0};
  std::atomic<std::int64_t> wall_ns_{0};
};

}  // namespace gridvad
