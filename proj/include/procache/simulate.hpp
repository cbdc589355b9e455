#pragma once

#include <cstdint>

#include "procache/content_dynamics.hpp"
#include "procache/rng.hpp"

namespace procache {

// Per-trajectory random streams. Generation, channel, access and policy
// randomness are decoupled so that any two schemes given the same seed see
// the exact same environment (common random numbers), regardless of how
// much randomness the policies themselves consume.
struct SlotStreams {
  RandomStream gen;
  RandomStream cost;
  RandomStream access;
  RandomStream policy;

  static SlotStreams from_seed(std::uint64_t seed) {
    return SlotStreams{RandomStream(derive_seed(seed, {1})),
                       RandomStream(derive_seed(seed, {2})),
                       RandomStream(derive_seed(seed, {3})),
                       RandomStream(derive_seed(seed, {4}))};
  }
};

// Average per-slot energy cost of one simulated trajectory plus counters.
struct RolloutResult {
  double avg_cost_mw = 0.0;
  std::int64_t n_downloads = 0;
  std::int64_t n_accesses = 0;

  friend bool operator==(const RolloutResult&, const RolloutResult&) = default;
};

// What a per-slot observer sees; `state` is the end-of-slot state.
struct SlotRecord {
  std::int64_t slot;
  double cost_mw;
  bool accessed;
  const CacheAction& action;
  const SystemState& state;
};

// Runs `horizon` slots from the empty initial state. Slot order: fresh batch
// joins the out set, the channel cost and access indicator are drawn, the
// forced or policy action is applied and charged, lifetimes decrement and
// expire, the elapsed counter updates.
//
// CostFn:   double(RandomStream&)
// PolicyFn: CacheAction(const SystemState&, double cost_mw, RandomStream&)
// Observer: void(const SlotRecord&)
template <class CostFn, class PolicyFn, class Observer>
RolloutResult simulate_slots(const GenParams& gen, CostFn&& draw_cost,
                             PolicyFn&& policy, std::int64_t horizon,
                             SlotStreams& streams, Observer&& observe) {
  SystemState state;
  state.out = generate_batch(streams.gen, gen);
  state.slot = 1;
  RolloutResult result;
  double total_cost = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const double cost = draw_cost(streams.cost);
    const bool accessed = sample_access(streams.access, gen, state.elapsed);
    const SystemState& decision_state = state;
    const CacheAction action = accessed ? forced_access_action(state)
                                        : policy(decision_state, cost, streams.policy);
    total_cost += slot_cost_mw(action, cost);
    result.n_downloads += action.download_count();
    result.n_accesses += accessed ? 1 : 0;
    state = apply_action(state, action, accessed, gen.b);
    LifetimeMultiset fresh;
    if (t < horizon) fresh = generate_batch(streams.gen, gen);
    state = advance_slot(state, fresh, accessed);
    observe(SlotRecord{t, cost, accessed, action, state});
  }
  result.avg_cost_mw = total_cost / static_cast<double>(horizon);
  return result;
}

template <class CostFn, class PolicyFn>
RolloutResult simulate_slots(const GenParams& gen, CostFn&& draw_cost,
                             PolicyFn&& policy, std::int64_t horizon,
                             SlotStreams& streams) {
  return simulate_slots(gen, draw_cost, policy, horizon, streams,
                        [](const SlotRecord&) {});
}

}  // namespace procache
