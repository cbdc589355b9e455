#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "procache/lifetime_multiset.hpp"
#include "procache/rng.hpp"

namespace procache {

// Content generation, user access and cache parameters.
//
// Defaults are the standard experiment setup. The config loader additionally
// enforces the experiment convention that k_max is a multiple of 5 with
// lifetimes drawn from {5, 10, ..., k_max}; code constructing GenParams
// directly (small exact-solver instances, tests) may use any support.
struct GenParams {
  // A cache that never fills up.
  static constexpr std::int64_t unlimited_cache = std::numeric_limits<std::int64_t>::max();

  int m_max = 8;                                // batch size is uniform on {1..m_max}
  int k_max = 15;                               // largest possible lifetime
  std::vector<int> lifetime_support = {5, 10, 15};  // ascending, i.i.d. uniform
  double p_a = 0.25;                            // per-slot access probability
  int d_max = 15;                               // bound on inter-access gaps
  std::int64_t b = 30;                          // cache capacity
  bool truncate_access = true;                  // force an access at gap d_max

  bool cache_unlimited() const { return b == unlimited_cache; }
  double mean_batch_size() const { return 0.5 * (1.0 + m_max); }
  double mean_lifetime() const {
    double s = 0;
    for (int k : lifetime_support) s += k;
    return s / lifetime_support.size();
  }

  void validate() const;  // throws config_error
};

// Controlled state: contents out of the cache, contents in the cache, slots
// elapsed since the last user access, and the slot counter.
struct SystemState {
  LifetimeMultiset out;
  LifetimeMultiset cache;
  int elapsed = 0;
  std::int64_t slot = 0;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

// One slot's cache-manager decision: contents pulled from `out` into the
// cache and contents pushed back out of it. A content never appears on both
// sides within the same slot.
struct CacheAction {
  LifetimeMultiset downloads;
  LifetimeMultiset evictions;

  bool empty() const { return downloads.empty() && evictions.empty(); }
  std::int64_t download_count() const { return downloads.size(); }
};

// Draws the fresh content batch for one slot: batch size uniform on
// {1..m_max}, each lifetime i.i.d. uniform over the support.
LifetimeMultiset generate_batch(RandomStream& rng, const GenParams& params);

// Draws the user-access indicator given the elapsed time at the end of the
// previous slot. With truncation enabled the access is forced once the gap
// would otherwise exceed d_max. Pre: 0 <= elapsed, and elapsed < d_max when
// truncating.
bool sample_access(RandomStream& rng, const GenParams& params, int elapsed);

// The action the user access imposes: download everything out of the cache,
// hand the whole cache to the application layer.
CacheAction forced_access_action(const SystemState& state);

// Checks the action against the state: inclusion, disjointness, capacity,
// and the forced shape on access slots. Throws invariant_error -- an invalid
// action is a policy bug, never silently repaired.
void validate_action(const SystemState& state, const CacheAction& action,
                     bool accessed, std::int64_t b);

// Applies the action, returning the post-action intermediate state (lifetime
// decrement not yet applied). On access slots both content sets empty out.
SystemState apply_action(const SystemState& state, const CacheAction& action,
                         bool accessed, std::int64_t b);

// Finishes the slot: decrements all lifetimes (expiring zeros), unions the
// next slot's fresh batch into `out`, advances the slot counter and updates
// the elapsed-time counter.
SystemState advance_slot(const SystemState& state, const LifetimeMultiset& fresh,
                         bool accessed);

// Energy spent in the slot: one download costs `cost_mw`.
inline double slot_cost_mw(const CacheAction& action, double cost_mw) {
  return static_cast<double>(action.download_count()) * cost_mw;
}

}  // namespace procache
