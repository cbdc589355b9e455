#include "procache/content_dynamics.hpp"

#include <string>

#include "procache/errors.hpp"

namespace procache {

void GenParams::validate() const {
  if (m_max < 1) throw config_error("gen.m_max must be >= 1");
  if (k_max < 1) throw config_error("gen.k_max must be >= 1");
  if (lifetime_support.empty()) throw config_error("gen.lifetime_support must be non-empty");
  int prev = 0;
  for (int k : lifetime_support) {
    if (k <= prev) throw config_error("gen.lifetime_support must be strictly ascending");
    if (k > k_max) throw config_error("gen.lifetime_support exceeds gen.k_max");
    prev = k;
  }
  if (lifetime_support.back() != k_max)
    throw config_error("gen.k_max must equal the largest supported lifetime");
  if (!(p_a > 0.0 && p_a <= 1.0)) throw config_error("gen.p_a must be in (0, 1]");
  if (d_max < 1) throw config_error("gen.d_max must be >= 1");
  if (b < 0) throw config_error("gen.b must be >= 0");
}

LifetimeMultiset generate_batch(RandomStream& rng, const GenParams& params) {
  LifetimeMultiset batch;
  const std::int64_t m = rng.uniform_int(1, params.m_max);
  const std::int64_t n_support = static_cast<std::int64_t>(params.lifetime_support.size());
  for (std::int64_t i = 0; i < m; ++i) {
    const std::int64_t idx = rng.uniform_int(0, n_support - 1);
    batch.add(params.lifetime_support[static_cast<std::size_t>(idx)]);
  }
  return batch;
}

bool sample_access(RandomStream& rng, const GenParams& params, int elapsed) {
  if (elapsed < 0) throw invariant_error("negative elapsed time");
  if (params.truncate_access) {
    if (elapsed >= params.d_max)
      throw invariant_error("elapsed time " + std::to_string(elapsed) +
                            " reached d_max=" + std::to_string(params.d_max));
    if (elapsed == params.d_max - 1) return true;
  }
  return rng.bernoulli(params.p_a);
}

CacheAction forced_access_action(const SystemState& state) {
  return CacheAction{state.out, state.cache};
}

void validate_action(const SystemState& state, const CacheAction& action,
                     bool accessed, std::int64_t b) {
  if (accessed) {
    if (!(action.downloads == state.out) || !(action.evictions == state.cache))
      throw invariant_error("access slot requires the forced full-download action");
    return;
  }
  if (!state.out.contains(action.downloads))
    throw invariant_error("downloads are not a sub-multiset of the out-of-cache contents");
  if (!state.cache.contains(action.evictions))
    throw invariant_error("evictions are not a sub-multiset of the cache contents");
  if (!action.downloads.disjoint(action.evictions))
    throw invariant_error("a content may not be downloaded and evicted in the same slot");
  const std::int64_t new_size =
      state.cache.size() + action.downloads.size() - action.evictions.size();
  if (new_size > b)
    throw invariant_error("action overfills the cache: " + std::to_string(new_size) +
                          " > capacity " + std::to_string(b));
}

SystemState apply_action(const SystemState& state, const CacheAction& action,
                         bool accessed, std::int64_t b) {
  validate_action(state, action, accessed, b);
  SystemState next = state;
  if (accessed) {
    // Everything out of the cache is downloaded and consumed; the cache is
    // flushed to the application layer at no cost.
    next.out = LifetimeMultiset{};
    next.cache = LifetimeMultiset{};
    return next;
  }
  next.out.subtract(action.downloads);
  next.out.unite(action.evictions);
  next.cache.unite(action.downloads);
  next.cache.subtract(action.evictions);
  return next;
}

SystemState advance_slot(const SystemState& state, const LifetimeMultiset& fresh,
                         bool accessed) {
  SystemState next = state;
  next.out.decrement_expire();
  next.cache.decrement_expire();
  next.out.unite(fresh);
  next.slot = state.slot + 1;
  next.elapsed = accessed ? 0 : state.elapsed + 1;
  return next;
}

}  // namespace procache
