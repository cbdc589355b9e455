#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "procache/content_dynamics.hpp"

namespace procache {

// Threshold table of the swap policy: one entry per lifetime pair (l, L),
// 0 <= l < L <= k_max, where l is the shortest remaining lifetime in the
// cache (l = 0 stands for a free cache slot) and L the longest outside it.
// Feasible tables are non-decreasing in L, non-increasing in l and confined
// to [0, c_max].
class ThresholdTable {
 public:
  ThresholdTable(int k_max, double c_max_mw, double init_value = 0.0);

  int k_max() const { return k_max_; }
  double c_max_mw() const { return c_max_mw_; }
  std::size_t param_count() const { return values_.size(); }

  double at(int l, int big_l) const { return values_[index(l, big_l)]; }
  void set(int l, int big_l, double v) { values_[index(l, big_l)] = v; }

  std::span<double> raw() { return values_; }
  std::span<const double> raw() const { return values_; }

  // True when both monotonicity constraints and the [0, c_max] box hold.
  bool is_feasible(double tol = 0.0) const;
  // Throws invariant_error when infeasible.
  void require_feasible(const char* where) const;

  // CSV with header "l,L,threshold_mw", rows sorted by (l, L).
  std::string to_csv() const;
  static ThresholdTable from_csv(std::string_view text, double c_max_mw);

  friend bool operator==(const ThresholdTable&, const ThresholdTable&) = default;

 private:
  std::size_t index(int l, int big_l) const;

  int k_max_;
  double c_max_mw_;
  std::vector<double> values_;  // row L holds entries l = 0..L-1
};

// Clamps to [0, c_max] and enforces both monotonicity constraints with
// cumulative sweeps: for each l a running max over ascending L, then for
// each L a running min over ascending l. Idempotent; feasible tables pass
// through unchanged.
ThresholdTable project_monotone(ThresholdTable table);

// Swap-loop action selection: repeatedly pair the longest lifetime outside
// the cache with the shortest inside (or a free slot), and perform the swap
// while the channel cost clears the pair's threshold. Only meaningful on
// slots without a user access.
CacheAction select_action_liso(const ThresholdTable& table, const SystemState& state,
                               double cost_mw, std::int64_t b);

// Downloads nothing proactively; on access slots returns the forced action.
CacheAction select_action_reactive(const SystemState& state, bool accessed);

// Visits the out-of-cache contents in a random order and caches each with
// probability q while space remains. Never evicts.
CacheAction select_action_random(double q, const SystemState& state, RandomStream& rng,
                                 std::int64_t b);

struct LisoPolicy {
  ThresholdTable table;
};
struct ReactivePolicy {};
struct RandomPolicy {
  double q = 0.5;
};

using PolicyKind = std::variant<LisoPolicy, ReactivePolicy, RandomPolicy>;

// Action chosen by the policy on a slot without a user access.
CacheAction policy_action(const PolicyKind& policy, const SystemState& state,
                          double cost_mw, std::int64_t b, RandomStream& policy_rng);

std::string policy_name(const PolicyKind& policy);

}  // namespace procache
