#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "procache/channel.hpp"
#include "procache/content_dynamics.hpp"

namespace procache {

// Controlled state of the average-cost model: contents out of the cache,
// contents in it, and the end-of-slot elapsed time. elapsed == 0 marks a
// slot in which the user accessed, where the action is forced.
struct MdpState {
  LifetimeMultiset out;
  LifetimeMultiset cache;
  int elapsed = 0;

  friend bool operator==(const MdpState&, const MdpState&) = default;
  friend std::strong_ordering operator<=>(const MdpState& a, const MdpState& b) {
    if (auto c = a.out <=> b.out; c != 0) return c;
    if (auto c = a.cache <=> b.cache; c != 0) return c;
    return a.elapsed <=> b.elapsed;
  }
};

// Finite channel discretization: cost levels with probabilities.
struct ChannelLevels {
  std::vector<double> cost_mw;
  std::vector<double> prob;

  // Equal-probability strata of the empirical distribution, one level per
  // stratum at its conditional mean (preserves the overall mean exactly up
  // to rounding).
  static ChannelLevels from_distribution(const CostDistribution& dist, int n_levels);

  void validate() const;
  double mean() const;
};

// Enumerated small instance. Actions are swap counts: in a state with
// elapsed > 0 action a performs the a best simple swaps (longest lifetimes
// outside against shortest inside, free slots first); in an elapsed == 0
// state there is a single forced action. Transition rows marginalize the
// fresh-content batch and the next access draw and do not depend on the
// channel level; the level enters only through the cost a * c.
struct MdpInstance {
  GenParams gen;
  ChannelLevels levels;
  std::vector<MdpState> states;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> kernel;  // [state][action]
  std::vector<std::vector<int>> action_downloads;                        // [state][action]
  int ref_state = 0;  // recurrent reference state for relative value iteration

  std::size_t n_states() const { return states.size(); }
  int n_actions(int state) const { return static_cast<int>(action_downloads[state].size()); }
};

// All states reachable from the empty initial state, sorted. Throws when the
// reachable set exceeds max_states. Requires truncated access and a finite
// cache, otherwise the state space is infinite.
std::vector<MdpState> enumerate_states(const GenParams& gen,
                                       std::size_t max_states = 1'000'000);

MdpInstance build_mdp(const GenParams& gen, const ChannelLevels& levels,
                      std::size_t max_states = 1'000'000);

struct SolveResult {
  double rho_star = 0.0;             // optimal average cost per slot
  std::vector<double> values;        // differential values, 0 at the reference state
  std::vector<std::vector<int>> policy;  // [state][level] -> chosen action
  double residual = 0.0;             // max |T(V) - V - rho| at exit
  int iterations = 0;
};

SolveResult relative_value_iteration(const MdpInstance& mdp, double tol = 1e-9,
                                     int max_iterations = 500'000);

// Nestedness check of the solved policy: in every controlled state with
// elapsed > 0, the chosen swap count must be non-increasing in the channel
// cost. Violations are findings, not errors.
struct StructureReport {
  struct Violation {
    int state;
    int level_low, level_high;  // cost-ascending level indices
    int count_low, count_high;
  };
  int n_states_checked = 0;
  std::vector<Violation> violations;
};

StructureReport check_threshold_structure(const SolveResult& result,
                                          const MdpInstance& mdp);

// One row per state: contents, elapsed, differential value and the chosen
// swap count at each channel level (cost-ascending).
std::string solve_dump_csv(const MdpInstance& mdp, const SolveResult& result);

}  // namespace procache
