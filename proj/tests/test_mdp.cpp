#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "procache/exact_mdp.hpp"
#include "procache/policy.hpp"
#include "procache/simulate.hpp"

using namespace procache;

namespace {

// Instance used throughout: lifetimes {1, 2}, one content per slot, unit
// cache, access forced after a gap of two slots.
GenParams tiny_gen(double p_a = 0.25) {
  GenParams gen;
  gen.m_max = 1;
  gen.k_max = 2;
  gen.lifetime_support = {1, 2};
  gen.p_a = p_a;
  gen.d_max = 2;
  gen.b = 1;
  return gen;
}

ChannelLevels two_levels() {
  ChannelLevels levels;
  levels.cost_mw = {1.0, 3.0};
  levels.prob = {0.5, 0.5};
  return levels;
}

}  // namespace

TEST_CASE("state enumeration of the smallest instance is the frozen golden set") {
  GenParams gen;
  gen.m_max = 1;
  gen.k_max = 1;
  gen.lifetime_support = {1};
  gen.p_a = 0.5;
  gen.d_max = 1;  // every slot accesses
  gen.b = 0;
  std::vector<MdpState> states = enumerate_states(gen);
  // Hand reachability: the empty initial state plus ({1}, {}, 0).
  REQUIRE(states.size() == 2);
  CHECK(states[0].out.empty());
  CHECK(states[0].cache.empty());
  CHECK(states[0].elapsed == 0);
  CHECK(states[1].out == LifetimeMultiset{1});
  CHECK(states[1].cache.empty());
  CHECK(states[1].elapsed == 0);
}

TEST_CASE("zero capacity keeps every cache empty") {
  GenParams gen = tiny_gen();
  gen.b = 0;
  for (const MdpState& s : enumerate_states(gen)) CHECK(s.cache.empty());
}

TEST_CASE("enlarging the batch bound never shrinks the reachable set") {
  GenParams gen = tiny_gen();
  const std::size_t one = enumerate_states(gen).size();
  gen.m_max = 2;
  const std::size_t two = enumerate_states(gen).size();
  CHECK(two >= one);
}

TEST_CASE("state bound overflow is reported") {
  GenParams gen;  // default experiment scale is far beyond any enumeration
  CHECK_THROWS_AS(enumerate_states(gen, 10'000), config_error);
}

TEST_CASE("kernel rows are stochastic and access rows flush the cache") {
  MdpInstance mdp = build_mdp(tiny_gen(), two_levels());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(static_cast<int>(s)); ++a) {
      double total = 0.0;
      for (const auto& [next, p] : mdp.kernel[s][static_cast<std::size_t>(a)]) {
        CHECK(p > 0.0);
        total += p;
        if (mdp.states[s].elapsed == 0) CHECK(mdp.states[next].cache.empty());
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("kernel rows match simulated transition frequencies") {
  GenParams gen = tiny_gen(0.3);
  MdpInstance mdp = build_mdp(gen, two_levels());
  std::map<MdpState, int> index;
  for (std::size_t i = 0; i < mdp.n_states(); ++i)
    index.emplace(mdp.states[i], static_cast<int>(i));

  // A decision state with a real choice: out = {2}, cache empty, elapsed 1.
  MdpState from;
  from.out = {2};
  from.elapsed = 1;
  REQUIRE(index.count(from) == 1);
  const int si = index.at(from);
  REQUIRE(mdp.n_actions(si) == 2);

  for (int action = 0; action < 2; ++action) {
    RandomStream rng(9000 + action);
    std::map<int, int> counts;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
      SystemState sys{from.out, from.cache, from.elapsed, 0};
      CacheAction act;
      if (action == 1) act.downloads.add(2);
      sys = apply_action(sys, act, false, gen.b);
      const bool accessed = sample_access(rng, gen, from.elapsed);  // forced here
      LifetimeMultiset fresh = generate_batch(rng, gen);
      sys = advance_slot(sys, fresh, accessed);
      MdpState next{sys.out, sys.cache, sys.elapsed};
      ++counts[index.at(next)];
    }
    for (const auto& [next, p] : mdp.kernel[si][static_cast<std::size_t>(action)]) {
      const double freq = counts[next] / static_cast<double>(n);
      const double se = std::sqrt(p * (1.0 - p) / n);
      CHECK(std::fabs(freq - p) <= 3.0 * se + 1e-9);
    }
  }
}

TEST_CASE("value iteration solves a single-state chain exactly") {
  MdpInstance mdp;
  mdp.levels.cost_mw = {2.0};
  mdp.levels.prob = {1.0};
  MdpState only;
  only.out = {1};
  mdp.states = {only};
  mdp.kernel = {{{{0, 1.0}}}};
  mdp.action_downloads = {{3}};
  mdp.ref_state = 0;
  SolveResult r = relative_value_iteration(mdp, 1e-10);
  CHECK(r.rho_star == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(r.residual <= 1e-10);
}

TEST_CASE("zero-capacity optimum equals the reactive renewal-reward rate") {
  GenParams gen = tiny_gen(0.4);
  gen.b = 0;
  gen.m_max = 2;
  ChannelLevels levels = two_levels();
  MdpInstance mdp = build_mdp(gen, levels);
  SolveResult r = relative_value_iteration(mdp, 1e-11);
  const double expected = oracles::reactive_rate(gen, levels.mean());
  CHECK(r.rho_star == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("value iteration matches exhaustive policy enumeration (golden instance)") {
  MdpInstance mdp = build_mdp(tiny_gen(), two_levels());
  SolveResult r = relative_value_iteration(mdp, 1e-12);
  const double brute = oracles::enumerate_optimal_cost(mdp);
  CHECK(r.rho_star == doctest::Approx(brute).epsilon(1e-8));
}

TEST_CASE("threshold structure of the solved tiny instance is nested") {
  ChannelLevels levels;
  levels.cost_mw = {0.2, 0.7, 1.3, 2.1, 3.0, 4.2, 5.5, 7.0};
  levels.prob.assign(8, 0.125);
  MdpInstance mdp = build_mdp(tiny_gen(), levels);
  SolveResult r = relative_value_iteration(mdp, 1e-10);
  StructureReport report = check_threshold_structure(r, mdp);
  CHECK(report.n_states_checked > 0);
  CHECK(report.violations.empty());
}

TEST_CASE("a single channel level is vacuously nested") {
  ChannelLevels levels;
  levels.cost_mw = {1.5};
  levels.prob = {1.0};
  MdpInstance mdp = build_mdp(tiny_gen(), levels);
  SolveResult r = relative_value_iteration(mdp, 1e-10);
  StructureReport report = check_threshold_structure(r, mdp);
  CHECK(report.n_states_checked > 0);
  CHECK(report.violations.empty());
}

TEST_CASE("the nesting detector flags a doctored policy") {
  MdpInstance mdp = build_mdp(tiny_gen(), two_levels());
  SolveResult r = relative_value_iteration(mdp, 1e-10);
  // Invert the choice at some state with two actions: none at the cheap
  // level, a swap at the expensive one.
  bool doctored = false;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.states[s].elapsed > 0 && mdp.n_actions(static_cast<int>(s)) >= 2) {
      r.policy[s][0] = 0;
      r.policy[s][1] = 1;
      doctored = true;
      break;
    }
  }
  REQUIRE(doctored);
  StructureReport report = check_threshold_structure(r, mdp);
  CHECK(report.violations.size() >= 1);
}

TEST_CASE("differential values improve when the cache holds longer lifetimes") {
  ChannelLevels levels = two_levels();
  // Needs lifetimes above 2 so that states differing by one swap are both
  // reachable (a cached content always aged at least one slot).
  GenParams gen;
  gen.m_max = 2;
  gen.k_max = 3;
  gen.lifetime_support = {1, 2, 3};
  gen.p_a = 0.3;
  gen.d_max = 3;
  gen.b = 1;
  MdpInstance mdp = build_mdp(gen, levels);
  SolveResult r = relative_value_iteration(mdp, 1e-11);
  std::map<MdpState, int> index;
  for (std::size_t i = 0; i < mdp.n_states(); ++i)
    index.emplace(mdp.states[i], static_cast<int>(i));
  int compared = 0;
  for (std::size_t i = 0; i < mdp.n_states(); ++i) {
    const MdpState& s = mdp.states[i];
    for (int l : s.cache.to_sorted_list()) {
      for (int big_l : s.out.to_sorted_list()) {
        if (big_l <= l) continue;
        MdpState swapped = s;
        swapped.out.remove(big_l);
        swapped.out.add(l);
        swapped.cache.remove(l);
        swapped.cache.add(big_l);
        auto it = index.find(swapped);
        if (it == index.end()) continue;
        ++compared;
        CHECK(r.values[static_cast<std::size_t>(it->second)] <=
              r.values[i] + 1e-9);
      }
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("no simulatable policy beats the exact optimum") {
  GenParams gen = tiny_gen();
  ChannelLevels levels = two_levels();
  MdpInstance mdp = build_mdp(gen, levels);
  SolveResult r = relative_value_iteration(mdp, 1e-10);

  auto discrete_cost = [&](RandomStream& rng) {
    return levels.cost_mw[rng.bernoulli(0.5) ? 1 : 0];
  };
  auto simulate_policy = [&](const PolicyKind& policy) {
    double total = 0.0;
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      SlotStreams streams = SlotStreams::from_seed(derive_seed(31, {static_cast<std::uint64_t>(i)}));
      total += simulate_slots(
                   gen, discrete_cost,
                   [&](const SystemState& s, double c, RandomStream& prng) {
                     return policy_action(policy, s, c, gen.b, prng);
                   },
                   4000, streams)
                   .avg_cost_mw;
    }
    return total / n;
  };
  CHECK(r.rho_star <= simulate_policy(PolicyKind{ReactivePolicy{}}) + 0.02);
  CHECK(r.rho_star <= simulate_policy(PolicyKind{RandomPolicy{0.5}}) + 0.02);
}

TEST_CASE("solver rejects infinite instances") {
  GenParams gen = tiny_gen();
  gen.truncate_access = false;
  CHECK_THROWS_AS(enumerate_states(gen), config_error);
  gen = tiny_gen();
  gen.b = GenParams::unlimited_cache;
  CHECK_THROWS_AS(enumerate_states(gen), config_error);
}

TEST_CASE("solution dump lists every state") {
  MdpInstance mdp = build_mdp(tiny_gen(), two_levels());
  SolveResult r = relative_value_iteration(mdp, 1e-10);
  const std::string csv = solve_dump_csv(mdp, r);
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == mdp.n_states() + 1);
}
