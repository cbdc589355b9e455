#include <doctest.h>

#include <cmath>
#include <vector>

#include "procache/policy.hpp"
#include "procache/simulate.hpp"

using namespace procache;

namespace {

GenParams small_gen() {
  GenParams gen;
  gen.m_max = 3;
  gen.k_max = 5;
  gen.lifetime_support = {1, 2, 3, 4, 5};
  gen.p_a = 0.25;
  gen.d_max = 8;
  gen.b = 2;
  return gen;
}

ThresholdTable random_feasible_table(int k_max, double c_max, RandomStream& rng) {
  ThresholdTable t(k_max, c_max);
  for (double& v : t.raw()) v = rng.uniform(-0.2 * c_max, 1.2 * c_max);
  return project_monotone(std::move(t));
}

}  // namespace

TEST_CASE("monotone projection fixes the K=2 example") {
  ThresholdTable t(2, 1.0);
  t.set(0, 1, 0.5);
  t.set(0, 2, 0.3);
  t.set(1, 2, 0.4);
  ThresholdTable p = project_monotone(t);
  CHECK(p.is_feasible());
  CHECK(p.at(0, 2) >= std::max(p.at(0, 1), p.at(1, 2)));
  CHECK(p.at(0, 1) == doctest::Approx(0.5));
  CHECK(p.at(0, 2) == doctest::Approx(0.5));
  CHECK(p.at(1, 2) == doctest::Approx(0.4));
}

TEST_CASE("monotone projection is idempotent and fixes feasible tables") {
  RandomStream rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    ThresholdTable t(6, 2.0);
    for (double& v : t.raw()) v = rng.uniform(-1.0, 3.0);
    ThresholdTable once = project_monotone(t);
    CHECK(once.is_feasible());
    CHECK(project_monotone(once) == once);
  }
  ThresholdTable zeros(4, 1.0);
  CHECK(project_monotone(zeros) == zeros);
}

TEST_CASE("liso selector on hand-enumerated cases") {
  GenParams gen = small_gen();

  SUBCASE("empty feed means empty action") {
    SystemState state;
    state.cache = {2};
    state.elapsed = 1;
    ThresholdTable t(5, 1.0, 0.9);
    CHECK(select_action_liso(t, state, 0.1, gen.b).empty());
  }

  SUBCASE("single swap fires when only its threshold clears") {
    // Working through the loop by hand: candidate (2|5) fires at cost 0.2,
    // after which max(out)=3 < min(cache)=5 stops the loop.
    SystemState state;
    state.out = {5, 3};
    state.cache = {2};
    state.elapsed = 1;
    ThresholdTable t(5, 1.0);
    t.set(2, 5, 0.3);
    t.set(2, 3, 0.1);
    t.set(3, 5, 0.05);
    CacheAction action = select_action_liso(t, state, 0.2, /*b=*/1);
    CHECK(action.downloads == LifetimeMultiset{5});
    CHECK(action.evictions == LifetimeMultiset{2});
  }

  SUBCASE("all-zero thresholds never download") {
    SystemState state;
    state.out = {5, 3};
    state.elapsed = 1;
    ThresholdTable zeros(5, 1.0);
    CHECK(select_action_liso(zeros, state, 0.01, gen.b).empty());
  }

  SUBCASE("zero capacity never downloads") {
    SystemState state;
    state.out = {5};
    state.elapsed = 1;
    ThresholdTable t(5, 1.0, 1.0);
    CHECK(select_action_liso(t, state, 0.5, 0).empty());
  }
}

TEST_CASE("liso action structure holds on random states") {
  RandomStream rng(1234);
  GenParams gen = small_gen();
  for (int trial = 0; trial < 500; ++trial) {
    ThresholdTable t = random_feasible_table(5, 2.0, rng);
    SystemState state;
    const int n_out = static_cast<int>(rng.uniform_int(0, 6));
    for (int i = 0; i < n_out; ++i)
      state.out.add(static_cast<int>(rng.uniform_int(1, 5)));
    const int n_in = static_cast<int>(rng.uniform_int(0, gen.b));
    for (int i = 0; i < n_in; ++i)
      state.cache.add(static_cast<int>(rng.uniform_int(1, 5)));
    state.elapsed = 1;
    const double cost = rng.uniform(0.0, 2.0);
    CacheAction action = select_action_liso(t, state, cost, gen.b);

    // At most b * k_max simple actions, and the action must be applicable.
    CHECK(action.downloads.size() <= gen.b * gen.k_max);
    SystemState next = apply_action(state, action, false, gen.b);
    CHECK(next.cache.size() <= gen.b);
    // Every eviction is shorter-lived than every download.
    if (!action.evictions.empty()) {
      REQUIRE(!action.downloads.empty());
      CHECK(action.evictions.max_lifetime() < action.downloads.min_lifetime());
    }
  }
}

TEST_CASE("raising the active pair's threshold never removes actions") {
  RandomStream rng(4321);
  GenParams gen = small_gen();
  for (int trial = 0; trial < 300; ++trial) {
    ThresholdTable t = random_feasible_table(5, 2.0, rng);
    SystemState state;
    const int n_out = 1 + static_cast<int>(rng.uniform_int(0, 4));
    for (int i = 0; i < n_out; ++i)
      state.out.add(static_cast<int>(rng.uniform_int(1, 5)));
    state.elapsed = 1;
    const double cost = rng.uniform(0.0, 2.0);
    const auto before = select_action_liso(t, state, cost, gen.b).download_count();

    // Raise the threshold of the first candidate pair to let it fire.
    const int big_l = state.out.max_lifetime();
    const int l = (state.cache.size() >= gen.b) ? state.cache.min_lifetime() : 0;
    if (big_l <= l) continue;
    t.set(l, big_l, std::max(t.at(l, big_l), std::min(cost, t.c_max_mw())));
    t = project_monotone(std::move(t));
    const auto after = select_action_liso(t, state, cost, gen.b).download_count();
    CHECK(after >= before);
  }
}

TEST_CASE("reactive policy downloads only at access") {
  SystemState state;
  state.out = {5, 3};
  state.cache = {2};
  CHECK(select_action_reactive(state, false).empty());
  CacheAction at_access = select_action_reactive(state, true);
  CHECK(at_access.downloads == LifetimeMultiset{5, 3});
  CHECK(at_access.evictions == LifetimeMultiset{2});
}

TEST_CASE("liso with zero thresholds replays reactive exactly") {
  GenParams gen = small_gen();
  ThresholdTable zeros(gen.k_max, 1.0);
  auto run = [&](const PolicyKind& policy) {
    SlotStreams streams = SlotStreams::from_seed(555);
    std::vector<SystemState> states;
    simulate_slots(
        gen, [](RandomStream& rng) { return 0.01 + rng.uniform01(); },
        [&](const SystemState& s, double c, RandomStream& prng) {
          return policy_action(policy, s, c, gen.b, prng);
        },
        400, streams, [&](const SlotRecord& rec) { states.push_back(rec.state); });
    return states;
  };
  CHECK(run(PolicyKind{LisoPolicy{zeros}}) == run(PolicyKind{ReactivePolicy{}}));
  CHECK(run(PolicyKind{RandomPolicy{0.0}}) == run(PolicyKind{ReactivePolicy{}}));
}

TEST_CASE("random policy caching probabilities") {
  GenParams gen = small_gen();
  SystemState state;
  state.out = {5, 5};
  state.elapsed = 1;

  SUBCASE("q=1 with unlimited space downloads everything") {
    RandomStream rng(8);
    CacheAction a = select_action_random(1.0, state, rng, GenParams::unlimited_cache);
    CHECK(a.downloads == state.out);
    CHECK(a.evictions.empty());
  }
  SUBCASE("q=0.5 with capacity 1: download probability enumerates to 3/4") {
    // P(no download) = P(first coin tails) * P(second coin tails) = 1/4.
    RandomStream rng(99);
    int downloads = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
      CacheAction a = select_action_random(0.5, state, rng, 1);
      CHECK(a.downloads.size() <= 1);
      if (!a.downloads.empty()) ++downloads;
    }
    CHECK(std::fabs(downloads / static_cast<double>(n) - 0.75) < 0.006);
  }
}

TEST_CASE("threshold table CSV round trip") {
  RandomStream rng(7);
  ThresholdTable t = random_feasible_table(5, 3.0, rng);
  const std::string csv = t.to_csv();
  CHECK(csv.substr(0, 17) == "l,L,threshold_mw\n");
  ThresholdTable back = ThresholdTable::from_csv(csv, 3.0);
  CHECK(back == t);
  CHECK_THROWS_AS(ThresholdTable::from_csv("garbage\n", 3.0), config_error);
}

TEST_CASE("threshold table indexing and size") {
  ThresholdTable t(15, 1.0);
  CHECK(t.param_count() == 120);
  CHECK_THROWS_AS(t.at(3, 3), invariant_error);
  CHECK_THROWS_AS(t.at(0, 16), invariant_error);
  CHECK_THROWS_AS(t.at(-1, 2), invariant_error);
}
