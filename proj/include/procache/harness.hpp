#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "procache/bounds.hpp"
#include "procache/channel.hpp"
#include "procache/content_dynamics.hpp"
#include "procache/exact_mdp.hpp"
#include "procache/fdm.hpp"

namespace procache {

enum class Scheme { liso, reactive, random, lb_uc, lb_nck, exact };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(std::string_view name);

struct SweepSpec {
  std::string variable = "cache_capacity";  // cache_capacity | k_max | q | p_a
  std::vector<double> values = {0, 10, 20, 30, 40, 50, 60};
};

// Full experiment description. Loaded from a flat key = value document with
// dotted keys (e.g. "gen.k_max = 15"); omitted keys keep the defaults below.
struct ExperimentConfig {
  GenParams gen;
  ChannelParams chan;
  FdmConfig fdm;
  SweepSpec sweep;
  std::vector<Scheme> schemes = {Scheme::liso, Scheme::reactive, Scheme::lb_uc,
                                 Scheme::lb_nck};
  int n_test = 100;
  std::int64_t test_horizon = 5000;
  std::uint64_t base_seed = 20240901;
  double random_q = 0.5;              // caching probability of the random scheme
  std::size_t dist_samples = 100000;  // cost-distribution sample size for the bounds
  bool lbuc_truncated = false;        // use the elapsed-indexed LB-UC recursion
  std::string fdm_init = "median";    // initial thresholds: "median" or "lbuc"
  int exact_channel_levels = 8;
  std::size_t exact_max_states = 1'000'000;
  double exact_tolerance = 1e-9;

  void validate() const;
};

// Parses the key = value document. '#' starts a comment. Unknown keys, type
// mismatches and invariant violations raise config_error naming the key.
ExperimentConfig parse_config(std::string_view text);

// Applies one "key=value" override on top of an existing config.
void apply_override(ExperimentConfig& config, std::string_view assignment);

struct ResultRow {
  std::string scheme;
  std::string sweep_var;
  double sweep_value = 0.0;
  double mean_cost_mw = 0.0;
  double ci95_mw = 0.0;
  int n_traj = 0;
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// Header "scheme,sweep_var,sweep_value,mean_cost_mw,ci95_mw,n_traj,horizon,seed".
// Doubles are emitted in shortest round-trip form, so parse(emit(rows)) == rows.
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(std::string_view text);

// Specializes the config to one sweep value (sets gen.b, gen.k_max, random_q
// or gen.p_a according to sweep.variable).
ExperimentConfig config_at(const ExperimentConfig& config, double value);

// Trains LISO for the given specialized config and returns the table.
TrainResult train_liso(const ExperimentConfig& config, const CostDistribution& dist,
                       std::uint64_t seed);

// Runs the configured sweep: per sweep value and scheme, trains where needed,
// evaluates over n_test trajectories of test_horizon slots (bounds via their
// recursions or dedicated simulators) and emits one row per cell. All
// randomness derives from base_seed.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// Aligned human-readable table. When the config is supplied, cache-capacity
// sweeps also report the capacity normalized by the mean content turnover
// E[M] * E[K]. Rows whose mean undercuts a lower bound by more than twice
// the combined confidence width are flagged.
std::string summarize(const std::vector<ResultRow>& rows,
                      const ExperimentConfig* config = nullptr);

}  // namespace procache
