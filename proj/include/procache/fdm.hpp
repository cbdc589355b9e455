#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "procache/channel.hpp"
#include "procache/policy.hpp"
#include "procache/simulate.hpp"

namespace procache {

struct Environment {
  GenParams gen;
  ChannelParams chan;
};

// Finite-difference policy-gradient settings. `ridge` scales the Tikhonov
// term relative to trace(X'X)/n_params, so 0 reproduces plain least squares.
struct FdmConfig {
  double r = 0.08;            // perturbation half-range (mW)
  double step = 0.01;         // gradient step size
  int n_perturbations = 100;  // N regressors per gradient estimate
  int n_estimates = 5;        // estimates averaged per update
  std::int64_t horizon = 300; // slots per rollout
  int n_updates = 200;
  double ridge = 1e-6;
  std::uint64_t base_seed = 1;
  int threads = 0;            // 0 = hardware concurrency

  void validate() const;
};

struct PerturbResult {
  ThresholdTable table;               // perturbed and re-projected
  std::vector<double> delta;          // raw perturbation, recorded pre-projection
};

// Adds i.i.d. Uniform(-r, r) to every entry, then restores feasibility.
PerturbResult perturb(const ThresholdTable& table, double r, RandomStream& rng);

// Average trajectory cost of a threshold table under a given seed. The seed
// fixes the whole environment, so evaluating two tables on the same seed is
// a paired comparison.
using Objective = std::function<double(const ThresholdTable&, std::uint64_t seed)>;

Objective make_rollout_objective(const Environment& env, std::int64_t horizon);

// Simulates one trajectory from the empty initial state.
RolloutResult rollout(const PolicyKind& policy, const GenParams& gen,
                      const ChannelParams& chan, std::int64_t horizon,
                      std::uint64_t seed);

// Extra numbers estimate_gradient can report to its caller.
struct GradientStats {
  double base_cost_mean = 0.0;  // mean unperturbed objective over the N pairs
  double base_cost_m2 = 0.0;    // sum of squared deviations (for pooling)
  int n = 0;
};

// One regression-based gradient estimate from N paired perturbations.
std::vector<double> estimate_gradient(const ThresholdTable& table, const FdmConfig& cfg,
                                      const Objective& objective,
                                      std::uint64_t estimate_seed,
                                      GradientStats* stats = nullptr);

inline std::vector<double> estimate_gradient(const ThresholdTable& table,
                                             const FdmConfig& cfg,
                                             const Environment& env) {
  return estimate_gradient(table, cfg, make_rollout_objective(env, cfg.horizon),
                           cfg.base_seed);
}

struct TrainPoint {
  int update = 0;
  double mean_cost_mw = 0.0;
  double ci95_mw = 0.0;
};

struct TrainResult {
  ThresholdTable table;
  std::vector<TrainPoint> curve;
};

// Gradient descent on the threshold table: per update, n_estimates gradient
// estimates are averaged, a -step * gradient move is taken and the table is
// re-projected. The curve holds the unperturbed rollout costs seen at each
// update.
TrainResult train(const ThresholdTable& init, const FdmConfig& cfg,
                  const Objective& objective);

inline TrainResult train(const ThresholdTable& init, const FdmConfig& cfg,
                         const Environment& env) {
  return train(init, cfg, make_rollout_objective(env, cfg.horizon));
}

// CSV with header "update,mean_cost_mw,ci95_mw".
std::string curve_to_csv(const std::vector<TrainPoint>& curve);

struct EvalResult {
  double mean_cost_mw = 0.0;
  double std_mw = 0.0;
  double ci95_mw = 0.0;
  int n = 0;
};

// Mean cost over n_test independent rollouts with a normal-approximation
// 95% confidence half-width. Trajectory i uses seed derive(base_seed, {i}).
EvalResult evaluate(const PolicyKind& policy, const Environment& env, int n_test,
                    std::int64_t horizon, std::uint64_t base_seed, int threads = 0);

}  // namespace procache
