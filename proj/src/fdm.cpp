#include "procache/fdm.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>

#include "procache/errors.hpp"
#include "procache/parallel.hpp"

namespace procache {

void FdmConfig::validate() const {
  if (r <= 0.0) throw config_error("fdm.r must be > 0");
  if (step < 0.0) throw config_error("fdm.step must be >= 0");
  if (n_perturbations < 1) throw config_error("fdm.n_perturbations must be >= 1");
  if (n_estimates < 1) throw config_error("fdm.n_estimates must be >= 1");
  if (horizon < 1) throw config_error("fdm.horizon must be >= 1");
  if (n_updates < 0) throw config_error("fdm.n_updates must be >= 0");
  if (ridge < 0.0) throw config_error("fdm.ridge must be >= 0");
}

PerturbResult perturb(const ThresholdTable& table, double r, RandomStream& rng) {
  if (r <= 0.0) throw config_error("perturbation range must be > 0");
  ThresholdTable shifted = table;
  std::vector<double> delta(table.param_count());
  auto values = shifted.raw();
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = rng.uniform(-r, r);
    values[i] += delta[i];
  }
  shifted = project_monotone(std::move(shifted));
  shifted.require_feasible("perturbation");
  return PerturbResult{std::move(shifted), std::move(delta)};
}

RolloutResult rollout(const PolicyKind& policy, const GenParams& gen,
                      const ChannelParams& chan, std::int64_t horizon,
                      std::uint64_t seed) {
  if (horizon < 1) throw config_error("rollout horizon must be >= 1");
  const CostSampler sampler(chan);
  SlotStreams streams = SlotStreams::from_seed(seed);
  return simulate_slots(
      gen, [&](RandomStream& rng) { return sampler(rng); },
      [&](const SystemState& state, double cost, RandomStream& policy_rng) {
        return policy_action(policy, state, cost, gen.b, policy_rng);
      },
      horizon, streams);
}

Objective make_rollout_objective(const Environment& env, std::int64_t horizon) {
  const Environment e = env;
  return [e, horizon](const ThresholdTable& table, std::uint64_t seed) {
    return rollout(PolicyKind{LisoPolicy{table}}, e.gen, e.chan, horizon, seed)
        .avg_cost_mw;
  };
}

std::vector<double> estimate_gradient(const ThresholdTable& table, const FdmConfig& cfg,
                                      const Objective& objective,
                                      std::uint64_t estimate_seed,
                                      GradientStats* stats) {
  cfg.validate();
  const std::size_t n_params = table.param_count();
  const int n = cfg.n_perturbations;
  if (cfg.ridge == 0.0 && n < static_cast<int>(n_params))
    throw config_error("regression needs ridge > 0 or n_perturbations >= parameter count");

  Eigen::MatrixXd deltas(n, static_cast<Eigen::Index>(n_params));
  Eigen::VectorXd dj(n);
  std::vector<double> base_costs(static_cast<std::size_t>(n));
  parallel_for(n, cfg.threads, [&](std::int64_t i) {
    RandomStream perturb_rng(derive_seed(estimate_seed, {0xabu, static_cast<std::uint64_t>(i)}));
    PerturbResult p = perturb(table, cfg.r, perturb_rng);
    // Common random numbers: the perturbed and unperturbed tables share one
    // environment seed, so their cost difference is free of environment noise.
    const std::uint64_t env_seed =
        derive_seed(estimate_seed, {0xcdu, static_cast<std::uint64_t>(i)});
    const double j_perturbed = objective(p.table, env_seed);
    const double j_base = objective(table, env_seed);
    for (std::size_t k = 0; k < n_params; ++k)
      deltas(i, static_cast<Eigen::Index>(k)) = p.delta[k];
    dj(i) = j_perturbed - j_base;
    base_costs[static_cast<std::size_t>(i)] = j_base;
  });

  if (stats) {
    stats->n = n;
    double mean = 0.0;
    for (double c : base_costs) mean += c;
    mean /= n;
    double m2 = 0.0;
    for (double c : base_costs) m2 += (c - mean) * (c - mean);
    stats->base_cost_mean = mean;
    stats->base_cost_m2 = m2;
  }

  Eigen::MatrixXd normal = deltas.transpose() * deltas;
  if (cfg.ridge > 0.0) {
    const double scale = normal.trace() / static_cast<double>(n_params);
    normal.diagonal().array() += cfg.ridge * scale;
  }
  Eigen::VectorXd rhs = deltas.transpose() * dj;
  Eigen::LDLT<Eigen::MatrixXd> solver(normal);
  if (solver.info() != Eigen::Success)
    throw config_error("gradient regression system is singular; increase fdm.ridge");
  Eigen::VectorXd g = solver.solve(rhs);
  return std::vector<double>(g.data(), g.data() + g.size());
}

TrainResult train(const ThresholdTable& init, const FdmConfig& cfg,
                  const Objective& objective) {
  cfg.validate();
  init.require_feasible("initialization");
  ThresholdTable table = init;
  std::vector<TrainPoint> curve;
  curve.reserve(static_cast<std::size_t>(cfg.n_updates));
  const std::size_t n_params = table.param_count();
  for (int update = 0; update < cfg.n_updates; ++update) {
    std::vector<double> avg(n_params, 0.0);
    double cost_mean = 0.0;
    double cost_m2 = 0.0;
    std::int64_t cost_n = 0;
    for (int e = 0; e < cfg.n_estimates; ++e) {
      GradientStats stats;
      const std::uint64_t seed = derive_seed(
          cfg.base_seed, {static_cast<std::uint64_t>(update), static_cast<std::uint64_t>(e)});
      std::vector<double> g = estimate_gradient(table, cfg, objective, seed, &stats);
      for (std::size_t k = 0; k < n_params; ++k) avg[k] += g[k];
      // Chan et al. pairwise merge of mean / M2 accumulators.
      if (stats.n > 0) {
        const double d = stats.base_cost_mean - cost_mean;
        const std::int64_t nn = cost_n + stats.n;
        cost_m2 += stats.base_cost_m2 +
                   d * d * static_cast<double>(cost_n) * stats.n / static_cast<double>(nn);
        cost_mean += d * static_cast<double>(stats.n) / static_cast<double>(nn);
        cost_n = nn;
      }
    }
    auto values = table.raw();
    for (std::size_t k = 0; k < n_params; ++k)
      values[k] -= cfg.step * avg[k] / cfg.n_estimates;
    table = project_monotone(std::move(table));
    table.require_feasible("policy update");

    TrainPoint point;
    point.update = update + 1;
    point.mean_cost_mw = cost_mean;
    if (cost_n > 1) {
      const double sd = std::sqrt(cost_m2 / static_cast<double>(cost_n - 1));
      point.ci95_mw = 1.96 * sd / std::sqrt(static_cast<double>(cost_n));
    }
    curve.push_back(point);
  }
  return TrainResult{std::move(table), std::move(curve)};
}

std::string curve_to_csv(const std::vector<TrainPoint>& curve) {
  std::string out = "update,mean_cost_mw,ci95_mw\n";
  char buf[64];
  for (const TrainPoint& p : curve) {
    out += std::to_string(p.update);
    out += ',';
    auto [e1, ec1] = std::to_chars(buf, buf + sizeof(buf), p.mean_cost_mw);
    out.append(buf, e1);
    out += ',';
    auto [e2, ec2] = std::to_chars(buf, buf + sizeof(buf), p.ci95_mw);
    out.append(buf, e2);
    out += '\n';
  }
  return out;
}

EvalResult evaluate(const PolicyKind& policy, const Environment& env, int n_test,
                    std::int64_t horizon, std::uint64_t base_seed, int threads) {
  if (n_test < 2) throw config_error("evaluate needs n_test >= 2 for a confidence interval");
  std::vector<double> costs(static_cast<std::size_t>(n_test));
  parallel_for(n_test, threads, [&](std::int64_t i) {
    costs[static_cast<std::size_t>(i)] =
        rollout(policy, env.gen, env.chan, horizon,
                derive_seed(base_seed, {static_cast<std::uint64_t>(i)}))
            .avg_cost_mw;
  });
  EvalResult r;
  r.n = n_test;
  for (double c : costs) r.mean_cost_mw += c;
  r.mean_cost_mw /= n_test;
  double m2 = 0.0;
  for (double c : costs) m2 += (c - r.mean_cost_mw) * (c - r.mean_cost_mw);
  r.std_mw = std::sqrt(m2 / (n_test - 1));
  r.ci95_mw = 1.96 * r.std_mw / std::sqrt(static_cast<double>(n_test));
  return r;
}

}  // namespace procache
