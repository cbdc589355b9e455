#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "procache/bounds.hpp"
#include "procache/errors.hpp"
#include "procache/exact_mdp.hpp"
#include "procache/fdm.hpp"
#include "procache/harness.hpp"

namespace {

using namespace procache;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write file '" + path + "'");
  out << content;
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig load_config(const CommonOpts& opts) {
  ExperimentConfig config =
      opts.config_path.empty() ? ExperimentConfig{} : parse_config(read_file(opts.config_path));
  for (const std::string& assignment : opts.overrides) apply_override(config, assignment);
  if (opts.seed_set) config.base_seed = opts.seed;
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "config override key=value (repeatable)");
  cmd->add_option("--seed", opts.seed, "override base_seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_file(out_path, content);
}

int run(int argc, char** argv) {
  CLI::App app{"energy-aware proactive caching simulator"};
  app.require_subcommand(1);

  CommonOpts sim_opts;
  std::string sim_scheme, sim_table, sim_out;
  auto* sim = app.add_subcommand("simulate", "evaluate one scheme on one configuration");
  add_common(sim, sim_opts);
  sim->add_option("--scheme", sim_scheme, "liso|reactive|random|lb_uc|lb_nck|exact")->required();
  sim->add_option("--table", sim_table, "threshold table CSV (required for liso)");
  sim->add_option("--out", sim_out, "output CSV path (default stdout)");

  CommonOpts train_opts;
  std::string train_out, train_curve;
  auto* train_cmd = app.add_subcommand("train", "train the swap policy and write its table");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--out", train_out, "threshold table CSV path")->required();
  train_cmd->add_option("--curve", train_curve, "learning-curve CSV path");

  CommonOpts bounds_opts;
  std::string bounds_out;
  auto* bounds_cmd = app.add_subcommand("bounds", "emit the lower-bound tables");
  add_common(bounds_cmd, bounds_opts);
  bounds_cmd->add_option("--out", bounds_out, "output prefix (writes <prefix>lbuc.csv and <prefix>lbnck.csv)");

  CommonOpts exact_opts;
  std::string exact_out;
  auto* exact_cmd = app.add_subcommand("solve-exact", "solve a small instance exactly");
  add_common(exact_cmd, exact_opts);
  exact_cmd->add_option("--out", exact_out, "per-state policy dump CSV path");

  CommonOpts sweep_opts;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "run the configured experiment sweep");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--out", sweep_out, "result CSV path (default stdout)");

  std::string summarize_in, summarize_config;
  auto* sum_cmd = app.add_subcommand("summarize", "tabulate a result CSV");
  sum_cmd->add_option("input", summarize_in, "result CSV path")->required();
  sum_cmd->add_option("--config", summarize_config, "config used to produce the results");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    ExperimentConfig config = load_config(sim_opts);
    const Scheme scheme = scheme_from_name(sim_scheme);
    config.schemes = {scheme};
    config.sweep.variable = "cache_capacity";
    config.sweep.values = {static_cast<double>(
        config.gen.cache_unlimited() ? -1 : config.gen.b)};
    if (scheme == Scheme::liso) {
      if (sim_table.empty())
        throw config_error("simulate --scheme liso needs --table (train one first)");
      ThresholdTable table =
          ThresholdTable::from_csv(read_file(sim_table), config.chan.resolved_c_max_mw());
      const Environment env{config.gen, config.chan};
      const std::uint64_t eval_seed = derive_seed(config.base_seed, {hash64("eval")});
      EvalResult eval = evaluate(PolicyKind{LisoPolicy{std::move(table)}}, env,
                                 config.n_test, config.test_horizon, eval_seed,
                                 config.fdm.threads);
      ResultRow row{"liso", "none", 0.0, eval.mean_cost_mw, eval.ci95_mw,
                    eval.n, config.test_horizon, eval_seed};
      emit(sim_out, rows_to_csv({row}));
      return 0;
    }
    config.sweep.values = {config.sweep.values.front()};
    std::vector<ResultRow> rows = run_experiment(config);
    for (ResultRow& row : rows) row.sweep_var = "none";
    emit(sim_out, rows_to_csv(rows));
    return 0;
  }
  if (train_cmd->parsed()) {
    ExperimentConfig config = load_config(train_opts);
    const CostDistribution dist = CostDistribution::build(
        config.chan, config.dist_samples, derive_seed(config.base_seed, {hash64("dist")}));
    TrainResult result =
        train_liso(config, dist, derive_seed(config.base_seed, {hash64("train")}));
    write_file(train_out, result.table.to_csv());
    if (!train_curve.empty()) write_file(train_curve, curve_to_csv(result.curve));
    std::cerr << "trained " << result.table.param_count() << " thresholds over "
              << config.fdm.n_updates << " updates\n";
    return 0;
  }
  if (bounds_cmd->parsed()) {
    ExperimentConfig config = load_config(bounds_opts);
    const CostDistribution dist = CostDistribution::build(
        config.chan, config.dist_samples, derive_seed(config.base_seed, {hash64("dist")}));
    const LbucTable lbuc = lbuc_table(config.gen.p_a, dist, config.gen.k_max);
    const LbnckTable lbnck = lbnck_table(dist, config.gen.d_max);
    if (!bounds_out.empty()) {
      write_file(bounds_out + "lbuc.csv", lbuc.to_csv());
      write_file(bounds_out + "lbnck.csv", lbnck.to_csv());
    } else {
      std::cout << lbuc.to_csv() << lbnck.to_csv();
    }
    std::cout << "lbuc_rate_mw=" << lbuc_rate(config.gen, lbuc) << "\n";
    return 0;
  }
  if (exact_cmd->parsed()) {
    ExperimentConfig config = load_config(exact_opts);
    const CostDistribution dist = CostDistribution::build(
        config.chan, config.dist_samples, derive_seed(config.base_seed, {hash64("dist")}));
    const ChannelLevels levels =
        ChannelLevels::from_distribution(dist, config.exact_channel_levels);
    const MdpInstance mdp = build_mdp(config.gen, levels, config.exact_max_states);
    const SolveResult solved = relative_value_iteration(mdp, config.exact_tolerance);
    const StructureReport report = check_threshold_structure(solved, mdp);
    std::cout << "states=" << mdp.n_states() << " rho_star_mw=" << solved.rho_star
              << " residual=" << solved.residual << " iterations=" << solved.iterations
              << "\nnesting_violations=" << report.violations.size() << " (of "
              << report.n_states_checked << " states checked)\n";
    if (!exact_out.empty()) write_file(exact_out, solve_dump_csv(mdp, solved));
    return 0;
  }
  if (sweep_cmd->parsed()) {
    ExperimentConfig config = load_config(sweep_opts);
    std::vector<ResultRow> rows = run_experiment(config);
    emit(sweep_out, rows_to_csv(rows));
    return 0;
  }
  if (sum_cmd->parsed()) {
    std::vector<ResultRow> rows = rows_from_csv(read_file(summarize_in));
    if (!summarize_config.empty()) {
      ExperimentConfig config = parse_config(read_file(summarize_config));
      std::cout << summarize(rows, &config);
    } else {
      std::cout << summarize(rows);
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const procache::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
