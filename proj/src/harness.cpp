#include "procache/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <sstream>

#include "procache/errors.hpp"

namespace procache {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view key, std::string_view value) {
  double out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw config_error(std::string(key) + ": expected a number, got '" +
                       std::string(value) + "'");
  return out;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw config_error(std::string(key) + ": expected an integer, got '" +
                       std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw config_error(std::string(key) + ": expected true/false, got '" +
                     std::string(value) + "'");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(sep, pos);
    if (next == std::string_view::npos) next = s.size();
    parts.push_back(trim(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return parts;
}

// Lifetimes of the standard experiment family: {5, 10, ..., k_max}.
std::vector<int> standard_support(int k_max) {
  if (k_max < 5 || k_max % 5 != 0)
    throw config_error("gen.k_max must be a positive multiple of 5, got " +
                       std::to_string(k_max));
  std::vector<int> support;
  for (int k = 5; k <= k_max; k += 5) support.push_back(k);
  return support;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> setters = {
      {"gen.m_max", [](ExperimentConfig& c, auto k, auto v) { c.gen.m_max = parse_int<int>(k, v); }},
      {"gen.k_max",
       [](ExperimentConfig& c, auto k, auto v) {
         c.gen.k_max = parse_int<int>(k, v);
         c.gen.lifetime_support = standard_support(c.gen.k_max);
       }},
      {"gen.p_a", [](ExperimentConfig& c, auto k, auto v) { c.gen.p_a = parse_double(k, v); }},
      {"gen.d_max", [](ExperimentConfig& c, auto k, auto v) { c.gen.d_max = parse_int<int>(k, v); }},
      {"gen.b",
       [](ExperimentConfig& c, auto k, auto v) {
         c.gen.b = (v == "unlimited") ? GenParams::unlimited_cache
                                      : parse_int<std::int64_t>(k, v);
       }},
      {"gen.truncate_access",
       [](ExperimentConfig& c, auto k, auto v) { c.gen.truncate_access = parse_bool(k, v); }},
      {"chan.fc_ghz", [](ExperimentConfig& c, auto k, auto v) { c.chan.fc_ghz = parse_double(k, v); }},
      {"chan.d_min_m", [](ExperimentConfig& c, auto k, auto v) { c.chan.d_min_m = parse_double(k, v); }},
      {"chan.d_max_m", [](ExperimentConfig& c, auto k, auto v) { c.chan.d_max_m = parse_double(k, v); }},
      {"chan.sigma_db", [](ExperimentConfig& c, auto k, auto v) { c.chan.sigma_db = parse_double(k, v); }},
      {"chan.bandwidth_hz",
       [](ExperimentConfig& c, auto k, auto v) { c.chan.bandwidth_hz = parse_double(k, v); }},
      {"chan.noise_psd_dbm_hz",
       [](ExperimentConfig& c, auto k, auto v) { c.chan.noise_psd_dbm_hz = parse_double(k, v); }},
      {"chan.noise_figure_db",
       [](ExperimentConfig& c, auto k, auto v) { c.chan.noise_figure_db = parse_double(k, v); }},
      {"chan.g_tx_dbi", [](ExperimentConfig& c, auto k, auto v) { c.chan.g_tx_dbi = parse_double(k, v); }},
      {"chan.g_rx_dbi", [](ExperimentConfig& c, auto k, auto v) { c.chan.g_rx_dbi = parse_double(k, v); }},
      {"chan.spectral_eff",
       [](ExperimentConfig& c, auto k, auto v) { c.chan.spectral_eff = parse_double(k, v); }},
      {"chan.shadow_clip_sigmas",
       [](ExperimentConfig& c, auto k, auto v) { c.chan.shadow_clip_sigmas = parse_double(k, v); }},
      {"chan.c_max_mw",
       [](ExperimentConfig& c, auto k, auto v) {
         c.chan.c_max_mw = (v == "auto") ? 0.0 : parse_double(k, v);
       }},
      {"chan.dist_samples",
       [](ExperimentConfig& c, auto k, auto v) { c.dist_samples = parse_int<std::size_t>(k, v); }},
      {"fdm.r", [](ExperimentConfig& c, auto k, auto v) { c.fdm.r = parse_double(k, v); }},
      {"fdm.step", [](ExperimentConfig& c, auto k, auto v) { c.fdm.step = parse_double(k, v); }},
      {"fdm.n_perturbations",
       [](ExperimentConfig& c, auto k, auto v) { c.fdm.n_perturbations = parse_int<int>(k, v); }},
      {"fdm.n_estimates",
       [](ExperimentConfig& c, auto k, auto v) { c.fdm.n_estimates = parse_int<int>(k, v); }},
      {"fdm.horizon",
       [](ExperimentConfig& c, auto k, auto v) { c.fdm.horizon = parse_int<std::int64_t>(k, v); }},
      {"fdm.n_updates",
       [](ExperimentConfig& c, auto k, auto v) { c.fdm.n_updates = parse_int<int>(k, v); }},
      {"fdm.ridge", [](ExperimentConfig& c, auto k, auto v) { c.fdm.ridge = parse_double(k, v); }},
      {"fdm.threads", [](ExperimentConfig& c, auto k, auto v) { c.fdm.threads = parse_int<int>(k, v); }},
      {"fdm.init",
       [](ExperimentConfig& c, auto k, auto v) {
         if (v != "median" && v != "lbuc")
           throw config_error(std::string(k) + ": expected median or lbuc");
         c.fdm_init = std::string(v);
       }},
      {"sweep.variable",
       [](ExperimentConfig& c, auto k, auto v) {
         if (v != "cache_capacity" && v != "k_max" && v != "q" && v != "p_a")
           throw config_error(std::string(k) + ": unknown sweep variable '" +
                              std::string(v) + "'");
         c.sweep.variable = std::string(v);
       }},
      {"sweep.values",
       [](ExperimentConfig& c, auto k, auto v) {
         c.sweep.values.clear();
         for (auto part : split(v, ','))
           if (!part.empty()) c.sweep.values.push_back(parse_double(k, part));
         if (c.sweep.values.empty())
           throw config_error(std::string(k) + ": needs at least one value");
       }},
      {"schemes",
       [](ExperimentConfig& c, auto k, auto v) {
         c.schemes.clear();
         for (auto part : split(v, ','))
           if (!part.empty()) c.schemes.push_back(scheme_from_name(part));
         if (c.schemes.empty()) throw config_error(std::string(k) + ": needs at least one scheme");
       }},
      {"test.n_test", [](ExperimentConfig& c, auto k, auto v) { c.n_test = parse_int<int>(k, v); }},
      {"test.horizon",
       [](ExperimentConfig& c, auto k, auto v) { c.test_horizon = parse_int<std::int64_t>(k, v); }},
      {"base_seed",
       [](ExperimentConfig& c, auto k, auto v) { c.base_seed = parse_int<std::uint64_t>(k, v); }},
      {"random.q", [](ExperimentConfig& c, auto k, auto v) { c.random_q = parse_double(k, v); }},
      {"bounds.lbuc_truncated",
       [](ExperimentConfig& c, auto k, auto v) { c.lbuc_truncated = parse_bool(k, v); }},
      {"exact.channel_levels",
       [](ExperimentConfig& c, auto k, auto v) { c.exact_channel_levels = parse_int<int>(k, v); }},
      {"exact.max_states",
       [](ExperimentConfig& c, auto k, auto v) { c.exact_max_states = parse_int<std::size_t>(k, v); }},
      {"exact.tolerance",
       [](ExperimentConfig& c, auto k, auto v) { c.exact_tolerance = parse_double(k, v); }},
  };
  return setters;
}

void set_key(ExperimentConfig& config, std::string_view key, std::string_view value) {
  auto it = config_setters().find(std::string(key));
  if (it == config_setters().end())
    throw config_error("unknown configuration key '" + std::string(key) + "'");
  it->second(config, key, value);
}

std::uint64_t value_bits(double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

char* write_double(char* first, char* last, double v) {
  auto [p, ec] = std::to_chars(first, last, v);
  return p;
}

std::string format_double(double v) {
  char buf[64];
  return std::string(buf, write_double(buf, buf + sizeof(buf), v));
}

}  // namespace

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::liso: return "liso";
    case Scheme::reactive: return "reactive";
    case Scheme::random: return "random";
    case Scheme::lb_uc: return "lb_uc";
    case Scheme::lb_nck: return "lb_nck";
    case Scheme::exact: return "exact";
  }
  throw config_error("unknown scheme");
}

Scheme scheme_from_name(std::string_view name) {
  if (name == "liso") return Scheme::liso;
  if (name == "reactive") return Scheme::reactive;
  if (name == "random") return Scheme::random;
  if (name == "lb_uc") return Scheme::lb_uc;
  if (name == "lb_nck") return Scheme::lb_nck;
  if (name == "exact") return Scheme::exact;
  throw config_error("unknown scheme '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  gen.validate();
  chan.validate();
  fdm.validate();
  if (schemes.empty()) throw config_error("schemes: needs at least one scheme");
  if (sweep.values.empty()) throw config_error("sweep.values: needs at least one value");
  if (n_test < 2) throw config_error("test.n_test must be >= 2");
  if (test_horizon < 1) throw config_error("test.horizon must be >= 1");
  if (dist_samples == 0) throw config_error("chan.dist_samples must be > 0");
  if (!(random_q >= 0.0 && random_q <= 1.0))
    throw config_error("random.q must be in [0, 1]");
  if (exact_channel_levels < 1) throw config_error("exact.channel_levels must be >= 1");
  for (double v : sweep.values) {
    if (sweep.variable == "cache_capacity" &&
        (v < 0 || v != std::floor(v)))
      throw config_error("sweep.values: cache capacities must be non-negative integers");
    if (sweep.variable == "k_max" &&
        (v < 5 || v != std::floor(v) || static_cast<std::int64_t>(v) % 5 != 0))
      throw config_error("sweep.values: k_max values must be positive multiples of 5");
    if (sweep.variable == "q" && (v < 0.0 || v > 1.0))
      throw config_error("sweep.values: q values must be in [0, 1]");
    if (sweep.variable == "p_a" && !(v > 0.0 && v <= 1.0))
      throw config_error("sweep.values: p_a values must be in (0, 1]");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    set_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    if (pos > text.size()) break;
  }
  config.validate();
  return config;
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw config_error("override must look like key=value, got '" +
                       std::string(assignment) + "'");
  set_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "scheme,sweep_var,sweep_value,mean_cost_mw,ci95_mw,n_traj,horizon,seed\n";
  for (const ResultRow& r : rows) {
    out += r.scheme;
    out += ',';
    out += r.sweep_var;
    out += ',';
    out += format_double(r.sweep_value);
    out += ',';
    out += format_double(r.mean_cost_mw);
    out += ',';
    out += format_double(r.ci95_mw);
    out += ',';
    out += std::to_string(r.n_traj);
    out += ',';
    out += std::to_string(r.horizon);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> rows_from_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (header) {
      if (line != "scheme,sweep_var,sweep_value,mean_cost_mw,ci95_mw,n_traj,horizon,seed")
        throw config_error("bad result CSV header");
      header = false;
      continue;
    }
    if (fields.size() != 8) throw config_error("result CSV row needs 8 fields");
    ResultRow r;
    r.scheme = std::string(fields[0]);
    r.sweep_var = std::string(fields[1]);
    r.sweep_value = parse_double("sweep_value", fields[2]);
    r.mean_cost_mw = parse_double("mean_cost_mw", fields[3]);
    r.ci95_mw = parse_double("ci95_mw", fields[4]);
    r.n_traj = parse_int<int>("n_traj", fields[5]);
    r.horizon = parse_int<std::int64_t>("horizon", fields[6]);
    r.seed = parse_int<std::uint64_t>("seed", fields[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

ExperimentConfig config_at(const ExperimentConfig& config, double value) {
  ExperimentConfig cell = config;
  cell.sweep.values = {value};  // the cell stands for a single sweep point
  if (config.sweep.variable == "cache_capacity") {
    cell.gen.b = static_cast<std::int64_t>(value);
  } else if (config.sweep.variable == "k_max") {
    cell.gen.k_max = static_cast<int>(value);
    cell.gen.lifetime_support = standard_support(cell.gen.k_max);
  } else if (config.sweep.variable == "q") {
    cell.random_q = value;
  } else if (config.sweep.variable == "p_a") {
    cell.gen.p_a = value;
  } else {
    throw config_error("unknown sweep variable '" + config.sweep.variable + "'");
  }
  cell.validate();
  return cell;
}

TrainResult train_liso(const ExperimentConfig& config, const CostDistribution& dist,
                       std::uint64_t seed) {
  const double cap = config.chan.resolved_c_max_mw();
  ThresholdTable init(config.gen.k_max, cap);
  if (config.fdm_init == "median") {
    const double median = dist.quantile(0.5);
    for (double& v : init.raw()) v = median;
  } else {
    // Warm start from the unlimited-cache recursion: a pure download of
    // lifetime L is worth W(L-1), a swap the difference of the pair values.
    const LbucTable lbuc = lbuc_table(config.gen.p_a, dist, config.gen.k_max);
    for (int big_l = 1; big_l <= config.gen.k_max; ++big_l)
      for (int l = 0; l < big_l; ++l)
        init.set(l, big_l, lbuc.w[big_l - 1] - (l > 0 ? lbuc.w[l - 1] : 0.0));
  }
  init = project_monotone(std::move(init));
  FdmConfig fdm = config.fdm;
  fdm.base_seed = seed;
  Environment env{config.gen, config.chan};
  return train(init, fdm, env);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const CostDistribution dist =
      CostDistribution::build(config.chan, config.dist_samples,
                              derive_seed(config.base_seed, {hash64("dist")}));
  std::vector<ResultRow> rows;
  for (double value : config.sweep.values) {
    const ExperimentConfig cell = config_at(config, value);
    const Environment env{cell.gen, cell.chan};
    // One evaluation seed per sweep value, shared by every scheme, so the
    // schemes are compared on identical environment draws.
    const std::uint64_t eval_seed =
        derive_seed(config.base_seed, {hash64("eval"), value_bits(value)});
    for (Scheme scheme : config.schemes) {
      ResultRow row;
      row.scheme = scheme_name(scheme);
      row.sweep_var = config.sweep.variable;
      row.sweep_value = value;
      row.seed = eval_seed;
      switch (scheme) {
        case Scheme::liso: {
          const std::uint64_t train_seed =
              derive_seed(config.base_seed, {hash64("train"), value_bits(value)});
          TrainResult trained = train_liso(cell, dist, train_seed);
          EvalResult eval = evaluate(PolicyKind{LisoPolicy{std::move(trained.table)}}, env,
                                     cell.n_test, cell.test_horizon, eval_seed,
                                     cell.fdm.threads);
          row.mean_cost_mw = eval.mean_cost_mw;
          row.ci95_mw = eval.ci95_mw;
          row.n_traj = eval.n;
          row.horizon = cell.test_horizon;
          break;
        }
        case Scheme::reactive:
        case Scheme::random: {
          PolicyKind policy = (scheme == Scheme::reactive)
                                  ? PolicyKind{ReactivePolicy{}}
                                  : PolicyKind{RandomPolicy{cell.random_q}};
          EvalResult eval = evaluate(policy, env, cell.n_test, cell.test_horizon,
                                     eval_seed, cell.fdm.threads);
          row.mean_cost_mw = eval.mean_cost_mw;
          row.ci95_mw = eval.ci95_mw;
          row.n_traj = eval.n;
          row.horizon = cell.test_horizon;
          break;
        }
        case Scheme::lb_uc: {
          if (cell.lbuc_truncated) {
            row.mean_cost_mw = lbuc_rate_truncated(
                cell.gen,
                lbuc_table_truncated(cell.gen.p_a, cell.gen.d_max, dist, cell.gen.k_max));
          } else {
            row.mean_cost_mw = lbuc_rate(cell.gen, lbuc_table(cell.gen.p_a, dist, cell.gen.k_max));
          }
          row.seed = config.base_seed;
          break;
        }
        case Scheme::lb_nck: {
          EvalResult eval =
              lbnck_simulate(cell.gen, cell.chan, lbnck_table(dist, cell.gen.d_max),
                             cell.n_test, cell.test_horizon, eval_seed, cell.fdm.threads);
          row.mean_cost_mw = eval.mean_cost_mw;
          row.ci95_mw = eval.ci95_mw;
          row.n_traj = eval.n;
          row.horizon = cell.test_horizon;
          break;
        }
        case Scheme::exact: {
          const ChannelLevels levels =
              ChannelLevels::from_distribution(dist, cell.exact_channel_levels);
          const MdpInstance mdp = build_mdp(cell.gen, levels, cell.exact_max_states);
          const SolveResult solved = relative_value_iteration(mdp, cell.exact_tolerance);
          row.mean_cost_mw = solved.rho_star;
          row.seed = config.base_seed;
          break;
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string summarize(const std::vector<ResultRow>& rows, const ExperimentConfig* config) {
  if (rows.empty()) return "";
  std::ostringstream out;
  const bool capacity_sweep = config && rows.front().sweep_var == "cache_capacity";
  double turnover = 0.0;
  if (capacity_sweep)
    turnover = config->gen.mean_batch_size() * config->gen.mean_lifetime();
  out << "scheme      sweep_var       sweep_value  mean_mw      ci95_mw    n_traj";
  if (capacity_sweep) out << "  b_normalized";
  out << '\n';
  char buf[64];
  auto fixed = [&](double v, int width) {
    std::string s = format_double(v);
    if (auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
        ec == std::errc{})
      s.assign(buf, p);
    if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), ' ');
    return s;
  };
  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };
  for (const ResultRow& r : rows) {
    out << pad(r.scheme, 12) << pad(r.sweep_var, 14) << fixed(r.sweep_value, 13)
        << fixed(r.mean_cost_mw, 9) << fixed(r.ci95_mw, 11) << fixed(r.n_traj, 10);
    if (capacity_sweep && turnover > 0.0)
      out << fixed(r.sweep_value / turnover, 14);
    out << '\n';
  }
  // Ordering sanity: no scheme may sit below a lower bound by more than
  // twice the combined confidence width.
  for (const ResultRow& r : rows) {
    if (r.scheme == "lb_uc" || r.scheme == "lb_nck" || r.scheme == "exact") continue;
    for (const ResultRow& lb : rows) {
      if (lb.sweep_value != r.sweep_value) continue;
      if (lb.scheme != "lb_uc" && lb.scheme != "lb_nck") continue;
      const double slack = 2.0 * std::sqrt(r.ci95_mw * r.ci95_mw + lb.ci95_mw * lb.ci95_mw);
      if (r.mean_cost_mw < lb.mean_cost_mw - slack)
        out << "WARNING: " << r.scheme << " at " << r.sweep_var << "="
            << format_double(r.sweep_value) << " undercuts " << lb.scheme << " ("
            << format_double(r.mean_cost_mw) << " < " << format_double(lb.mean_cost_mw)
            << " - 2ci)\n";
    }
  }
  return out.str();
}

}  // namespace procache
