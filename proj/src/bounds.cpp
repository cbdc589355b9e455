#include "procache/bounds.hpp"

#include <charconv>
#include <cmath>

#include "procache/errors.hpp"
#include "procache/parallel.hpp"
#include "procache/simulate.hpp"

namespace procache {

namespace {

std::string table_csv(const char* header, const std::vector<double>& col) {
  std::string out = header;
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < col.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), col[i]);
    out.append(buf, end);
    out += '\n';
  }
  return out;
}

EvalResult summarize_costs(const std::vector<double>& costs) {
  EvalResult r;
  r.n = static_cast<int>(costs.size());
  for (double c : costs) r.mean_cost_mw += c;
  r.mean_cost_mw /= r.n;
  double m2 = 0.0;
  for (double c : costs) m2 += (c - r.mean_cost_mw) * (c - r.mean_cost_mw);
  if (r.n > 1) {
    r.std_mw = std::sqrt(m2 / (r.n - 1));
    r.ci95_mw = 1.96 * r.std_mw / std::sqrt(static_cast<double>(r.n));
  }
  return r;
}

}  // namespace

std::string LbucTable::to_csv() const { return table_csv("k,W_mw", w); }
std::string LbnckTable::to_csv() const { return table_csv("s,V_mw", v); }

LbucTable lbuc_table(double p_a, const CostDistribution& dist, int k_max) {
  if (!(p_a > 0.0 && p_a <= 1.0)) throw config_error("lbuc_table needs p_a in (0, 1]");
  if (k_max < 1) throw config_error("lbuc_table needs k_max >= 1");
  const double mean = expected_cost(dist);
  LbucTable table;
  table.w.resize(static_cast<std::size_t>(k_max) + 1);
  table.w[0] = 0.0;
  for (int k = 1; k <= k_max; ++k)
    table.w[k] = p_a * mean + (1.0 - p_a) * expected_min_cost(table.w[k - 1], dist);
  return table;
}

LbucTruncatedTable lbuc_table_truncated(double p_a, int d_max,
                                        const CostDistribution& dist, int k_max) {
  if (!(p_a > 0.0 && p_a <= 1.0)) throw config_error("lbuc_table needs p_a in (0, 1]");
  if (d_max < 1 || k_max < 1) throw config_error("lbuc_table needs d_max, k_max >= 1");
  const double mean = expected_cost(dist);
  LbucTruncatedTable table;
  table.w.assign(static_cast<std::size_t>(k_max) + 1,
                 std::vector<double>(static_cast<std::size_t>(d_max), 0.0));
  for (int k = 1; k <= k_max; ++k) {
    for (int e = d_max - 1; e >= 0; --e) {
      const double p = (e == d_max - 1) ? 1.0 : p_a;
      double wait = 0.0;
      if (p < 1.0) wait = expected_min_cost(table.w[k - 1][e + 1], dist);
      table.w[k][e] = p * mean + (1.0 - p) * wait;
    }
  }
  return table;
}

double lbuc_rate(const GenParams& gen, const LbucTable& table) {
  if (gen.k_max > table.k_max())
    throw config_error("lbuc table was built for a smaller k_max than the generator");
  double mean_w = 0.0;
  for (int k : gen.lifetime_support) mean_w += table.w[static_cast<std::size_t>(k)];
  mean_w /= static_cast<double>(gen.lifetime_support.size());
  return gen.mean_batch_size() * mean_w;
}

double lbuc_rate_truncated(const GenParams& gen, const LbucTruncatedTable& table) {
  if (gen.k_max >= static_cast<int>(table.w.size()))
    throw config_error("lbuc table was built for a smaller k_max than the generator");
  const int d_max = static_cast<int>(table.w[0].size());
  // Stationary distribution of the elapsed counter under truncated access:
  // pi(e) proportional to (1 - p_a)^e on e = 0..d_max-1.
  std::vector<double> pi(static_cast<std::size_t>(d_max));
  double norm = 0.0;
  for (int e = 0; e < d_max; ++e) {
    pi[e] = std::pow(1.0 - gen.p_a, e);
    norm += pi[e];
  }
  double rate = 0.0;
  for (int e = 0; e < d_max; ++e) {
    double mean_w = 0.0;
    for (int k : gen.lifetime_support) mean_w += table.w[static_cast<std::size_t>(k)][e];
    mean_w /= static_cast<double>(gen.lifetime_support.size());
    rate += (pi[e] / norm) * mean_w;
  }
  return gen.mean_batch_size() * rate;
}

LbnckTable lbnck_table(const CostDistribution& dist, int d_max) {
  if (d_max < 1) throw config_error("lbnck_table needs d_max >= 1");
  LbnckTable table;
  table.v.resize(static_cast<std::size_t>(d_max) + 1);
  table.v[0] = expected_cost(dist);
  for (int s = 1; s <= d_max; ++s)
    table.v[s] = expected_min_cost(table.v[s - 1], dist);
  return table;
}

EvalResult lbuc_simulate(const GenParams& gen, const ChannelParams& chan,
                         const LbucTable& table, int n_traj, std::int64_t horizon,
                         std::uint64_t base_seed, int threads) {
  if (gen.k_max > table.k_max())
    throw config_error("lbuc table was built for a smaller k_max than the generator");
  GenParams relaxed = gen;
  relaxed.b = GenParams::unlimited_cache;
  relaxed.truncate_access = false;  // the DP assumes memoryless access
  const CostSampler sampler(chan);
  std::vector<double> costs(static_cast<std::size_t>(n_traj));
  parallel_for(n_traj, threads, [&](std::int64_t i) {
    SlotStreams streams =
        SlotStreams::from_seed(derive_seed(base_seed, {static_cast<std::uint64_t>(i)}));
    auto policy = [&](const SystemState& state, double cost, RandomStream&) {
      CacheAction action;
      for (int k = 2; k <= relaxed.k_max; ++k) {
        const auto n = state.out.count(k);
        if (n > 0 && cost <= table.threshold(k)) action.downloads.add(k, n);
      }
      return action;
    };
    costs[static_cast<std::size_t>(i)] =
        simulate_slots(relaxed, [&](RandomStream& rng) { return sampler(rng); }, policy,
                       horizon, streams)
            .avg_cost_mw;
  });
  return summarize_costs(costs);
}

EvalResult lbnck_simulate(const GenParams& gen, const ChannelParams& chan,
                          const LbnckTable& table, int n_traj, std::int64_t horizon,
                          std::uint64_t base_seed, int threads) {
  const CostSampler sampler(chan);
  const int v_max = static_cast<int>(table.v.size()) - 1;
  std::vector<double> costs(static_cast<std::size_t>(n_traj));
  parallel_for(n_traj, threads, [&](std::int64_t i) {
    SlotStreams streams =
        SlotStreams::from_seed(derive_seed(base_seed, {static_cast<std::uint64_t>(i)}));
    // Reveal the whole access sequence first; consumption matches the causal
    // simulators draw for draw, so trajectories pair across schemes.
    std::vector<std::int64_t> next_access(static_cast<std::size_t>(horizon) + 1, 0);
    {
      std::vector<bool> accessed(static_cast<std::size_t>(horizon) + 1, false);
      int elapsed = 0;
      for (std::int64_t t = 1; t <= horizon; ++t) {
        accessed[t] = sample_access(streams.access, gen, elapsed);
        elapsed = accessed[t] ? 0 : elapsed + 1;
      }
      std::int64_t upcoming = 0;  // 0 = no further access before the horizon ends
      for (std::int64_t t = horizon; t >= 1; --t) {
        if (accessed[t]) upcoming = t;
        next_access[t] = upcoming;
      }
    }
    double total = 0.0;
    std::int64_t pending = 0;  // generated must-deliver items awaiting download
    std::int64_t cached = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
      const LifetimeMultiset batch = generate_batch(streams.gen, gen);
      const std::int64_t a = next_access[t];
      if (a != 0) {
        const std::int64_t gap = a - t;
        for (int k : batch.to_sorted_list())
          if (k > gap) ++pending;  // survives until the access; must be delivered
      }
      const double cost = sampler(streams.cost);
      if (a == 0) continue;
      const std::int64_t s = a - t;
      if (s == 0) {
        total += static_cast<double>(pending) * cost;
        pending = 0;
        cached = 0;
      } else {
        const int idx = static_cast<int>(std::min<std::int64_t>(s, v_max));
        if (cost <= table.threshold(idx)) {
          const std::int64_t room =
              gen.cache_unlimited() ? pending : std::min(pending, gen.b - cached);
          if (room > 0) {
            total += static_cast<double>(room) * cost;
            cached += room;
            pending -= room;
          }
        }
      }
    }
    costs[static_cast<std::size_t>(i)] = total / static_cast<double>(horizon);
  });
  return summarize_costs(costs);
}

}  // namespace procache
