#include "procache/exact_mdp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>

#include "procache/errors.hpp"

namespace procache {

namespace {

// Enumerates every fresh-content batch (multiset over the lifetime support,
// size 1..m_max) with its probability.
void enumerate_batches_rec(const GenParams& gen, std::size_t support_idx, int remaining,
                           double prob, LifetimeMultiset& batch,
                           std::vector<std::pair<LifetimeMultiset, double>>& out) {
  if (support_idx + 1 == gen.lifetime_support.size()) {
    LifetimeMultiset full = batch;
    if (remaining > 0) full.add(gen.lifetime_support[support_idx], remaining);
    out.emplace_back(std::move(full), prob * std::pow(1.0 / gen.lifetime_support.size(),
                                                      remaining));
    return;
  }
  // Multinomial split: choose how many of `remaining` land on this lifetime.
  double binom = 1.0;  // C(remaining, c) accumulated incrementally
  const double p_support = 1.0 / static_cast<double>(gen.lifetime_support.size());
  for (int c = 0; c <= remaining; ++c) {
    if (c > 0) {
      binom *= static_cast<double>(remaining - c + 1) / static_cast<double>(c);
      batch.add(gen.lifetime_support[support_idx], 1);
    }
    enumerate_batches_rec(gen, support_idx + 1, remaining - c,
                          prob * binom * std::pow(p_support, c), batch, out);
  }
  if (remaining > 0) batch.remove(gen.lifetime_support[support_idx], remaining);
}

std::vector<std::pair<LifetimeMultiset, double>> enumerate_batches(const GenParams& gen) {
  std::vector<std::pair<LifetimeMultiset, double>> out;
  for (int m = 1; m <= gen.m_max; ++m) {
    LifetimeMultiset batch;
    enumerate_batches_rec(gen, 0, m, 1.0 / gen.m_max, batch, out);
  }
  return out;
}

double access_probability(const GenParams& gen, int elapsed) {
  return (elapsed == gen.d_max - 1) ? 1.0 : gen.p_a;
}

// The a-swap structured action: pair the a longest lifetimes outside the
// cache with free slots first, then the shortest lifetimes inside.
CacheAction structured_action(const MdpState& state, const GenParams& gen, int count) {
  CacheAction action;
  std::vector<int> outs = state.out.to_sorted_list();
  std::vector<int> ins = state.cache.to_sorted_list();
  const std::int64_t free_slots = gen.b - state.cache.size();
  for (int i = 0; i < count; ++i) {
    action.downloads.add(outs[outs.size() - 1 - static_cast<std::size_t>(i)]);
    if (i >= free_slots)
      action.evictions.add(ins[static_cast<std::size_t>(i - free_slots)]);
  }
  return action;
}

// Largest admissible swap count: each pair must strictly improve (L > l).
int max_swap_count(const MdpState& state, const GenParams& gen) {
  std::vector<int> outs = state.out.to_sorted_list();
  std::vector<int> ins = state.cache.to_sorted_list();
  const std::int64_t free_slots = gen.b - state.cache.size();
  int count = 0;
  while (count < static_cast<int>(outs.size()) && count < gen.b) {
    const int big_l = outs[outs.size() - 1 - static_cast<std::size_t>(count)];
    const int l =
        (count < free_slots) ? 0 : ins[static_cast<std::size_t>(count - free_slots)];
    if (big_l <= l) break;
    ++count;
  }
  return count;
}

void validate_small_instance(const GenParams& gen) {
  gen.validate();
  if (!gen.truncate_access)
    throw config_error("exact solver requires truncated access (finite elapsed range)");
  if (gen.cache_unlimited())
    throw config_error("exact solver requires a finite cache capacity");
}

struct Successor {
  MdpState state;
  double prob;
};

// Successors of (state, action): apply, decrement, union each possible fresh
// batch, branch on the next access draw.
std::vector<Successor> successors(const MdpState& state, const CacheAction& action,
                                  const GenParams& gen,
                                  const std::vector<std::pair<LifetimeMultiset, double>>& batches) {
  SystemState sys{state.out, state.cache, state.elapsed, 0};
  const bool accessed = state.elapsed == 0;
  sys = apply_action(sys, action, accessed, gen.b);
  sys.out.decrement_expire();
  sys.cache.decrement_expire();
  const double p_acc = access_probability(gen, state.elapsed);
  std::vector<Successor> out;
  out.reserve(batches.size() * 2);
  for (const auto& [batch, p_batch] : batches) {
    MdpState next;
    next.cache = sys.cache;
    next.out = sys.out;
    next.out.unite(batch);
    if (p_acc > 0.0) {
      next.elapsed = 0;
      out.push_back({next, p_batch * p_acc});
    }
    if (p_acc < 1.0) {
      next.elapsed = state.elapsed + 1;
      out.push_back({next, p_batch * (1.0 - p_acc)});
    }
  }
  return out;
}

std::vector<CacheAction> state_actions(const MdpState& state, const GenParams& gen) {
  std::vector<CacheAction> actions;
  if (state.elapsed == 0) {
    actions.push_back(CacheAction{state.out, state.cache});
  } else {
    const int top = max_swap_count(state, gen);
    for (int a = 0; a <= top; ++a) actions.push_back(structured_action(state, gen, a));
  }
  return actions;
}

}  // namespace

ChannelLevels ChannelLevels::from_distribution(const CostDistribution& dist, int n_levels) {
  if (n_levels < 1) throw config_error("need at least one channel level");
  const auto& s = dist.samples();
  ChannelLevels levels;
  levels.cost_mw.resize(static_cast<std::size_t>(n_levels));
  levels.prob.assign(static_cast<std::size_t>(n_levels), 1.0 / n_levels);
  for (int j = 0; j < n_levels; ++j) {
    const std::size_t lo = s.size() * static_cast<std::size_t>(j) / static_cast<std::size_t>(n_levels);
    std::size_t hi = s.size() * (static_cast<std::size_t>(j) + 1) / static_cast<std::size_t>(n_levels);
    if (hi == lo) hi = lo + 1;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += s[i];
    levels.cost_mw[static_cast<std::size_t>(j)] = sum / static_cast<double>(hi - lo);
  }
  return levels;
}

void ChannelLevels::validate() const {
  if (cost_mw.empty() || cost_mw.size() != prob.size())
    throw config_error("channel levels and probabilities must be non-empty and aligned");
  double total = 0.0;
  for (double p : prob) {
    if (p < 0.0) throw config_error("channel level probabilities must be >= 0");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw config_error("channel level probabilities must sum to 1");
}

double ChannelLevels::mean() const {
  double m = 0.0;
  for (std::size_t j = 0; j < cost_mw.size(); ++j) m += prob[j] * cost_mw[j];
  return m;
}

std::vector<MdpState> enumerate_states(const GenParams& gen, std::size_t max_states) {
  validate_small_instance(gen);
  const auto batches = enumerate_batches(gen);
  std::map<MdpState, int> seen;
  std::deque<MdpState> frontier;
  const MdpState initial{};  // empty feed, empty cache, access assumed at t = 0
  seen.emplace(initial, 0);
  frontier.push_back(initial);
  while (!frontier.empty()) {
    const MdpState state = frontier.front();
    frontier.pop_front();
    for (const CacheAction& action : state_actions(state, gen)) {
      for (const Successor& succ : successors(state, action, gen, batches)) {
        if (seen.emplace(succ.state, 0).second) {
          if (seen.size() > max_states)
            throw config_error("state enumeration exceeded the configured bound of " +
                               std::to_string(max_states) + " states");
          frontier.push_back(succ.state);
        }
      }
    }
  }
  std::vector<MdpState> states;
  states.reserve(seen.size());
  for (const auto& [state, idx] : seen) states.push_back(state);
  return states;  // std::map iteration yields sorted order
}

MdpInstance build_mdp(const GenParams& gen, const ChannelLevels& levels,
                      std::size_t max_states) {
  levels.validate();
  MdpInstance mdp;
  mdp.gen = gen;
  mdp.levels = levels;
  mdp.states = enumerate_states(gen, max_states);
  std::map<MdpState, int> index;
  for (std::size_t i = 0; i < mdp.states.size(); ++i)
    index.emplace(mdp.states[i], static_cast<int>(i));

  const auto batches = enumerate_batches(gen);
  mdp.kernel.resize(mdp.states.size());
  mdp.action_downloads.resize(mdp.states.size());
  for (std::size_t si = 0; si < mdp.states.size(); ++si) {
    const MdpState& state = mdp.states[si];
    for (const CacheAction& action : state_actions(state, gen)) {
      std::map<int, double> row;
      for (const Successor& succ : successors(state, action, gen, batches))
        row[index.at(succ.state)] += succ.prob;
      double total = 0.0;
      for (const auto& [next, p] : row) total += p;
      if (std::fabs(total - 1.0) > 1e-12)
        throw invariant_error("transition row does not sum to 1");
      mdp.kernel[si].emplace_back(row.begin(), row.end());
      mdp.action_downloads[si].push_back(static_cast<int>(action.download_count()));
    }
  }

  // Reference state: the smallest recurrent access-slot state.
  mdp.ref_state = -1;
  for (std::size_t si = 0; si < mdp.states.size(); ++si) {
    const MdpState& s = mdp.states[si];
    if (s.elapsed == 0 && s.cache.empty() && !s.out.empty()) {
      mdp.ref_state = static_cast<int>(si);
      break;
    }
  }
  if (mdp.ref_state < 0) mdp.ref_state = 0;
  return mdp;
}

SolveResult relative_value_iteration(const MdpInstance& mdp, double tol,
                                     int max_iterations) {
  const std::size_t n = mdp.n_states();
  if (n == 0) throw config_error("cannot solve an empty instance");
  const std::size_t n_levels = mdp.levels.cost_mw.size();
  std::vector<double> v(n, 0.0), tv(n, 0.0);
  std::vector<double> q;  // continuation value per action, reused
  SolveResult result;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    for (std::size_t si = 0; si < n; ++si) {
      const int n_actions = mdp.n_actions(static_cast<int>(si));
      q.assign(static_cast<std::size_t>(n_actions), 0.0);
      for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (const auto& [next, p] : mdp.kernel[si][static_cast<std::size_t>(a)])
          sum += p * v[static_cast<std::size_t>(next)];
        q[static_cast<std::size_t>(a)] = sum;
      }
      double expect = 0.0;
      for (std::size_t j = 0; j < n_levels; ++j) {
        const double c = mdp.levels.cost_mw[j];
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < n_actions; ++a) {
          const double val =
              c * mdp.action_downloads[si][static_cast<std::size_t>(a)] +
              q[static_cast<std::size_t>(a)];
          if (val < best) best = val;
        }
        expect += mdp.levels.prob[j] * best;
      }
      tv[si] = expect;
    }
    double span_min = std::numeric_limits<double>::infinity();
    double span_max = -std::numeric_limits<double>::infinity();
    for (std::size_t si = 0; si < n; ++si) {
      const double d = tv[si] - v[si];
      span_min = std::min(span_min, d);
      span_max = std::max(span_max, d);
    }
    const double offset = tv[static_cast<std::size_t>(mdp.ref_state)];
    for (std::size_t si = 0; si < n; ++si) v[si] = tv[si] - offset;
    if (span_max - span_min <= tol) {
      result.rho_star = 0.5 * (span_max + span_min);
      result.residual = 0.5 * (span_max - span_min);
      result.iterations = iter;
      result.values = v;
      // Greedy policy; ties resolve to the smaller swap count.
      result.policy.resize(n);
      for (std::size_t si = 0; si < n; ++si) {
        const int n_actions = mdp.n_actions(static_cast<int>(si));
        result.policy[si].resize(n_levels, 0);
        for (std::size_t j = 0; j < n_levels; ++j) {
          const double c = mdp.levels.cost_mw[j];
          double best = std::numeric_limits<double>::infinity();
          int best_a = 0;
          for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (const auto& [next, p] : mdp.kernel[si][static_cast<std::size_t>(a)])
              sum += p * v[static_cast<std::size_t>(next)];
            const double val =
                c * mdp.action_downloads[si][static_cast<std::size_t>(a)] + sum;
            if (val < best - 1e-15) {
              best = val;
              best_a = a;
            }
          }
          result.policy[si][j] = best_a;
        }
      }
      return result;
    }
  }
  throw invariant_error("relative value iteration did not converge within " +
                        std::to_string(max_iterations) + " iterations");
}

StructureReport check_threshold_structure(const SolveResult& result,
                                          const MdpInstance& mdp) {
  StructureReport report;
  // Level indices in cost-ascending order.
  std::vector<std::size_t> order(mdp.levels.cost_mw.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mdp.levels.cost_mw[a] < mdp.levels.cost_mw[b];
  });
  for (std::size_t si = 0; si < mdp.n_states(); ++si) {
    if (mdp.states[si].elapsed == 0) continue;
    ++report.n_states_checked;
    const auto& chosen = result.policy[si];
    for (std::size_t j = 1; j < order.size(); ++j) {
      const int lo = chosen[order[j - 1]];
      const int hi = chosen[order[j]];
      if (hi > lo)
        report.violations.push_back({static_cast<int>(si), static_cast<int>(order[j - 1]),
                                     static_cast<int>(order[j]), lo, hi});
    }
  }
  return report;
}

std::string solve_dump_csv(const MdpInstance& mdp, const SolveResult& result) {
  std::vector<std::size_t> order(mdp.levels.cost_mw.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mdp.levels.cost_mw[a] < mdp.levels.cost_mw[b];
  });
  std::string out = "out,cache,elapsed,value";
  char buf[64];
  for (std::size_t j : order) {
    out += ",action_at_";
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), mdp.levels.cost_mw[j]);
    out.append(buf, end);
    out += "mw";
  }
  out += '\n';
  for (std::size_t si = 0; si < mdp.n_states(); ++si) {
    const MdpState& s = mdp.states[si];
    out += s.out.to_string();
    out += ',';
    out += s.cache.to_string();
    out += ',';
    out += std::to_string(s.elapsed);
    out += ',';
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), result.values[si]);
    out.append(buf, end);
    for (std::size_t j : order) {
      out += ',';
      out += std::to_string(result.policy[si][j]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace procache
