#include "procache/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "procache/errors.hpp"

namespace procache {

ThresholdTable::ThresholdTable(int k_max, double c_max_mw, double init_value)
    : k_max_(k_max), c_max_mw_(c_max_mw) {
  if (k_max < 1) throw config_error("threshold table needs k_max >= 1");
  if (c_max_mw <= 0.0) throw config_error("threshold table needs c_max > 0");
  values_.assign(static_cast<std::size_t>(k_max) * (k_max + 1) / 2, init_value);
}

std::size_t ThresholdTable::index(int l, int big_l) const {
  if (big_l < 1 || big_l > k_max_ || l < 0 || l >= big_l)
    throw invariant_error("threshold pair out of range: l=" + std::to_string(l) +
                          " L=" + std::to_string(big_l));
  return static_cast<std::size_t>(big_l) * (big_l - 1) / 2 + static_cast<std::size_t>(l);
}

bool ThresholdTable::is_feasible(double tol) const {
  for (int big_l = 1; big_l <= k_max_; ++big_l) {
    for (int l = 0; l < big_l; ++l) {
      const double v = at(l, big_l);
      if (v < -tol || v > c_max_mw_ + tol) return false;
      if (l > 0 && at(l - 1, big_l) < v - tol) return false;          // non-increasing in l
      if (big_l > l + 1 && at(l, big_l - 1) > v + tol) return false;  // non-decreasing in L
    }
  }
  return true;
}

void ThresholdTable::require_feasible(const char* where) const {
  if (!is_feasible(1e-12))
    throw invariant_error(std::string("threshold table infeasible after ") + where);
}

ThresholdTable project_monotone(ThresholdTable table) {
  const int k = table.k_max();
  const double cap = table.c_max_mw();
  for (int big_l = 1; big_l <= k; ++big_l)
    for (int l = 0; l < big_l; ++l)
      table.set(l, big_l, std::clamp(table.at(l, big_l), 0.0, cap));
  // Two rounds of the sweep pair; the second is a no-op safeguard since the
  // running-min pass preserves monotonicity in L.
  for (int round = 0; round < 2; ++round) {
    for (int l = 0; l < k; ++l) {
      double running = 0.0;
      for (int big_l = l + 1; big_l <= k; ++big_l) {
        running = (big_l == l + 1) ? table.at(l, big_l) : std::max(running, table.at(l, big_l));
        table.set(l, big_l, running);
      }
    }
    for (int big_l = 1; big_l <= k; ++big_l) {
      double running = table.at(0, big_l);
      for (int l = 1; l < big_l; ++l) {
        running = std::min(running, table.at(l, big_l));
        table.set(l, big_l, running);
      }
    }
  }
  table.require_feasible("monotone projection");
  return table;
}

std::string ThresholdTable::to_csv() const {
  std::string out = "l,L,threshold_mw\n";
  char buf[64];
  for (int l = 0; l < k_max_; ++l) {
    for (int big_l = l + 1; big_l <= k_max_; ++big_l) {
      out += std::to_string(l);
      out += ',';
      out += std::to_string(big_l);
      out += ',';
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), at(l, big_l));
      out.append(buf, end);
      out += '\n';
    }
  }
  return out;
}

ThresholdTable ThresholdTable::from_csv(std::string_view text, double c_max_mw) {
  struct Row {
    int l, big_l;
    double v;
  };
  std::vector<Row> rows;
  std::size_t pos = 0;
  bool header = true;
  int k_max = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != "l,L,threshold_mw") throw config_error("bad threshold CSV header");
      header = false;
      continue;
    }
    Row r{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto take = [&](auto& value) {
      auto res = std::from_chars(p, end, value);
      if (res.ec != std::errc{}) throw config_error("bad threshold CSV field");
      p = res.ptr;
      if (p < end && *p == ',') ++p;
    };
    take(r.l);
    take(r.big_l);
    take(r.v);
    rows.push_back(r);
    k_max = std::max(k_max, r.big_l);
  }
  if (rows.empty()) throw config_error("empty threshold CSV");
  ThresholdTable table(k_max, c_max_mw);
  std::size_t filled = 0;
  for (const Row& r : rows) {
    table.set(r.l, r.big_l, r.v);
    ++filled;
  }
  if (filled != table.param_count())
    throw config_error("threshold CSV does not cover every (l, L) pair");
  return table;
}

CacheAction select_action_liso(const ThresholdTable& table, const SystemState& state,
                               double cost_mw, std::int64_t b) {
  CacheAction action;
  if (b == 0) return action;
  LifetimeMultiset out = state.out;
  LifetimeMultiset cache = state.cache;
  // Each swap strictly increases the cache's total lifetime, which is capped
  // by b * k_max, so the loop is finite; the counter guards against bugs.
  const std::int64_t limit =
      (state.out.size() + state.cache.size()) +
      (b == GenParams::unlimited_cache ? 0 : b * table.k_max());
  std::int64_t steps = 0;
  while (true) {
    const int big_l = out.max_lifetime();
    if (big_l == 0) break;
    const int l = (cache.size() >= b) ? cache.min_lifetime() : 0;
    if (big_l <= l) break;
    if (cost_mw > table.at(l, big_l)) break;
    out.remove(big_l);
    cache.add(big_l);
    action.downloads.add(big_l);
    if (l > 0) {
      cache.remove(l);
      out.add(l);
      action.evictions.add(l);
    }
    if (++steps > limit) throw invariant_error("swap loop exceeded its step bound");
  }
  return action;
}

CacheAction select_action_reactive(const SystemState& state, bool accessed) {
  return accessed ? forced_access_action(state) : CacheAction{};
}

CacheAction select_action_random(double q, const SystemState& state, RandomStream& rng,
                                 std::int64_t b) {
  CacheAction action;
  std::vector<int> order = state.out.to_sorted_list();
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  std::int64_t cached = state.cache.size();
  for (int lifetime : order) {
    if (cached >= b) break;
    if (rng.bernoulli(q)) {
      action.downloads.add(lifetime);
      ++cached;
    }
  }
  return action;
}

CacheAction policy_action(const PolicyKind& policy, const SystemState& state,
                          double cost_mw, std::int64_t b, RandomStream& policy_rng) {
  if (std::holds_alternative<LisoPolicy>(policy))
    return select_action_liso(std::get<LisoPolicy>(policy).table, state, cost_mw, b);
  if (std::holds_alternative<RandomPolicy>(policy))
    return select_action_random(std::get<RandomPolicy>(policy).q, state, policy_rng, b);
  return select_action_reactive(state, false);
}

std::string policy_name(const PolicyKind& policy) {
  if (std::holds_alternative<LisoPolicy>(policy)) return "liso";
  if (std::holds_alternative<RandomPolicy>(policy)) return "random";
  return "reactive";
}

}  // namespace procache
