#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "procache/channel.hpp"
#include "procache/content_dynamics.hpp"
#include "procache/fdm.hpp"

namespace procache {

// Unlimited-cache bound. w[k] is the expected optimal delivery cost of one
// uncached content with k relevant slots left under memoryless access; the
// per-lifetime download threshold is threshold(k) = w[k-1].
struct LbucTable {
  std::vector<double> w;  // index k = 0..k_max

  int k_max() const { return static_cast<int>(w.size()) - 1; }
  double threshold(int k) const { return w[static_cast<std::size_t>(k) - 1]; }
  std::string to_csv() const;  // header "k,W_mw"
};

// Unlimited-cache bound under the truncated access process: w[k][e] where e
// is the elapsed time at the start of the slot.
struct LbucTruncatedTable {
  std::vector<std::vector<double>> w;  // [k][e], k = 0..k_max, e = 0..d_max-1
};

// Non-causal-knowledge bound. v[s] is the expected cost of delivering one
// item whose consuming access is s slots away; the download threshold at
// time-to-access s >= 1 is v[s-1], and the download is forced at s = 0.
struct LbnckTable {
  std::vector<double> v;  // index s = 0..d_max

  double threshold(int s) const { return v[static_cast<std::size_t>(s) - 1]; }
  std::string to_csv() const;  // header "s,V_mw"
};

// W(0) = 0, W(k) = p_a E[C] + (1 - p_a) E[min(C, W(k-1))].
LbucTable lbuc_table(double p_a, const CostDistribution& dist, int k_max);

LbucTruncatedTable lbuc_table_truncated(double p_a, int d_max,
                                        const CostDistribution& dist, int k_max);

// Per-slot rate of the unlimited-cache bound: E[M] * E_K[W(K)].
double lbuc_rate(const GenParams& gen, const LbucTable& table);
double lbuc_rate_truncated(const GenParams& gen, const LbucTruncatedTable& table);

// V(0) = E[C], V(s) = E[min(C, V(s-1))].
LbnckTable lbnck_table(const CostDistribution& dist, int d_max);

// Simulates the per-lifetime threshold policy with an unlimited cache and
// untruncated access; its rate reproduces lbuc_rate up to Monte Carlo noise.
EvalResult lbuc_simulate(const GenParams& gen, const ChannelParams& chan,
                         const LbucTable& table, int n_traj, std::int64_t horizon,
                         std::uint64_t base_seed, int threads = 0);

// Simulates the non-causal scheme: access times are revealed in advance,
// contents that expire before their access are dropped at generation, and
// pending must-deliver items are downloaded greedily whenever the cost
// clears the time-to-access threshold, holding at most b items until the
// access slot (where the rest are forced through at any cost).
EvalResult lbnck_simulate(const GenParams& gen, const ChannelParams& chan,
                          const LbnckTable& table, int n_traj, std::int64_t horizon,
                          std::uint64_t base_seed, int threads = 0);

}  // namespace procache
