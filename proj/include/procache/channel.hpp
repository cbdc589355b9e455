#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "procache/rng.hpp"

namespace procache {

// Urban-micro NLOS link budget parameters and the induced per-download
// energy cost. Distances in meters, powers in dBm, costs in mW.
struct ChannelParams {
  double fc_ghz = 2.5;              // center frequency
  double d_min_m = 50.0;            // BS-UE distance range
  double d_max_m = 250.0;
  double sigma_db = 4.0;            // log-normal shadowing std-dev
  double bandwidth_hz = 10e6;       // W
  double noise_psd_dbm_hz = -174.0; // kT
  double noise_figure_db = 5.0;     // NF
  double g_tx_dbi = 17.0;
  double g_rx_dbi = 0.0;
  double spectral_eff = 2.0;        // R/W in bps/Hz
  double shadow_clip_sigmas = 3.0;  // shadowing truncated to +/- this many sigma
  double c_max_mw = 0.0;            // cost cap; <= 0 selects the derived default

  void validate() const;  // throws config_error

  // Cost cap actually in force: c_max_mw if set, otherwise the cost at the
  // far edge of the cell with the largest admitted shadowing excursion.
  double resolved_c_max_mw() const;
};

// Deterministic NLOS path loss (shadowing excluded).
double path_loss_db(double d_m, double fc_ghz);

// Receiver noise power over the configured bandwidth.
double noise_power_dbm(const ChannelParams& params);

// Received power required to sustain the configured spectral efficiency.
double required_signal_dbm(const ChannelParams& params);

inline double dbm_to_mw(double dbm) { return std::exp(dbm * 0.23025850929940457); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// Transmit power needed at distance d with the given shadowing realization,
// clamped to the cost cap. This is the deterministic map behind sample_cost.
double cost_at_mw(const ChannelParams& params, double d_m, double shadow_db);

// Precomputed sampler for the per-slot download cost: d uniform over the
// distance range, shadowing truncated normal.
class CostSampler {
 public:
  explicit CostSampler(const ChannelParams& params);
  double operator()(RandomStream& rng) const;

 private:
  double d_min_, d_max_;
  double sigma_db_, clip_sigmas_;
  double fixed_dbm_;  // required signal - antenna gains + distance-free path loss
  double cap_mw_;
};

inline double sample_cost(RandomStream& rng, const ChannelParams& params) {
  return CostSampler(params)(rng);
}

// Empirical cost distribution used by the bound recursions: a sorted sample
// with prefix sums so censored means are cheap.
class CostDistribution {
 public:
  explicit CostDistribution(std::vector<double> samples);

  // Latin-hypercube sample of the cost model: distance and shadowing strata
  // are paired by a seeded shuffle. Keeps the moment estimates driving the
  // bound DPs well below the acceptance tolerances at moderate n.
  static CostDistribution build(const ChannelParams& params, std::size_t n,
                                std::uint64_t seed);

  std::size_t size() const { return samples_.size(); }
  const std::vector<double>& samples() const { return samples_; }
  double min() const { return samples_.front(); }
  double max() const { return samples_.back(); }
  // p-quantile by nearest-rank on the sorted sample, p in [0, 1].
  double quantile(double p) const;

  friend double expected_cost(const CostDistribution& dist);
  friend double expected_min_cost(double x, const CostDistribution& dist);

 private:
  std::vector<double> samples_;  // ascending
  std::vector<double> prefix_;   // prefix_[i] = sum of samples_[0..i)
  double mean_ = 0.0;
};

// Sample mean of the cost distribution.
double expected_cost(const CostDistribution& dist);

// E[min(C, x)] over the sample; monotone, concave and 1-Lipschitz in x.
double expected_min_cost(double x, const CostDistribution& dist);

// Inverse standard normal CDF (Acklam's rational approximation plus one
// Halley refinement; ~1e-15 accuracy away from the extreme tails).
double normal_quantile(double p);

}  // namespace procache
