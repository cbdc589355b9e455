#include "procache/channel.hpp"

#include <algorithm>
#include <cmath>

#include "procache/errors.hpp"

namespace procache {

void ChannelParams::validate() const {
  if (fc_ghz <= 0.0) throw config_error("chan.fc_ghz must be > 0");
  if (d_min_m <= 0.0) throw config_error("chan.d_min_m must be > 0");
  if (!(d_min_m < d_max_m)) throw config_error("chan.d_min_m must be < chan.d_max_m");
  if (sigma_db < 0.0) throw config_error("chan.sigma_db must be >= 0");
  if (bandwidth_hz <= 0.0) throw config_error("chan.bandwidth_hz must be > 0");
  if (spectral_eff <= 0.0) throw config_error("chan.spectral_eff must be > 0");
  if (shadow_clip_sigmas <= 0.0) throw config_error("chan.shadow_clip_sigmas must be > 0");
  if (resolved_c_max_mw() <= 0.0) throw config_error("chan.c_max_mw must be > 0");
}

double path_loss_db(double d_m, double fc_ghz) {
  if (d_m <= 0.0 || fc_ghz <= 0.0)
    throw config_error("path loss requires positive distance and frequency");
  return 36.7 * std::log10(d_m) + 22.7 + 26.0 * std::log10(fc_ghz);
}

double noise_power_dbm(const ChannelParams& params) {
  return params.noise_psd_dbm_hz + 10.0 * std::log10(params.bandwidth_hz) +
         params.noise_figure_db;
}

double required_signal_dbm(const ChannelParams& params) {
  const double snr = std::pow(2.0, params.spectral_eff) - 1.0;
  return noise_power_dbm(params) + 10.0 * std::log10(snr);
}

double ChannelParams::resolved_c_max_mw() const {
  if (c_max_mw > 0.0) return c_max_mw;
  const double dbm = required_signal_dbm(*this) - g_tx_dbi - g_rx_dbi +
                     path_loss_db(d_max_m, fc_ghz) + shadow_clip_sigmas * sigma_db;
  return dbm_to_mw(dbm);
}

double cost_at_mw(const ChannelParams& params, double d_m, double shadow_db) {
  const double dbm = required_signal_dbm(params) - params.g_tx_dbi - params.g_rx_dbi +
                     path_loss_db(d_m, params.fc_ghz) + shadow_db;
  return std::min(dbm_to_mw(dbm), params.resolved_c_max_mw());
}

CostSampler::CostSampler(const ChannelParams& params)
    : d_min_(params.d_min_m),
      d_max_(params.d_max_m),
      sigma_db_(params.sigma_db),
      clip_sigmas_(params.shadow_clip_sigmas),
      cap_mw_(params.resolved_c_max_mw()) {
  params.validate();
  fixed_dbm_ = required_signal_dbm(params) - params.g_tx_dbi - params.g_rx_dbi +
               22.7 + 26.0 * std::log10(params.fc_ghz);
}

double CostSampler::operator()(RandomStream& rng) const {
  const double d = rng.uniform(d_min_, d_max_);
  const double shadow = rng.truncated_normal(sigma_db_, clip_sigmas_);
  const double dbm = fixed_dbm_ + 36.7 * std::log10(d) + shadow;
  return std::min(dbm_to_mw(dbm), cap_mw_);
}

CostDistribution::CostDistribution(std::vector<double> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw config_error("cost distribution must be non-empty");
  std::sort(samples_.begin(), samples_.end());
  prefix_.resize(samples_.size() + 1, 0.0);
  for (std::size_t i = 0; i < samples_.size(); ++i)
    prefix_[i + 1] = prefix_[i] + samples_[i];
  mean_ = prefix_.back() / static_cast<double>(samples_.size());
}

CostDistribution CostDistribution::build(const ChannelParams& params, std::size_t n,
                                         std::uint64_t seed) {
  if (n == 0) throw config_error("cost distribution sample size must be > 0");
  params.validate();
  RandomStream rng(seed);

  // Stratified shadowing quantiles of the truncated normal.
  const double clip = params.shadow_clip_sigmas;
  const double lo = 0.5 * std::erfc(clip / std::sqrt(2.0));  // Phi(-clip)
  const double hi = 1.0 - lo;
  std::vector<double> shadow(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + rng.uniform01()) / static_cast<double>(n);
    shadow[i] = params.sigma_db * normal_quantile(lo + (hi - lo) * u);
  }
  // Pair with stratified distances via a seeded shuffle.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
    std::swap(shadow[i], shadow[j]);
  }
  std::vector<double> costs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + rng.uniform01()) / static_cast<double>(n);
    const double d = params.d_min_m + (params.d_max_m - params.d_min_m) * u;
    costs[i] = cost_at_mw(params, d, shadow[i]);
  }
  return CostDistribution(std::move(costs));
}

double CostDistribution::quantile(double p) const {
  const auto n = samples_.size();
  auto idx = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * static_cast<double>(n));
  if (idx >= n) idx = n - 1;
  return samples_[idx];
}

double expected_cost(const CostDistribution& dist) { return dist.mean_; }

double expected_min_cost(double x, const CostDistribution& dist) {
  if (x < 0.0) throw invariant_error("expected_min_cost requires x >= 0");
  const auto& s = dist.samples_;
  const auto n = s.size();
  const auto k = static_cast<std::size_t>(
      std::lower_bound(s.begin(), s.end(), x) - s.begin());
  // Elements below x contribute themselves, the rest are censored at x.
  return (dist.prefix_[k] + static_cast<double>(n - k) * x) / static_cast<double>(n);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw config_error("normal_quantile requires p in (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.141592653589793238) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace procache
