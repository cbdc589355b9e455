#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "procache/channel.hpp"

using namespace procache;

TEST_CASE("path loss formula values") {
  CHECK(path_loss_db(10.0, 1.0) == doctest::Approx(59.4).epsilon(1e-12));
  // Frozen from an independent dB-arithmetic evaluation.
  CHECK(path_loss_db(100.0, 2.5) == doctest::Approx(106.4464402).epsilon(1e-5));
  CHECK(path_loss_db(250.0, 2.5) == doctest::Approx(121.0508385).epsilon(1e-5));
  CHECK_THROWS_AS(path_loss_db(0.0, 2.5), config_error);
  CHECK_THROWS_AS(path_loss_db(100.0, -1.0), config_error);
}

TEST_CASE("path loss is strictly increasing in distance and frequency") {
  RandomStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.uniform(1.0, 500.0);
    const double f = rng.uniform(0.5, 6.0);
    const double bump = rng.uniform(0.01, 10.0);
    CHECK(path_loss_db(d + bump, f) > path_loss_db(d, f));
    CHECK(path_loss_db(d, f + bump * 0.01) > path_loss_db(d, f));
  }
}

TEST_CASE("noise power sums the dB terms") {
  ChannelParams chan;  // 10 MHz, NF 5
  CHECK(noise_power_dbm(chan) == -99.0);
  chan.bandwidth_hz = 1.0;
  chan.noise_figure_db = 0.0;
  CHECK(noise_power_dbm(chan) == -174.0);
  chan.bandwidth_hz = 20e6;
  chan.noise_figure_db = 5.0;
  CHECK(noise_power_dbm(chan) == doctest::Approx(-95.9897).epsilon(1e-4));
}

TEST_CASE("required signal inverts the spectral efficiency") {
  ChannelParams chan;  // R/W = 2 -> SNR = 3
  CHECK(required_signal_dbm(chan) == doctest::Approx(-94.2287874528).epsilon(1e-9));
}

TEST_CASE("cost at the median distance with no shadowing") {
  ChannelParams chan;
  CHECK(cost_at_mw(chan, 100.0, 0.0) == doctest::Approx(0.33248).epsilon(0.003));
}

TEST_CASE("dBm/mW conversion round trips") {
  for (double dbm = -120.0; dbm <= 40.0; dbm += 1.37) {
    CHECK(mw_to_dbm(dbm_to_mw(dbm)) == doctest::Approx(dbm).epsilon(1e-12));
  }
}

TEST_CASE("sampled costs stay within (0, C_max]") {
  ChannelParams chan;
  const double cap = chan.resolved_c_max_mw();
  CHECK(cap == doctest::Approx(152.1266).epsilon(1e-3));
  CostSampler sampler(chan);
  RandomStream rng(17);
  for (int i = 0; i < 100'000; ++i) {
    const double c = sampler(rng);
    REQUIRE(c > 0.0);
    REQUIRE(c <= cap);
  }
}

TEST_CASE("empirical cost median matches the quadrature quantile oracle") {
  ChannelParams chan;
  CostSampler sampler(chan);
  RandomStream rng(31);
  const int n = 1'000'000;
  std::vector<double> costs(n);
  for (double& c : costs) c = sampler(rng);
  std::nth_element(costs.begin(), costs.begin() + n / 2, costs.end());
  const double med = costs[n / 2];
  const double expected = oracles::cost_median(chan);
  CHECK(std::fabs(med - expected) / expected < 0.01);
}

TEST_CASE("sampled cost distribution is seed invariant (Kolmogorov-Smirnov)") {
  ChannelParams chan;
  CostSampler sampler(chan);
  const int n = 100'000;
  auto draw = [&](std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<double> v(n);
    for (double& c : v) c = sampler(rng);
    std::sort(v.begin(), v.end());
    return v;
  };
  std::vector<double> a = draw(1001);
  std::vector<double> b = draw(2002);
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    ks = std::max(ks, std::fabs(static_cast<double>(i) - static_cast<double>(j)) / n);
  }
  CHECK(ks < 0.01);
}

TEST_CASE("expected_min_cost on hand-checkable samples") {
  CostDistribution dist(std::vector<double>{1.0, 3.0});
  CHECK(expected_min_cost(0.0, dist) == 0.0);
  CHECK(expected_min_cost(2.0, dist) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(expected_min_cost(10.0, dist) == expected_cost(dist));
  CHECK(expected_cost(dist) == doctest::Approx(2.0).epsilon(1e-15));
  CostDistribution single(std::vector<double>{0.7});
  CHECK(expected_cost(single) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK_THROWS_AS(CostDistribution(std::vector<double>{}), config_error);
}

TEST_CASE("expected_min_cost is monotone, concave and 1-Lipschitz") {
  ChannelParams chan;
  CostDistribution dist = CostDistribution::build(chan, 20'000, 77);
  const double cap = chan.resolved_c_max_mw();
  double prev = 0.0;
  double prev_slope = 2.0;
  const int grid = 400;
  for (int i = 1; i <= grid; ++i) {
    const double x0 = cap * (i - 1) / grid;
    const double x1 = cap * i / grid;
    const double y0 = expected_min_cost(x0, dist);
    const double y1 = expected_min_cost(x1, dist);
    REQUIRE(y1 >= y0 - 1e-12);                  // monotone
    REQUIRE(y1 - y0 <= (x1 - x0) + 1e-12);      // 1-Lipschitz
    const double slope = (y1 - y0) / (x1 - x0);
    REQUIRE(slope <= prev_slope + 1e-9);        // concave
    REQUIRE(y1 <= std::min(x1, expected_cost(dist)) + 1e-12);
    prev = y0;
    prev_slope = slope;
  }
  CHECK(prev >= 0.0);
}

TEST_CASE("cost distribution mean is stable across seeds and matches quadrature") {
  ChannelParams chan;
  CostDistribution d1 = CostDistribution::build(chan, 1'000'000, 4001);
  CostDistribution d2 = CostDistribution::build(chan, 1'000'000, 4002);
  const double m1 = expected_cost(d1);
  const double m2 = expected_cost(d2);
  CHECK(std::fabs(m1 - m2) / m1 < 0.005);
  const double exact = oracles::mean_cost(chan);
  CHECK(std::fabs(m1 - exact) / exact < 0.005);
}

TEST_CASE("normal quantile inverts the normal CDF") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  for (double p : {0.001, 0.01, 0.2, 0.35, 0.77, 0.99, 0.9999}) {
    const double x = normal_quantile(p);
    CHECK(oracles::phi_cdf(x) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), config_error);
}

TEST_CASE("channel parameter validation") {
  ChannelParams chan;
  chan.d_min_m = 300.0;
  CHECK_THROWS_AS(chan.validate(), config_error);
  chan = ChannelParams{};
  chan.sigma_db = -1.0;
  CHECK_THROWS_AS(chan.validate(), config_error);
  chan = ChannelParams{};
  chan.bandwidth_hz = 0.0;
  CHECK_THROWS_AS(chan.validate(), config_error);
}
