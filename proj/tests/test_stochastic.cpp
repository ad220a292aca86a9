#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "xarb/error.hpp"
#include "xarb/model.hpp"
#include "xarb/rng.hpp"
#include "xarb/stochastic.hpp"

using namespace xarb;
using namespace xarb::stochastic;

TEST(Rng, ReferenceOutputs) {
  auto g = Xoshiro256pp::from_state(1, 2, 3, 4);
  EXPECT_EQ(g(), 41943041ULL);
  EXPECT_EQ(g(), 58720359ULL);
  SplitMix64 sm(0);
  EXPECT_EQ(sm.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(sm.next(), 0x6e789e6aa1b965f4ULL);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  auto a = Xoshiro256pp::for_stream(42, 7);
  auto b = Xoshiro256pp::for_stream(42, 7);
  auto c = Xoshiro256pp::for_stream(42, 8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
}

TEST(Gbm, DeterministicLimit) {
  const auto path = gbm_sample(2.0, -0.1, 0.0, 1.0, 0.01, 3);
  ASSERT_EQ(path.times.size(), path.values.size());
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    EXPECT_DOUBLE_EQ(path.values[i], 2.0 * std::exp(-0.1 * path.times[i]));
  }
  EXPECT_DOUBLE_EQ(path.times.back(), 1.0);
  const auto flat = gbm_sample(1.5, 0.0, 0.0, 2.0, 0.3, 1);
  for (double v : flat.values) EXPECT_EQ(v, 1.5);
  EXPECT_DOUBLE_EQ(flat.times.back(), 2.0);
}

TEST(Gbm, InvariantsAndErrors) {
  const auto path = gbm_sample(1.0, 0.05, 0.4, 3.0, 0.1, 9);
  for (std::size_t i = 1; i < path.times.size(); ++i) {
    EXPECT_GT(path.times[i], path.times[i - 1]);
    EXPECT_GT(path.values[i], 0.0);
  }
  EXPECT_THROW(gbm_sample(1.0, 0.0, 0.1, 1.0, 0.0, 1), DomainError);
  EXPECT_THROW(gbm_sample(0.0, 0.0, 0.1, 1.0, 0.1, 1), DomainError);
  EXPECT_THROW(gbm_sample(1.0, 0.0, 0.1, 0.05, 0.1, 1), DomainError);
}

TEST(Gbm, TerminalMean) {
  const double q0 = 1.0, mu = 0.1, sigma = 0.3, horizon = 1.0;
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = gbm_sample(q0, mu, sigma, horizon, 1.0, 1000 + i).values.back();
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, q0 * std::exp(mu * horizon), 3 * se);
}

TEST(Poisson, MeanAndCdf) {
  for (double lambda : {1.0, 4.0}) {
    double sum = 0.0;
    int below = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double t = poisson_arrival(lambda, static_cast<std::uint64_t>(i));
      sum += t;
      below += t <= 1.0 / lambda;
    }
    EXPECT_NEAR(sum / n * lambda, 1.0, 0.01);
    EXPECT_NEAR(static_cast<double>(below) / n, 1.0 - std::exp(-1.0), 0.002);
  }
  EXPECT_THROW(poisson_arrival(0.0, 1), DomainError);
}

TEST(Cpmm, SwapExamples) {
  CpmmPool pool{100.0, 100.0};
  EXPECT_EQ(cpmm_swap(pool, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(cpmm_swap(pool, 100.0), 50.0);
  EXPECT_DOUBLE_EQ(pool.reserve_a, 200.0);
  EXPECT_DOUBLE_EQ(pool.reserve_b, 50.0);
  EXPECT_THROW(cpmm_swap(pool, -1.0), DomainError);
}

TEST(Cpmm, OptimalTradeReproducesBuySize) {
  for (double p : {1.0, 1.5, 2.0, 4.0}) {
    model::ModelParams m;
    m.p = p;
    m.reserve_a = 1e7;
    m.reserve_b = 2e6;
    const auto t = model::optimal_trade_sizes(m);
    CpmmPool pool{m.reserve_a, m.reserve_b};
    EXPECT_NEAR(cpmm_swap(pool, t.sell_a), t.buy_b, 1e-9 * m.reserve_b);
    // After the trade the pool price matches the outside rate p * P0.
    EXPECT_NEAR(pool.price(), p * m.reserve_a / m.reserve_b, 1e-9 * p * 5.0);
  }
}

TEST(Cpmm, ProductPreserved) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CpmmPool pool{1e6, 3e5};
  const double k0 = pool.invariant();
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * pool.reserve_a * 0.01;
    const double before = pool.invariant();
    cpmm_swap(pool, x);
    EXPECT_NEAR(pool.invariant() / before, 1.0, 1e-12);
    // Swap back along the same curve to keep reserves bounded.
    const double y = u(rng) * pool.reserve_b * 0.01;
    const double a_out = pool.reserve_a * y / (pool.reserve_b + y);
    pool.reserve_b += y;
    pool.reserve_a -= a_out;
  }
  EXPECT_NEAR(pool.invariant() / k0, 1.0, 1e-9);
}

TEST(BridgeProfit, ZeroDelayHasZeroVariance) {
  model::ModelParams m;
  m.p = 2.0;
  m.mu = -0.0625;
  m.sigma = 0.3;
  m.delta = 0.0;
  m.reserve_a = 1e7;
  m.reserve_b = 1e7;
  const auto e = estimate_bridge_profit(m, 1000, 1);
  EXPECT_NEAR(e.mean, model::frictionless_profit(2.0, 1e7), 1e-6);
  EXPECT_LT(e.std_err, 1e-6);
}

TEST(BridgeProfit, DeterministicDepreciation) {
  model::ModelParams m;
  m.p = 2.0;
  m.mu = -0.0625;
  m.sigma = 0.0;
  m.delta = 1.0;
  m.reserve_a = 1e7;
  m.reserve_b = 1e7;
  const auto e = estimate_bridge_profit(m, 100, 1);
  EXPECT_NEAR(e.mean, 1374205.550285758, 1e-4);
  EXPECT_LT(e.std_err, 1e-6);
}

TEST(BridgeProfit, MatchesClosedForm) {
  model::ModelParams m;
  m.p = 2.0;
  m.mu = -0.0625;
  m.sigma = 0.2;
  m.delta = 1.0;
  m.reserve_a = 1e7;
  m.reserve_b = 1e7;
  const auto e = estimate_bridge_profit(m, 1000000, 2024);
  const double exact = model::expected_bridge_profit(m);
  EXPECT_NEAR(e.mean, exact, std::max(0.01 * exact, 3 * e.std_err));
  EXPECT_NEAR(e.mean, exact, 3 * e.std_err);
}

TEST(BridgeProfit, ThreadCountInvariance) {
  model::ModelParams m;
  m.p = 3.0;
  m.mu = -0.2;
  m.sigma = 0.2;
  m.delta = 0.5;
  const auto a = estimate_bridge_profit(m, 50000, 77, 1);
  const auto b = estimate_bridge_profit(m, 50000, 77, 4);
  const auto c = estimate_bridge_profit(m, 50000, 77, 16);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_err, c.std_err);
}

TEST(BridgeProfit, StdErrScaling) {
  model::ModelParams m;
  m.p = 2.0;
  m.mu = -0.0625;
  m.sigma = 0.3;
  m.delta = 1.0;
  const auto small = estimate_bridge_profit(m, 40000, 3);
  const auto large = estimate_bridge_profit(m, 160000, 3);
  EXPECT_NEAR(small.std_err / large.std_err, 2.0, 0.4);
}

namespace {

model::ModelParams inventory_params(double k, double sigma, double lambda) {
  model::ModelParams m;
  m.p = 2.0;
  m.mu = -0.0625;
  m.sigma = sigma;
  m.lambda = lambda;
  m.k = k;
  m.phi = 10.0;
  return m;
}

}  // namespace

TEST(InventoryCost, ZeroDrift) {
  auto m = inventory_params(0.5, 0.2, 1.0);
  m.mu = 0.0;
  InventoryOptions opts;
  opts.step = 1e-2;
  const auto e = estimate_inventory_cost(m, 20000, 5, opts);
  EXPECT_NEAR(e.cost_per_unit.mean, 0.0, 3 * e.cost_per_unit.std_err);
}

TEST(InventoryCost, MatchesPerUnitClosedForm) {
  for (double k : {0.0, 0.5}) {
    const auto m = inventory_params(k, 0.2, 1.0);
    const auto e = estimate_inventory_cost(m, 200000, 31);
    EXPECT_NEAR(e.cost_per_unit.mean / 0.0625, 1.0, 0.02) << "k=" << k;
    EXPECT_NEAR(e.cost_per_unit.mean, 0.0625, 3 * e.cost_per_unit.std_err + 1e-4) << "k=" << k;
  }
}

TEST(InventoryCost, DefaultStep) {
  auto m = inventory_params(0.5, 0.1, 4.0);
  InventoryOptions opts;
  const auto e = estimate_inventory_cost(m, 10, 1, opts);
  EXPECT_DOUBLE_EQ(e.step, 0.25 / 1000.0);
  m.lambda = 0.5;
  m.delta = 0.3;
  EXPECT_DOUBLE_EQ(estimate_inventory_cost(m, 10, 1, opts).step, 0.3 / 1000.0);
}

TEST(InventoryCost, GeneralExponentAgreesWithSpecialised) {
  // k = 0.5 takes the sqrt-tracking loop; k = 0.5 + 1e-12 the generic one.
  auto m = inventory_params(0.5, 0.3, 1.0);
  InventoryOptions opts;
  opts.step = 1e-2;
  const auto fast = estimate_inventory_cost(m, 5000, 8, opts);
  m.k = 0.5 + 1e-12;
  const auto slow = estimate_inventory_cost(m, 5000, 8, opts);
  EXPECT_NEAR(fast.cost_per_unit.mean, slow.cost_per_unit.mean, 1e-9);
  EXPECT_NEAR(fast.bounded_cost_per_unit.mean, slow.bounded_cost_per_unit.mean, 1e-9);
}

TEST(InventoryCost, ThreadCountInvariance) {
  const auto m = inventory_params(0.5, 0.3, 4.0);
  InventoryOptions opts;
  opts.step = 1e-3;
  opts.threads = 1;
  const auto a = estimate_inventory_cost(m, 20000, 12, opts);
  opts.threads = 16;
  const auto b = estimate_inventory_cost(m, 20000, 12, opts);
  EXPECT_EQ(a.cost_per_unit.mean, b.cost_per_unit.mean);
  EXPECT_EQ(a.bounded_cost_per_unit.std_err, b.bounded_cost_per_unit.std_err);
}

TEST(InventoryCost, QuadraticTermMatchesDerivedLimit) {
  // The quadratic rebalancing cost per unit converges to (1 - sqrt(1/p)) k^2 sigma^2 / (phi lambda).
  const auto m = inventory_params(0.5, 0.3, 1.0);
  const auto e = estimate_inventory_cost(m, 100000, 17);
  const double frac = 1.0 - std::sqrt(0.5);
  const double derived = 0.0625 + frac * 0.25 * 0.09 / (10.0 * 1.0);
  EXPECT_NEAR(e.bounded_cost_per_unit.mean, derived,
              3 * e.bounded_cost_per_unit.std_err + 0.005 * derived);
}
