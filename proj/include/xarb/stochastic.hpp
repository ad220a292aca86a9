#pragma once

// Monte Carlo checks for the closed-form model: GBM paths, Poisson arrivals,
// CPMM swaps and estimators of bridging profit and inventory cost.
//
// Randomness: every path i draws from Xoshiro256pp::for_stream(seed, i) and
// normals come from boost::random::normal_distribution (ziggurat). Paths are
// reduced in fixed blocks of kBlockPaths in block order, so results are
// bit-identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "xarb/model.hpp"

namespace xarb::stochastic {

inline constexpr std::size_t kBlockPaths = 4096;

struct GbmPath {
  double q0 = 1.0;
  std::vector<double> times;
  std::vector<double> values;
  std::uint64_t seed = 0;
};

/// Exact-distribution GBM on [0, horizon] with a grid of width `step`; the last
/// interval is shortened so the path ends at `horizon`.
GbmPath gbm_sample(double q0, double mu, double sigma, double horizon, double step,
                   std::uint64_t seed);

/// One Exp(lambda) draw from stream 0 of `seed`.
double poisson_arrival(double lambda, std::uint64_t seed);

struct CpmmPool {
  double reserve_a = 1.0;
  double reserve_b = 1.0;

  double invariant() const { return reserve_a * reserve_b; }
  double price() const { return reserve_a / reserve_b; }  // token A per token B
};

/// Sells amount_in_a of token A into the pool; returns token B received,
/// R^B x / (R^A + x), and updates the reserves.
double cpmm_swap(CpmmPool& pool, double amount_in_a);

struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n_paths = 0;
};

/// Realized profit of the delta-adjusted trade: sell (sqrt(p) e^{mu delta/2} - 1) R^A
/// of token A into the first pool (price R^A/R^B, outside rate p times that),
/// bridge the proceeds and sell them at Q_{tau+delta} without impact.
/// Returns zero profit on every path when the opportunity vanished.
Estimate estimate_bridge_profit(const model::ModelParams& params, std::size_t n_paths,
                                std::uint64_t seed, unsigned threads = 0);

struct InventoryOptions {
  /// Discretization step; 0 selects min(1/lambda, delta if > 0, 1) / 1000.
  double step = 0.0;
  /// Per-path cap on tau, as a multiple of 1/lambda.
  double tau_cap = 50.0;
  unsigned threads = 0;
};

struct InventoryEstimate {
  /// E[-sum (Q_i - Q_{i-1}) I_{i-1}] / E[Q_tau I_tau].
  Estimate cost_per_unit;
  /// Inventory cost plus the quadratic rebalancing cost
  /// sum Q_i (I_i - I_{i-1})^2 / (phi R^B_{i-1}), over the same denominator.
  Estimate bounded_cost_per_unit;
  double mean_inventory_value = 0.0;  // E[Q_tau I_tau] per path
  double step = 0.0;
};

/// Simulates tau ~ Exp(lambda), the GBM on [0, tau] and the inventory
/// I_t = (1 - sqrt(1/p)) (Q0/Q_t)^k R0^B with R0^B = R0^A / Q0.
InventoryEstimate estimate_inventory_cost(const model::ModelParams& params, std::size_t n_paths,
                                          std::uint64_t seed, const InventoryOptions& opts = {});

}  // namespace xarb::stochastic
