#pragma once

// Closed-form profit and cost model for choosing between inventory-based and
// bridge-based cross-chain arbitrage.
//
// Setting: a CPMM with reserves (R^A, R^B) on the first chain, a perfectly
// liquid market on the second chain whose A-per-B rate Q_t follows a GBM with
// drift mu and volatility sigma. Opportunities of relative size p = Q/P arrive
// at Poisson rate lambda; bridging takes time delta. Token A is the numeraire.
// All functions are pure.

#include <optional>

namespace xarb::model {

struct ModelParams {
  double p = 2.0;          // relative price Q/P
  double mu = 0.0;         // drift of the token-B price, per unit time
  double sigma = 0.0;      // volatility, per sqrt(unit time)
  double lambda = 1.0;     // opportunity arrival rate
  double delta = 0.0;      // bridging time
  double reserve_a = 1.0;  // R^A of the first CPMM
  double reserve_b = 1.0;  // R^B of the first CPMM
  double k = 0.0;          // reserve-evolution exponent, R^B_t = (Q0/Q_t)^k R^B_0
  double phi = 1.0;        // liquidity multiple of the second CPMM
  double q0 = 1.0;         // initial exchange rate
};

/// Throws DomainError naming the first field that breaks the basic invariants
/// (positive p, reserves, lambda, phi, q0; non-negative sigma, delta; k in [0,1]).
void validate(const ModelParams& params);

/// (sqrt(p) - 1)^2 * reserve_a. Requires p >= 1, reserve_a > 0.
double frictionless_profit(double p, double reserve_a);

struct TradeSizes {
  double sell_a = 0.0;  // token A sold into the CPMM, frictionless
  double buy_b = 0.0;   // token B received, frictionless
  /// Sell size adjusted for expected depreciation while bridging; empty when
  /// the opportunity vanished (sqrt(p) e^{mu delta / 2} < 1).
  std::optional<double> adjusted_sell_a;
  bool opportunity_vanished = false;
};

TradeSizes optimal_trade_sizes(const ModelParams& params);

/// Marginal cost of non-instantaneous bridging per unit of CPMM liquidity:
/// (sqrt(p) - 1)^2 - (sqrt(p) e^{mu delta / 2} - 1)^2, with the second term
/// taken as zero once the opportunity vanished (sqrt(p) e^{mu delta / 2} < 1).
double bridging_cost(double p, double mu, double delta);

/// Expected bridged profit (sqrt(p) e^{mu delta / 2} - 1)^2 R^A, or zero when
/// the opportunity vanished.
double expected_bridge_profit(const ModelParams& params);

/// -mu / lambda.
double inventory_cost_per_unit(double mu, double lambda);

struct InventoryCost {
  double cost = 0.0;                      // C(I), token A
  double expected_inventory_value = 0.0;  // E_0[Q_tau I_tau], token A
};

/// Expected inventory cost for reserves R^B_t = (Q0/Q_t)^k R^B_0, with the
/// first pool aligned to the outside market at time 0 (R^A_0 = Q0 R^B_0).
/// Throws DomainError when lambda + (1-k)(k sigma^2 / 2 - mu) <= 0.
InventoryCost inventory_cost_total(const ModelParams& params);

/// Per-unit inventory cost when the second market is a CPMM with phi times
/// the first pool's reserves, using the quadratic trading-cost approximation.
/// Reduces to -mu/lambda at k = 0.
double inventory_cost_bounded_liquidity(const ModelParams& params);

enum class Strategy { Inventory, Bridge };

struct StrategyDecision {
  Strategy choice = Strategy::Bridge;
  /// bridging_cost - inventory cost; positive means inventory is cheaper.
  double margin = 0.0;
  bool boundary = false;  // margin == 0 exactly; resolved to Bridge
};

/// Inventory iff (-mu/lambda)(1 - sqrt(1/p)) < C^BR strictly.
StrategyDecision decide_strategy(const ModelParams& params);

/// (-mu/lambda)(1 - sqrt(1/p)) - C^BR: inventory minus bridge cost.
double cost_difference(double p, double mu, double lambda, double delta);

/// Arrival rate above which inventory beats bridging. Requires p > 1, mu < 0,
/// delta > 0.
double lambda_threshold(double p, double mu, double delta);

/// Bridging time below which bridging beats inventory. Requires p > 1,
/// mu < 0, lambda > 0 and M = (sqrt(p)-1)^2 + (mu/lambda)(1 - 1/sqrt(p)) > 0.
double delta_threshold(double p, double mu, double lambda);

struct MuThreshold {
  double mu_hat = 0.0;
  /// False when cost_difference has one sign on [-lambda, 0); mu_hat is then
  /// the endpoint where the sign change (or zero) sits.
  bool interior = false;
  int iterations = 0;
};

/// Drift threshold on [-lambda, 0] found by bisection (tolerance 1e-10,
/// at most 200 iterations). Requires 1/lambda > delta * p.
MuThreshold mu_threshold(double p, double lambda, double delta);

/// Decision boundary in drift on [lo, hi] without requiring 1/lambda > delta * p:
/// the point where cost_difference stops being positive. Empty when both
/// ends are in the same regime.
std::optional<double> drift_boundary(double p, double lambda, double delta, double lo, double hi);

/// Bisection settings shared by threshold solvers.
inline constexpr double kBisectionTolerance = 1e-10;
inline constexpr int kBisectionMaxIterations = 200;

}  // namespace xarb::model
