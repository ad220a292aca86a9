#include "xarb/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xarb/error.hpp"

namespace xarb::model {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

double inventory_fraction(double p) { return 1.0 - std::sqrt(1.0 / p); }

// lambda + (1-k)(k sigma^2 / 2 - mu): discount rate of the inventory value.
double inventory_denominator(const ModelParams& m) {
  return m.lambda + (1.0 - m.k) * (0.5 * m.k * m.sigma * m.sigma - m.mu);
}

// Bisection on the predicate cost_difference > 0 (bridging strictly cheaper).
// `lo` must satisfy it and `hi` must not.
MuThreshold bisect_boundary(double p, double lambda, double delta, double lo, double hi) {
  MuThreshold out;
  while (std::fabs(hi - lo) > kBisectionTolerance && out.iterations < kBisectionMaxIterations) {
    const double mid = 0.5 * (lo + hi);
    if (cost_difference(p, mid, lambda, delta) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++out.iterations;
  }
  out.mu_hat = 0.5 * (lo + hi);
  return out;
}

}  // namespace

void validate(const ModelParams& m) {
  require(std::isfinite(m.p) && m.p > 0.0, "p must be > 0");
  require(std::isfinite(m.mu), "mu must be finite");
  require(std::isfinite(m.sigma) && m.sigma >= 0.0, "sigma must be >= 0");
  require(std::isfinite(m.lambda) && m.lambda > 0.0, "lambda must be > 0");
  require(std::isfinite(m.delta) && m.delta >= 0.0, "delta must be >= 0");
  require(std::isfinite(m.reserve_a) && m.reserve_a > 0.0, "reserve_a must be > 0");
  require(std::isfinite(m.reserve_b) && m.reserve_b > 0.0, "reserve_b must be > 0");
  require(m.k >= 0.0 && m.k <= 1.0, "k must lie in [0, 1]");
  require(std::isfinite(m.phi) && m.phi > 0.0, "phi must be > 0");
  require(std::isfinite(m.q0) && m.q0 > 0.0, "q0 must be > 0");
}

double frictionless_profit(double p, double reserve_a) {
  require(p >= 1.0, "p must be >= 1 (got " + std::to_string(p) + ")");
  require(reserve_a > 0.0, "reserve_a must be > 0");
  const double gap = std::sqrt(p) - 1.0;
  return gap * gap * reserve_a;
}

TradeSizes optimal_trade_sizes(const ModelParams& m) {
  validate(m);
  require(m.p >= 1.0, "p must be >= 1 (got " + std::to_string(m.p) + ")");
  TradeSizes t;
  t.sell_a = (std::sqrt(m.p) - 1.0) * m.reserve_a;
  t.buy_b = inventory_fraction(m.p) * m.reserve_b;
  const double scale = std::sqrt(m.p) * std::exp(0.5 * m.mu * m.delta);
  if (scale < 1.0) {
    t.opportunity_vanished = true;
  } else {
    t.adjusted_sell_a = (scale - 1.0) * m.reserve_a;
  }
  return t;
}

double bridging_cost(double p, double mu, double delta) {
  require(p >= 1.0, "p must be >= 1 (got " + std::to_string(p) + ")");
  require(delta >= 0.0, "delta must be >= 0");
  const double frictionless = std::sqrt(p) - 1.0;
  // A vanished opportunity is not traded, so the delayed profit is zero.
  const double delayed = std::max(0.0, std::sqrt(p) * std::exp(0.5 * mu * delta) - 1.0);
  return frictionless * frictionless - delayed * delayed;
}

double expected_bridge_profit(const ModelParams& m) {
  const TradeSizes t = optimal_trade_sizes(m);
  if (t.opportunity_vanished) return 0.0;
  const double s = std::sqrt(m.p) * std::exp(0.5 * m.mu * m.delta) - 1.0;
  return s * s * m.reserve_a;
}

double inventory_cost_per_unit(double mu, double lambda) {
  require(lambda > 0.0, "lambda must be > 0");
  return -mu / lambda;
}

InventoryCost inventory_cost_total(const ModelParams& m) {
  validate(m);
  require(m.p >= 1.0, "p must be >= 1");
  const double denom = inventory_denominator(m);
  require(denom > 0.0, "degenerate denominator: lambda + (1-k)(k sigma^2/2 - mu) <= 0");
  const double scaled_reserve = inventory_fraction(m.p) * m.reserve_a / denom;
  return {-m.mu * scaled_reserve, m.lambda * scaled_reserve};
}

double inventory_cost_bounded_liquidity(const ModelParams& m) {
  validate(m);
  require(m.p >= 1.0, "p must be >= 1");
  require(inventory_denominator(m) > 0.0,
          "degenerate denominator: lambda + (1-k)(k sigma^2/2 - mu) <= 0");
  const double s2 = m.sigma * m.sigma;
  const double trading_denom =
      m.phi * m.lambda * m.q0 * m.q0 * (m.lambda / (m.k + 1.0) + m.mu - 0.5 * s2 * (m.k + 2.0));
  require(trading_denom != 0.0 && std::isfinite(trading_denom),
          "degenerate denominator: lambda/(k+1) + mu - sigma^2 (k+2)/2 == 0");
  // (1-k)/(1+k) * (lambda/(1-k) - mu + k sigma^2/2), written without the 1/(1-k).
  const double lead = (m.lambda + (1.0 - m.k) * (0.5 * m.k * s2 - m.mu)) / (1.0 + m.k);
  const double trading = lead * m.k * m.k * s2 / trading_denom;
  return trading + inventory_cost_per_unit(m.mu, m.lambda);
}

double cost_difference(double p, double mu, double lambda, double delta) {
  return inventory_cost_per_unit(mu, lambda) * inventory_fraction(p) -
         bridging_cost(p, mu, delta);
}

StrategyDecision decide_strategy(const ModelParams& m) {
  validate(m);
  require(m.p > 1.0, "p must be > 1 for an opportunity");
  StrategyDecision d;
  d.margin = -cost_difference(m.p, m.mu, m.lambda, m.delta);
  d.boundary = d.margin == 0.0;
  d.choice = d.margin > 0.0 ? Strategy::Inventory : Strategy::Bridge;
  return d;
}

double lambda_threshold(double p, double mu, double delta) {
  require(p > 1.0, "p must be > 1");
  require(mu < 0.0, "mu must be < 0");
  require(delta > 0.0, "delta must be > 0");
  const double cbr = bridging_cost(p, mu, delta);
  require(cbr > 0.0, "bridging cost is zero: lambda threshold undefined");
  return (-mu / cbr) * inventory_fraction(p);
}

double delta_threshold(double p, double mu, double lambda) {
  require(p > 1.0, "p must be > 1");
  require(mu < 0.0, "mu must be < 0");
  require(lambda > 0.0, "lambda must be > 0");
  const double root_p = std::sqrt(p);
  const double m = (root_p - 1.0) * (root_p - 1.0) + (mu / lambda) * (1.0 - 1.0 / root_p);
  require(m > 0.0, "no finite threshold: M <= 0");
  return -(2.0 / mu) * std::log(root_p / (1.0 + std::sqrt(m)));
}

MuThreshold mu_threshold(double p, double lambda, double delta) {
  require(p > 1.0, "p must be > 1");
  require(lambda > 0.0, "lambda must be > 0");
  require(delta >= 0.0, "delta must be >= 0");
  require(1.0 / lambda > delta * p, "hypothesis violated: need 1/lambda > delta * p");
  const double lo = -lambda;
  const double hi = 0.0;
  const bool bridge_lo = cost_difference(p, lo, lambda, delta) > 0.0;
  const bool bridge_hi = cost_difference(p, hi, lambda, delta) > 0.0;
  if (bridge_lo == bridge_hi) {
    // One regime over the whole interval.
    MuThreshold out;
    out.mu_hat = bridge_lo ? hi : lo;
    return out;
  }
  MuThreshold out = bridge_lo ? bisect_boundary(p, lambda, delta, lo, hi)
                              : bisect_boundary(p, lambda, delta, hi, lo);
  out.interior = out.mu_hat > lo + kBisectionTolerance && out.mu_hat < hi - kBisectionTolerance;
  return out;
}

std::optional<double> drift_boundary(double p, double lambda, double delta, double lo,
                                     double hi) {
  require(p > 1.0, "p must be > 1");
  require(lambda > 0.0, "lambda must be > 0");
  require(lo < hi, "empty drift interval");
  const bool bridge_lo = cost_difference(p, lo, lambda, delta) > 0.0;
  const bool bridge_hi = cost_difference(p, hi, lambda, delta) > 0.0;
  if (bridge_lo == bridge_hi) return std::nullopt;
  return bridge_lo ? bisect_boundary(p, lambda, delta, lo, hi).mu_hat
                   : bisect_boundary(p, lambda, delta, hi, lo).mu_hat;
}

}  // namespace xarb::model
