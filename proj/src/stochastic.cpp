#include "xarb/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "xarb/error.hpp"
#include "xarb/parallel.hpp"
#include "xarb/rng.hpp"
#include "xarb/summation.hpp"

namespace xarb::stochastic {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

// Sums of per-path samples (x, y) and their second moments.
struct Moments {
  CompensatedSum x, y, xx, yy, xy;

  void add(double a, double b) {
    x.add(a);
    y.add(b);
    xx.add(a * a);
    yy.add(b * b);
    xy.add(a * b);
  }
  void add(const Moments& o) {
    x.add(o.x);
    y.add(o.y);
    xx.add(o.xx);
    yy.add(o.yy);
    xy.add(o.xy);
  }
};

Estimate mean_estimate(const Moments& m, std::size_t n) {
  Estimate e;
  e.n_paths = n;
  const double nn = static_cast<double>(n);
  e.mean = m.x.value() / nn;
  if (n > 1) {
    const double var = std::max(0.0, (m.xx.value() - nn * e.mean * e.mean) / (nn - 1.0));
    e.std_err = std::sqrt(var / nn);
  }
  return e;
}

// Ratio estimator sum(x)/sum(y) with a delta-method standard error.
Estimate ratio_estimate(const Moments& m, std::size_t n) {
  Estimate e;
  e.n_paths = n;
  const double nn = static_cast<double>(n);
  const double mx = m.x.value() / nn;
  const double my = m.y.value() / nn;
  e.mean = mx / my;
  if (n > 1) {
    const double sxx = (m.xx.value() - nn * mx * mx) / (nn - 1.0);
    const double syy = (m.yy.value() - nn * my * my) / (nn - 1.0);
    const double sxy = (m.xy.value() - nn * mx * my) / (nn - 1.0);
    const double r = e.mean;
    const double var = std::max(0.0, sxx - 2.0 * r * sxy + r * r * syy);
    e.std_err = std::sqrt(var / nn) / std::fabs(my);
  }
  return e;
}

template <typename PathFn>
std::vector<Moments> run_blocks(std::size_t n_paths, unsigned threads, PathFn&& path) {
  const std::size_t n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
  std::vector<Moments> blocks(n_blocks);
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    const std::size_t begin = b * kBlockPaths;
    const std::size_t end = std::min(n_paths, begin + kBlockPaths);
    for (std::size_t i = begin; i < end; ++i) path(i, blocks[b]);
  });
  return blocks;
}

}  // namespace

GbmPath gbm_sample(double q0, double mu, double sigma, double horizon, double step,
                   std::uint64_t seed) {
  require(q0 > 0.0, "q0 must be > 0");
  require(step > 0.0, "step must be > 0");
  require(sigma >= 0.0, "sigma must be >= 0");
  require(horizon >= step, "horizon must be >= step");
  GbmPath path;
  path.q0 = q0;
  path.seed = seed;
  const auto n_full = static_cast<std::size_t>(std::floor(horizon / step));
  path.times.reserve(n_full + 2);
  path.values.reserve(n_full + 2);
  path.times.push_back(0.0);
  path.values.push_back(q0);
  auto gen = Xoshiro256pp::for_stream(seed, 0);
  boost::random::normal_distribution<double> normal;
  double log_q = std::log(q0);
  auto advance = [&](double h) {
    log_q += (mu - 0.5 * sigma * sigma) * h + sigma * std::sqrt(h) * normal(gen);
  };
  for (std::size_t i = 1; i <= n_full; ++i) {
    advance(step);
    path.times.push_back(static_cast<double>(i) * step);
    // sigma = 0 keeps the deterministic path exact.
    path.values.push_back(sigma == 0.0 ? q0 * std::exp(mu * path.times.back()) : std::exp(log_q));
  }
  const double rem = horizon - path.times.back();
  if (rem > 1e-12 * horizon) {
    advance(rem);
    path.times.push_back(horizon);
    path.values.push_back(sigma == 0.0 ? q0 * std::exp(mu * horizon) : std::exp(log_q));
  }
  return path;
}

double poisson_arrival(double lambda, std::uint64_t seed) {
  require(lambda > 0.0, "lambda must be > 0");
  auto gen = Xoshiro256pp::for_stream(seed, 0);
  return gen.exponential(lambda);
}

double cpmm_swap(CpmmPool& pool, double amount_in_a) {
  require(amount_in_a >= 0.0, "amount_in_a must be >= 0");
  require(pool.reserve_a > 0.0 && pool.reserve_b > 0.0, "pool reserves must be > 0");
  const double out = pool.reserve_b * amount_in_a / (pool.reserve_a + amount_in_a);
  pool.reserve_a += amount_in_a;
  pool.reserve_b -= out;
  return out;
}

Estimate estimate_bridge_profit(const model::ModelParams& params, std::size_t n_paths,
                                std::uint64_t seed, unsigned threads) {
  require(n_paths >= 1, "n_paths must be >= 1");
  const model::TradeSizes sizes = model::optimal_trade_sizes(params);
  if (sizes.opportunity_vanished) return {0.0, 0.0, n_paths};
  const double sell = *sizes.adjusted_sell_a;
  const CpmmPool pool0{params.reserve_a, params.reserve_b};
  const double q_tau = params.p * pool0.price();
  const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * params.delta;
  const double vol = params.sigma * std::sqrt(params.delta);

  auto blocks = run_blocks(n_paths, threads, [&](std::size_t i, Moments& acc) {
    double growth = std::exp(params.mu * params.delta);
    if (vol > 0.0) {
      auto gen = Xoshiro256pp::for_stream(seed, i);
      boost::random::normal_distribution<double> normal;
      growth = std::exp(drift + vol * normal(gen));
    }
    CpmmPool pool = pool0;
    const double bought_b = cpmm_swap(pool, sell);
    const double profit = bought_b * q_tau * growth - sell;
    acc.add(profit, 0.0);
  });
  Moments total;
  for (const auto& b : blocks) total.add(b);
  return mean_estimate(total, n_paths);
}

InventoryEstimate estimate_inventory_cost(const model::ModelParams& params, std::size_t n_paths,
                                          std::uint64_t seed, const InventoryOptions& opts) {
  model::validate(params);
  require(params.p >= 1.0, "p must be >= 1");
  require(n_paths >= 1, "n_paths must be >= 1");
  require(opts.step >= 0.0, "step must be >= 0");
  require(opts.tau_cap > 0.0, "tau_cap must be > 0");

  const double lambda = params.lambda;
  double step = opts.step;
  if (step == 0.0) {
    double scale = std::min(1.0 / lambda, 1.0);
    if (params.delta > 0.0) scale = std::min(scale, params.delta);
    step = scale / 1000.0;
  }
  const double tau_max = opts.tau_cap / lambda;
  const double k = params.k;
  const double q0 = params.q0;
  const double rb0 = params.reserve_a / q0;
  const double frac = 1.0 - std::sqrt(1.0 / params.p);
  const double inv0 = frac * rb0;
  const double sigma = params.sigma;
  const double drift_rate = params.mu - 0.5 * sigma * sigma;
  const double phi = params.phi;

  // Per path: (inventory cost, inventory + quadratic cost) against Q_tau I_tau.
  struct PathMoments {
    Moments inv, bounded;
  };
  const std::size_t n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
  std::vector<PathMoments> blocks(n_blocks);

  parallel_for(n_blocks, opts.threads, [&](std::size_t b) {
    const std::size_t begin = b * kBlockPaths;
    const std::size_t end = std::min(n_paths, begin + kBlockPaths);
    boost::random::normal_distribution<double> normal;
    for (std::size_t i = begin; i < end; ++i) {
      auto gen = Xoshiro256pp::for_stream(seed, i);
      const double tau = std::min(gen.exponential(lambda), tau_max);
      normal.reset();
      double inv_cost = 0.0;
      double quad_cost = 0.0;
      double q = q0;
      double inv = inv0;
      if (k == 0.0) {
        // Constant inventory: the Ito sum telescopes to I (Q0 - Q_tau).
        q = q0 * std::exp(drift_rate * tau + sigma * std::sqrt(tau) * normal(gen));
        inv_cost = inv0 * (q0 - q);
      } else {
        const auto n_full = static_cast<std::size_t>(std::floor(tau / step));
        const double rem = tau - static_cast<double>(n_full) * step;
        const double full_drift = drift_rate * step;
        const double full_vol = sigma * std::sqrt(step);
        const double rem_drift = drift_rate * rem;
        const double rem_vol = sigma * std::sqrt(rem);
        CompensatedSum inv_sum;
        CompensatedSum quad_sum;
        if (k == 0.5) {
          // Track sqrt(Q) so each step costs one exp.
          double root_q = std::sqrt(q0);
          const double inv_scale = inv0 * root_q;  // I = inv_scale / sqrt(Q)
          const double rb_scale = rb0 * root_q;    // R^B = rb_scale / sqrt(Q)
          auto advance = [&](double drift, double vol) {
            const double next_root = root_q * std::exp(0.5 * (drift + vol * normal(gen)));
            const double next_q = next_root * next_root;
            const double next_inv = inv_scale / next_root;
            inv_sum.add((q - next_q) * inv);
            const double d_inv = next_inv - inv;
            quad_sum.add(next_q * d_inv * d_inv * root_q / (phi * rb_scale));
            root_q = next_root;
            q = next_q;
            inv = next_inv;
          };
          for (std::size_t s = 0; s < n_full; ++s) advance(full_drift, full_vol);
          if (rem > 0.0) advance(rem_drift, rem_vol);
        } else {
          double log_q = std::log(q0);
          auto advance = [&](double drift, double vol) {
            log_q += drift + vol * normal(gen);
            const double next_q = std::exp(log_q);
            const double next_inv = inv0 * std::pow(q0 / next_q, k);
            const double rb_prev = rb0 * std::pow(q0 / q, k);
            inv_sum.add((q - next_q) * inv);
            const double d_inv = next_inv - inv;
            quad_sum.add(next_q * d_inv * d_inv / (phi * rb_prev));
            q = next_q;
            inv = next_inv;
          };
          for (std::size_t s = 0; s < n_full; ++s) advance(full_drift, full_vol);
          if (rem > 0.0) advance(rem_drift, rem_vol);
        }
        inv_cost = inv_sum.value();
        quad_cost = quad_sum.value();
      }
      const double value = q * inv;
      blocks[b].inv.add(inv_cost, value);
      blocks[b].bounded.add(inv_cost + quad_cost, value);
    }
  });

  PathMoments total;
  for (const auto& blk : blocks) {
    total.inv.add(blk.inv);
    total.bounded.add(blk.bounded);
  }
  InventoryEstimate out;
  out.cost_per_unit = ratio_estimate(total.inv, n_paths);
  out.bounded_cost_per_unit = ratio_estimate(total.bounded, n_paths);
  out.mean_inventory_value = total.inv.y.value() / static_cast<double>(n_paths);
  out.step = step;
  return out;
}

}  // namespace xarb::stochastic
