// Acceptance run: one PASS/FAIL line per criterion, then a summary.
//
// Exit status is 0 when every criterion passes or fails only as listed in
// kKnownFailures (with the reason printed), and 1 otherwise. A known failure
// that starts passing is reported but does not fail the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/brute_force.hpp"
#include "support/case_studies.hpp"
#include "xarb/accounting.hpp"
#include "xarb/bridgelink.hpp"
#include "xarb/detector.hpp"
#include "xarb/match.hpp"
#include "xarb/model.hpp"
#include "xarb/scenario.hpp"
#include "xarb/stochastic.hpp"

using namespace xarb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects failed sub-checks of one criterion.
struct Check {
  std::vector<std::string> failures;
  std::size_t checks = 0;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok && failures.size() < 20) failures.push_back(what);
    if (!ok && failures.size() == 20) failures.push_back("...");
  }
  bool ok() const { return failures.empty(); }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::map<int, std::string> kKnownFailures = {
    {5, "the printed bounded-liquidity formula drops the Q^2 factor of dQ^2 under percentage volatility and the "
        "(1 - sqrt(1/p)) factor of the inventory; at k=1/2, sigma=0.3, lambda=0.5 it sits about 7% above the "
        "path-wise quadratic cost"},
};

// 1 ------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  Check c;
  std::uint64_t seed = 101;
  double worst = 0.0;
  for (double p : {1.5, 2.0, 3.0}) {
    for (double mu : {-0.0625, -0.2}) {
      for (double delta : {0.25, 0.5, 1.0, 2.0}) {
        model::ModelParams m;
        m.p = p;
        m.mu = mu;
        m.sigma = 0.2;
        m.delta = delta;
        m.reserve_a = 1e7;
        m.reserve_b = 1e7;
        const double closed = model::expected_bridge_profit(m);
        const auto e = stochastic::estimate_bridge_profit(m, 1000000, seed++);
        const double tol = std::max(0.01 * std::abs(closed), 3.0 * e.std_err);
        const double err = std::abs(e.mean - closed);
        worst = std::max(worst, err / tol);
        c.expect(err <= tol, "p=" + fmt(p) + " mu=" + fmt(mu) + " delta=" + fmt(delta) + ": mc " + fmt(e.mean, 10) +
                                 " vs " + fmt(closed, 10));
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  return {c.ok(), "24 cells x 1e6 paths, worst |err|/tol " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s" +
                      (c.ok() ? "" : "; " + c.failures.front())};
}

// 2 and 5 share the inventory runs -------------------------------------------

struct InventoryCell {
  double k, sigma, lambda;
  model::ModelParams m;
  stochastic::InventoryEstimate e;
};

std::vector<InventoryCell> inventory_cells;
double inventory_seconds = 0.0;

void run_inventory_cells() {
  const auto t0 = Clock::now();
  std::uint64_t seed = 202;
  for (double k : {0.0, 0.5}) {
    for (double sigma : {0.1, 0.3}) {
      for (double lambda : {0.5, 1.0, 4.0}) {
        InventoryCell cell{k, sigma, lambda, {}, {}};
        cell.m.p = 2.0;
        cell.m.mu = -0.0625;
        cell.m.sigma = sigma;
        cell.m.lambda = lambda;
        cell.m.k = k;
        cell.m.phi = 10.0;
        cell.e = stochastic::estimate_inventory_cost(cell.m, 200000, seed++);
        inventory_cells.push_back(cell);
      }
    }
  }
  inventory_seconds = seconds_since(t0);
}

Outcome criterion2() {
  if (inventory_cells.empty()) run_inventory_cells();
  Check c;
  double worst = 0.0;
  std::string worst_at;
  for (const auto& cell : inventory_cells) {
    const double closed = -cell.m.mu / cell.m.lambda;
    const double rel = std::abs(cell.e.cost_per_unit.mean / closed - 1.0);
    if (rel > worst) {
      worst = rel;
      worst_at = "k=" + fmt(cell.k) + " sigma=" + fmt(cell.sigma) + " lambda=" + fmt(cell.lambda) + ", " +
                 fmt(std::abs(cell.e.cost_per_unit.mean - closed) / cell.e.cost_per_unit.std_err, 3) + " std errors";
    }
    c.expect(rel <= 0.02, "k=" + fmt(cell.k) + " sigma=" + fmt(cell.sigma) + " lambda=" + fmt(cell.lambda) +
                              ": rel err " + fmt(rel, 4));
  }
  c.expect(inventory_seconds < 120.0, "runtime " + fmt(inventory_seconds) + " s");
  return {c.ok(), "12 cells x 2e5 paths, worst rel err " + fmt(100 * worst, 3) + "% (" + worst_at + "), " +
                      fmt(inventory_seconds, 3) + " s" + (c.ok() ? "" : "; " + c.failures.front())};
}

// 3 ------------------------------------------------------------------------

Outcome criterion3() {
  Check c;
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> up(1.2, 4.0), umu(-0.5, -0.01), ul(0.5, 10.0);
  int points = 0;
  double worst = 0.0;
  while (points < 20) {
    const double p = up(rng), mu = umu(rng), lambda = ul(rng);
    const double rp = std::sqrt(p);
    if ((rp - 1) * (rp - 1) + (mu / lambda) * (1 - 1 / rp) <= 0) continue;
    ++points;
    const double d = model::delta_threshold(p, mu, lambda);
    const double back = model::lambda_threshold(p, mu, d);
    const double rel = std::abs(back / lambda - 1.0);
    worst = std::max(worst, rel);
    c.expect(rel <= 1e-9, "round trip at p=" + fmt(p) + " mu=" + fmt(mu) + " lambda=" + fmt(lambda));

    // Decision along lambda (delta = d fixed) and along delta (lambda fixed).
    model::ModelParams m;
    m.p = p;
    m.mu = mu;
    m.delta = d;
    int flips = 0;
    model::Strategy prev = model::Strategy::Bridge;
    for (int i = 1; i <= 400; ++i) {
      m.lambda = lambda * 2.0 * i / 400.0;
      const auto s = model::decide_strategy(m).choice;
      if (i > 1 && prev != s) ++flips;
      prev = s;
    }
    c.expect(flips == 1, "lambda sweep flips " + std::to_string(flips));
    m.lambda = lambda;
    flips = 0;
    for (int i = 0; i <= 400; ++i) {
      m.delta = d * 2.0 * i / 400.0;
      const auto s = model::decide_strategy(m).choice;
      if (i > 0 && prev != s) ++flips;
      prev = s;
    }
    c.expect(flips == 1, "delta sweep flips " + std::to_string(flips));
  }
  const double ls = model::lambda_threshold(2.0, -0.0625, 1.0);
  const double ds = model::delta_threshold(2.0, -0.0625, 1.0);
  c.expect(std::abs(ls - 0.53602) <= 1e-4, "lambda* = " + fmt(ls, 10));
  c.expect(std::abs(ds - 0.51823) <= 1e-4, "delta* = " + fmt(ds, 10));
  return {c.ok(), "20 points, worst round-trip rel err " + fmt(worst, 3) + ", lambda*=" + fmt(ls, 7) +
                      ", delta*=" + fmt(ds, 7) + (c.ok() ? "" : "; " + c.failures.front())};
}

// 4 ------------------------------------------------------------------------

Outcome criterion4() {
  Check c;
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> up(1.1, 4.0), ul(0.05, 2.0), ud(0.01, 1.0);
  int cases = 0;
  double worst_residual = 0.0;
  while (cases < 10) {
    const double p = up(rng), lambda = ul(rng), delta = ud(rng);
    if (!(1.0 / lambda > delta * p)) continue;
    ++cases;
    const double h = 1e-7 * lambda;
    for (int i = 0; i < 100; ++i) {
      const double mu = -lambda + (lambda - h) * i / 99.0;
      c.expect(model::cost_difference(p, mu + h, lambda, delta) < model::cost_difference(p, mu, lambda, delta),
               "not decreasing at p=" + fmt(p) + " lambda=" + fmt(lambda) + " delta=" + fmt(delta) + " mu=" + fmt(mu));
    }
    const auto t = model::mu_threshold(p, lambda, delta);
    const double residual = std::abs(model::cost_difference(p, t.mu_hat, lambda, delta));
    worst_residual = std::max(worst_residual, residual);
    c.expect(residual < 1e-9, "residual " + fmt(residual, 3));
    c.expect(t.mu_hat >= -lambda && t.mu_hat <= 0.0, "mu_hat outside [-lambda, 0]");
  }
  return {c.ok(), "10 parameter sets x 100 points, worst bisection residual " + fmt(worst_residual, 3) +
                      (c.ok() ? "" : "; " + c.failures.front())};
}

// 5 ------------------------------------------------------------------------

Outcome criterion5() {
  if (inventory_cells.empty()) run_inventory_cells();
  Check c;
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int i = 0; i < 50; ++i) {
    model::ModelParams m;
    m.p = 2.0;
    m.mu = -0.0625;
    m.lambda = 1.0;
    m.k = 0.0;
    m.phi = u(rng);
    m.sigma = u(rng) / 5.0;
    m.q0 = u(rng);
    c.expect(model::inventory_cost_bounded_liquidity(m) == -m.mu / m.lambda, "k=0 not exact");
  }
  double worst = 0.0;
  std::string worst_at;
  for (const auto& cell : inventory_cells) {
    if (cell.k != 0.5) continue;
    const double closed = model::inventory_cost_bounded_liquidity(cell.m);
    const double mc = cell.e.bounded_cost_per_unit.mean;
    const double rel = std::abs(mc / closed - 1.0);
    if (rel > worst) {
      worst = rel;
      worst_at = "sigma=" + fmt(cell.sigma) + " lambda=" + fmt(cell.lambda) + " (formula " + fmt(closed, 6) +
                 ", mc " + fmt(mc, 6) + ")";
    }
    c.expect(rel <= 0.05, "k=1/2 sigma=" + fmt(cell.sigma) + " lambda=" + fmt(cell.lambda) + ": rel err " +
                              fmt(100 * rel, 3) + "%");
  }
  return {c.ok(), "k=0 exact on 50 draws; k=1/2 worst rel err " + fmt(100 * worst, 3) + "% at " + worst_at +
                      (c.ok() ? "" : "; failing: " + c.failures.front())};
}

// 6, 8, 10 share the scenario runs ---------------------------------------------

struct ScenarioRun {
  std::uint64_t seed = 0;
  double collision_rate = 0.0;
  std::size_t swaps = 0;
  scenario::Evaluation eval;
  std::vector<ArbMatch> matches;
  acct::AccountReport account;
  double seconds = 0.0;
  std::map<scenario::Strategy, std::size_t> planted_by_strategy;
};

std::vector<ArbMatch> pipeline(const scenario::World& w, unsigned threads, detect::DetectReport* report = nullptr) {
  detect::DetectorConfig cfg;
  cfg.threads = threads;
  auto r = detect::detect(w.swaps, w.registry, w.labels, cfg);
  bridge::classify_all(r.matches, bridge::NativeIndex(w.native_links), bridge::TransferIndex(w.transfers),
                       w.registry, threads);
  if (report) *report = r.report;
  return r.matches;
}

std::vector<ScenarioRun> scenario_runs;

void run_scenarios() {
  const auto base = scenario::load_scenario(std::string(XARB_CONFIG_DIR) + "/mixed.json");
  for (double rate : {0.0, 0.1}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto t0 = Clock::now();
      auto s = base;
      s.seed = seed;
      s.collision_rate = rate;
      const auto w = scenario::generate(s);
      ScenarioRun run;
      run.seed = seed;
      run.collision_rate = rate;
      run.swaps = w.swaps.size();
      run.matches = pipeline(w, 0);
      run.eval = scenario::evaluate(run.matches, w.truth);
      acct::AccountOptions opts;
      opts.layers = w.layers;
      run.account = acct::account(run.matches, w.prices, w.registry, opts);
      for (const auto& p : w.truth.planted) ++run.planted_by_strategy[p.strategy];
      run.seconds = seconds_since(t0);
      scenario_runs.push_back(std::move(run));
    }
  }
}

Outcome criterion6() {
  if (scenario_runs.empty()) run_scenarios();
  Check c;
  double min_clean = 1.0, min_noisy_recall = 1.0, min_noisy_precision = 1.0, slowest = 0.0;
  std::size_t min_swaps = SIZE_MAX, max_swaps = 0;
  for (const auto& r : scenario_runs) {
    const std::string tag = "seed " + std::to_string(r.seed) + " rate " + fmt(r.collision_rate);
    min_swaps = std::min(min_swaps, r.swaps);
    max_swaps = std::max(max_swaps, r.swaps);
    slowest = std::max(slowest, r.seconds);
    c.expect(r.swaps >= 1000 && r.swaps <= 10000, tag + ": " + std::to_string(r.swaps) + " swaps");
    c.expect(r.eval.planted > 0, tag + ": nothing planted");
    c.expect(r.seconds < 60.0, tag + ": " + fmt(r.seconds) + " s");
    if (r.collision_rate == 0.0) {
      min_clean = std::min({min_clean, r.eval.recall, r.eval.precision});
      c.expect(r.eval.recall == 1.0 && r.eval.precision == 1.0,
               tag + ": recall " + fmt(r.eval.recall) + " precision " + fmt(r.eval.precision));
    } else {
      min_noisy_recall = std::min(min_noisy_recall, r.eval.recall);
      min_noisy_precision = std::min(min_noisy_precision, r.eval.precision);
      c.expect(r.eval.recall >= 0.95 && r.eval.precision >= 0.95,
               tag + ": recall " + fmt(r.eval.recall) + " precision " + fmt(r.eval.precision));
    }
  }
  return {c.ok(), "20 seeds, " + std::to_string(min_swaps) + "-" + std::to_string(max_swaps) +
                      " swaps; noiseless min(recall, precision) " + fmt(min_clean) + "; collisions 0.1 recall >= " +
                      fmt(min_noisy_recall) + ", precision >= " + fmt(min_noisy_precision) + "; slowest " +
                      fmt(slowest, 3) + " s" + (c.ok() ? "" : "; " + c.failures.front())};
}

// 7 ------------------------------------------------------------------------

Outcome criterion7() {
  Check c;
  std::size_t matches = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto inst = oracle::random_instance(7000 + seed);
    const auto cfg = seed % 2 ? oracle::oracle_config() : detect::DetectorConfig{};
    const auto fast = detect::detect(inst.swaps, inst.registry, inst.labels, cfg).matches;
    const auto slow = oracle::brute_force_detect(inst.swaps, inst.registry, inst.labels, cfg);
    const std::set<std::string> a = [&] {
      std::set<std::string> s;
      for (const auto& m : fast) s.insert(to_json_line(m));
      return s;
    }();
    std::set<std::string> b;
    for (const auto& m : slow) b.insert(to_json_line(m));
    c.expect(a == b && fast.size() == slow.size(), "instance " + std::to_string(seed));
    matches += fast.size();
  }
  return {c.ok(), "100 instances, " + std::to_string(matches) + " matches, sets equal" +
                      (c.ok() ? "" : "; " + c.failures.front())};
}

// 8 ------------------------------------------------------------------------

Outcome criterion8() {
  if (scenario_runs.empty()) run_scenarios();
  Check c;
  std::map<scenario::Strategy, std::size_t> planted;
  std::size_t classified = 0, shares = 0;
  for (const auto& r : scenario_runs) {
    for (const auto& m : r.matches) {
      const double s = bridge::bridge_settlement_share(m);
      ++shares;
      c.expect(s >= 0.0 && s <= 1.0, "share " + fmt(s));
    }
    if (r.collision_rate != 0.0) continue;
    for (const auto& [k, v] : r.planted_by_strategy) planted[k] += v;
    classified += r.eval.classified_correct;
    c.expect(r.eval.classified == r.eval.true_positives && r.eval.classification_accuracy == 1.0,
             "seed " + std::to_string(r.seed) + ": accuracy " + fmt(r.eval.classification_accuracy));
  }
  for (auto s : {scenario::Strategy::Inventory, scenario::Strategy::BridgeNative,
                 scenario::Strategy::BridgeMultichain}) {
    c.expect(planted[s] > 0, std::string("no planted ") + scenario::to_string(s));
  }
  std::ostringstream d;
  d << classified << " labels correct (inventory " << planted[scenario::Strategy::Inventory] << ", native "
    << planted[scenario::Strategy::BridgeNative] << ", multichain " << planted[scenario::Strategy::BridgeMultichain]
    << "); " << shares << " shares in [0, 1]";
  return {c.ok(), d.str() + (c.ok() ? "" : "; " + c.failures.front())};
}

// 9 ------------------------------------------------------------------------

std::string pipeline_bytes(const scenario::World& w, unsigned threads) {
  detect::DetectReport rep;
  auto matches = pipeline(w, threads, &rep);
  std::ostringstream out;
  write_matches(out, matches);
  out << detect::report_json(rep) << '\n' << bridge::to_json(bridge::bridge_report(matches, w.layers)) << '\n';
  acct::AccountOptions opts;
  opts.layers = w.layers;
  const auto r = acct::account(matches, w.prices, w.registry, opts);
  out << acct::report_json(r) << '\n';
  acct::write_daily_csv(out, r);
  acct::write_pairs_csv(out, r);
  acct::write_entities_csv(out, r);
  acct::write_cdf_csv(out, r);
  acct::write_profits_jsonl(out, r);
  return out.str();
}

Outcome criterion9() {
  Check c;
  auto s = scenario::load_scenario(std::string(XARB_CONFIG_DIR) + "/mixed.json");
  s.seed = 9;
  s.collision_rate = 0.1;
  const auto w = scenario::generate(s);
  const std::string reference = pipeline_bytes(w, 1);
  std::size_t runs = 0;
  for (std::uint64_t perm = 0; perm < 3; ++perm) {
    auto shuffled = w;
    if (perm > 0) {
      std::mt19937_64 rng(perm);
      std::shuffle(shuffled.swaps.begin(), shuffled.swaps.end(), rng);
      std::shuffle(shuffled.transfers.begin(), shuffled.transfers.end(), rng);
      std::shuffle(shuffled.native_links.begin(), shuffled.native_links.end(), rng);
    }
    for (unsigned threads : {1u, 4u, 16u}) {
      ++runs;
      c.expect(pipeline_bytes(shuffled, threads) == reference,
               "permutation " + std::to_string(perm) + ", " + std::to_string(threads) + " threads");
    }
  }
  return {c.ok(), std::to_string(runs) + " runs (3 orders x threads 1/4/16), " + std::to_string(reference.size()) +
                      " bytes identical" + (c.ok() ? "" : "; " + c.failures.front())};
}

// 10 -----------------------------------------------------------------------

Outcome criterion10() {
  if (scenario_runs.empty()) run_scenarios();
  Check c;
  std::size_t priced = 0;
  for (const auto& r : scenario_runs) {
    for (const auto& p : r.account.profits) {
      if (!p.priced) continue;
      ++priced;
      c.expect(*p.revenue_usd - *p.costs_usd == *p.net_profit_usd, "identity broken");
    }
  }
  std::string cases;
  for (const auto& cs : {fixtures::inventory_case(), fixtures::bridge_case()}) {
    auto res = detect::detect(cs.swaps, cs.registry, {}, {});
    bridge::classify_all(res.matches, {}, bridge::TransferIndex(cs.transfers), cs.registry, 1);
    c.expect(res.matches.size() == 1, "case study did not match");
    if (res.matches.size() != 1) continue;
    const auto& m = res.matches[0];
    c.expect(m.time_gap == cs.settlement_seconds, "settlement " + std::to_string(m.time_gap));
    const auto p = acct::price_match(m, cs.prices, cs.registry);
    c.expect(p.priced, "case study unpriced");
    if (!p.priced) continue;
    ++priced;
    c.expect(*p.revenue_usd - *p.costs_usd == *p.net_profit_usd, "case identity");
    c.expect(std::abs(*p.net_profit_usd - cs.stated_net_usd) < 1e-6, "net " + fmt(*p.net_profit_usd, 12));
    c.expect(std::abs(*p.costs_usd - cs.derived_fees_usd) < 1e-6, "fees " + fmt(*p.costs_usd, 12));
    cases += (cases.empty() ? "" : ", ") + fmt(*p.net_profit_usd, 8) + " USD in " + std::to_string(m.time_gap) + " s";
  }
  const auto inv = fixtures::inventory_case();
  c.expect(inv.swaps[0].amount_in == Decimal::parse("0.9") && inv.swaps[0].amount_out == Decimal::parse("1034616.49") &&
               inv.swaps[1].amount_in == Decimal::parse("1034616.49"),
           "inventory case amounts");
  return {c.ok(), std::to_string(priced) + " priced matches exact; case studies " + cases +
                      (c.ok() ? "" : "; " + c.failures.front())};
}

// 11 -----------------------------------------------------------------------

Outcome criterion11() {
  Check c;
  auto near = [&](double got, double want, const char* what) {
    c.expect(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)), std::string(what) + " " + fmt(got, 12));
  };
  // scipy.stats.ttest_ind(equal_var=False), scipy.stats.pearsonr
  const auto w = acct::welch_test({6.27, 5.9, 7.1, 6.5, 5.8, 6.9, 6.2}, {4.61, 4.9, 4.2, 5.0, 4.4, 4.8});
  near(w.t, 7.776193419974362, "welch t");
  near(w.p_two_sided, 1.307687184514493e-05, "welch p");
  near(w.df, 10.244965707060626, "welch df");
  const auto w2 = acct::welch_test({12.1, 11.4, 13.0, 12.7, 11.9, 12.3, 12.8, 11.7, 12.2, 13.4},
                                   {11.8, 12.9, 12.0, 11.2, 13.1, 12.4, 11.5, 12.6});
  near(w2.t, 0.5259975010064863, "welch2 t");
  near(w2.p_two_sided, 0.6068378117870802, "welch2 p");
  const auto r = acct::pearson({1.2, 2.3, 2.9, 4.1, 5.5, 5.9, 7.2, 8.8}, {0.31, 0.52, 0.48, 0.95, 1.01, 1.40, 1.32, 1.85});
  near(r.r, 0.9726206330250496, "pearson r");
  near(r.p, 5.0263092334527505e-05, "pearson p");
  const auto r2 = acct::pearson({3, 1, 4, 1, 5, 9, 2, 6, 5, 3}, {2, 7, 1, 8, 2, 8, 1, 8, 2, 8});
  near(r2.r, 0.10492284287735881, "pearson2 r");
  near(r2.p, 0.7729913615627264, "pearson2 p");

  const std::vector<double> a = {1.0, 2.0, 4.0, 8.0};
  const auto same = acct::welch_test(a, a);
  c.expect(same.t == 0.0 && same.p_two_sided == 1.0 && same.delta == 0.0, "identical samples");
  std::vector<double> y;
  for (double v : a) y.push_back(3.0 * v - 2.0);
  const auto perfect = acct::pearson(a, y);
  c.expect(perfect.r == 1.0 && perfect.p == 0.0, "perfect correlation");
  return {c.ok(), "2 Welch and 2 Pearson fixtures within 1e-6; trivial cases exact" +
                      (c.ok() ? std::string() : "; " + c.failures.front())};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3},  {4, criterion4},   {5, criterion5},  {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11}};
  int passed = 0;
  std::vector<int> known, unexpected;
  for (const auto& [n, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
    std::fflush(stdout);
    if (o.pass) {
      ++passed;
      if (kKnownFailures.count(n)) std::printf("note: criterion %d is listed as a known failure but passed\n", n);
    } else if (kKnownFailures.count(n)) {
      known.push_back(n);
    } else {
      unexpected.push_back(n);
    }
  }
  std::printf("%d/%zu criteria passed\n", passed, criteria.size());
  for (int n : known) std::printf("known failure %d: %s\n", n, kKnownFailures.at(n).c_str());
  for (int n : unexpected) std::printf("unexpected failure: criterion %d\n", n);
  return unexpected.empty() ? 0 : 1;
}
