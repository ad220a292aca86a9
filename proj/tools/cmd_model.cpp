#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "cli_common.hpp"
#include "xarb/error.hpp"
#include "xarb/model.hpp"
#include "xarb/numfmt.hpp"
#include "xarb/stochastic.hpp"

namespace xarb::cli {

namespace {

struct Sweep {
  double lo = 0.0;
  double hi = 1.0;
  int points = 101;

  double at(int i) const {
    return points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  void check(const char* name) const {
    if (points < 1) throw ConfigError(std::string(name) + ": --points must be at least 1");
    if (!(hi >= lo)) throw ConfigError(std::string(name) + ": empty range");
  }
};

void add_sweep(CLI::App* c, Sweep& s, const std::string& var) {
  c->add_option("--" + var + "-min", s.lo, "Start of the " + var + " sweep")->capture_default_str();
  c->add_option("--" + var + "-max", s.hi, "End of the " + var + " sweep")->capture_default_str();
  c->add_option("--points", s.points, "Grid points")->capture_default_str();
}

std::string cell(const std::optional<double>& v) { return format_optional(v); }

template <typename Fn>
std::optional<double> guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

struct ProfitCurveArgs {
  Sweep p{1.0, 3.0, 201};
  double reserve_a = 1e7;
  double reserve_b = 1e7;
  double mu = 0.0;
  double delta = 0.0;
  std::string out;
};

void run_profit_curve(const ProfitCurveArgs& a, const Globals& g) {
  a.p.check("profit-curve");
  RunInfo info{"model profit-curve"};
  OutputStage stage(a.out);
  std::ofstream f(stage.file("profit_curve.csv"), std::ios::binary);
  f << "p,sell_a,buy_b,frictionless_profit,adjusted_sell_a,expected_bridge_profit\n";
  for (int i = 0; i < a.p.points; ++i) {
    model::ModelParams m;
    m.p = a.p.at(i);
    m.mu = a.mu;
    m.delta = a.delta;
    m.reserve_a = a.reserve_a;
    m.reserve_b = a.reserve_b;
    model::validate(m);
    const auto t = model::optimal_trade_sizes(m);
    f << format_double(m.p) << ',' << format_double(t.sell_a) << ',' << format_double(t.buy_b) << ','
      << format_double(model::frictionless_profit(m.p, m.reserve_a)) << ',' << cell(t.adjusted_sell_a) << ','
      << format_double(model::expected_bridge_profit(m)) << '\n';
  }
  f.close();
  stage.commit(info, g);
  std::cout << "wrote " << (stage.out_dir() / "profit_curve.csv").string() << '\n';
}

struct BridgeCostArgs {
  Sweep delta{0.0, 10.0, 201};
  double p = 2.0;
  double mu = -0.0625;
  double lambda = 1.0;
  std::string out;
};

void run_bridge_cost(const BridgeCostArgs& a, const Globals& g) {
  a.delta.check("bridge-cost");
  RunInfo info{"model bridge-cost"};
  OutputStage stage(a.out);
  std::ofstream f(stage.file("bridge_cost.csv"), std::ios::binary);
  f << "delta,bridging_cost,inventory_cost,cost_difference,choice\n";
  for (int i = 0; i < a.delta.points; ++i) {
    model::ModelParams m;
    m.p = a.p;
    m.mu = a.mu;
    m.lambda = a.lambda;
    m.delta = a.delta.at(i);
    model::validate(m);
    const auto d = model::decide_strategy(m);
    const double inv = model::inventory_cost_per_unit(m.mu, m.lambda) * (1.0 - std::sqrt(1.0 / m.p));
    f << format_double(m.delta) << ',' << format_double(model::bridging_cost(m.p, m.mu, m.delta)) << ','
      << format_double(inv) << ',' << format_double(model::cost_difference(m.p, m.mu, m.lambda, m.delta)) << ','
      << (d.choice == model::Strategy::Inventory ? "inventory" : "bridge") << '\n';
  }
  f.close();
  stage.commit(info, g);
  std::cout << "wrote " << (stage.out_dir() / "bridge_cost.csv").string() << '\n';
}

struct ThresholdArgs {
  double p = 2.0;
  double mu = -0.0625;
  Sweep delta{0.05, 5.0, 100};
  Sweep lambda{0.05, 5.0, 100};
  std::string out;
};

void run_thresholds(const ThresholdArgs& a, const Globals& g) {
  a.delta.check("thresholds");
  a.lambda.check("thresholds");
  model::lambda_threshold(a.p, a.mu, 1.0);  // rejects p <= 1 and mu >= 0 by name
  RunInfo info{"model thresholds"};
  OutputStage stage(a.out);
  {
    std::ofstream f(stage.file("lambda_threshold.csv"), std::ios::binary);
    f << "delta,lambda_star\n";
    for (int i = 0; i < a.delta.points; ++i) {
      const double d = a.delta.at(i);
      f << format_double(d) << ',' << cell(guarded([&] { return model::lambda_threshold(a.p, a.mu, d); })) << '\n';
    }
  }
  {
    std::ofstream f(stage.file("delta_threshold.csv"), std::ios::binary);
    f << "lambda,delta_star\n";
    for (int i = 0; i < a.lambda.points; ++i) {
      const double l = a.lambda.at(i);
      f << format_double(l) << ',' << cell(guarded([&] { return model::delta_threshold(a.p, a.mu, l); })) << '\n';
    }
  }
  stage.commit(info, g);
  std::cout << std::setprecision(10) << "lambda*(p=" << a.p << ", mu=" << a.mu << ", delta=1) = "
            << cell(guarded([&] { return model::lambda_threshold(a.p, a.mu, 1.0); })) << '\n'
            << "delta*(p=" << a.p << ", mu=" << a.mu << ", lambda=1) = "
            << cell(guarded([&] { return model::delta_threshold(a.p, a.mu, 1.0); })) << '\n';
}

struct CostDiffArgs {
  Sweep mu{-1.0, 0.0, 201};
  double p = 2.0;
  double lambda = 1.0;
  double delta = 1.0;
  std::string out;
};

void run_cost_diff(const CostDiffArgs& a, const Globals& g) {
  a.mu.check("cost-diff");
  if (a.mu.hi > 0.0) throw ConfigError("cost-diff: drift sweep must stay in mu <= 0");
  RunInfo info{"model cost-diff"};
  OutputStage stage(a.out);
  std::ofstream f(stage.file("cost_diff.csv"), std::ios::binary);
  f << "mu,inventory_cost,bridging_cost,cost_difference,choice\n";
  int sign_changes = 0;
  std::optional<bool> prev;
  for (int i = 0; i < a.mu.points; ++i) {
    model::ModelParams m;
    m.p = a.p;
    m.lambda = a.lambda;
    m.delta = a.delta;
    m.mu = a.mu.at(i);
    model::validate(m);
    const double diff = model::cost_difference(m.p, m.mu, m.lambda, m.delta);
    const double inv = model::inventory_cost_per_unit(m.mu, m.lambda) * (1.0 - std::sqrt(1.0 / m.p));
    const bool positive = diff > 0.0;
    if (prev && *prev != positive) ++sign_changes;
    prev = positive;
    f << format_double(m.mu) << ',' << format_double(inv) << ','
      << format_double(model::bridging_cost(m.p, m.mu, m.delta)) << ',' << format_double(diff) << ','
      << (model::decide_strategy(m).choice == model::Strategy::Inventory ? "inventory" : "bridge") << '\n';
  }
  f.close();
  stage.commit(info, g);
  std::cout << "sign changes on the grid: " << sign_changes << '\n';
  if (auto b = model::drift_boundary(a.p, a.lambda, a.delta, a.mu.lo, a.mu.hi)) {
    std::cout << std::setprecision(10) << "mu_hat = " << *b << '\n';
  } else {
    std::cout << "mu_hat: no boundary in range\n";
  }
  if (1.0 / a.lambda > a.delta * a.p) {
    const auto t = model::mu_threshold(a.p, a.lambda, a.delta);
    std::cout << std::setprecision(10) << "mu threshold on [-lambda, 0]: " << t.mu_hat
              << (t.interior ? " (interior)" : " (endpoint)") << '\n';
  }
}

struct ValidateArgs {
  std::size_t paths = 200000;
  double sigma = 0.2;
  std::string out;
};

struct Row {
  std::string check;
  model::ModelParams m;
  double closed = 0.0;
  stochastic::Estimate mc;
  double tolerance = 0.0;
  bool pass = false;
};

void run_validate(const ValidateArgs& a, const Globals& g) {
  if (a.paths < 2) throw ConfigError("validate: --paths must be at least 2");
  const std::uint64_t seed = g.seed.value_or(2024);
  const unsigned threads = g.resolved_threads();
  RunInfo info{"model validate"};
  info.seed = seed;
  OutputStage stage(a.out);
  std::vector<Row> rows;
  std::uint64_t cell_seed = seed;
  for (double p : {1.5, 2.0, 3.0}) {
    for (double mu : {-0.0625, -0.2}) {
      for (double delta : {0.25, 0.5, 1.0, 2.0}) {
        Row r;
        r.check = "bridge_profit";
        r.m.p = p;
        r.m.mu = mu;
        r.m.sigma = a.sigma;
        r.m.delta = delta;
        r.m.reserve_a = 1e7;
        r.m.reserve_b = 1e7;
        r.closed = model::expected_bridge_profit(r.m);
        r.mc = stochastic::estimate_bridge_profit(r.m, a.paths, cell_seed++, threads);
        r.tolerance = std::max(0.01 * std::abs(r.closed), 3 * r.mc.std_err);
        r.pass = std::abs(r.mc.mean - r.closed) <= r.tolerance;
        rows.push_back(r);
      }
    }
  }
  for (double k : {0.0, 0.5}) {
    for (double sigma : {0.1, 0.3}) {
      for (double lambda : {0.5, 1.0, 4.0}) {
        model::ModelParams m;
        m.p = 2.0;
        m.mu = -0.0625;
        m.sigma = sigma;
        m.lambda = lambda;
        m.k = k;
        m.phi = 10.0;
        stochastic::InventoryOptions opts;
        opts.threads = threads;
        const auto e = stochastic::estimate_inventory_cost(m, a.paths, cell_seed++, opts);
        Row r;
        r.check = "inventory_cost";
        r.m = m;
        r.closed = model::inventory_cost_per_unit(m.mu, m.lambda);
        r.mc = e.cost_per_unit;
        r.tolerance = 0.02 * std::abs(r.closed);
        r.pass = std::abs(r.mc.mean - r.closed) <= r.tolerance;
        rows.push_back(r);
        if (k > 0.0) {
          Row b;
          b.check = "bounded_liquidity";
          b.m = m;
          b.closed = model::inventory_cost_bounded_liquidity(m);
          b.mc = e.bounded_cost_per_unit;
          b.tolerance = 0.05 * std::abs(b.closed);
          b.pass = std::abs(b.mc.mean - b.closed) <= b.tolerance;
          rows.push_back(b);
        }
      }
    }
  }
  std::ofstream f(stage.file("validate.csv"), std::ios::binary);
  f << "check,p,mu,sigma,lambda,delta,k,phi,closed_form,mc_mean,std_err,n_paths,abs_err,tolerance,pass\n";
  std::size_t passed = 0;
  std::cout << std::left << std::setw(18) << "check" << std::setw(46) << "params" << std::setw(16) << "closed"
            << std::setw(16) << "mc" << std::setw(12) << "std_err" << "result\n";
  for (const auto& r : rows) {
    const double err = std::abs(r.mc.mean - r.closed);
    f << r.check << ',' << format_double(r.m.p) << ',' << format_double(r.m.mu) << ',' << format_double(r.m.sigma)
      << ',' << format_double(r.m.lambda) << ',' << format_double(r.m.delta) << ',' << format_double(r.m.k) << ','
      << format_double(r.m.phi) << ',' << format_double(r.closed) << ',' << format_double(r.mc.mean) << ','
      << format_double(r.mc.std_err) << ',' << r.mc.n_paths << ',' << format_double(err) << ','
      << format_double(r.tolerance) << ',' << (r.pass ? "true" : "false") << '\n';
    std::ostringstream params;
    params << "p=" << r.m.p << " mu=" << r.m.mu << " s=" << r.m.sigma << " l=" << r.m.lambda << " d=" << r.m.delta
           << " k=" << r.m.k;
    std::cout << std::setw(18) << r.check << std::setw(46) << params.str() << std::setw(16) << r.closed
              << std::setw(16) << r.mc.mean << std::setw(12) << r.mc.std_err << (r.pass ? "PASS" : "FAIL") << '\n';
    passed += r.pass ? 1 : 0;
  }
  f.close();
  stage.commit(info, g);
  std::cout << passed << "/" << rows.size() << " checks within tolerance\n";
}

}  // namespace

void add_model_commands(CLI::App& app, Globals& g) {
  CLI::App* model = app.add_subcommand("model", "Closed-form model sweeps and Monte Carlo validation");
  model->require_subcommand(1);

  auto pc = std::make_shared<ProfitCurveArgs>();
  CLI::App* c = model->add_subcommand("profit-curve", "Optimal trade sizes and profit against p");
  add_sweep(c, pc->p, "p");
  c->add_option("--reserve-a", pc->reserve_a, "R^A")->capture_default_str();
  c->add_option("--reserve-b", pc->reserve_b, "R^B")->capture_default_str();
  c->add_option("--mu", pc->mu, "Drift during bridging")->capture_default_str();
  c->add_option("--delta", pc->delta, "Bridging time")->capture_default_str();
  c->add_option("--out", pc->out, "Output directory")->required();
  c->callback([pc, &g] { run_profit_curve(*pc, g); });

  auto bc = std::make_shared<BridgeCostArgs>();
  c = model->add_subcommand("bridge-cost", "Bridging cost and strategy choice against delta");
  add_sweep(c, bc->delta, "delta");
  c->add_option("--p", bc->p, "Relative price")->capture_default_str();
  c->add_option("--mu", bc->mu, "Drift")->capture_default_str();
  c->add_option("--lambda", bc->lambda, "Arrival rate")->capture_default_str();
  c->add_option("--out", bc->out, "Output directory")->required();
  c->callback([bc, &g] { run_bridge_cost(*bc, g); });

  auto th = std::make_shared<ThresholdArgs>();
  c = model->add_subcommand("thresholds", "Arrival-rate and bridging-time thresholds");
  c->add_option("--p", th->p, "Relative price")->capture_default_str();
  c->add_option("--mu", th->mu, "Drift")->capture_default_str();
  c->add_option("--delta-min", th->delta.lo, "Start of the delta sweep")->capture_default_str();
  c->add_option("--delta-max", th->delta.hi, "End of the delta sweep")->capture_default_str();
  c->add_option("--lambda-min", th->lambda.lo, "Start of the lambda sweep")->capture_default_str();
  c->add_option("--lambda-max", th->lambda.hi, "End of the lambda sweep")->capture_default_str();
  c->add_option("--points", th->delta.points, "Grid points per sweep")->capture_default_str();
  c->add_option("--out", th->out, "Output directory")->required();
  c->callback([th, &g] {
    th->lambda.points = th->delta.points;
    run_thresholds(*th, g);
  });

  auto cd = std::make_shared<CostDiffArgs>();
  c = model->add_subcommand("cost-diff", "Inventory minus bridging cost against the drift");
  add_sweep(c, cd->mu, "mu");
  c->add_option("--p", cd->p, "Relative price")->capture_default_str();
  c->add_option("--lambda", cd->lambda, "Arrival rate")->capture_default_str();
  c->add_option("--delta", cd->delta, "Bridging time")->capture_default_str();
  c->add_option("--out", cd->out, "Output directory")->required();
  c->callback([cd, &g] { run_cost_diff(*cd, g); });

  auto va = std::make_shared<ValidateArgs>();
  c = model->add_subcommand("validate", "Closed forms against Monte Carlo");
  c->add_option("--paths", va->paths, "Paths per cell")->capture_default_str();
  c->add_option("--sigma", va->sigma, "Volatility for the bridging-profit grid")->capture_default_str();
  c->add_option("--out", va->out, "Output directory")->required();
  c->callback([va, &g] { run_validate(*va, g); });
}

}  // namespace xarb::cli
