#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "cli_common.hpp"
#include "xarb/accounting.hpp"
#include "xarb/bridgelink.hpp"
#include "xarb/detector.hpp"
#include "xarb/error.hpp"
#include "xarb/match.hpp"
#include "xarb/scenario.hpp"

namespace xarb::cli {

namespace {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Decimal decimal_field(const nlohmann::json& v, const std::string& key) {
  try {
    if (v.is_string()) return Decimal::parse(v.get<std::string>());
    if (v.is_number()) return Decimal::parse(v.dump());
  } catch (const std::exception& e) {
    throw ConfigError("detector config: " + key + ": " + e.what());
  }
  throw ConfigError("detector config: " + key + " must be a number or decimal string");
}

std::int64_t int_field(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("detector config: " + key + " must be an integer");
  return v.get<std::int64_t>();
}

detect::DetectorConfig parse_detector_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  detect::DetectorConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "marginal_threshold") {
      c.marginal_threshold = decimal_field(v, key);
    } else if (key == "dedup_marginal") {
      c.dedup_marginal = decimal_field(v, key);
    } else if (key == "dedup_gap_seconds") {
      c.dedup_gap_seconds = int_field(v, key);
    } else if (key == "window_stable_seconds") {
      c.window_stable_seconds = int_field(v, key);
    } else if (key == "window_other_seconds") {
      c.window_other_seconds = int_field(v, key);
    } else if (key == "clock_skew_tolerance") {
      c.clock_skew_tolerance = int_field(v, key);
    } else {
      throw ConfigError("detector config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

json issues_json(const std::vector<chain::LoadIssue>& issues) {
  json a = json::array();
  for (const auto& i : issues) a.push_back({{"line", i.line}, {"message", i.message}});
  return a;
}

template <typename Fn>
void write_stream(OutputStage& stage, const std::string& name, Fn&& fn) {
  std::ofstream f(stage.file(name), std::ios::binary);
  fn(f);
  f.flush();
  if (!f) throw DataError("cannot write " + name);
}

void print_eval(const scenario::Evaluation& e) {
  std::cout << std::setprecision(6) << "planted " << e.planted << ", detected " << e.detected << ", true positives "
            << e.true_positives << "\nrecall " << e.recall << ", precision " << e.precision
            << ", classification accuracy " << e.classification_accuracy << '\n';
}

// simulate

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<double> collision_rate;
};

void run_simulate(const SimulateArgs& a, const Globals& g) {
  auto s = scenario::load_scenario(a.config);
  if (g.seed) s.seed = *g.seed;
  if (a.collision_rate) s.collision_rate = *a.collision_rate;
  s.validate();
  RunInfo info{"simulate"};
  info.configs["scenario"] = a.config;
  info.seed = s.seed;
  const auto world = scenario::generate(s);
  OutputStage stage(a.out);
  for (const auto& name : scenario::write_world(world, stage.stage_dir())) stage.file(name);
  stage.commit(info, g);
  std::cout << "swaps " << world.swaps.size() << " (noise " << world.noise_swaps << ", decoy pairs "
            << world.decoy_pairs << "), planted " << world.truth.planted.size() << ", refused "
            << world.truth.refused.size() << '\n';
}

// detect

struct DetectArgs {
  std::string swaps, equivalence, labels, transfers, native_links, chains, truth, config, out;
};

void run_detect(const DetectArgs& a, const Globals& g) {
  RunInfo info{"detect"};
  detect::DetectorConfig config;
  if (!a.config.empty()) {
    config = parse_detector_config(a.config);
    info.configs["detector"] = a.config;
  }
  config.threads = g.resolved_threads();
  const auto opts = g.load_options();

  json load_issues = json::object();
  info.inputs["swaps"] = a.swaps;
  auto swaps = chain::load_swaps(a.swaps, opts);
  load_issues["swaps"] = issues_json(swaps.issues);
  info.inputs["equivalence"] = a.equivalence;
  auto eq = chain::load_equivalence(a.equivalence, opts);
  load_issues["equivalence"] = issues_json(eq.issues);
  chain::LabelSet labels;
  if (!a.labels.empty()) {
    info.inputs["labels"] = a.labels;
    auto l = chain::load_labels(a.labels, opts);
    load_issues["labels"] = issues_json(l.issues);
    labels = std::move(l.labels);
  }
  std::vector<chain::TransferRecord> transfers;
  if (!a.transfers.empty()) {
    info.inputs["transfers"] = a.transfers;
    auto t = chain::load_transfers(a.transfers, opts);
    load_issues["transfers"] = issues_json(t.issues);
    transfers = std::move(t.records);
  }
  std::vector<chain::NativeBridgeLink> links;
  if (!a.native_links.empty()) {
    info.inputs["native_links"] = a.native_links;
    auto n = chain::load_native_links(a.native_links, opts);
    load_issues["native_links"] = issues_json(n.issues);
    links = std::move(n.records);
  }
  bridge::ChainLayers layers;
  if (!a.chains.empty()) {
    info.inputs["chains"] = a.chains;
    layers = bridge::load_chain_layers(a.chains);
  }
  std::optional<scenario::GroundTruth> truth;
  if (!a.truth.empty()) {
    info.inputs["truth"] = a.truth;
    truth = scenario::load_truth(a.truth);
  }

  auto result = detect::detect(std::move(swaps.records), eq.registry, labels, config);
  const auto violations = detect::validate_matches(result.matches, eq.registry, labels, config);
  if (!violations.empty()) throw std::logic_error("detector produced an invalid match: " + violations.front());
  bridge::classify_all(result.matches, bridge::NativeIndex(std::move(links)),
                       bridge::TransferIndex(std::move(transfers)), eq.registry, config.threads);

  OutputStage stage(a.out);
  write_stream(stage, "matches.jsonl", [&](std::ostream& o) { write_matches(o, result.matches); });
  json report = json::parse(detect::report_json(result.report));
  report["load_issues"] = load_issues;
  stage.write_text("detect_report.json", report.dump(2));
  stage.write_text("bridge_report.json", bridge::to_json(bridge::bridge_report(result.matches, layers)));
  std::optional<scenario::Evaluation> ev;
  if (truth) {
    ev = scenario::evaluate(result.matches, *truth);
    stage.write_text("eval.json", scenario::to_json(*ev));
  }
  stage.commit(info, g);
  std::cout << "matches " << result.matches.size() << " from " << result.report.input_records << " swap records\n";
  if (ev) print_eval(*ev);
}

// account

struct AccountArgs {
  std::string matches, prices, equivalence, chains, volume = "leg1_in", out;
  std::optional<std::int64_t> split_time;
};

void run_account(const AccountArgs& a, const Globals& g) {
  RunInfo info{"account"};
  acct::AccountOptions opts;
  opts.volume = acct::volume_convention_from_string(a.volume);
  opts.split_time = a.split_time;
  const auto lo = g.load_options();
  info.inputs["matches"] = a.matches;
  auto matches = load_matches(a.matches);
  info.inputs["prices"] = a.prices;
  auto prices = chain::load_prices(a.prices, lo);
  info.inputs["equivalence"] = a.equivalence;
  auto eq = chain::load_equivalence(a.equivalence, lo);
  if (!a.chains.empty()) {
    info.inputs["chains"] = a.chains;
    opts.layers = bridge::load_chain_layers(a.chains);
  }
  const auto r = acct::account(std::move(matches), prices.table, eq.registry, opts);

  OutputStage stage(a.out);
  json report = json::parse(acct::report_json(r));
  report["load_issues"] = {{"prices", issues_json(prices.issues)}, {"equivalence", issues_json(eq.issues)}};
  stage.write_text("report.json", report.dump(2));
  write_stream(stage, "daily.csv", [&](std::ostream& o) { acct::write_daily_csv(o, r); });
  write_stream(stage, "pairs.csv", [&](std::ostream& o) { acct::write_pairs_csv(o, r); });
  write_stream(stage, "entities.csv", [&](std::ostream& o) { acct::write_entities_csv(o, r); });
  write_stream(stage, "cdf.csv", [&](std::ostream& o) { acct::write_cdf_csv(o, r); });
  write_stream(stage, "profits.jsonl", [&](std::ostream& o) { acct::write_profits_jsonl(o, r); });
  stage.commit(info, g);
  std::cout << std::setprecision(10) << "matches " << r.totals.matches << " (priced " << r.totals.priced
            << ", unpriced " << r.totals.unpriced << ")\nvolume_usd " << r.totals.volume_usd << "\nnet_profit_usd "
            << r.totals.net_profit_usd << '\n';
}

// eval

struct EvalArgs {
  std::string matches, truth, out;
};

void run_eval(const EvalArgs& a, const Globals& g) {
  RunInfo info{"eval"};
  info.inputs["matches"] = a.matches;
  info.inputs["truth"] = a.truth;
  const auto ev = scenario::evaluate(load_matches(a.matches), scenario::load_truth(a.truth));
  if (!a.out.empty()) {
    OutputStage stage(a.out);
    stage.write_text("eval.json", scenario::to_json(ev));
    stage.commit(info, g);
  }
  std::cout << scenario::to_json(ev) << '\n';
}

}  // namespace

void add_pipeline_commands(CLI::App& app, Globals& g) {
  auto sa = std::make_shared<SimulateArgs>();
  CLI::App* c = app.add_subcommand("simulate", "Generate a synthetic multi-chain world with ground truth");
  c->add_option("--config", sa->config, "Scenario config (JSON)")->required();
  c->add_option("--out", sa->out, "Output directory")->required();
  c->add_option("--collision-rate", sa->collision_rate, "Override the config's decoy rate");
  c->callback([sa, &g] { run_simulate(*sa, g); });

  auto da = std::make_shared<DetectArgs>();
  c = app.add_subcommand("detect", "Detect cross-chain arbitrages and classify their execution");
  c->add_option("--swaps", da->swaps, "swaps.jsonl")->required();
  c->add_option("--equivalence", da->equivalence, "equivalence.csv")->required();
  c->add_option("--labels", da->labels, "labels.csv");
  c->add_option("--transfers", da->transfers, "transfers.jsonl");
  c->add_option("--native-links", da->native_links, "native_links.jsonl");
  c->add_option("--chains", da->chains, "chains.csv (chain,layer)");
  c->add_option("--truth", da->truth, "truth.jsonl; enables recall and precision");
  c->add_option("--config", da->config, "Detector config (JSON)");
  c->add_option("--out", da->out, "Output directory")->required();
  c->callback([da, &g] { run_detect(*da, g); });

  auto aa = std::make_shared<AccountArgs>();
  c = app.add_subcommand("account", "Price matches and aggregate volume, profit and settlement");
  c->add_option("--matches", aa->matches, "matches.jsonl")->required();
  c->add_option("--prices", aa->prices, "prices.csv")->required();
  c->add_option("--equivalence", aa->equivalence, "equivalence.csv")->required();
  c->add_option("--chains", aa->chains, "chains.csv (chain,layer)");
  c->add_option("--volume", aa->volume, "leg1_in, leg2_out or mean")->capture_default_str();
  c->add_option("--split-time", aa->split_time, "Unix time splitting the before/after tests");
  c->add_option("--out", aa->out, "Output directory")->required();
  c->callback([aa, &g] { run_account(*aa, g); });

  auto ea = std::make_shared<EvalArgs>();
  c = app.add_subcommand("eval", "Compare matches against ground truth");
  c->add_option("--matches", ea->matches, "matches.jsonl")->required();
  c->add_option("--truth", ea->truth, "truth.jsonl")->required();
  c->add_option("--out", ea->out, "Optional output directory for eval.json");
  c->callback([ea, &g] { run_eval(*ea, g); });
}

}  // namespace xarb::cli
