#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli_common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(XARB_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& ls) {
  std::ofstream out(p);
  for (const auto& l : ls) out << l << '\n';
}

std::string config(const char* name) { return (fs::path(XARB_CONFIG_DIR) / name).string(); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xarb-cli-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  void simulate(const std::string& cfg, const std::string& out, const std::string& extra = "") {
    ASSERT_EQ(run(extra + " simulate --config " + config(cfg.c_str()) + " --out " + path(out)).code, 0);
  }

  std::string detect_args(const std::string& w, const std::string& swaps = "") const {
    const std::string s = swaps.empty() ? path(w + "/swaps.jsonl") : swaps;
    return "detect --swaps " + s + " --equivalence " + path(w + "/equivalence.csv") + " --labels " +
           path(w + "/labels.csv") + " --transfers " + path(w + "/transfers.jsonl") + " --native-links " +
           path(w + "/native_links.jsonl") + " --chains " + path(w + "/chains.csv");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateManifestChecksumsVerify) {
  simulate("minimal.json", "w");
  const json m = json::parse(slurp(path("w/manifest.json")));
  EXPECT_EQ(m["tool"], "xarb");
  EXPECT_EQ(m["subcommand"], "simulate");
  EXPECT_EQ(m["configs"]["scenario"], config("minimal.json"));
  EXPECT_TRUE(m["seed"].is_number_unsigned());
  std::vector<std::string> names;
  for (const auto& o : m["outputs"]) {
    names.push_back(o["file"]);
    const fs::path f = path("w/" + o["file"].get<std::string>());
    ASSERT_TRUE(fs::exists(f)) << f;
    EXPECT_EQ(o["sha256"], xarb::cli::sha256_file(f));
    EXPECT_EQ(o["bytes"], fs::file_size(f));
  }
  const std::vector<std::string> expected{"swaps.jsonl",   "transfers.jsonl", "native_links.jsonl",
                                          "prices.csv",    "equivalence.csv", "labels.csv",
                                          "chains.csv",    "truth.jsonl",     "refused.jsonl"};
  EXPECT_EQ(names, expected);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(path("w"))) ++entries;
  EXPECT_EQ(entries, expected.size() + 1);
}

TEST_F(Cli, SeedChangesEventsNotSchema) {
  simulate("minimal.json", "a", "--seed 1");
  simulate("minimal.json", "b", "--seed 1");
  simulate("minimal.json", "c", "--seed 2");
  EXPECT_EQ(slurp(path("a/swaps.jsonl")), slurp(path("b/swaps.jsonl")));
  EXPECT_NE(slurp(path("a/swaps.jsonl")), slurp(path("c/swaps.jsonl")));
  const auto ka = json::parse(lines(path("a/swaps.jsonl")).front());
  const auto kc = json::parse(lines(path("c/swaps.jsonl")).front());
  std::vector<std::string> a, c;
  for (const auto& [k, v] : ka.items()) a.push_back(k);
  for (const auto& [k, v] : kc.items()) c.push_back(k);
  EXPECT_EQ(a, c);
}

TEST_F(Cli, InvalidConfigLeavesNoOutputs) {
  std::ofstream(path("bad.json")) << R"({"schema_version": 1, "horizon": -5})";
  const auto r = run("simulate --config " + path("bad.json") + " --out " + path("out"));
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(path("out")));
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().filename().string().rfind(".xarb-stage", 0), std::string::npos) << e.path();
  }
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("simulate --out x").code, 1);
  EXPECT_EQ(run("model thresholds --p 0.5 --out " + path("m")).code, 1);
  EXPECT_EQ(run("detect --swaps " + path("missing.jsonl") + " --equivalence " + path("missing.csv") +
                " --out " + path("d"))
                .code,
            2);
  EXPECT_FALSE(fs::exists(path("d")));
  simulate("minimal.json", "w");
  std::ofstream(path("w/swaps.jsonl"), std::ios::app) << "{not json\n";
  EXPECT_EQ(run("detect --swaps " + path("w/swaps.jsonl") + " --equivalence " + path("w/equivalence.csv") +
                " --out " + path("lenient"))
                .code,
            0);
  EXPECT_EQ(run("--strict detect --swaps " + path("w/swaps.jsonl") + " --equivalence " +
                path("w/equivalence.csv") + " --out " + path("strict"))
                .code,
            2);
  const json rep = json::parse(slurp(path("lenient/detect_report.json")));
  EXPECT_EQ(rep["load_issues"]["swaps"].size(), 1u);
}

TEST_F(Cli, DetectPrintsRecallAndIgnoresInputOrder) {
  simulate("mixed.json", "w");
  auto r = run("--threads 1 " + detect_args("w") + " --truth " + path("w/truth.jsonl") + " --out " + path("d1"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("recall 1, precision 1"), std::string::npos) << r.out;
  const json ev = json::parse(slurp(path("d1/eval.json")));
  EXPECT_EQ(ev["recall"], 1.0);
  EXPECT_EQ(ev["classification_accuracy"], 1.0);

  auto ls = lines(path("w/swaps.jsonl"));
  std::mt19937 rng(3);
  std::shuffle(ls.begin(), ls.end(), rng);
  write_lines(path("shuffled.jsonl"), ls);
  ASSERT_EQ(run("--threads 4 " + detect_args("w", path("shuffled.jsonl")) + " --out " + path("d2")).code, 0);
  EXPECT_EQ(slurp(path("d1/matches.jsonl")), slurp(path("d2/matches.jsonl")));
  EXPECT_EQ(slurp(path("d1/bridge_report.json")), slurp(path("d2/bridge_report.json")));
}

TEST_F(Cli, MissingEquivalenceIsCounted) {
  simulate("minimal.json", "w");
  auto eq = lines(path("w/equivalence.csv"));
  const auto it = std::find_if(eq.begin(), eq.end(), [](const std::string& l) { return l.find("omni") != std::string::npos && l.find("base") != std::string::npos; });
  ASSERT_NE(it, eq.end());
  eq.erase(it);
  write_lines(path("w/equivalence.csv"), eq);
  ASSERT_EQ(run(detect_args("w") + " --out " + path("d")).code, 0);
  const json rep = json::parse(slurp(path("d/detect_report.json")));
  EXPECT_GT(rep["unmapped_records"].get<int>(), 0);
  EXPECT_FALSE(rep["unmapped_assets"].empty());
}

TEST_F(Cli, EvalWithheldLeg2LowersRecall) {
  simulate("mixed.json", "w");
  ASSERT_EQ(run(detect_args("w") + " --out " + path("d")).code, 0);
  const auto truth = lines(path("w/truth.jsonl"));
  const std::size_t n = truth.size() - 1;  // schema header line
  ASSERT_GT(n, 1u);
  const json first = json::parse(truth[1]);
  const std::string hash = first["leg2"]["tx_hash"];
  auto sw = lines(path("w/swaps.jsonl"));
  sw.erase(std::remove_if(sw.begin(), sw.end(), [&](const std::string& l) { return l.find(hash) != std::string::npos; }),
           sw.end());
  write_lines(path("withheld.jsonl"), sw);
  ASSERT_EQ(run(detect_args("w", path("withheld.jsonl")) + " --out " + path("d2")).code, 0);
  const auto r = run("eval --matches " + path("d2/matches.jsonl") + " --truth " + path("w/truth.jsonl"));
  ASSERT_EQ(r.code, 0);
  const json ev = json::parse(r.out);
  EXPECT_DOUBLE_EQ(ev["recall"].get<double>(), static_cast<double>(n - 1) / static_cast<double>(n));
  EXPECT_EQ(ev["precision"], 1.0);
  EXPECT_EQ(ev["missed"].size(), 1u);

  write_lines(path("empty.jsonl"), {});
  const json none =
      json::parse(run("eval --matches " + path("empty.jsonl") + " --truth " + path("w/truth.jsonl")).out);
  EXPECT_EQ(none["precision"], 1.0);
  EXPECT_EQ(none["zero_matches"], true);
  EXPECT_EQ(none["recall"], 0.0);
}

TEST_F(Cli, AccountWritesDocumentedFiles) {
  simulate("mixed.json", "w");
  ASSERT_EQ(run(detect_args("w") + " --out " + path("d")).code, 0);
  const auto r = run("account --matches " + path("d/matches.jsonl") + " --prices " + path("w/prices.csv") +
                     " --equivalence " + path("w/equivalence.csv") + " --chains " + path("w/chains.csv") +
                     " --out " + path("a"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("unpriced 0"), std::string::npos) << r.out;
  EXPECT_EQ(lines(path("a/daily.csv")).front(), "date,count,volume_usd,mean_fee_usd");
  for (const char* f : {"report.json", "pairs.csv", "entities.csv", "cdf.csv", "profits.jsonl", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(path(std::string("a/") + f))) << f;
  }
  const json rep = json::parse(slurp(path("a/report.json")));
  EXPECT_EQ(rep["totals"]["matches"], lines(path("d/matches.jsonl")).size());

  write_lines(path("noprices.csv"), {"class,hour,usd"});
  const auto u = run("account --matches " + path("d/matches.jsonl") + " --prices " + path("noprices.csv") +
                     " --equivalence " + path("w/equivalence.csv") + " --out " + path("a2"));
  ASSERT_EQ(u.code, 0);
  EXPECT_NE(u.out.find("priced 0"), std::string::npos) << u.out;
}

TEST_F(Cli, ModelSweeps) {
  ASSERT_EQ(run("model profit-curve --out " + path("pc")).code, 0);
  const auto pc = lines(path("pc/profit_curve.csv"));
  ASSERT_EQ(pc.size(), 202u);
  double prev = -1.0;
  bool found = false;
  for (std::size_t i = 1; i < pc.size(); ++i) {
    const double p = std::stod(pc[i].substr(0, pc[i].find(',')));
    const std::string rest = pc[i].substr(pc[i].find(',') + 1);
    std::stringstream ss(rest);
    std::string sell, buy, prof;
    std::getline(ss, sell, ',');
    std::getline(ss, buy, ',');
    std::getline(ss, prof, ',');
    const double v = std::stod(prof);
    EXPECT_GE(v, prev);
    prev = v;
    if (p == 2.0) {
      found = true;
      EXPECT_NEAR(v, 1.7157e6, 50.0);
    }
  }
  EXPECT_TRUE(found);

  const auto r = run("model thresholds --out " + path("th"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.536005"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("0.518273"), std::string::npos) << r.out;
  EXPECT_EQ(lines(path("th/lambda_threshold.csv")).front(), "delta,lambda_star");
  EXPECT_EQ(lines(path("th/delta_threshold.csv")).front(), "lambda,delta_star");

  const auto cd = run("model cost-diff --out " + path("cd"));
  ASSERT_EQ(cd.code, 0);
  EXPECT_NE(cd.out.find("sign changes on the grid: 1"), std::string::npos) << cd.out;
  EXPECT_NE(cd.out.find("mu_hat = -0.57261"), std::string::npos) << cd.out;
  ASSERT_EQ(run("model bridge-cost --out " + path("bc")).code, 0);
  EXPECT_EQ(lines(path("bc/bridge_cost.csv")).size(), 202u);
}

TEST_F(Cli, ValidateIsReproducible) {
  ASSERT_EQ(run("--seed 9 model validate --paths 500 --out " + path("v1")).code, 0);
  ASSERT_EQ(run("--seed 9 --threads 3 model validate --paths 500 --out " + path("v2")).code, 0);
  EXPECT_EQ(slurp(path("v1/validate.csv")), slurp(path("v2/validate.csv")));
  const json m = json::parse(slurp(path("v1/manifest.json")));
  EXPECT_EQ(m["seed"], 9);
}

TEST_F(Cli, StatsOnCsvColumns) {
  write_lines(path("s.csv"), {"# comment", "x,y,z", "1,2.1,5", "2,3.9,", "3,6.2,7", "4,8.1,9", "5,9.8,4"});
  const json p = json::parse(run("stats pearson --csv " + path("s.csv") + " --x x --y y").out);
  EXPECT_EQ(p["n"], 5);
  EXPECT_GT(p["r"].get<double>(), 0.99);
  const auto w = run("stats welch --csv " + path("s.csv") + " --a y --b z");
  ASSERT_EQ(w.code, 0);
  const json wj = json::parse(w.out);
  EXPECT_EQ(wj["n_b"], 4);
  EXPECT_EQ(run("stats welch --csv " + path("s.csv") + " --a y --b nope").code, 1);
}
