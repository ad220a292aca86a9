#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include <json.hpp>

#include "cli_common.hpp"
#include "xarb/accounting.hpp"
#include "xarb/error.hpp"

namespace xarb::cli {

namespace {

using json = nlohmann::ordered_json;

/// Header plus rows of a plain comma-separated file; quoted fields are
/// unquoted but may not contain commas. Lines starting with '#' are skipped.
struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw ConfigError(path + ": no column named '" + name + "'");
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '"' && ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  Table t;
  t.path = path;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    if (!have_header) {
      t.header = split(line);
      have_header = true;
    } else {
      t.rows.push_back(split(line));
    }
  }
  if (!have_header) throw DataError(path + ": empty file");
  return t;
}

std::optional<double> number(const Table& t, std::size_t row, std::size_t col, bool strict) {
  const auto& r = t.rows[row];
  if (col >= r.size() || r[col].empty()) return std::nullopt;
  const std::string& s = r[col];
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    if (strict) throw DataError(t.path + ":" + std::to_string(row + 2) + ": not a number: '" + s + "'");
    return std::nullopt;
  }
  return v;
}

std::vector<double> column_values(const Table& t, const std::string& name, bool strict) {
  const std::size_t c = t.column(name);
  std::vector<double> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (auto v = number(t, i, c, strict)) out.push_back(*v);
  }
  return out;
}

struct WelchArgs {
  std::string csv, csv_b, a, b;
};

void run_welch(const WelchArgs& w, const Globals& g) {
  const Table ta = read_table(w.csv);
  const Table tb = w.csv_b.empty() ? ta : read_table(w.csv_b);
  const auto a = column_values(ta, w.a, g.strict);
  const auto b = column_values(tb, w.b, g.strict);
  const auto r = acct::welch_test(a, b);
  json j{{"test", "welch"},    {"n_a", a.size()},         {"n_b", b.size()},           {"mean_a", r.mean_a},
         {"mean_b", r.mean_b}, {"delta", r.delta},        {"t", r.t},                  {"df", r.df},
         {"p", r.p_two_sided}, {"cohen_d", r.cohen_d},    {"ci95_low", r.ci95_low},    {"ci95_high", r.ci95_high}};
  std::cout << j.dump(2) << '\n';
}

struct PearsonArgs {
  std::string csv, x, y;
};

void run_pearson(const PearsonArgs& p, const Globals& g) {
  const Table t = read_table(p.csv);
  const std::size_t cx = t.column(p.x);
  const std::size_t cy = t.column(p.y);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto x = number(t, i, cx, g.strict);
    auto y = number(t, i, cy, g.strict);
    if (x && y) {
      xs.push_back(*x);
      ys.push_back(*y);
    }
  }
  const auto r = acct::pearson(xs, ys);
  std::cout << json{{"test", "pearson"}, {"n", r.n}, {"r", r.r}, {"p", r.p}}.dump(2) << '\n';
}

struct VolatilityArgs {
  std::string csv, time = "timestamp", price = "price";
};

void run_volatility(const VolatilityArgs& v, const Globals& g) {
  const Table t = read_table(v.csv);
  const std::size_t ct = t.column(v.time);
  const std::size_t cp = t.column(v.price);
  std::vector<acct::PricePoint> pts;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto ts = number(t, i, ct, g.strict);
    auto px = number(t, i, cp, g.strict);
    if (ts && px) pts.push_back({static_cast<std::int64_t>(*ts), *px});
  }
  json days = json::object();
  for (const auto& [date, vol] : acct::daily_volatility(pts)) days[date] = vol;
  std::cout << json{{"daily_volatility", days}}.dump(2) << '\n';
}

}  // namespace

void add_stats_commands(CLI::App& app, Globals& g) {
  CLI::App* stats = app.add_subcommand("stats", "Statistical tests on CSV columns");
  stats->require_subcommand(1);

  auto w = std::make_shared<WelchArgs>();
  CLI::App* c = stats->add_subcommand("welch", "Welch two-sample t-test");
  c->add_option("--csv", w->csv, "CSV holding column a (and b unless --csv-b)")->required();
  c->add_option("--csv-b", w->csv_b, "CSV holding column b");
  c->add_option("--a", w->a, "First sample column")->required();
  c->add_option("--b", w->b, "Second sample column")->required();
  c->callback([w, &g] { run_welch(*w, g); });

  auto p = std::make_shared<PearsonArgs>();
  c = stats->add_subcommand("pearson", "Pearson correlation with two-sided p-value");
  c->add_option("--csv", p->csv, "CSV file")->required();
  c->add_option("--x", p->x, "First column")->required();
  c->add_option("--y", p->y, "Second column")->required();
  c->callback([p, &g] { run_pearson(*p, g); });

  auto v = std::make_shared<VolatilityArgs>();
  c = stats->add_subcommand("volatility", "Daily ln(max/min) price range");
  c->add_option("--csv", v->csv, "CSV file")->required();
  c->add_option("--time", v->time, "Unix timestamp column")->capture_default_str();
  c->add_option("--price", v->price, "Price column")->capture_default_str();
  c->callback([v, &g] { run_volatility(*v, g); });
}

}  // namespace xarb::cli
