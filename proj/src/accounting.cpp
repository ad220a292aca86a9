#include "xarb/accounting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <set>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "xarb/error.hpp"
#include "xarb/numfmt.hpp"
#include "xarb/percentile.hpp"
#include "xarb/summation.hpp"

namespace xarb::acct {
namespace {

using nlohmann::ordered_json;

class Pricer {
 public:
  Pricer(const chain::PriceTable& prices, std::vector<std::string>& missing)
      : prices_(prices), missing_(missing) {}

  std::optional<double> usd(const Decimal& amount, const std::optional<std::string>& cls,
                            std::int64_t timestamp, const std::string& what) {
    if (amount.is_zero()) return 0.0;
    if (!cls) {
      missing_.push_back(what + ": no class");
      return std::nullopt;
    }
    const std::int64_t hour = chain::PriceTable::hour_bucket(timestamp);
    auto p = prices_.at_hour(*cls, hour);
    if (!p) {
      missing_.push_back(*cls + "@" + std::to_string(hour));
      return std::nullopt;
    }
    return amount.to_double() * *p;
  }

 private:
  const chain::PriceTable& prices_;
  std::vector<std::string>& missing_;
};

bool match_less(const ArbMatch& a, const ArbMatch& b) {
  return std::tie(a.leg1.timestamp, a.leg1.chain, a.leg1.tx_hash, a.leg2.chain, a.leg2.tx_hash) <
         std::tie(b.leg1.timestamp, b.leg1.chain, b.leg1.tx_hash, b.leg2.chain, b.leg2.tx_hash);
}

double mean(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double m) {
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size() - 1);
}

std::vector<CdfPoint> cumulative(std::map<std::string, double> totals) {
  std::vector<CdfPoint> pts;
  for (const auto& [k, v] : totals) pts.push_back({k, v, 0.0});
  std::sort(pts.begin(), pts.end(), [](const CdfPoint& a, const CdfPoint& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.key < b.key;
  });
  CompensatedSum all;
  for (const auto& p : pts) all.add(p.value);
  CompensatedSum run;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    run.add(pts[i].value);
    pts[i].cumulative_share = i + 1 == pts.size() ? 1.0 : (all.value() > 0 ? run.value() / all.value() : 0.0);
  }
  return pts;
}

ordered_json opt_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json percentiles_json(const std::optional<Percentiles>& p) {
  if (!p) return nullptr;
  return {{"count", p->count}, {"p25", p->p25}, {"p50", p->p50}, {"p75", p->p75}};
}

std::string pct(std::size_t part, std::size_t whole) {
  return format_double(whole ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct GroupAcc {
  std::string kind;
  std::size_t count = 0;
  std::size_t priced = 0;
  CompensatedSum volume, profit;
  std::map<Method, std::size_t> methods;
  std::vector<double> gaps;
};

std::vector<GroupRow> finish_groups(std::map<std::string, GroupAcc>& acc) {
  std::vector<GroupRow> rows;
  for (auto& [k, a] : acc) {
    GroupRow r;
    r.key = k;
    r.kind = a.kind;
    r.count = a.count;
    r.priced_count = a.priced;
    r.volume_usd = a.volume.value();
    r.profit_usd = a.profit.value();
    r.methods = a.methods;
    r.settlement = quartiles(a.gaps);
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const GroupRow& a, const GroupRow& b) {
    if (a.volume_usd != b.volume_usd) return a.volume_usd > b.volume_usd;
    return a.key < b.key;
  });
  return rows;
}

void write_group_quartiles(std::ostream& out, const GroupRow& r) {
  if (r.settlement) {
    out << format_double(r.settlement->p25) << ',' << format_double(r.settlement->p50) << ','
        << format_double(r.settlement->p75);
  } else {
    out << ",,";
  }
}

}  // namespace

ProfitBreakdown price_match(const ArbMatch& m, const chain::PriceTable& prices,
                            const chain::EquivalenceRegistry& registry) {
  ProfitBreakdown p;
  Pricer px(prices, p.missing);
  const auto& l1 = m.leg1;
  const auto& l2 = m.leg2;
  auto in = px.usd(l1.amount_in, registry.class_of(l1.chain, l1.asset_in), l1.timestamp, "leg1 input");
  auto out = px.usd(l2.amount_out, registry.class_of(l2.chain, l2.asset_out), l2.timestamp, "leg2 output");
  auto gas1 = px.usd(l1.gas_fee_native, registry.native_class(l1.chain), l1.timestamp, l1.chain + " gas");
  auto gas2 = px.usd(l2.gas_fee_native, registry.native_class(l2.chain), l2.timestamp, l2.chain + " gas");
  auto tip1 = px.usd(l1.coinbase_tip_native, registry.native_class(l1.chain), l1.timestamp, l1.chain + " tip");
  auto tip2 = px.usd(l2.coinbase_tip_native, registry.native_class(l2.chain), l2.timestamp, l2.chain + " tip");
  std::optional<double> bridge = 0.0;
  if (m.execution && m.execution->bridge_fee_native && m.execution->bridge_out_tx) {
    const std::string& src = m.execution->bridge_out_tx->chain;
    bridge = px.usd(*m.execution->bridge_fee_native, registry.native_class(src),
                    m.execution->bridge_out_timestamp.value_or(l1.timestamp), src + " bridge fee");
  }
  if (!in || !out || !gas1 || !gas2 || !tip1 || !tip2 || !bridge) {
    std::sort(p.missing.begin(), p.missing.end());
    p.missing.erase(std::unique(p.missing.begin(), p.missing.end()), p.missing.end());
    return p;
  }
  p.priced = true;
  p.usd_in_leg1 = *in;
  p.usd_out_leg2 = *out;
  p.gas_fees_usd = *gas1 + *gas2;
  p.coinbase_tips_usd = *tip1 + *tip2;
  p.bridge_fees_usd = *bridge;
  p.revenue_usd = *out - *in;
  p.costs_usd = *p.gas_fees_usd + *p.coinbase_tips_usd + *p.bridge_fees_usd;
  p.net_profit_usd = *p.revenue_usd - *p.costs_usd;
  return p;
}

VolumeConvention volume_convention_from_string(const std::string& s) {
  if (s == "leg1_in") return VolumeConvention::Leg1In;
  if (s == "leg2_out") return VolumeConvention::Leg2Out;
  if (s == "mean") return VolumeConvention::Mean;
  throw ConfigError("unknown volume convention '" + s + "' (leg1_in, leg2_out, mean)");
}

const char* to_string(VolumeConvention v) {
  switch (v) {
    case VolumeConvention::Leg1In:
      return "leg1_in";
    case VolumeConvention::Leg2Out:
      return "leg2_out";
    case VolumeConvention::Mean:
      return "mean";
  }
  return "leg1_in";
}

double volume_usd(const ProfitBreakdown& p, VolumeConvention v) {
  if (!p.priced) return 0.0;
  switch (v) {
    case VolumeConvention::Leg1In:
      return *p.usd_in_leg1;
    case VolumeConvention::Leg2Out:
      return *p.usd_out_leg2;
    case VolumeConvention::Mean:
      return 0.5 * (*p.usd_in_leg1 + *p.usd_out_leg2);
  }
  return *p.usd_in_leg1;
}

std::optional<Percentiles> quartiles(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return Percentiles{*nearest_rank(values, 25), *nearest_rank(values, 50), *nearest_rank(values, 75),
                     values.size()};
}

SettlementStats settlement_stats(const std::vector<ArbMatch>& matches) {
  std::vector<double> all;
  std::map<Method, std::vector<double>> by;
  for (const auto& m : matches) {
    const double gap = static_cast<double>(m.leg2.timestamp - m.leg1.timestamp);
    all.push_back(gap);
    if (m.execution) by[m.execution->method].push_back(gap);
  }
  SettlementStats s;
  s.all = quartiles(all);
  for (const auto& [method, gaps] : by) s.by_method[method] = *quartiles(gaps);
  return s;
}

ConcentrationCdf concentration_cdf(const std::vector<ArbMatch>& matches,
                                   const std::vector<ProfitBreakdown>& profits, VolumeConvention v) {
  if (matches.size() != profits.size()) throw std::invalid_argument("matches and profits differ in size");
  std::map<std::string, double> counts;
  std::map<std::string, CompensatedSum> vol;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    counts[matches[i].entity] += 1.0;
    vol[matches[i].entity].add(volume_usd(profits[i], v));
  }
  std::map<std::string, double> volumes;
  for (const auto& [k, s] : vol) volumes[k] = s.value();
  return {cumulative(counts), cumulative(volumes)};
}

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("welch_test: each sample needs at least 2 values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  WelchResult r;
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  const double va = sample_variance(a, r.mean_a);
  const double vb = sample_variance(b, r.mean_b);
  if (va == 0.0 && vb == 0.0) throw DomainError("welch_test: both samples have zero variance");
  const double qa = va / na;
  const double qb = vb / nb;
  const double se = std::sqrt(qa + qb);
  r.delta = r.mean_a - r.mean_b;
  r.t = r.delta / se;
  r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_two_sided = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
  const double pooled = std::sqrt(((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0));
  r.cohen_d = r.delta / pooled;
  const double crit = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.ci95_low = r.delta - crit * se;
  r.ci95_high = r.delta + crit * se;
  return r;
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("pearson: samples differ in length");
  if (x.size() < 3) throw DomainError("pearson: need at least 3 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() == 0.0 || syy.value() == 0.0) throw DomainError("pearson: zero variance");
  PearsonResult res;
  res.n = x.size();
  res.r = std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
  // Ratios one ulp away from +-1 are perfect correlation.
  if (std::fabs(res.r) > 1.0 - 4 * std::numeric_limits<double>::epsilon()) res.r = res.r > 0 ? 1.0 : -1.0;
  const double df = static_cast<double>(res.n - 2);
  if (std::fabs(res.r) == 1.0) {
    res.p = 0.0;
  } else {
    const double t = res.r * std::sqrt(df / (1.0 - res.r * res.r));
    const boost::math::students_t dist(df);
    res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
  }
  return res;
}

std::string utc_date(std::int64_t timestamp) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(sys_seconds{seconds{timestamp}});
  const year_month_day ymd{days};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::map<std::string, double> daily_volatility(const std::vector<PricePoint>& points) {
  std::map<std::string, std::pair<double, double>> range;
  for (const auto& p : points) {
    if (!(p.price > 0.0) || !std::isfinite(p.price)) throw DomainError("daily_volatility: price must be > 0");
    auto [it, fresh] = range.try_emplace(utc_date(p.timestamp), p.price, p.price);
    if (!fresh) {
      it->second.first = std::max(it->second.first, p.price);
      it->second.second = std::min(it->second.second, p.price);
    }
  }
  std::map<std::string, double> out;
  for (const auto& [day, hl] : range) out[day] = std::log(hl.first / hl.second);
  return out;
}

AccountReport account(std::vector<ArbMatch> matches, const chain::PriceTable& prices,
                      const chain::EquivalenceRegistry& registry, const AccountOptions& opts) {
  AccountReport r;
  r.volume = opts.volume;
  std::sort(matches.begin(), matches.end(), match_less);
  r.matches = std::move(matches);
  r.profits.reserve(r.matches.size());
  for (const auto& m : r.matches) r.profits.push_back(price_match(m, prices, registry));

  CompensatedSum vol, rev, cost, net;
  struct DayAcc {
    std::size_t count = 0, priced = 0;
    CompensatedSum volume, fees, net;
  };
  std::map<std::string, DayAcc> days;
  std::map<std::string, GroupAcc> pairs, entities;
  for (std::size_t i = 0; i < r.matches.size(); ++i) {
    const ArbMatch& m = r.matches[i];
    const ProfitBreakdown& p = r.profits[i];
    const double gap = static_cast<double>(m.leg2.timestamp - m.leg1.timestamp);
    DayAcc& d = days[utc_date(m.leg1.timestamp)];
    ++d.count;
    const std::string a = std::min(m.leg1.chain, m.leg2.chain);
    const std::string b = std::max(m.leg1.chain, m.leg2.chain);
    GroupAcc& pg = pairs[a + "-" + b];
    pg.kind = opts.layers.empty() ? "" : bridge::pair_category(a, b, opts.layers);
    GroupAcc& eg = entities[m.entity];
    eg.kind = to_string(m.entity_type);
    for (GroupAcc* g : {&pg, &eg}) {
      ++g->count;
      g->gaps.push_back(gap);
      if (m.execution) ++g->methods[m.execution->method];
    }
    ++r.totals.matches;
    if (!p.priced) {
      ++r.totals.unpriced;
      continue;
    }
    ++r.totals.priced;
    const double v = volume_usd(p, opts.volume);
    vol.add(v);
    rev.add(*p.revenue_usd);
    cost.add(*p.costs_usd);
    net.add(*p.net_profit_usd);
    ++d.priced;
    d.volume.add(v);
    d.fees.add(*p.costs_usd);
    d.net.add(*p.net_profit_usd);
    for (GroupAcc* g : {&pg, &eg}) {
      ++g->priced;
      g->volume.add(v);
      g->profit.add(*p.net_profit_usd);
    }
  }
  r.totals.volume_usd = vol.value();
  r.totals.revenue_usd = rev.value();
  r.totals.costs_usd = cost.value();
  r.totals.net_profit_usd = net.value();
  for (auto& [date, d] : days) {
    DailyAggregate da;
    da.date = date;
    da.trade_count = d.count;
    da.priced_count = d.priced;
    da.volume_usd = d.volume.value();
    da.mean_fee_usd = d.priced ? d.fees.value() / static_cast<double>(d.priced) : 0.0;
    da.net_profit_usd = d.net.value();
    r.daily.push_back(da);
  }
  r.pairs = finish_groups(pairs);
  r.entities = finish_groups(entities);
  r.settlement = settlement_stats(r.matches);
  r.cdf = concentration_cdf(r.matches, r.profits, opts.volume);

  if (opts.split_time) {
    const std::string split_day = utc_date(*opts.split_time);
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& d : r.daily) {
      auto pick = [&](const char* k) -> std::vector<double>& {
        return d.date < split_day ? series[k].first : series[k].second;
      };
      pick("trade_count").push_back(static_cast<double>(d.trade_count));
      pick("volume_usd").push_back(d.volume_usd);
      if (d.priced_count) pick("mean_fee_usd").push_back(d.mean_fee_usd);
    }
    for (const char* k : {"mean_fee_usd", "trade_count", "volume_usd"}) {
      try {
        r.split_tests[k] = welch_test(series[k].first, series[k].second);
      } catch (const DomainError& e) {
        r.split_errors[k] = e.what();
      }
    }
  }
  return r;
}

std::string report_json(const AccountReport& r) {
  ordered_json j;
  j["volume_convention"] = to_string(r.volume);
  ordered_json t;
  t["matches"] = r.totals.matches;
  t["priced"] = r.totals.priced;
  t["unpriced"] = r.totals.unpriced;
  t["volume_usd"] = r.totals.volume_usd;
  t["revenue_usd"] = r.totals.revenue_usd;
  t["costs_usd"] = r.totals.costs_usd;
  t["net_profit_usd"] = r.totals.net_profit_usd;
  j["totals"] = t;
  std::map<Method, std::size_t> methods;
  std::size_t unclassified = 0;
  for (const auto& m : r.matches) {
    if (m.execution) {
      ++methods[m.execution->method];
    } else {
      ++unclassified;
    }
  }
  ordered_json jm;
  for (Method m : {Method::Inventory, Method::MultichainBridge, Method::NativeBridge}) jm[to_string(m)] = methods[m];
  jm["unclassified"] = unclassified;
  j["execution_methods"] = jm;
  ordered_json s;
  s["all"] = percentiles_json(r.settlement.all);
  for (Method m : {Method::Inventory, Method::MultichainBridge, Method::NativeBridge}) {
    auto it = r.settlement.by_method.find(m);
    s[to_string(m)] = it == r.settlement.by_method.end() ? ordered_json(nullptr)
                                                         : percentiles_json(it->second);
  }
  j["settlement_seconds"] = s;
  std::set<std::string> missing;
  for (const auto& p : r.profits) missing.insert(p.missing.begin(), p.missing.end());
  j["missing_prices"] = missing;
  j["days"] = r.daily.size();
  j["entities"] = r.entities.size();
  j["chain_pairs"] = r.pairs.size();
  if (!r.split_tests.empty() || !r.split_errors.empty()) {
    ordered_json w;
    for (const auto& [k, res] : r.split_tests) {
      w[k] = {{"mean_before", res.mean_a}, {"mean_after", res.mean_b}, {"t", res.t}, {"df", res.df},
              {"p", res.p_two_sided},      {"cohen_d", res.cohen_d},   {"delta", res.delta},
              {"ci95", {res.ci95_low, res.ci95_high}}};
    }
    for (const auto& [k, e] : r.split_errors) w[k] = {{"error", e}};
    j["split_tests"] = w;
  }
  return j.dump(2);
}

void write_daily_csv(std::ostream& out, const AccountReport& r) {
  out << "date,count,volume_usd,mean_fee_usd\n";
  for (const auto& d : r.daily) {
    out << d.date << ',' << d.trade_count << ',' << format_double(d.volume_usd) << ','
        << format_double(d.mean_fee_usd) << '\n';
  }
}

void write_pairs_csv(std::ostream& out, const AccountReport& r) {
  out << "chain_pair,category,volume_usd,profit_usd,avg_volume_usd,avg_profit_usd,count,"
         "inventory_pct,multichain_pct,native_pct,settlement_p25,settlement_p50,settlement_p75\n";
  for (const auto& g : r.pairs) {
    const double n = static_cast<double>(g.priced_count);
    out << csv_field(g.key) << ',' << g.kind << ',' << format_double(g.volume_usd) << ','
        << format_double(g.profit_usd) << ',' << (g.priced_count ? format_double(g.volume_usd / n) : "")
        << ',' << (g.priced_count ? format_double(g.profit_usd / n) : "") << ',' << g.count << ',';
    auto count_of = [&](Method m) {
      auto it = g.methods.find(m);
      return it == g.methods.end() ? std::size_t{0} : it->second;
    };
    out << pct(count_of(Method::Inventory), g.count) << ',' << pct(count_of(Method::MultichainBridge), g.count)
        << ',' << pct(count_of(Method::NativeBridge), g.count) << ',';
    write_group_quartiles(out, g);
    out << '\n';
  }
}

void write_entities_csv(std::ostream& out, const AccountReport& r) {
  out << "entity,type,volume_usd,profit_usd,avg_volume_usd,avg_profit_usd,count,inventory_pct,"
         "bridge_pct,settlement_p25,settlement_p50,settlement_p75\n";
  for (const auto& g : r.entities) {
    const double n = static_cast<double>(g.priced_count);
    std::size_t inventory = 0, bridged = 0;
    for (const auto& [m, c] : g.methods) (m == Method::Inventory ? inventory : bridged) += c;
    out << csv_field(g.key) << ',' << g.kind << ',' << format_double(g.volume_usd) << ','
        << format_double(g.profit_usd) << ',' << (g.priced_count ? format_double(g.volume_usd / n) : "")
        << ',' << (g.priced_count ? format_double(g.profit_usd / n) : "") << ',' << g.count << ','
        << pct(inventory, g.count) << ',' << pct(bridged, g.count) << ',';
    write_group_quartiles(out, g);
    out << '\n';
  }
}

void write_cdf_csv(std::ostream& out, const AccountReport& r) {
  out << "metric,rank,entity,value,cumulative_share\n";
  auto emit = [&](const char* metric, const std::vector<CdfPoint>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out << metric << ',' << i + 1 << ',' << csv_field(pts[i].key) << ',' << format_double(pts[i].value)
          << ',' << format_double(pts[i].cumulative_share) << '\n';
    }
  };
  emit("count", r.cdf.by_count);
  emit("volume", r.cdf.by_volume);
}

void write_profits_jsonl(std::ostream& out, const AccountReport& r) {
  for (std::size_t i = 0; i < r.matches.size(); ++i) {
    const auto& m = r.matches[i];
    const auto& p = r.profits[i];
    ordered_json j;
    j["leg1"] = {{"chain", m.leg1.chain}, {"tx_hash", m.leg1.tx_hash}};
    j["leg2"] = {{"chain", m.leg2.chain}, {"tx_hash", m.leg2.tx_hash}};
    j["priced"] = p.priced;
    j["usd_in_leg1"] = opt_json(p.usd_in_leg1);
    j["usd_out_leg2"] = opt_json(p.usd_out_leg2);
    j["gas_fees_usd"] = opt_json(p.gas_fees_usd);
    j["coinbase_tips_usd"] = opt_json(p.coinbase_tips_usd);
    j["bridge_fees_usd"] = opt_json(p.bridge_fees_usd);
    j["revenue_usd"] = opt_json(p.revenue_usd);
    j["costs_usd"] = opt_json(p.costs_usd);
    j["net_profit_usd"] = opt_json(p.net_profit_usd);
    if (!p.missing.empty()) j["missing_prices"] = p.missing;
    out << j.dump() << '\n';
  }
}

}  // namespace xarb::acct
