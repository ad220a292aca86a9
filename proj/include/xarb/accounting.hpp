#pragma once

// USD valuation, net profit and summary statistics over detected matches.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xarb/bridgelink.hpp"
#include "xarb/chaindata.hpp"
#include "xarb/match.hpp"

namespace xarb::acct {

/// NetProfit = (USD out of leg2 - USD in of leg1) - (gas + tips + bridge fee).
/// Only the source-chain bridge call is charged. Every field is empty when
/// any needed price is missing.
struct ProfitBreakdown {
  bool priced = false;
  std::optional<double> usd_in_leg1;
  std::optional<double> usd_out_leg2;
  std::optional<double> gas_fees_usd;
  std::optional<double> coinbase_tips_usd;
  std::optional<double> bridge_fees_usd;
  std::optional<double> revenue_usd;
  std::optional<double> costs_usd;
  std::optional<double> net_profit_usd;
  std::vector<std::string> missing;  // "class@hour" price keys that were absent
};

ProfitBreakdown price_match(const ArbMatch& match, const chain::PriceTable& prices,
                            const chain::EquivalenceRegistry& registry);

enum class VolumeConvention { Leg1In, Leg2Out, Mean };
VolumeConvention volume_convention_from_string(const std::string& s);
const char* to_string(VolumeConvention v);

/// USD volume of one priced match under the convention.
double volume_usd(const ProfitBreakdown& p, VolumeConvention v = VolumeConvention::Leg1In);

struct Percentiles {
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  std::size_t count = 0;
};

/// Nearest-rank quartiles of the values, empty for no values.
std::optional<Percentiles> quartiles(const std::vector<double>& values);

struct SettlementStats {
  std::optional<Percentiles> all;
  std::map<Method, Percentiles> by_method;  // only classes that occur
};

/// Quartiles of leg2 - leg1 time; matches without an execution class count
/// only towards `all`.
SettlementStats settlement_stats(const std::vector<ArbMatch>& matches);

struct CdfPoint {
  std::string key;
  double value = 0.0;
  double cumulative_share = 0.0;
};

struct ConcentrationCdf {
  std::vector<CdfPoint> by_count;   // entities by descending trade count
  std::vector<CdfPoint> by_volume;  // entities by descending USD volume
};

/// Ties are broken by key. Unpriced matches add to counts, not to volume.
ConcentrationCdf concentration_cdf(const std::vector<ArbMatch>& matches,
                                   const std::vector<ProfitBreakdown>& profits,
                                   VolumeConvention v = VolumeConvention::Leg1In);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  double cohen_d = 0.0;   // mean difference over the pooled sample SD
  double delta = 0.0;     // mean(a) - mean(b)
  double ci95_low = 0.0;  // 95% interval of delta on df degrees of freedom
  double ci95_high = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

/// Throws DomainError for samples smaller than 2 or when both variances are 0.
WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Throws DomainError for n < 3, unequal lengths or zero variance.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

struct PricePoint {
  std::int64_t timestamp = 0;
  double price = 0.0;
};

/// ln(max / min) per UTC day ("YYYY-MM-DD"), for days with at least one point.
/// Throws DomainError on non-positive prices.
std::map<std::string, double> daily_volatility(const std::vector<PricePoint>& points);

/// UTC calendar date of a Unix timestamp.
std::string utc_date(std::int64_t timestamp);

struct DailyAggregate {
  std::string date;
  std::size_t trade_count = 0;
  std::size_t priced_count = 0;
  double volume_usd = 0.0;
  double mean_fee_usd = 0.0;  // mean costs over priced matches
  double net_profit_usd = 0.0;
};

struct GroupRow {
  std::string key;
  std::string kind;  // entity type for entity rows, chain-pair category for pair rows
  std::size_t count = 0;
  std::size_t priced_count = 0;
  double volume_usd = 0.0;
  double profit_usd = 0.0;
  std::map<Method, std::size_t> methods;
  std::optional<Percentiles> settlement;
};

struct Totals {
  std::size_t matches = 0;
  std::size_t priced = 0;
  std::size_t unpriced = 0;
  double volume_usd = 0.0;
  double revenue_usd = 0.0;
  double costs_usd = 0.0;
  double net_profit_usd = 0.0;
};

struct AccountOptions {
  VolumeConvention volume = VolumeConvention::Leg1In;
  bridge::ChainLayers layers;
  /// When set, daily aggregates before and after this Unix time are compared
  /// with Welch tests.
  std::optional<std::int64_t> split_time;
};

struct AccountReport {
  std::vector<ArbMatch> matches;  // canonical order
  std::vector<ProfitBreakdown> profits;
  Totals totals;
  SettlementStats settlement;
  std::vector<DailyAggregate> daily;
  std::vector<GroupRow> pairs;     // by descending volume, then key
  std::vector<GroupRow> entities;  // by descending volume, then key
  ConcentrationCdf cdf;
  std::map<std::string, WelchResult> split_tests;  // metric -> test
  std::map<std::string, std::string> split_errors;
  VolumeConvention volume = VolumeConvention::Leg1In;
};

AccountReport account(std::vector<ArbMatch> matches, const chain::PriceTable& prices,
                      const chain::EquivalenceRegistry& registry, const AccountOptions& opts = {});

std::string report_json(const AccountReport& r);
void write_daily_csv(std::ostream& out, const AccountReport& r);
void write_pairs_csv(std::ostream& out, const AccountReport& r);
void write_entities_csv(std::ostream& out, const AccountReport& r);
void write_cdf_csv(std::ostream& out, const AccountReport& r);
/// One line per match: leg refs plus the breakdown, nulls when unpriced.
void write_profits_jsonl(std::ostream& out, const AccountReport& r);

}  // namespace xarb::acct
