#pragma once

// Reference matcher: every ordered pair is tested directly, ratios are
// compared by integer cross-multiplication, and de-duplication repeatedly
// takes the best remaining candidate by linear search.

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "xarb/chaindata.hpp"
#include "xarb/detector.hpp"
#include "xarb/match.hpp"

namespace xarb::oracle {

using BigInt = boost::multiprecision::cpp_int;

struct BruteCandidate {
  std::size_t i, j;
  BigInt diff, den;
  std::int64_t gap;
  PairClass pc;
};

inline BigInt big(const Decimal& d) { return BigInt(d.units()); }

inline std::vector<ArbMatch> brute_force_detect(const std::vector<chain::SwapRecord>& raw,
                                                const chain::EquivalenceRegistry& reg,
                                                const chain::LabelSet& labels,
                                                const detect::DetectorConfig& cfg) {
  const auto recs = chain::aggregate_swaps(raw).records;
  const BigInt one = BigInt(Decimal::parse("1").units());
  const BigInt thr = big(cfg.marginal_threshold);
  const BigInt dthr = big(cfg.dedup_marginal);
  std::vector<BruteCandidate> cands;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t j = 0; j < recs.size(); ++j) {
      if (i == j) continue;
      const auto& a = recs[i];
      const auto& b = recs[j];
      if (a.chain == b.chain) continue;
      auto ai = reg.class_of(a.chain, a.asset_in), ao = reg.class_of(a.chain, a.asset_out);
      auto bi = reg.class_of(b.chain, b.asset_in), bo = reg.class_of(b.chain, b.asset_out);
      if (!ai || !ao || !bi || !bo || *ai == *ao || *bi == *bo) continue;
      if (*ao != *bi || *bo != *ai) continue;
      if (a.amount_out.is_zero() || b.amount_out.is_zero()) continue;
      BigInt diff = big(a.amount_out) - big(b.amount_in);
      if (diff < 0) diff = -diff;
      const BigInt den = big(a.amount_out);
      if (diff * one > thr * den) continue;
      const auto ia = reg.info(*ai), io = reg.info(*ao);
      const bool sn = (ia->is_stable && io->is_native) || (ia->is_native && io->is_stable);
      const PairClass pc = sn ? PairClass::StablecoinNative : PairClass::Other;
      const std::int64_t window = sn ? cfg.window_stable_seconds : cfg.window_other_seconds;
      const std::int64_t gap = b.timestamp - a.timestamp;
      if (gap < -cfg.clock_skew_tolerance || gap > window) continue;
      const bool linked = a.originator == b.originator ||
                          (a.first_contact && b.first_contact && *a.first_contact == *b.first_contact &&
                           !labels.is_non_mev(*a.first_contact));
      if (!linked) continue;
      cands.push_back({i, j, diff, den, gap, pc});
    }
  }

  auto key_less = [&](const BruteCandidate& x, const BruteCandidate& y) {
    const bool xm = x.diff * one < dthr * x.den, ym = y.diff * one < dthr * y.den;
    if (xm != ym) return xm;
    const std::int64_t xg = x.gap < 0 ? -x.gap : x.gap, yg = y.gap < 0 ? -y.gap : y.gap;
    const bool xgp = xg <= cfg.dedup_gap_seconds, ygp = yg <= cfg.dedup_gap_seconds;
    if (xgp != ygp) return xgp;
    const BigInt l = x.diff * y.den, r = y.diff * x.den;
    if (l != r) return l < r;
    if (xg != yg) return xg < yg;
    const auto& x1 = recs[x.i];
    const auto& y1 = recs[y.i];
    const auto& x2 = recs[x.j];
    const auto& y2 = recs[y.j];
    return std::tie(x1.chain, x1.tx_hash, x2.chain, x2.tx_hash) <
           std::tie(y1.chain, y1.tx_hash, y2.chain, y2.tx_hash);
  };

  std::vector<ArbMatch> out;
  std::vector<char> alive(cands.size(), 1);
  for (;;) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (alive[c] && (!best || key_less(cands[c], cands[*best]))) best = c;
    }
    if (!best) break;
    const BruteCandidate& w = cands[*best];
    std::size_t rank = 0;
    for (const auto& c : cands) rank += key_less(c, w) ? 1 : 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (cands[c].i == w.i || cands[c].j == w.j || cands[c].i == w.j || cands[c].j == w.i) alive[c] = 0;
    }
    const auto& a = recs[w.i];
    const auto& b = recs[w.j];
    ArbMatch m;
    m.leg1 = a;
    m.leg2 = b;
    m.class_in = *reg.class_of(a.chain, a.asset_in);
    m.class_out = *reg.class_of(a.chain, a.asset_out);
    m.marginal_diff = ratio_to_double(Decimal::from_units(Decimal::Rep(w.diff)), a.amount_out);
    m.time_gap = w.gap;
    m.pair_class = w.pc;
    m.dedup_marginal_pass = w.diff * one < dthr * w.den;
    m.dedup_gap_pass = (w.gap < 0 ? -w.gap : w.gap) <= cfg.dedup_gap_seconds;
    m.dedup_rank = rank;
    const bool eoa = a.originator == b.originator;
    m.entity = eoa ? a.originator : a.first_contact.value_or("");
    m.entity_type = eoa ? EntityType::Eoa : EntityType::Contract;
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const ArbMatch& x, const ArbMatch& y) {
    return std::tie(x.leg1.timestamp, x.leg1.chain, x.leg1.tx_hash, x.leg2.chain, x.leg2.tx_hash) <
           std::tie(y.leg1.timestamp, y.leg1.chain, y.leg1.tx_hash, y.leg2.chain, y.leg2.tx_hash);
  });
  return out;
}

struct RandomInstance {
  std::vector<chain::SwapRecord> swaps;
  chain::EquivalenceRegistry registry;
  chain::LabelSet labels;
};

/// Small dense world with many near-ties: three chains, WETH/USDC/WBTC plus an
/// unmapped token, amounts within a few per mille of each other.
inline RandomInstance random_instance(std::uint64_t seed, std::size_t max_swaps = 200) {
  std::mt19937_64 rng(seed);
  RandomInstance inst;
  const std::vector<std::string> chains = {"ethereum", "arbitrum", "base"};
  for (const auto& c : chains) {
    inst.registry.add(c, "weth", "eth", {false, true});
    inst.registry.add(c, "native", "eth", {false, true});
    inst.registry.add(c, "usdc", "usd", {true, false});
    inst.registry.add(c, "wbtc", "btc", {false, false});
  }
  inst.labels.add("0xrouter", chain::LabelKind::NonMev);
  const std::vector<std::string> assets = {"weth", "usdc", "wbtc", "junk"};
  const std::vector<std::string> users = {"0xe1", "0xe2", "0xe3", "0xe4"};
  const std::vector<std::string> contracts = {"0xbot", "0xrouter", "0xbot2"};
  const std::vector<std::string> amounts = {"1000", "1000.5", "999", "1003", "1004.9", "996",
                                            "1000.0000001", "1010", "998.2"};
  std::uniform_int_distribution<std::size_t> n_dist(2, max_swaps);
  const std::size_t n = n_dist(rng);
  auto pick = [&](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
  for (std::size_t k = 0; k < n; ++k) {
    chain::SwapRecord s;
    s.chain = pick(chains);
    s.tx_hash = "0x" + std::to_string(rng() % 100000);
    s.timestamp = static_cast<std::int64_t>(rng() % 900);
    s.block = s.timestamp / 2;
    s.originator = pick(users);
    if (rng() % 3 != 0) s.first_contact = pick(contracts);
    s.asset_in = pick(assets);
    do {
      s.asset_out = pick(assets);
    } while (s.asset_out == s.asset_in);
    s.amount_in = Decimal::parse(pick(amounts));
    s.amount_out = Decimal::parse(pick(amounts));
    s.gas_fee_native = Decimal::parse("0.0001");
    inst.swaps.push_back(std::move(s));
  }
  return inst;
}

/// Tight windows so that H3 and both de-dup levels all bind on random data.
inline detect::DetectorConfig oracle_config() {
  detect::DetectorConfig c;
  c.window_stable_seconds = 12;
  c.window_other_seconds = 400;
  c.dedup_gap_seconds = 120;
  c.clock_skew_tolerance = 5;
  return c;
}

}  // namespace xarb::oracle
