#include "xarb/detector.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "xarb/error.hpp"
#include "xarb/parallel.hpp"

namespace xarb::detect {
namespace {

using chain::SwapRecord;

struct Classes {
  std::string in;
  std::string out;
  bool usable = false;
};

std::int64_t window_for(PairClass pc, const DetectorConfig& c) {
  return pc == PairClass::StablecoinNative ? c.window_stable_seconds : c.window_other_seconds;
}

std::int64_t abs_gap(std::int64_t g) { return g < 0 ? -g : g; }

bool ref_less(const SwapRecord& a, const SwapRecord& b) {
  return std::tie(a.chain, a.tx_hash) < std::tie(b.chain, b.tx_hash);
}

Decimal abs_diff(const Decimal& a, const Decimal& b) { return a > b ? a - b : b - a; }

}  // namespace

void DetectorConfig::validate() const {
  if (!(marginal_threshold > Decimal())) throw ConfigError("marginal_threshold must be > 0");
  if (!(dedup_marginal > Decimal())) throw ConfigError("dedup_marginal must be > 0");
  if (dedup_marginal > marginal_threshold) {
    throw ConfigError("dedup_marginal must not exceed marginal_threshold");
  }
  if (window_stable_seconds <= 0 || window_other_seconds <= 0) {
    throw ConfigError("windows must be > 0");
  }
  if (dedup_gap_seconds < 0) throw ConfigError("dedup_gap_seconds must be >= 0");
  if (clock_skew_tolerance < 0) throw ConfigError("clock_skew_tolerance must be >= 0");
}

PairClass pair_class_of(const std::string& a, const std::string& b,
                        const chain::EquivalenceRegistry& registry) {
  const auto ia = registry.info(a);
  const auto ib = registry.info(b);
  if (!ia || !ib) return PairClass::Other;
  if ((ia->is_stable && ib->is_native) || (ia->is_native && ib->is_stable)) {
    return PairClass::StablecoinNative;
  }
  return PairClass::Other;
}

bool entity_link(const SwapRecord& leg1, const SwapRecord& leg2, const chain::LabelSet& labels) {
  if (leg1.originator == leg2.originator) return true;
  return leg1.first_contact && leg2.first_contact && *leg1.first_contact == *leg2.first_contact &&
         !labels.is_non_mev(*leg1.first_contact);
}

CandidateSet find_candidates(const std::vector<SwapRecord>& swaps,
                             const chain::EquivalenceRegistry& registry,
                             const DetectorConfig& config) {
  config.validate();
  CandidateSet out;
  std::vector<Classes> classes(swaps.size());
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> buckets;
  std::set<std::string> unmapped;
  for (std::size_t i = 0; i < swaps.size(); ++i) {
    const SwapRecord& s = swaps[i];
    auto cin = registry.class_of(s.chain, s.asset_in);
    auto cout = registry.class_of(s.chain, s.asset_out);
    if (!cin || !cout) {
      ++out.unmapped_records;
      if (!cin) unmapped.insert(s.chain + "/" + s.asset_in);
      if (!cout) unmapped.insert(s.chain + "/" + s.asset_out);
      continue;
    }
    if (*cin == *cout) {
      ++out.same_class_records;
      continue;
    }
    if (s.amount_out.is_zero()) {
      ++out.zero_output_records;
      continue;
    }
    classes[i] = {*cin, *cout, true};
    buckets[std::minmax(*cin, *cout)].push_back(i);
  }
  out.unmapped_assets.assign(unmapped.begin(), unmapped.end());

  std::vector<std::vector<std::size_t>*> bucket_list;
  std::vector<PairClass> bucket_class;
  for (auto& [key, members] : buckets) {
    bucket_list.push_back(&members);
    bucket_class.push_back(pair_class_of(key.first, key.second, registry));
  }
  std::vector<std::vector<Candidate>> found(bucket_list.size());

  parallel_for(bucket_list.size(), config.threads, [&](std::size_t b) {
    std::vector<std::size_t>& idx = *bucket_list[b];
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      if (swaps[x].timestamp != swaps[y].timestamp) return swaps[x].timestamp < swaps[y].timestamp;
      return ref_less(swaps[x], swaps[y]);
    });
    const PairClass pc = bucket_class[b];
    const std::int64_t window = window_for(pc, config);
    auto& sink = found[b];
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const SwapRecord& l1 = swaps[idx[a]];
      const Classes& c1 = classes[idx[a]];
      const std::int64_t lo = l1.timestamp - config.clock_skew_tolerance;
      const std::int64_t hi = l1.timestamp + window;
      auto first = std::lower_bound(idx.begin(), idx.end(), lo, [&](std::size_t k, std::int64_t t) {
        return swaps[k].timestamp < t;
      });
      for (auto it = first; it != idx.end() && swaps[*it].timestamp <= hi; ++it) {
        if (*it == idx[a]) continue;
        const SwapRecord& l2 = swaps[*it];
        const Classes& c2 = classes[*it];
        if (l2.chain == l1.chain) continue;
        if (c2.in != c1.out || c2.out != c1.in) continue;
        Decimal diff = abs_diff(l1.amount_out, l2.amount_in);
        if (!ratio_at_most(diff, l1.amount_out, config.marginal_threshold)) continue;
        Candidate c;
        c.leg1 = idx[a];
        c.leg2 = *it;
        c.marginal_diff = ratio_to_double(diff, l1.amount_out);
        c.diff = std::move(diff);
        c.time_gap = l2.timestamp - l1.timestamp;
        c.pair_class = pc;
        sink.push_back(std::move(c));
      }
    }
  });

  for (auto& f : found) {
    for (auto& c : f) out.candidates.push_back(std::move(c));
  }
  std::sort(out.candidates.begin(), out.candidates.end(), [&](const Candidate& x, const Candidate& y) {
    const SwapRecord& ax = swaps[x.leg1];
    const SwapRecord& ay = swaps[y.leg1];
    if (ax.timestamp != ay.timestamp) return ax.timestamp < ay.timestamp;
    if (ref_less(ax, ay)) return true;
    if (ref_less(ay, ax)) return false;
    return ref_less(swaps[x.leg2], swaps[y.leg2]);
  });
  return out;
}

bool rank_before(const Candidate& a, const Candidate& b, const std::vector<SwapRecord>& swaps,
                 const DetectorConfig& config) {
  const SwapRecord& a1 = swaps[a.leg1];
  const SwapRecord& b1 = swaps[b.leg1];
  const bool a_m = ratio_below(a.diff, a1.amount_out, config.dedup_marginal);
  const bool b_m = ratio_below(b.diff, b1.amount_out, config.dedup_marginal);
  if (a_m != b_m) return a_m;
  const bool a_g = abs_gap(a.time_gap) <= config.dedup_gap_seconds;
  const bool b_g = abs_gap(b.time_gap) <= config.dedup_gap_seconds;
  if (a_g != b_g) return a_g;
  const int cmp = compare_ratios(a.diff, a1.amount_out, b.diff, b1.amount_out);
  if (cmp != 0) return cmp < 0;
  if (abs_gap(a.time_gap) != abs_gap(b.time_gap)) return abs_gap(a.time_gap) < abs_gap(b.time_gap);
  if (ref_less(a1, b1)) return true;
  if (ref_less(b1, a1)) return false;
  return ref_less(swaps[a.leg2], swaps[b.leg2]);
}

std::vector<ArbMatch> deduplicate(std::vector<Candidate> candidates,
                                  const std::vector<SwapRecord>& swaps,
                                  const chain::EquivalenceRegistry& registry,
                                  const DetectorConfig& config) {
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    return rank_before(a, b, swaps, config);
  });
  std::vector<char> used(swaps.size(), 0);
  std::vector<ArbMatch> out;
  for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
    const Candidate& c = candidates[rank];
    if (used[c.leg1] || used[c.leg2]) continue;
    used[c.leg1] = used[c.leg2] = 1;
    const SwapRecord& l1 = swaps[c.leg1];
    const SwapRecord& l2 = swaps[c.leg2];
    ArbMatch m;
    m.leg1 = l1;
    m.leg2 = l2;
    m.class_in = registry.class_of(l1.chain, l1.asset_in).value_or("");
    m.class_out = registry.class_of(l1.chain, l1.asset_out).value_or("");
    m.marginal_diff = c.marginal_diff;
    m.time_gap = c.time_gap;
    m.pair_class = c.pair_class;
    m.dedup_marginal_pass = ratio_below(c.diff, l1.amount_out, config.dedup_marginal);
    m.dedup_gap_pass = abs_gap(c.time_gap) <= config.dedup_gap_seconds;
    m.dedup_rank = rank;
    if (l1.originator == l2.originator) {
      m.entity = l1.originator;
      m.entity_type = EntityType::Eoa;
    } else {
      m.entity = l1.first_contact.value_or("");
      m.entity_type = EntityType::Contract;
    }
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const ArbMatch& a, const ArbMatch& b) {
    if (a.leg1.timestamp != b.leg1.timestamp) return a.leg1.timestamp < b.leg1.timestamp;
    if (ref_less(a.leg1, b.leg1)) return true;
    if (ref_less(b.leg1, a.leg1)) return false;
    return ref_less(a.leg2, b.leg2);
  });
  return out;
}

DetectResult detect(std::vector<SwapRecord> swaps, const chain::EquivalenceRegistry& registry,
                    const chain::LabelSet& labels, const DetectorConfig& config) {
  config.validate();
  DetectResult result;
  DetectReport& rep = result.report;
  rep.input_records = swaps.size();
  auto agg = chain::aggregate_swaps(std::move(swaps));
  rep.aggregated_records = agg.records.size();
  rep.ambiguous_endpoints = agg.ambiguous.size();
  const auto& records = agg.records;

  CandidateSet cs = find_candidates(records, registry, config);
  rep.unmapped_records = cs.unmapped_records;
  rep.same_class_records = cs.same_class_records;
  rep.zero_output_records = cs.zero_output_records;
  rep.unmapped_assets = cs.unmapped_assets;
  rep.candidates = cs.candidates.size();
  std::vector<Candidate> linked;
  linked.reserve(cs.candidates.size());
  for (auto& c : cs.candidates) {
    if (entity_link(records[c.leg1], records[c.leg2], labels)) linked.push_back(std::move(c));
  }
  rep.candidates_linked = linked.size();
  result.matches = deduplicate(std::move(linked), records, registry, config);
  rep.matches = result.matches.size();
  return result;
}

std::vector<std::string> validate_matches(const std::vector<ArbMatch>& matches,
                                          const chain::EquivalenceRegistry& registry,
                                          const chain::LabelSet& labels,
                                          const DetectorConfig& config) {
  std::vector<std::string> bad;
  std::set<chain::TxRef> seen;
  for (const auto& m : matches) {
    const std::string id = m.leg1.tx_hash + "/" + m.leg2.tx_hash;
    auto fail = [&](const std::string& what) { bad.push_back(id + ": " + what); };
    if (m.leg1.chain == m.leg2.chain) fail("legs on the same chain");
    const auto in1 = registry.class_of(m.leg1.chain, m.leg1.asset_in);
    const auto out1 = registry.class_of(m.leg1.chain, m.leg1.asset_out);
    const auto in2 = registry.class_of(m.leg2.chain, m.leg2.asset_in);
    const auto out2 = registry.class_of(m.leg2.chain, m.leg2.asset_out);
    if (!in1 || !out1 || !in2 || !out2) {
      fail("unmapped asset");
      continue;
    }
    if (*out1 != *in2 || *out2 != *in1 || *in1 == *out1) fail("H1: classes do not close the loop");
    if (m.class_in != *in1 || m.class_out != *out1) fail("recorded classes differ");
    if (m.leg1.amount_out.is_zero()) {
      fail("H2: zero leg1 output");
    } else {
      const Decimal diff = abs_diff(m.leg1.amount_out, m.leg2.amount_in);
      if (!ratio_at_most(diff, m.leg1.amount_out, config.marginal_threshold)) {
        fail("H2: marginal difference above threshold");
      }
    }
    const std::int64_t gap = m.leg2.timestamp - m.leg1.timestamp;
    if (gap != m.time_gap) fail("recorded time gap differs");
    const PairClass pc = pair_class_of(*in1, *out1, registry);
    if (pc != m.pair_class) fail("recorded pair class differs");
    if (gap < -config.clock_skew_tolerance || gap > window_for(pc, config)) {
      fail("H3: time gap outside window");
    }
    if (!entity_link(m.leg1, m.leg2, labels)) fail("H4: legs not linked to one entity");
    if (!seen.insert(m.leg1.ref()).second) fail("leg1 tx used twice");
    if (!seen.insert(m.leg2.ref()).second) fail("leg2 tx used twice");
  }
  return bad;
}

std::string report_json(const DetectReport& r) {
  nlohmann::ordered_json j;
  j["input_records"] = r.input_records;
  j["aggregated_records"] = r.aggregated_records;
  j["ambiguous_endpoints"] = r.ambiguous_endpoints;
  j["unmapped_records"] = r.unmapped_records;
  j["same_class_records"] = r.same_class_records;
  j["zero_output_records"] = r.zero_output_records;
  j["candidates"] = r.candidates;
  j["candidates_linked"] = r.candidates_linked;
  j["matches"] = r.matches;
  j["unmapped_assets"] = r.unmapped_assets;
  return j.dump(2);
}

}  // namespace xarb::detect
