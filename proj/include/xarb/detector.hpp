#pragma once

// Two-leg cross-chain arbitrage detection.
//
// H1: leg1 sells class X for class Y on one chain, leg2 sells Y for X on another.
// H2: |x_out(leg1) - x_in(leg2)| <= marginal_threshold * x_out(leg1), exact.
// H3: -clock_skew_tolerance <= t2 - t1 <= window, where the window is
//     window_stable_seconds for stablecoin-native pairs, else window_other_seconds.
// H4: entity_link.
// De-duplication ranks candidates by (marginal below dedup_marginal first,
// |gap| within dedup_gap_seconds first, marginal asc, |gap| asc, leg1 ref,
// leg2 ref) and sweeps greedily, so every transaction ends in at most one match.

#include <cstdint>
#include <string>
#include <vector>

#include "xarb/chaindata.hpp"
#include "xarb/decimal.hpp"
#include "xarb/match.hpp"

namespace xarb::detect {

struct DetectorConfig {
  Decimal marginal_threshold = Decimal::parse("0.005");
  Decimal dedup_marginal = Decimal::parse("0.001");
  std::int64_t dedup_gap_seconds = 240;
  std::int64_t window_stable_seconds = 12;
  std::int64_t window_other_seconds = 3600;
  std::int64_t clock_skew_tolerance = 0;
  unsigned threads = 0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct Candidate {
  std::size_t leg1 = 0;  // indices into the swap vector given to find_candidates
  std::size_t leg2 = 0;
  Decimal diff;  // |x_out(leg1) - x_in(leg2)|, marginal numerator
  double marginal_diff = 0.0;
  std::int64_t time_gap = 0;
  PairClass pair_class = PairClass::Other;
};

struct CandidateSet {
  std::vector<Candidate> candidates;  // sorted by (t1, leg1 ref, leg2 ref)
  std::size_t unmapped_records = 0;
  std::size_t same_class_records = 0;  // asset_in and asset_out in one class
  std::size_t zero_output_records = 0;
  std::vector<std::string> unmapped_assets;  // "chain/asset", sorted, unique
};

/// Candidates passing H1-H3. `swaps` must hold one record per transaction.
CandidateSet find_candidates(const std::vector<chain::SwapRecord>& swaps,
                             const chain::EquivalenceRegistry& registry,
                             const DetectorConfig& config);

/// Candidate H3 window for a pair of classes.
PairClass pair_class_of(const std::string& a, const std::string& b,
                        const chain::EquivalenceRegistry& registry);

/// H4: same originator, or the same first contact that is not a known
/// non-MEV contract.
bool entity_link(const chain::SwapRecord& leg1, const chain::SwapRecord& leg2,
                 const chain::LabelSet& labels);

/// Strict-weak ranking order used by de-duplication (true if a ranks first).
bool rank_before(const Candidate& a, const Candidate& b, const std::vector<chain::SwapRecord>& swaps,
                 const DetectorConfig& config);

/// Greedy sweep over candidates in rank order. Candidates must already pass
/// H1-H4. Output sorted by (leg1 timestamp, leg1 ref, leg2 ref).
std::vector<ArbMatch> deduplicate(std::vector<Candidate> candidates,
                                  const std::vector<chain::SwapRecord>& swaps,
                                  const chain::EquivalenceRegistry& registry,
                                  const DetectorConfig& config);

struct DetectReport {
  std::size_t input_records = 0;
  std::size_t aggregated_records = 0;
  std::size_t ambiguous_endpoints = 0;
  std::size_t unmapped_records = 0;
  std::size_t same_class_records = 0;
  std::size_t zero_output_records = 0;
  std::size_t candidates = 0;             // pass H1-H3
  std::size_t candidates_linked = 0;      // also pass H4
  std::size_t matches = 0;
  std::vector<std::string> unmapped_assets;
};

struct DetectResult {
  std::vector<ArbMatch> matches;
  DetectReport report;
};

/// Aggregation, H1-H4 and de-duplication. The result depends only on the
/// multiset of input records.
DetectResult detect(std::vector<chain::SwapRecord> swaps, const chain::EquivalenceRegistry& registry,
                    const chain::LabelSet& labels, const DetectorConfig& config);

/// Independent re-check of every match against H1-H4, the configured
/// constants and transaction uniqueness. Returns one message per violation.
std::vector<std::string> validate_matches(const std::vector<ArbMatch>& matches,
                                          const chain::EquivalenceRegistry& registry,
                                          const chain::LabelSet& labels,
                                          const DetectorConfig& config);

std::string report_json(const DetectReport& report);

}  // namespace xarb::detect
