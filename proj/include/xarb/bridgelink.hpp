#pragma once

// Execution-method classification of detected arbitrages.
//
// Native bridges are linked through the deposit's message number; multi-chain
// bridges through a pair of token transfers that leave leg1's receiver on the
// source chain and reach leg2's initiator on the destination chain. Both
// searches are confined to [leg1 time, leg2 time] and pick the nearest hit.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xarb/chaindata.hpp"
#include "xarb/match.hpp"

namespace xarb::bridge {

class NativeIndex {
 public:
  NativeIndex() = default;
  explicit NativeIndex(std::vector<chain::NativeBridgeLink> links);

  const std::vector<chain::NativeBridgeLink>& links() const { return links_; }
  /// Links whose sender or recipient is `address`, in canonical order.
  const std::vector<std::size_t>* by_participant(const std::string& address) const;

 private:
  std::vector<chain::NativeBridgeLink> links_;  // sorted by (l1_timestamp, message_number, l1_tx)
  std::unordered_map<std::string, std::vector<std::size_t>> by_participant_;
};

class TransferIndex {
 public:
  TransferIndex() = default;
  explicit TransferIndex(std::vector<chain::TransferRecord> transfers);

  const std::vector<chain::TransferRecord>& transfers() const { return transfers_; }
  /// Transfers on `chain` sent from / received by `address`, ordered by
  /// (block, log_index, tx_hash).
  const std::vector<std::size_t>* sent_by(const std::string& chain, const std::string& address) const;
  const std::vector<std::size_t>* received_by(const std::string& chain,
                                              const std::string& address) const;

 private:
  using Key = std::pair<std::string, std::string>;
  std::vector<chain::TransferRecord> transfers_;
  std::map<Key, std::vector<std::size_t>> from_;
  std::map<Key, std::vector<std::size_t>> to_;
};

/// Deposit linking the two legs: participant is an originator or first
/// contact of either leg, the token's class is the traded class, the L1 side
/// is leg1's chain and the L2 side leg2's, and l1 >= t1, l2 <= t2.
std::optional<ExecutionClass> classify_native(const ArbMatch& match, const NativeIndex& links,
                                              const chain::EquivalenceRegistry& registry);

/// Forward scan on leg1's chain for the traded class leaving leg1's receiver
/// (recipient, else originator) and backward scan on leg2's chain for the
/// traded class reaching leg2's originator, both within [t1, t2], with the
/// inbound transfer not earlier than the outbound one.
std::optional<ExecutionClass> classify_token_transfer(const ArbMatch& match,
                                                      const TransferIndex& transfers,
                                                      const chain::EquivalenceRegistry& registry);

/// Native first, then multi-chain, else inventory. `ambiguous` marks a native
/// hit that the transfer method would also have claimed.
ExecutionClass classify(const ArbMatch& match, const NativeIndex& links,
                        const TransferIndex& transfers, const chain::EquivalenceRegistry& registry);

/// Sets `execution` on every match.
void classify_all(std::vector<ArbMatch>& matches, const NativeIndex& links,
                  const TransferIndex& transfers, const chain::EquivalenceRegistry& registry,
                  unsigned threads = 0);

/// Share of the settlement time spent in the bridge transfer, in [0, 1].
/// Zero for inventory matches and for zero-gap matches.
double bridge_settlement_share(const ArbMatch& match);

/// chain -> "l1" | "l2", for the chain-pair category breakdown.
using ChainLayers = std::map<std::string, std::string>;

/// "L1-L1", "L1-L2", "L2-L2", or "unknown" when a chain has no layer.
std::string pair_category(const std::string& a, const std::string& b, const ChainLayers& layers);

struct MethodStats {
  std::size_t count = 0;
  double share = 0.0;  // of the row total
  std::optional<double> median_settlement_seconds;
  /// Sum of bridge latency over sum of settlement time, bridge methods only.
  std::optional<double> bridge_time_share;
};

struct BridgeReportRow {
  std::string category;
  std::size_t total = 0;
  std::map<Method, MethodStats> methods;
};

struct BridgeReport {
  std::vector<BridgeReportRow> rows;  // "all" first, then categories in name order
  std::size_t ambiguous = 0;
  std::size_t unclassified = 0;
};

BridgeReport bridge_report(const std::vector<ArbMatch>& matches, const ChainLayers& layers = {});
std::string to_json(const BridgeReport& report);

/// chains.csv: chain,layer; layer is "l1" or "l2".
ChainLayers read_chain_layers(std::istream& in, const std::string& source = "chains");
ChainLayers load_chain_layers(const std::filesystem::path& path);
void write_chain_layers(std::ostream& out, const ChainLayers& layers);

}  // namespace xarb::bridge
