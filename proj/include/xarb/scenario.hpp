#pragma once

// Synthetic multi-chain world: chains on a block grid, CPMM pools, GBM class
// prices, arbitrage agents, bridges and noise traders. Produces the chaindata
// inputs of the detector together with the planted arbitrages.
//
// Config is JSON (schema_version 1). Times are Unix seconds; GBM drift and
// volatility are per day.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xarb/bridgelink.hpp"
#include "xarb/chaindata.hpp"

namespace xarb::scenario {

inline constexpr int kScenarioSchemaVersion = 1;

enum class Strategy { Inventory, BridgeNative, BridgeMultichain };
enum class BridgeKind { Native, Multichain };

const char* to_string(Strategy s);
const char* to_string(BridgeKind k);
Strategy strategy_from_string(const std::string& s);
/// Execution method the bridge classifier should assign to the strategy.
Method expected_method(Strategy s);

struct ChainSpec {
  std::string id;
  std::int64_t block_time = 1;
  std::string layer = "l1";
  std::string native_class;        // class of the gas token
  double gas_fee_native = 0.0;     // mean gas per swap, native units
  double coinbase_tip_native = 0.0;  // paid by agents only
  std::int64_t first_block = 1000000;
};

struct ClassSpec {
  std::string id;
  double usd_price = 1.0;  // at start_time
  double mu = 0.0;         // drift per day
  double sigma = 0.0;      // volatility per sqrt(day)
  bool is_stable = false;
  bool is_native = false;
};

struct AssetSpec {
  std::string chain;
  std::string asset;
  std::string cls;
  int decimals = 8;
};

struct PoolSpec {
  std::string chain;
  std::string asset_a;
  std::string asset_b;
  double reserve_a = 0.0;
  /// 0 derives reserve_b from the class prices at start_time.
  double reserve_b = 0.0;
  /// Relative mispricing of asset_a at start: the derived reserve_b is
  /// multiplied by (1 + price_offset).
  double price_offset = 0.0;
};

struct AgentSpec {
  std::string address;
  /// Additional EOAs that share `contract`; legs rotate over all of them.
  std::vector<std::string> extra_eoas;
  std::optional<std::string> contract;
  bool mev_label = false;  // list the contract as a known MEV contract
  Strategy strategy = Strategy::Inventory;
  double capital_usd = 10000.0;
  std::int64_t reaction_latency = 10;
  double min_edge = 0.002;
  double min_trade_usd = 10.0;
  /// Unordered class pairs to trade; empty means every pair with pools.
  std::vector<std::pair<std::string, std::string>> pairs;
  /// Chains to trade on; empty means all.
  std::vector<std::string> chains;
};

struct BridgeSpec {
  BridgeKind kind = BridgeKind::Multichain;
  std::string address;
  std::string l1;  // native bridges only
  std::string l2;
  /// Chains served by a token-transfer bridge; empty means all.
  std::vector<std::string> chains;
  double latency_median = 60.0;
  double latency_p75 = 60.0;
  double fee_fraction = 0.0;  // deducted from the bridged amount
};

struct NoiseSpec {
  double rate = 0.0;  // trades per second over all pools
  double median_usd = 500.0;
  double log_sigma = 1.0;
  /// Share of noise trades that push a pool towards the reference price.
  double informed_share = 0.5;
  /// Cap on one trade as a fraction of the input-side reserve.
  double max_reserve_fraction = 0.05;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::uint64_t seed = 0;
  std::int64_t start_time = 1717200000;
  std::int64_t horizon = 3600;
  std::vector<ChainSpec> chains;
  std::vector<ClassSpec> classes;
  std::vector<AssetSpec> assets;  // "native" per chain is added when absent
  std::vector<PoolSpec> pools;
  std::vector<AgentSpec> agents;
  std::vector<BridgeSpec> bridges;
  NoiseSpec noise;
  double collision_rate = 0.0;
  /// H3 windows the agents plan against.
  std::int64_t window_stable_seconds = 12;
  std::int64_t window_other_seconds = 3600;

  /// Throws ConfigError naming the first problem.
  void validate() const;
};

/// Throws ConfigError on malformed JSON, unknown keys or invalid values.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string to_json(const Scenario& s);

struct PlantedArbitrage {
  std::string id;
  Strategy strategy = Strategy::Inventory;
  std::string agent;
  chain::TxRef leg1;
  chain::TxRef leg2;
  std::int64_t leg1_timestamp = 0;
  std::int64_t leg2_timestamp = 0;
  std::vector<chain::TxRef> bridge_txs;  // source then destination
  std::optional<std::int64_t> message_number;
  std::optional<std::int64_t> sampled_latency_seconds;
  std::optional<std::int64_t> bridge_latency_seconds;  // in - out timestamp
  double volume_usd = 0.0;       // leg1 input at the published hourly price
  double true_profit_usd = 0.0;  // at the per-second reference prices
};

struct RefusedPlant {
  std::string agent;
  Strategy strategy = Strategy::Inventory;
  std::int64_t time = 0;
  std::string reason;  // "window" or "block_time"
  std::int64_t planned_gap = 0;
  std::int64_t window = 0;
};

struct GroundTruth {
  std::vector<PlantedArbitrage> planted;  // by leg1 time, then id
  std::vector<RefusedPlant> refused;
};

struct World {
  std::vector<chain::SwapRecord> swaps;  // by timestamp, then emission order
  std::vector<chain::TransferRecord> transfers;
  std::vector<chain::NativeBridgeLink> native_links;
  chain::PriceTable prices;
  chain::EquivalenceRegistry registry;
  chain::LabelSet labels;
  bridge::ChainLayers layers;
  GroundTruth truth;
  std::size_t noise_swaps = 0;
  std::size_t decoy_pairs = 0;
};

/// Deterministic for a given config; single-threaded.
World generate(const Scenario& scenario);

/// Adds ~rate * swaps.size() decoy pairs. Each decoy copies the shape of an
/// existing swap and is answered on another chain with a near-matching amount
/// inside the window, but both legs come from fresh EOAs through distinct
/// unlabeled contracts, so no decoy passes H4. Returns the number of pairs.
std::size_t inject_collisions(std::vector<chain::SwapRecord>& swaps,
                              const chain::EquivalenceRegistry& registry,
                              const std::vector<ChainSpec>& chains, double rate, std::uint64_t seed,
                              std::int64_t window_stable_seconds = 12,
                              std::int64_t window_other_seconds = 3600);

void write_truth(std::ostream& out, const GroundTruth& truth);
void write_refused(std::ostream& out, const GroundTruth& truth);
/// Reads truth.jsonl; refused plants are not part of it.
GroundTruth read_truth(std::istream& in, const std::string& source = "truth");
GroundTruth load_truth(const std::filesystem::path& path);

/// Writes swaps.jsonl, transfers.jsonl, native_links.jsonl, prices.csv,
/// equivalence.csv, labels.csv, chains.csv, truth.jsonl and refused.jsonl.
/// Returns the file names written, in that order.
std::vector<std::string> write_world(const World& world, const std::filesystem::path& dir);

struct Evaluation {
  std::size_t planted = 0;
  std::size_t detected = 0;
  std::size_t true_positives = 0;
  double recall = 1.0;
  double precision = 1.0;
  std::size_t classified = 0;          // true positives with an execution class
  std::size_t classified_correct = 0;  // method equals the planted strategy
  double classification_accuracy = 1.0;
  std::vector<std::string> missed;    // planted ids
  std::vector<std::string> spurious;  // "chain:tx->chain:tx"
  std::vector<std::string> misclassified;
};

/// A match is a true positive when its leg refs equal a planted pair.
Evaluation evaluate(const std::vector<ArbMatch>& matches, const GroundTruth& truth);
std::string to_json(const Evaluation& e);

}  // namespace xarb::scenario
