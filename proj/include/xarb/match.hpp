#pragma once

// A detected two-leg cross-chain arbitrage and its matches.jsonl encoding.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xarb/chaindata.hpp"
#include "xarb/decimal.hpp"

namespace xarb {

enum class PairClass { StablecoinNative, Other };
enum class EntityType { Eoa, Contract };
enum class Method { Inventory, NativeBridge, MultichainBridge };

const char* to_string(PairClass c);
const char* to_string(EntityType t);
const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct ExecutionClass {
  Method method = Method::Inventory;
  std::optional<chain::TxRef> bridge_out_tx;
  std::optional<chain::TxRef> bridge_in_tx;
  std::optional<std::int64_t> bridge_out_timestamp;
  std::optional<std::int64_t> bridge_in_timestamp;
  std::optional<std::int64_t> bridge_latency_seconds;
  /// Source-chain bridge call fee, in the source chain's native token.
  std::optional<Decimal> bridge_fee_native;
  std::optional<std::int64_t> message_number;  // native bridges only
  /// Both the native link and the token-transfer method found a bridge.
  bool ambiguous = false;

  bool operator==(const ExecutionClass&) const = default;
};

struct ArbMatch {
  chain::SwapRecord leg1;  // leg1.asset_out feeds leg2.asset_in
  chain::SwapRecord leg2;
  std::string class_in;   // class of leg1.asset_in == class of leg2.asset_out
  std::string class_out;  // class of leg1.asset_out == class of leg2.asset_in
  double marginal_diff = 0.0;
  std::int64_t time_gap = 0;  // leg2.timestamp - leg1.timestamp
  PairClass pair_class = PairClass::Other;
  bool dedup_marginal_pass = false;  // marginal_diff below the de-dup threshold
  bool dedup_gap_pass = false;       // |time_gap| within the de-dup gap
  std::size_t dedup_rank = 0;        // position in the global ranking
  std::string entity;
  EntityType entity_type = EntityType::Eoa;
  std::optional<ExecutionClass> execution;

  bool operator==(const ArbMatch&) const = default;
};

std::string to_json_line(const ArbMatch& m);
/// Throws DataError on malformed input.
ArbMatch match_from_json_line(const std::string& line);

void write_matches(std::ostream& out, const std::vector<ArbMatch>& matches);
std::vector<ArbMatch> read_matches(std::istream& in, const std::string& source = "matches");
std::vector<ArbMatch> load_matches(const std::filesystem::path& path);

}  // namespace xarb
