#pragma once

// Normalized on-chain events and their file formats.
//
// JSONL files (swaps, transfers, native links) hold one object per line; an
// optional first line {"schema_version": N, ...} declares the format version.
// CSV files (prices, equivalence, labels) may start with "# schema_version=N"
// before the mandatory header row. Amounts are decimal strings; addresses,
// asset ids and tx hashes are lower-cased on parse.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "xarb/decimal.hpp"

namespace xarb::chain {

inline constexpr int kSchemaVersion = 1;

struct TxRef {
  std::string chain;
  std::string tx_hash;
  auto operator<=>(const TxRef&) const = default;
};

struct SwapRecord {
  std::string chain;
  std::string tx_hash;
  std::int64_t block = 0;
  std::int64_t timestamp = 0;
  std::string originator;
  std::optional<std::string> first_contact;
  std::string asset_in;
  std::string asset_out;
  Decimal amount_in;
  Decimal amount_out;
  Decimal gas_fee_native;
  Decimal coinbase_tip_native;
  std::optional<std::string> recipient;  // receiver of asset_out when not the originator
  std::optional<std::string> pool;

  TxRef ref() const { return {chain, tx_hash}; }
  bool operator==(const SwapRecord&) const = default;
};

struct TransferRecord {
  std::string chain;
  std::string tx_hash;
  std::int64_t log_index = 0;
  std::int64_t block = 0;
  std::int64_t timestamp = 0;
  std::string token;
  std::string from;
  std::string to;
  Decimal amount;
  std::optional<Decimal> fee_native;  // fee paid by the tx sender, when known

  TxRef ref() const { return {chain, tx_hash}; }
  bool operator==(const TransferRecord&) const = default;
};

/// Deposit from an L1 into a rollup, linked by the bridge's message number.
struct NativeBridgeLink {
  std::string l1_chain;
  std::string l2_chain;
  std::string l1_tx;
  std::string l2_tx;
  std::int64_t message_number = 0;
  std::string token;  // asset id on l1_chain
  Decimal amount;
  std::string sender;
  std::string recipient;
  std::int64_t l1_timestamp = 0;
  std::int64_t l2_timestamp = 0;
  std::string direction = "L1->L2";
  std::optional<Decimal> fee_native;

  bool operator==(const NativeBridgeLink&) const = default;
};

struct ClassInfo {
  bool is_stable = false;
  bool is_native = false;
};

/// (chain, asset) -> equivalence class. The asset "native" stands for a
/// chain's gas token.
class EquivalenceRegistry {
 public:
  /// Throws DataError if the asset is already mapped to another class or the
  /// class flags disagree with an earlier row.
  void add(const std::string& chain, const std::string& asset, const std::string& cls,
           ClassInfo info);
  std::optional<std::string> class_of(const std::string& chain, const std::string& asset) const;
  std::optional<ClassInfo> info(const std::string& cls) const;
  /// Class of the chain's gas token, if registered.
  std::optional<std::string> native_class(const std::string& chain) const {
    return class_of(chain, "native");
  }
  std::size_t size() const { return assets_.size(); }
  const std::map<std::pair<std::string, std::string>, std::string>& assets() const {
    return assets_;
  }
  const std::map<std::string, ClassInfo>& classes() const { return classes_; }

 private:
  std::map<std::pair<std::string, std::string>, std::string> assets_;
  std::map<std::string, ClassInfo> classes_;
};

/// (class, hour bucket) -> USD. Lookups are exact-bucket only.
class PriceTable {
 public:
  void set(const std::string& cls, std::int64_t hour, double usd);
  std::optional<double> at_hour(const std::string& cls, std::int64_t hour) const;
  std::optional<double> at_time(const std::string& cls, std::int64_t timestamp) const {
    return at_hour(cls, hour_bucket(timestamp));
  }
  static std::int64_t hour_bucket(std::int64_t timestamp);
  std::size_t size() const { return prices_.size(); }
  const std::map<std::pair<std::string, std::int64_t>, double>& entries() const { return prices_; }

 private:
  std::map<std::pair<std::string, std::int64_t>, double> prices_;
};

enum class LabelKind { NonMev, Mev };

class LabelSet {
 public:
  /// Throws DataError if the address already carries the other kind.
  void add(const std::string& address, LabelKind kind);
  bool is_non_mev(const std::string& address) const { return non_mev_.count(address) > 0; }
  bool is_mev(const std::string& address) const { return mev_.count(address) > 0; }
  const std::set<std::string>& non_mev() const { return non_mev_; }
  const std::set<std::string>& mev() const { return mev_; }

 private:
  std::set<std::string> non_mev_;
  std::set<std::string> mev_;
};

// ----- loading -----

struct LoadOptions {
  /// Abort on the first malformed line instead of skipping it.
  bool strict = false;
};

struct LoadIssue {
  std::size_t line = 0;
  std::string message;
};

template <typename T>
struct LoadResult {
  std::vector<T> records;
  std::vector<LoadIssue> issues;
};

/// Streaming readers: `sink` is called for every valid record in file order.
/// Malformed lines raise DataError("<source>:<line>: ...") in strict mode and
/// are returned as issues otherwise.
std::vector<LoadIssue> read_swaps(std::istream& in, const LoadOptions& opts,
                                  const std::function<void(SwapRecord&&)>& sink,
                                  const std::string& source = "swaps");
std::vector<LoadIssue> read_transfers(std::istream& in, const LoadOptions& opts,
                                      const std::function<void(TransferRecord&&)>& sink,
                                      const std::string& source = "transfers");
std::vector<LoadIssue> read_native_links(std::istream& in, const LoadOptions& opts,
                                         const std::function<void(NativeBridgeLink&&)>& sink,
                                         const std::string& source = "native_links");

LoadResult<SwapRecord> load_swaps(const std::filesystem::path& path, const LoadOptions& opts = {});
LoadResult<TransferRecord> load_transfers(const std::filesystem::path& path,
                                          const LoadOptions& opts = {});
LoadResult<NativeBridgeLink> load_native_links(const std::filesystem::path& path,
                                               const LoadOptions& opts = {});

struct PriceLoad {
  PriceTable table;
  std::vector<LoadIssue> issues;
};
struct EquivalenceLoad {
  EquivalenceRegistry registry;
  std::vector<LoadIssue> issues;
};
struct LabelLoad {
  LabelSet labels;
  std::vector<LoadIssue> issues;
};

PriceLoad read_prices(std::istream& in, const LoadOptions& opts, const std::string& source = "prices");
EquivalenceLoad read_equivalence(std::istream& in, const LoadOptions& opts,
                                 const std::string& source = "equivalence");
LabelLoad read_labels(std::istream& in, const LoadOptions& opts, const std::string& source = "labels");

PriceLoad load_prices(const std::filesystem::path& path, const LoadOptions& opts = {});
EquivalenceLoad load_equivalence(const std::filesystem::path& path, const LoadOptions& opts = {});
LabelLoad load_labels(const std::filesystem::path& path, const LoadOptions& opts = {});

// ----- writing -----

/// Each writer emits the version header line first.
void write_swaps(std::ostream& out, const std::vector<SwapRecord>& records);
void write_transfers(std::ostream& out, const std::vector<TransferRecord>& records);
void write_native_links(std::ostream& out, const std::vector<NativeBridgeLink>& records);
void write_prices(std::ostream& out, const PriceTable& prices);
void write_equivalence(std::ostream& out, const EquivalenceRegistry& registry);
void write_labels(std::ostream& out, const LabelSet& labels);

/// One-line JSON encodings, shared with report writers.
std::string to_json_line(const SwapRecord& r);
std::string to_json_line(const TransferRecord& r);
std::string to_json_line(const NativeBridgeLink& r);

/// Parses one record object; throws DataError on any schema violation.
SwapRecord parse_swap_line(const std::string& line);

// ----- aggregation -----

struct AggregateResult {
  std::optional<SwapRecord> record;
  std::string error;  // "ambiguous endpoints" when record is empty
};

/// Collapses the swap events of one transaction into a single record from the
/// original input asset to the final output asset. Inputs are assets that are
/// only ever sold, outputs those only ever bought; anything but exactly one of
/// each is ambiguous. Gas and tips are taken from the first event.
/// Throws std::invalid_argument if the events do not share chain and tx_hash.
AggregateResult aggregate_tx_swaps(const std::vector<SwapRecord>& events);

struct AggregateAll {
  std::vector<SwapRecord> records;
  std::vector<TxRef> ambiguous;
};

/// Groups by (chain, tx_hash) and aggregates each group. Output is sorted by
/// (chain, tx_hash).
AggregateAll aggregate_swaps(std::vector<SwapRecord> events);

/// Lower-cases ASCII letters.
std::string normalize_id(std::string s);

}  // namespace xarb::chain
