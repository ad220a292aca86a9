#include "xarb/chaindata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <iterator>
#include <tuple>

#include <json.hpp>

#include "xarb/error.hpp"

namespace xarb::chain {
namespace {

using nlohmann::json;

// Thrown by field parsers; turned into a LoadIssue by the line loop.
struct LineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) throw LineError(std::string("missing field '") + name + "'");
  return *it;
}

std::string get_string(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw LineError(std::string("field '") + name + "' must be a string");
  std::string s = v.get<std::string>();
  if (s.empty()) throw LineError(std::string("field '") + name + "' is empty");
  return s;
}

std::string get_id(const json& j, const char* name) { return normalize_id(get_string(j, name)); }

std::optional<std::string> get_optional_id(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw LineError(std::string("field '") + name + "' must be a string");
  std::string s = it->get<std::string>();
  if (s.empty()) return std::nullopt;
  return normalize_id(std::move(s));
}

std::int64_t get_int(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer()) throw LineError(std::string("field '") + name + "' must be an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw LineError(std::string("field '") + name + "' out of range");
  }
  return v.get<std::int64_t>();
}

Decimal parse_amount(const json& v, const char* name) {
  if (!v.is_string()) throw LineError(std::string("field '") + name + "' must be a decimal string");
  auto d = Decimal::try_parse(v.get<std::string>());
  if (!d) throw LineError(std::string("field '") + name + "' is not a valid decimal");
  return *d;
}

Decimal get_amount(const json& j, const char* name) { return parse_amount(field(j, name), name); }

std::optional<Decimal> get_optional_amount(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return parse_amount(*it, name);
}

void check(bool ok, const std::string& what) {
  if (!ok) throw LineError("invariant violation: " + what);
}

SwapRecord swap_from_json(const json& j) {
  SwapRecord r;
  r.chain = get_id(j, "chain");
  r.tx_hash = get_id(j, "tx_hash");
  r.block = get_int(j, "block");
  r.timestamp = get_int(j, "timestamp");
  r.originator = get_id(j, "originator");
  r.first_contact = get_optional_id(j, "first_contact");
  r.asset_in = get_id(j, "asset_in");
  r.asset_out = get_id(j, "asset_out");
  r.amount_in = get_amount(j, "amount_in");
  r.amount_out = get_amount(j, "amount_out");
  r.gas_fee_native = get_amount(j, "gas_fee_native");
  r.coinbase_tip_native = get_amount(j, "coinbase_tip_native");
  r.recipient = get_optional_id(j, "recipient");
  r.pool = get_optional_id(j, "pool");
  check(!r.amount_in.is_negative(), "amount_in must be >= 0");
  check(!r.amount_out.is_negative(), "amount_out must be >= 0");
  check(!r.gas_fee_native.is_negative(), "gas_fee_native must be >= 0");
  check(!r.coinbase_tip_native.is_negative(), "coinbase_tip_native must be >= 0");
  check(r.block >= 0 && r.timestamp >= 0, "block and timestamp must be >= 0");
  return r;
}

TransferRecord transfer_from_json(const json& j) {
  TransferRecord r;
  r.chain = get_id(j, "chain");
  r.tx_hash = get_id(j, "tx_hash");
  r.log_index = get_int(j, "log_index");
  r.block = get_int(j, "block");
  r.timestamp = get_int(j, "timestamp");
  r.token = get_id(j, "token");
  r.from = get_id(j, "from");
  r.to = get_id(j, "to");
  r.amount = get_amount(j, "amount");
  r.fee_native = get_optional_amount(j, "fee_native");
  check(r.amount > Decimal(), "amount must be > 0");
  check(!r.fee_native || !r.fee_native->is_negative(), "fee_native must be >= 0");
  check(r.block >= 0 && r.timestamp >= 0, "block and timestamp must be >= 0");
  return r;
}

NativeBridgeLink link_from_json(const json& j) {
  NativeBridgeLink r;
  r.l1_chain = get_id(j, "l1_chain");
  r.l2_chain = get_id(j, "l2_chain");
  r.l1_tx = get_id(j, "l1_tx");
  r.l2_tx = get_id(j, "l2_tx");
  r.message_number = get_int(j, "message_number");
  r.token = get_id(j, "token");
  r.amount = get_amount(j, "amount");
  r.sender = get_id(j, "sender");
  r.recipient = get_id(j, "recipient");
  r.l1_timestamp = get_int(j, "l1_timestamp");
  r.l2_timestamp = get_int(j, "l2_timestamp");
  if (j.contains("direction")) r.direction = get_string(j, "direction");
  r.fee_native = get_optional_amount(j, "fee_native");
  check(r.direction == "L1->L2", "direction must be L1->L2");
  check(r.l2_timestamp >= r.l1_timestamp, "l2_timestamp must be >= l1_timestamp");
  check(r.amount > Decimal(), "amount must be > 0");
  check(r.l1_chain != r.l2_chain, "l1_chain and l2_chain must differ");
  return r;
}

json to_json(const SwapRecord& r) {
  json j;
  j["chain"] = r.chain;
  j["tx_hash"] = r.tx_hash;
  j["block"] = r.block;
  j["timestamp"] = r.timestamp;
  j["originator"] = r.originator;
  if (r.first_contact) j["first_contact"] = *r.first_contact;
  j["asset_in"] = r.asset_in;
  j["asset_out"] = r.asset_out;
  j["amount_in"] = r.amount_in.to_string();
  j["amount_out"] = r.amount_out.to_string();
  j["gas_fee_native"] = r.gas_fee_native.to_string();
  j["coinbase_tip_native"] = r.coinbase_tip_native.to_string();
  if (r.recipient) j["recipient"] = *r.recipient;
  if (r.pool) j["pool"] = *r.pool;
  return j;
}

json to_json(const TransferRecord& r) {
  json j;
  j["chain"] = r.chain;
  j["tx_hash"] = r.tx_hash;
  j["log_index"] = r.log_index;
  j["block"] = r.block;
  j["timestamp"] = r.timestamp;
  j["token"] = r.token;
  j["from"] = r.from;
  j["to"] = r.to;
  j["amount"] = r.amount.to_string();
  if (r.fee_native) j["fee_native"] = r.fee_native->to_string();
  return j;
}

json to_json(const NativeBridgeLink& r) {
  json j;
  j["l1_chain"] = r.l1_chain;
  j["l2_chain"] = r.l2_chain;
  j["l1_tx"] = r.l1_tx;
  j["l2_tx"] = r.l2_tx;
  j["message_number"] = r.message_number;
  j["token"] = r.token;
  j["amount"] = r.amount.to_string();
  j["sender"] = r.sender;
  j["recipient"] = r.recipient;
  j["l1_timestamp"] = r.l1_timestamp;
  j["l2_timestamp"] = r.l2_timestamp;
  j["direction"] = r.direction;
  if (r.fee_native) j["fee_native"] = r.fee_native->to_string();
  return j;
}

void raise_or_record(const LoadOptions& opts, const std::string& source, std::size_t line,
                     const std::string& message, std::vector<LoadIssue>& issues) {
  if (opts.strict) {
    throw DataError(source + ":" + std::to_string(line) + ": " + message);
  }
  issues.push_back({line, message});
}

void check_version(int version) {
  if (version < 1 || version > kSchemaVersion) {
    throw LineError("unsupported schema_version " + std::to_string(version));
  }
}

template <typename T, typename Parse>
std::vector<LoadIssue> read_jsonl(std::istream& in, const LoadOptions& opts,
                                  const std::function<void(T&&)>& sink, const std::string& source,
                                  Parse parse) {
  std::vector<LoadIssue> issues;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      if (!j.is_object()) throw LineError("line is not a JSON object");
      if (j.contains("schema_version")) {
        if (seen_content) throw LineError("schema_version header must be the first line");
        const json& v = j["schema_version"];
        if (!v.is_number_integer()) throw LineError("schema_version must be an integer");
        seen_content = true;
        check_version(v.get<int>());
        continue;
      }
      seen_content = true;
      sink(parse(j));
    } catch (const json::exception& e) {
      seen_content = true;
      raise_or_record(opts, source, line_no, std::string("malformed JSON: ") + e.what(), issues);
    } catch (const LineError& e) {
      if (std::string(e.what()).rfind("unsupported schema_version", 0) == 0) {
        throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
      }
      raise_or_record(opts, source, line_no, e.what(), issues);
    }
  }
  return issues;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw LineError("expected boolean (0/1/true/false), got '" + s + "'");
}

std::int64_t parse_int(const std::string& s, const char* name) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw LineError(std::string("field '") + name + "' must be an integer");
  }
  if (pos != s.size()) throw LineError(std::string("field '") + name + "' must be an integer");
  return v;
}

double parse_real(const std::string& s, const char* name) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw LineError(std::string("field '") + name + "' must be a number");
  }
  if (pos != s.size() || !std::isfinite(v)) {
    throw LineError(std::string("field '") + name + "' must be a number");
  }
  return v;
}

// Calls row(cells) for each data row after validating the header.
template <typename Row>
std::vector<LoadIssue> read_csv(std::istream& in, const LoadOptions& opts, const std::string& source,
                                const std::vector<std::string>& header, Row row) {
  std::vector<LoadIssue> issues;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      const std::string key = "schema_version=";
      auto pos = line.find(key);
      if (pos != std::string::npos) {
        if (header_seen) {
          raise_or_record(opts, source, line_no, "schema_version must precede the header", issues);
          continue;
        }
        int version = 0;
        try {
          version = std::stoi(line.substr(pos + key.size()));
        } catch (const std::exception&) {
          throw DataError(source + ":" + std::to_string(line_no) + ": malformed schema_version");
        }
        if (version < 1 || version > kSchemaVersion) {
          throw DataError(source + ":" + std::to_string(line_no) + ": unsupported schema_version " +
                          std::to_string(version));
        }
      }
      continue;
    }
    auto cells = split_csv(line);
    if (!header_seen) {
      if (cells != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw DataError(source + ":" + std::to_string(line_no) + ": expected header '" + expected +
                        "'");
      }
      header_seen = true;
      continue;
    }
    try {
      if (cells.size() != header.size()) {
        throw LineError("expected " + std::to_string(header.size()) + " columns, got " +
                        std::to_string(cells.size()));
      }
      row(cells);
    } catch (const LineError& e) {
      raise_or_record(opts, source, line_no, e.what(), issues);
    } catch (const DataError& e) {
      raise_or_record(opts, source, line_no, e.what(), issues);
    }
  }
  return issues;
}

void write_header(std::ostream& out, const char* kind) {
  json h;
  h["schema_version"] = kSchemaVersion;
  h["kind"] = kind;
  out << h.dump() << '\n';
}

}  // namespace

std::string normalize_id(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  });
  return s;
}

// ----- registry, prices, labels -----

void EquivalenceRegistry::add(const std::string& chain, const std::string& asset,
                              const std::string& cls, ClassInfo info) {
  auto key = std::make_pair(normalize_id(chain), normalize_id(asset));
  auto [it, inserted] = assets_.emplace(key, cls);
  if (!inserted && it->second != cls) {
    throw DataError("asset " + key.first + "/" + key.second + " mapped to both " + it->second +
                    " and " + cls);
  }
  auto [cit, cinserted] = classes_.emplace(cls, info);
  if (!cinserted &&
      (cit->second.is_stable != info.is_stable || cit->second.is_native != info.is_native)) {
    throw DataError("class " + cls + " has conflicting is_stable/is_native flags");
  }
}

std::optional<std::string> EquivalenceRegistry::class_of(const std::string& chain,
                                                         const std::string& asset) const {
  auto it = assets_.find({chain, asset});
  if (it == assets_.end()) return std::nullopt;
  return it->second;
}

std::optional<ClassInfo> EquivalenceRegistry::info(const std::string& cls) const {
  auto it = classes_.find(cls);
  if (it == classes_.end()) return std::nullopt;
  return it->second;
}

std::int64_t PriceTable::hour_bucket(std::int64_t timestamp) {
  // floor division, also for negative timestamps
  std::int64_t q = timestamp / 3600;
  if (timestamp % 3600 != 0 && timestamp < 0) --q;
  return q;
}

void PriceTable::set(const std::string& cls, std::int64_t hour, double usd) {
  if (!(usd > 0.0) || !std::isfinite(usd)) {
    throw DataError("price for " + cls + " must be positive and finite");
  }
  prices_[{cls, hour}] = usd;
}

std::optional<double> PriceTable::at_hour(const std::string& cls, std::int64_t hour) const {
  auto it = prices_.find({cls, hour});
  if (it == prices_.end()) return std::nullopt;
  return it->second;
}

void LabelSet::add(const std::string& address, LabelKind kind) {
  const std::string a = normalize_id(address);
  auto& mine = kind == LabelKind::NonMev ? non_mev_ : mev_;
  const auto& other = kind == LabelKind::NonMev ? mev_ : non_mev_;
  if (other.count(a)) throw DataError("address " + a + " labeled both non_mev and mev");
  mine.insert(a);
}

// ----- readers -----

std::vector<LoadIssue> read_swaps(std::istream& in, const LoadOptions& opts,
                                  const std::function<void(SwapRecord&&)>& sink,
                                  const std::string& source) {
  return read_jsonl<SwapRecord>(in, opts, sink, source, swap_from_json);
}

std::vector<LoadIssue> read_transfers(std::istream& in, const LoadOptions& opts,
                                      const std::function<void(TransferRecord&&)>& sink,
                                      const std::string& source) {
  return read_jsonl<TransferRecord>(in, opts, sink, source, transfer_from_json);
}

std::vector<LoadIssue> read_native_links(std::istream& in, const LoadOptions& opts,
                                         const std::function<void(NativeBridgeLink&&)>& sink,
                                         const std::string& source) {
  return read_jsonl<NativeBridgeLink>(in, opts, sink, source, link_from_json);
}

LoadResult<SwapRecord> load_swaps(const std::filesystem::path& path, const LoadOptions& opts) {
  auto in = open_input(path);
  LoadResult<SwapRecord> r;
  r.issues = read_swaps(in, opts, [&](SwapRecord&& s) { r.records.push_back(std::move(s)); },
                        path.string());
  return r;
}

LoadResult<TransferRecord> load_transfers(const std::filesystem::path& path,
                                          const LoadOptions& opts) {
  auto in = open_input(path);
  LoadResult<TransferRecord> r;
  r.issues = read_transfers(
      in, opts, [&](TransferRecord&& s) { r.records.push_back(std::move(s)); }, path.string());
  return r;
}

LoadResult<NativeBridgeLink> load_native_links(const std::filesystem::path& path,
                                               const LoadOptions& opts) {
  auto in = open_input(path);
  LoadResult<NativeBridgeLink> r;
  r.issues = read_native_links(
      in, opts, [&](NativeBridgeLink&& s) { r.records.push_back(std::move(s)); }, path.string());
  return r;
}

PriceLoad read_prices(std::istream& in, const LoadOptions& opts, const std::string& source) {
  PriceLoad out;
  out.issues = read_csv(in, opts, source, {"class", "hour", "usd"}, [&](const auto& c) {
    if (c[0].empty()) throw LineError("empty class");
    const double usd = parse_real(c[2], "usd");
    if (!(usd > 0.0)) throw LineError("invariant violation: usd must be > 0");
    out.table.set(c[0], parse_int(c[1], "hour"), usd);
  });
  return out;
}

EquivalenceLoad read_equivalence(std::istream& in, const LoadOptions& opts,
                                 const std::string& source) {
  EquivalenceLoad out;
  out.issues = read_csv(in, opts, source, {"chain", "address", "class", "is_stable", "is_native"},
                        [&](const auto& c) {
                          if (c[0].empty() || c[1].empty() || c[2].empty()) {
                            throw LineError("empty chain, address or class");
                          }
                          out.registry.add(c[0], c[1], c[2],
                                           {parse_bool(c[3]), parse_bool(c[4])});
                        });
  return out;
}

LabelLoad read_labels(std::istream& in, const LoadOptions& opts, const std::string& source) {
  LabelLoad out;
  out.issues = read_csv(in, opts, source, {"address", "kind"}, [&](const auto& c) {
    if (c[0].empty()) throw LineError("empty address");
    if (c[1] == "non_mev") {
      out.labels.add(c[0], LabelKind::NonMev);
    } else if (c[1] == "mev") {
      out.labels.add(c[0], LabelKind::Mev);
    } else {
      throw LineError("kind must be non_mev or mev, got '" + c[1] + "'");
    }
  });
  return out;
}

PriceLoad load_prices(const std::filesystem::path& path, const LoadOptions& opts) {
  auto in = open_input(path);
  return read_prices(in, opts, path.string());
}

EquivalenceLoad load_equivalence(const std::filesystem::path& path, const LoadOptions& opts) {
  auto in = open_input(path);
  return read_equivalence(in, opts, path.string());
}

LabelLoad load_labels(const std::filesystem::path& path, const LoadOptions& opts) {
  auto in = open_input(path);
  return read_labels(in, opts, path.string());
}

// ----- writers -----

std::string to_json_line(const SwapRecord& r) { return to_json(r).dump(); }

SwapRecord parse_swap_line(const std::string& line) {
  try {
    return swap_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed swap: ") + e.what());
  } catch (const LineError& e) {
    throw DataError(std::string("malformed swap: ") + e.what());
  }
}
std::string to_json_line(const TransferRecord& r) { return to_json(r).dump(); }
std::string to_json_line(const NativeBridgeLink& r) { return to_json(r).dump(); }

void write_swaps(std::ostream& out, const std::vector<SwapRecord>& records) {
  write_header(out, "swaps");
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void write_transfers(std::ostream& out, const std::vector<TransferRecord>& records) {
  write_header(out, "transfers");
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void write_native_links(std::ostream& out, const std::vector<NativeBridgeLink>& records) {
  write_header(out, "native_links");
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

void write_prices(std::ostream& out, const PriceTable& prices) {
  out << "# schema_version=" << kSchemaVersion << "\nclass,hour,usd\n";
  char buf[64];
  for (const auto& [key, usd] : prices.entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", usd);
    out << key.first << ',' << key.second << ',' << buf << '\n';
  }
}

void write_equivalence(std::ostream& out, const EquivalenceRegistry& registry) {
  out << "# schema_version=" << kSchemaVersion << "\nchain,address,class,is_stable,is_native\n";
  for (const auto& [key, cls] : registry.assets()) {
    const ClassInfo info = *registry.info(cls);
    out << key.first << ',' << key.second << ',' << cls << ',' << (info.is_stable ? 1 : 0) << ','
        << (info.is_native ? 1 : 0) << '\n';
  }
}

void write_labels(std::ostream& out, const LabelSet& labels) {
  out << "# schema_version=" << kSchemaVersion << "\naddress,kind\n";
  for (const auto& a : labels.non_mev()) out << a << ",non_mev\n";
  for (const auto& a : labels.mev()) out << a << ",mev\n";
}

// ----- aggregation -----

AggregateResult aggregate_tx_swaps(const std::vector<SwapRecord>& events) {
  if (events.empty()) throw std::invalid_argument("no swap events");
  const SwapRecord& first = events.front();
  for (const auto& e : events) {
    if (e.chain != first.chain || e.tx_hash != first.tx_hash) {
      throw std::invalid_argument("swap events span several transactions");
    }
  }
  if (events.size() == 1) return {first, {}};
  std::set<std::string> sold, bought;
  for (const auto& e : events) {
    sold.insert(e.asset_in);
    bought.insert(e.asset_out);
  }
  std::vector<std::string> inputs, outputs;
  std::set_difference(sold.begin(), sold.end(), bought.begin(), bought.end(),
                      std::back_inserter(inputs));
  std::set_difference(bought.begin(), bought.end(), sold.begin(), sold.end(),
                      std::back_inserter(outputs));
  if (inputs.size() != 1 || outputs.size() != 1) return {std::nullopt, "ambiguous endpoints"};
  SwapRecord r = first;
  r.asset_in = inputs[0];
  r.asset_out = outputs[0];
  r.amount_in = Decimal();
  r.amount_out = Decimal();
  std::optional<std::string> recipient;
  for (const auto& e : events) {
    if (e.asset_in == r.asset_in) r.amount_in += e.amount_in;
    if (e.asset_out == r.asset_out) {
      r.amount_out += e.amount_out;
      if (e.recipient) recipient = e.recipient;
    }
  }
  r.recipient = recipient;
  r.pool.reset();
  return {r, {}};
}

AggregateAll aggregate_swaps(std::vector<SwapRecord> events) {
  std::stable_sort(events.begin(), events.end(), [](const SwapRecord& a, const SwapRecord& b) {
    return std::tie(a.chain, a.tx_hash) < std::tie(b.chain, b.tx_hash);
  });
  AggregateAll out;
  std::size_t i = 0;
  while (i < events.size()) {
    std::size_t j = i + 1;
    while (j < events.size() && events[j].chain == events[i].chain &&
           events[j].tx_hash == events[i].tx_hash) {
      ++j;
    }
    if (j - i == 1) {
      out.records.push_back(std::move(events[i]));
    } else {
      std::vector<SwapRecord> group(std::make_move_iterator(events.begin() + i),
                                    std::make_move_iterator(events.begin() + j));
      // Canonical event order so the result does not depend on input order.
      std::sort(group.begin(), group.end(), [](const SwapRecord& a, const SwapRecord& b) {
        return to_json_line(a) < to_json_line(b);
      });
      auto agg = aggregate_tx_swaps(group);
      if (agg.record) {
        out.records.push_back(std::move(*agg.record));
      } else {
        out.ambiguous.push_back(group.front().ref());
      }
    }
    i = j;
  }
  return out;
}

}  // namespace xarb::chain
