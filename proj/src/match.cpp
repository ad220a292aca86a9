#include "xarb/match.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "xarb/error.hpp"

namespace xarb {
namespace {

using nlohmann::json;

json ref_json(const chain::TxRef& r) { return {{"chain", r.chain}, {"tx_hash", r.tx_hash}}; }

chain::TxRef ref_from(const json& j) {
  return {j.at("chain").get<std::string>(), j.at("tx_hash").get<std::string>()};
}

json execution_json(const ExecutionClass& e) {
  json j;
  j["method"] = to_string(e.method);
  if (e.bridge_out_tx) j["bridge_out_tx"] = ref_json(*e.bridge_out_tx);
  if (e.bridge_in_tx) j["bridge_in_tx"] = ref_json(*e.bridge_in_tx);
  if (e.bridge_out_timestamp) j["bridge_out_timestamp"] = *e.bridge_out_timestamp;
  if (e.bridge_in_timestamp) j["bridge_in_timestamp"] = *e.bridge_in_timestamp;
  if (e.bridge_latency_seconds) j["bridge_latency_seconds"] = *e.bridge_latency_seconds;
  if (e.bridge_fee_native) j["bridge_fee_native"] = e.bridge_fee_native->to_string();
  if (e.message_number) j["message_number"] = *e.message_number;
  j["ambiguous"] = e.ambiguous;
  return j;
}

ExecutionClass execution_from(const json& j) {
  ExecutionClass e;
  e.method = method_from_string(j.at("method").get<std::string>());
  if (j.contains("bridge_out_tx")) e.bridge_out_tx = ref_from(j["bridge_out_tx"]);
  if (j.contains("bridge_in_tx")) e.bridge_in_tx = ref_from(j["bridge_in_tx"]);
  if (j.contains("bridge_out_timestamp")) e.bridge_out_timestamp = j["bridge_out_timestamp"].get<std::int64_t>();
  if (j.contains("bridge_in_timestamp")) e.bridge_in_timestamp = j["bridge_in_timestamp"].get<std::int64_t>();
  if (j.contains("bridge_latency_seconds")) {
    e.bridge_latency_seconds = j["bridge_latency_seconds"].get<std::int64_t>();
  }
  if (j.contains("bridge_fee_native")) {
    e.bridge_fee_native = Decimal::parse(j["bridge_fee_native"].get<std::string>());
  }
  if (j.contains("message_number")) e.message_number = j["message_number"].get<std::int64_t>();
  e.ambiguous = j.value("ambiguous", false);
  return e;
}

}  // namespace

const char* to_string(PairClass c) {
  return c == PairClass::StablecoinNative ? "stablecoin_native" : "other";
}

const char* to_string(EntityType t) { return t == EntityType::Eoa ? "eoa" : "contract"; }

const char* to_string(Method m) {
  switch (m) {
    case Method::Inventory:
      return "inventory";
    case Method::NativeBridge:
      return "native_bridge";
    case Method::MultichainBridge:
      return "multichain_bridge";
  }
  return "inventory";
}

Method method_from_string(const std::string& s) {
  if (s == "inventory") return Method::Inventory;
  if (s == "native_bridge") return Method::NativeBridge;
  if (s == "multichain_bridge") return Method::MultichainBridge;
  throw DataError("unknown execution method '" + s + "'");
}

std::string to_json_line(const ArbMatch& m) {
  json j;
  j["leg1"] = json::parse(chain::to_json_line(m.leg1));
  j["leg2"] = json::parse(chain::to_json_line(m.leg2));
  j["class_in"] = m.class_in;
  j["class_out"] = m.class_out;
  j["marginal_diff"] = m.marginal_diff;
  j["time_gap"] = m.time_gap;
  j["pair_class"] = to_string(m.pair_class);
  j["dedup_marginal_pass"] = m.dedup_marginal_pass;
  j["dedup_gap_pass"] = m.dedup_gap_pass;
  j["dedup_rank"] = m.dedup_rank;
  j["entity"] = m.entity;
  j["entity_type"] = to_string(m.entity_type);
  if (m.execution) j["execution_class"] = execution_json(*m.execution);
  return j.dump();
}

ArbMatch match_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    ArbMatch m;
    m.leg1 = chain::parse_swap_line(j.at("leg1").dump());
    m.leg2 = chain::parse_swap_line(j.at("leg2").dump());
    m.class_in = j.at("class_in").get<std::string>();
    m.class_out = j.at("class_out").get<std::string>();
    m.marginal_diff = j.at("marginal_diff").get<double>();
    m.time_gap = j.at("time_gap").get<std::int64_t>();
    const std::string pc = j.at("pair_class").get<std::string>();
    if (pc != "stablecoin_native" && pc != "other") throw DataError("bad pair_class " + pc);
    m.pair_class = pc == "stablecoin_native" ? PairClass::StablecoinNative : PairClass::Other;
    m.dedup_marginal_pass = j.at("dedup_marginal_pass").get<bool>();
    m.dedup_gap_pass = j.at("dedup_gap_pass").get<bool>();
    m.dedup_rank = j.at("dedup_rank").get<std::size_t>();
    m.entity = j.at("entity").get<std::string>();
    const std::string et = j.at("entity_type").get<std::string>();
    if (et != "eoa" && et != "contract") throw DataError("bad entity_type " + et);
    m.entity_type = et == "eoa" ? EntityType::Eoa : EntityType::Contract;
    if (j.contains("execution_class")) m.execution = execution_from(j["execution_class"]);
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed match: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed match: ") + e.what());
  }
}

void write_matches(std::ostream& out, const std::vector<ArbMatch>& matches) {
  for (const auto& m : matches) out << to_json_line(m) << '\n';
}

std::vector<ArbMatch> read_matches(std::istream& in, const std::string& source) {
  std::vector<ArbMatch> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(match_from_json_line(line));
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ArbMatch> load_matches(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_matches(in, path.string());
}

}  // namespace xarb
