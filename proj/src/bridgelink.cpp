#include "xarb/bridgelink.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "xarb/error.hpp"
#include "xarb/parallel.hpp"
#include "xarb/percentile.hpp"
#include "xarb/summation.hpp"

namespace xarb::bridge {
namespace {

using chain::NativeBridgeLink;
using chain::TransferRecord;

bool link_less(const NativeBridgeLink& a, const NativeBridgeLink& b) {
  return std::tie(a.l1_timestamp, a.message_number, a.l1_chain, a.l1_tx, a.l2_chain, a.l2_tx) <
         std::tie(b.l1_timestamp, b.message_number, b.l1_chain, b.l1_tx, b.l2_chain, b.l2_tx);
}

bool transfer_less(const TransferRecord& a, const TransferRecord& b) {
  return std::tie(a.chain, a.block, a.log_index, a.tx_hash, a.timestamp) <
         std::tie(b.chain, b.block, b.log_index, b.tx_hash, b.timestamp);
}

std::set<std::string> participants(const ArbMatch& m) {
  std::set<std::string> p = {m.leg1.originator, m.leg2.originator};
  if (m.leg1.first_contact) p.insert(*m.leg1.first_contact);
  if (m.leg2.first_contact) p.insert(*m.leg2.first_contact);
  return p;
}

}  // namespace

NativeIndex::NativeIndex(std::vector<NativeBridgeLink> links) : links_(std::move(links)) {
  std::sort(links_.begin(), links_.end(), link_less);
  for (std::size_t i = 0; i < links_.size(); ++i) {
    by_participant_[links_[i].sender].push_back(i);
    if (links_[i].recipient != links_[i].sender) by_participant_[links_[i].recipient].push_back(i);
  }
}

const std::vector<std::size_t>* NativeIndex::by_participant(const std::string& address) const {
  auto it = by_participant_.find(address);
  return it == by_participant_.end() ? nullptr : &it->second;
}

TransferIndex::TransferIndex(std::vector<TransferRecord> transfers) : transfers_(std::move(transfers)) {
  std::sort(transfers_.begin(), transfers_.end(), transfer_less);
  for (std::size_t i = 0; i < transfers_.size(); ++i) {
    const auto& t = transfers_[i];
    from_[{t.chain, t.from}].push_back(i);
    to_[{t.chain, t.to}].push_back(i);
  }
}

const std::vector<std::size_t>* TransferIndex::sent_by(const std::string& chain,
                                                       const std::string& address) const {
  auto it = from_.find({chain, address});
  return it == from_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>* TransferIndex::received_by(const std::string& chain,
                                                           const std::string& address) const {
  auto it = to_.find({chain, address});
  return it == to_.end() ? nullptr : &it->second;
}

std::optional<ExecutionClass> classify_native(const ArbMatch& m, const NativeIndex& index,
                                              const chain::EquivalenceRegistry& registry) {
  const std::int64_t t1 = m.leg1.timestamp;
  const std::int64_t t2 = m.leg2.timestamp;
  std::optional<std::size_t> best;
  for (const auto& who : participants(m)) {
    const auto* list = index.by_participant(who);
    if (!list) continue;
    for (std::size_t i : *list) {
      const NativeBridgeLink& l = index.links()[i];
      if (l.l1_timestamp < t1) continue;
      if (l.l1_timestamp > t2) break;
      if (l.l2_timestamp > t2) continue;
      if (l.l1_chain != m.leg1.chain || l.l2_chain != m.leg2.chain) continue;
      if (registry.class_of(l.l1_chain, l.token) != m.class_out) continue;
      if (!best || i < *best) best = i;
      break;
    }
  }
  if (!best) return std::nullopt;
  const NativeBridgeLink& l = index.links()[*best];
  if (l.direction != "L1->L2") throw std::logic_error("native link with direction " + l.direction);
  ExecutionClass e;
  e.method = Method::NativeBridge;
  e.bridge_out_tx = chain::TxRef{l.l1_chain, l.l1_tx};
  e.bridge_in_tx = chain::TxRef{l.l2_chain, l.l2_tx};
  e.bridge_out_timestamp = l.l1_timestamp;
  e.bridge_in_timestamp = l.l2_timestamp;
  e.bridge_latency_seconds = l.l2_timestamp - l.l1_timestamp;
  e.bridge_fee_native = l.fee_native;
  e.message_number = l.message_number;
  return e;
}

std::optional<ExecutionClass> classify_token_transfer(const ArbMatch& m, const TransferIndex& index,
                                                      const chain::EquivalenceRegistry& registry) {
  const std::int64_t t1 = m.leg1.timestamp;
  const std::int64_t t2 = m.leg2.timestamp;
  const auto& all = index.transfers();
  const std::string& receiver = m.leg1.recipient ? *m.leg1.recipient : m.leg1.originator;

  const TransferRecord* out = nullptr;
  if (const auto* list = index.sent_by(m.leg1.chain, receiver)) {
    auto it = std::lower_bound(list->begin(), list->end(), m.leg1.block,
                               [&](std::size_t k, std::int64_t b) { return all[k].block < b; });
    for (; it != list->end(); ++it) {
      const TransferRecord& t = all[*it];
      if (t.timestamp > t2) break;
      if (t.timestamp < t1 || t.tx_hash == m.leg1.tx_hash) continue;
      if (registry.class_of(t.chain, t.token) != m.class_out) continue;
      out = &t;
      break;
    }
  }
  if (!out) return std::nullopt;

  const TransferRecord* in = nullptr;
  if (const auto* list = index.received_by(m.leg2.chain, m.leg2.originator)) {
    auto it = std::upper_bound(list->begin(), list->end(), m.leg2.block,
                               [&](std::int64_t b, std::size_t k) { return b < all[k].block; });
    while (it != list->begin()) {
      --it;
      const TransferRecord& t = all[*it];
      if (t.timestamp < out->timestamp) break;
      if (t.timestamp > t2 || t.tx_hash == m.leg2.tx_hash) continue;
      if (registry.class_of(t.chain, t.token) != m.class_out) continue;
      in = &t;
      break;
    }
  }
  if (!in) return std::nullopt;

  ExecutionClass e;
  e.method = Method::MultichainBridge;
  e.bridge_out_tx = out->ref();
  e.bridge_in_tx = in->ref();
  e.bridge_out_timestamp = out->timestamp;
  e.bridge_in_timestamp = in->timestamp;
  e.bridge_latency_seconds = in->timestamp - out->timestamp;
  e.bridge_fee_native = out->fee_native;
  return e;
}

ExecutionClass classify(const ArbMatch& m, const NativeIndex& links, const TransferIndex& transfers,
                        const chain::EquivalenceRegistry& registry) {
  auto native = classify_native(m, links, registry);
  auto token = classify_token_transfer(m, transfers, registry);
  if (native) {
    native->ambiguous = token.has_value();
    return *native;
  }
  if (token) return *token;
  return ExecutionClass{};
}

void classify_all(std::vector<ArbMatch>& matches, const NativeIndex& links,
                  const TransferIndex& transfers, const chain::EquivalenceRegistry& registry,
                  unsigned threads) {
  parallel_for(matches.size(), threads, [&](std::size_t i) {
    matches[i].execution = classify(matches[i], links, transfers, registry);
  });
}

double bridge_settlement_share(const ArbMatch& m) {
  if (!m.execution || !m.execution->bridge_latency_seconds || m.time_gap <= 0) return 0.0;
  const double share =
      static_cast<double>(*m.execution->bridge_latency_seconds) / static_cast<double>(m.time_gap);
  return std::clamp(share, 0.0, 1.0);
}

std::string pair_category(const std::string& a, const std::string& b, const ChainLayers& layers) {
  auto la = layers.find(a);
  auto lb = layers.find(b);
  if (la == layers.end() || lb == layers.end()) return "unknown";
  int l2 = (la->second == "l2") + (lb->second == "l2");
  return l2 == 0 ? "L1-L1" : l2 == 1 ? "L1-L2" : "L2-L2";
}

BridgeReport bridge_report(const std::vector<ArbMatch>& matches, const ChainLayers& layers) {
  struct Acc {
    std::size_t total = 0;
    std::map<Method, std::vector<double>> gaps;
    std::map<Method, CompensatedSum> latency, settlement;
  };
  std::map<std::string, Acc> acc;
  BridgeReport rep;
  for (const auto& m : matches) {
    if (!m.execution) {
      ++rep.unclassified;
      continue;
    }
    if (m.execution->ambiguous) ++rep.ambiguous;
    const Method method = m.execution->method;
    std::vector<std::string> keys = {"all"};
    if (!layers.empty()) keys.push_back(pair_category(m.leg1.chain, m.leg2.chain, layers));
    for (const auto& k : keys) {
      Acc& a = acc[k];
      ++a.total;
      a.gaps[method].push_back(static_cast<double>(m.time_gap));
      if (m.execution->bridge_latency_seconds) {
        a.latency[method].add(static_cast<double>(*m.execution->bridge_latency_seconds));
        a.settlement[method].add(static_cast<double>(m.time_gap));
      }
    }
  }
  acc["all"];
  std::vector<std::string> order = {"all"};
  for (const auto& [k, _] : acc) {
    if (k != "all") order.push_back(k);
  }
  for (const auto& k : order) {
    Acc& a = acc[k];
    BridgeReportRow row;
    row.category = k;
    row.total = a.total;
    for (Method method : {Method::Inventory, Method::MultichainBridge, Method::NativeBridge}) {
      MethodStats s;
      auto& g = a.gaps[method];
      s.count = g.size();
      s.share = a.total ? static_cast<double>(s.count) / static_cast<double>(a.total) : 0.0;
      s.median_settlement_seconds = nearest_rank(g, 50.0);
      if (method != Method::Inventory && a.settlement[method].value() > 0.0) {
        s.bridge_time_share = a.latency[method].value() / a.settlement[method].value();
      }
      row.methods[method] = s;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string to_json(const BridgeReport& r) {
  nlohmann::ordered_json j;
  j["ambiguous"] = r.ambiguous;
  j["unclassified"] = r.unclassified;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["category"] = row.category;
    jr["total"] = row.total;
    for (const auto& [method, s] : row.methods) {
      nlohmann::ordered_json js;
      js["count"] = s.count;
      js["share"] = s.share;
      js["median_settlement_seconds"] = s.median_settlement_seconds
                                            ? nlohmann::ordered_json(*s.median_settlement_seconds)
                                            : nlohmann::ordered_json(nullptr);
      if (method != Method::Inventory) {
        js["bridge_time_share"] = s.bridge_time_share ? nlohmann::ordered_json(*s.bridge_time_share)
                                                      : nlohmann::ordered_json(nullptr);
      }
      jr[to_string(method)] = js;
    }
    rows.push_back(jr);
  }
  j["rows"] = rows;
  return j.dump(2);
}

ChainLayers read_chain_layers(std::istream& in, const std::string& source) {
  ChainLayers layers;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fail = [&](const std::string& msg) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (!header) {
      if (line != "chain,layer") fail("expected header 'chain,layer'");
      header = true;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) fail("expected 2 columns");
    std::string c = chain::normalize_id(line.substr(0, comma));
    std::string l = chain::normalize_id(line.substr(comma + 1));
    if (l != "l1" && l != "l2") fail("layer must be l1 or l2");
    layers[c] = l;
  }
  return layers;
}

ChainLayers load_chain_layers(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_chain_layers(in, path.string());
}

void write_chain_layers(std::ostream& out, const ChainLayers& layers) {
  out << "# schema_version=" << chain::kSchemaVersion << "\nchain,layer\n";
  for (const auto& [c, l] : layers) out << c << ',' << l << '\n';
}

}  // namespace xarb::bridge
