#include "xarb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <json.hpp>

#include "xarb/detector.hpp"
#include "xarb/error.hpp"
#include "xarb/rng.hpp"
#include "xarb/stochastic.hpp"

namespace xarb::scenario {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Inventory:
      return "inventory";
    case Strategy::BridgeNative:
      return "bridge_native";
    case Strategy::BridgeMultichain:
      return "bridge_multichain";
  }
  return "inventory";
}

const char* to_string(BridgeKind k) { return k == BridgeKind::Native ? "native" : "multichain"; }

Strategy strategy_from_string(const std::string& s) {
  if (s == "inventory") return Strategy::Inventory;
  if (s == "bridge_native") return Strategy::BridgeNative;
  if (s == "bridge_multichain") return Strategy::BridgeMultichain;
  throw ConfigError("unknown strategy '" + s + "'");
}

Method expected_method(Strategy s) {
  switch (s) {
    case Strategy::Inventory:
      return Method::Inventory;
    case Strategy::BridgeNative:
      return Method::NativeBridge;
    case Strategy::BridgeMultichain:
      return Method::MultichainBridge;
  }
  return Method::Inventory;
}

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kZ75 = 0.6744897501960817;  // standard normal 75th percentile
constexpr std::int64_t kFeeDenominator = 1000000000;
constexpr int kGasDecimals = 9;

// ----- config parsing -----

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }
}

const json* field(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_double(const json& j, const char* key, const std::string& where, std::optional<double> def) {
  const json* v = field(j, key);
  if (!v) {
    if (!def) throw ConfigError(where + ": missing '" + key + "'");
    return *def;
  }
  if (!v->is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v->get<double>();
}

std::int64_t get_int(const json& j, const char* key, const std::string& where,
                     std::optional<std::int64_t> def) {
  const json* v = field(j, key);
  if (!v) {
    if (!def) throw ConfigError(where + ": missing '" + key + "'");
    return *def;
  }
  if (!v->is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v->get<std::int64_t>();
}

std::string get_string(const json& j, const char* key, const std::string& where,
                       std::optional<std::string> def = std::nullopt) {
  const json* v = field(j, key);
  if (!v) {
    if (!def) throw ConfigError(where + ": missing '" + key + "'");
    return *def;
  }
  if (!v->is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return chain::normalize_id(v->get<std::string>());
}

bool get_bool(const json& j, const char* key, const std::string& where, bool def) {
  const json* v = field(j, key);
  if (!v) return def;
  if (!v->is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  return v->get<bool>();
}

std::vector<std::string> get_strings(const json& j, const char* key, const std::string& where) {
  std::vector<std::string> out;
  const json* v = field(j, key);
  if (!v) return out;
  if (!v->is_array()) throw ConfigError(where + "." + key + ": expected an array");
  for (const auto& e : *v) {
    if (!e.is_string()) throw ConfigError(where + "." + key + ": expected strings");
    out.push_back(chain::normalize_id(e.get<std::string>()));
  }
  return out;
}

const json& get_array(const json& j, const char* key, const std::string& where) {
  const json* v = field(j, key);
  if (!v || !v->is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  return *v;
}

std::string at(const std::string& list, std::size_t i) { return list + "[" + std::to_string(i) + "]"; }

// ----- derived world layout -----

std::vector<AssetSpec> effective_assets(const Scenario& s) {
  std::vector<AssetSpec> out = s.assets;
  for (const auto& c : s.chains) {
    bool has = std::any_of(out.begin(), out.end(),
                           [&](const AssetSpec& a) { return a.chain == c.id && a.asset == "native"; });
    if (!has && !c.native_class.empty()) out.push_back({c.id, "native", c.native_class, 18});
  }
  return out;
}

chain::EquivalenceRegistry build_registry(const Scenario& s) {
  std::map<std::string, const ClassSpec*> classes;
  for (const auto& c : s.classes) classes[c.id] = &c;
  chain::EquivalenceRegistry reg;
  for (const auto& a : effective_assets(s)) {
    auto it = classes.find(a.cls);
    if (it == classes.end()) throw ConfigError("asset " + a.chain + "/" + a.asset + ": unknown class '" + a.cls + "'");
    try {
      reg.add(a.chain, a.asset, a.cls, {it->second->is_stable, it->second->is_native});
    } catch (const DataError& e) {
      throw ConfigError(std::string("assets: ") + e.what());
    }
  }
  return reg;
}

struct Route {
  std::size_t pool_a = 0;  // leg1 pool
  std::size_t pool_b = 0;  // leg2 pool
  std::string sell_class;  // leg1 input class
  std::string buy_class;   // leg1 output class
  std::string pair_key;
  std::int64_t window = 0;
  std::optional<std::size_t> bridge;
};

std::string pair_key(const std::string& a, const std::string& b) {
  return a < b ? a + "/" + b : b + "/" + a;
}

struct PoolInfo {
  std::string chain;
  std::string asset_a;
  std::string asset_b;
  std::string class_a;
  std::string class_b;
};

std::vector<PoolInfo> pool_infos(const Scenario& s, const chain::EquivalenceRegistry& reg) {
  std::vector<PoolInfo> out;
  for (const auto& p : s.pools) {
    auto ca = reg.class_of(p.chain, p.asset_a);
    auto cb = reg.class_of(p.chain, p.asset_b);
    out.push_back({p.chain, p.asset_a, p.asset_b, ca.value_or(""), cb.value_or("")});
  }
  return out;
}

bool serves(const BridgeSpec& b, const std::string& chain) {
  return b.chains.empty() || std::find(b.chains.begin(), b.chains.end(), chain) != b.chains.end();
}

std::optional<std::size_t> bridge_for(const Scenario& s, Strategy st, const std::string& from,
                                      const std::string& to) {
  for (std::size_t i = 0; i < s.bridges.size(); ++i) {
    const auto& b = s.bridges[i];
    if (st == Strategy::BridgeNative && b.kind == BridgeKind::Native && b.l1 == from && b.l2 == to) return i;
    if (st == Strategy::BridgeMultichain && b.kind == BridgeKind::Multichain && serves(b, from) &&
        serves(b, to)) {
      return i;
    }
  }
  return std::nullopt;
}

std::vector<Route> build_routes(const Scenario& s, const AgentSpec& agent,
                                const chain::EquivalenceRegistry& reg, const std::vector<PoolInfo>& pools) {
  auto on_chain = [&](const std::string& c) {
    return agent.chains.empty() || std::find(agent.chains.begin(), agent.chains.end(), c) != agent.chains.end();
  };
  std::vector<std::pair<std::string, std::string>> pairs = agent.pairs;
  if (pairs.empty()) {
    std::set<std::string> seen;
    for (const auto& p : pools) {
      if (seen.insert(pair_key(p.class_a, p.class_b)).second) pairs.push_back({p.class_a, p.class_b});
    }
  }
  std::vector<Route> routes;
  for (const auto& [x, y] : pairs) {
    const std::string key = pair_key(x, y);
    const std::int64_t window = detect::pair_class_of(x, y, reg) == PairClass::StablecoinNative
                                    ? s.window_stable_seconds
                                    : s.window_other_seconds;
    std::size_t before = routes.size();
    for (std::size_t i = 0; i < pools.size(); ++i) {
      for (std::size_t j = 0; j < pools.size(); ++j) {
        const auto& pa = pools[i];
        const auto& pb = pools[j];
        if (pa.chain == pb.chain || !on_chain(pa.chain) || !on_chain(pb.chain)) continue;
        if (pair_key(pa.class_a, pa.class_b) != key || pair_key(pb.class_a, pb.class_b) != key) continue;
        std::optional<std::size_t> bridge;
        if (agent.strategy != Strategy::Inventory) {
          bridge = bridge_for(s, agent.strategy, pa.chain, pb.chain);
          if (!bridge) continue;
        }
        for (const auto& sell : {x, y}) {
          const std::string& buy = sell == x ? y : x;
          routes.push_back({i, j, sell, buy, key, window, bridge});
        }
      }
    }
    if (routes.size() == before) {
      throw ConfigError("agent " + agent.address + ": missing pool for pair " + key + " (" +
                        to_string(agent.strategy) + ")");
    }
  }
  return routes;
}

// ----- simulation -----

std::string random_hex(Xoshiro256pp& rng, int chars) {
  static const char* digits = "0123456789abcdef";
  std::string out = "0x";
  std::uint64_t word = 0;
  for (int i = 0; i < chars; ++i) {
    if (i % 16 == 0) word = rng();
    out.push_back(digits[word & 0xF]);
    word >>= 4;
  }
  return out;
}

std::int64_t uniform_int(Xoshiro256pp& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  auto span = static_cast<double>(hi - lo + 1);
  return std::min(hi, lo + static_cast<std::int64_t>(std::floor(rng.uniform() * span)));
}

double standard_normal(Xoshiro256pp& rng) {
  boost::random::normal_distribution<double> nd(0.0, 1.0);
  return nd(rng);
}

struct Grid {
  std::int64_t start = 0;
  std::int64_t block_time = 1;
  std::int64_t first_block = 0;

  std::int64_t index_at_or_after(std::int64_t t) const {
    if (t <= start) return 0;
    return (t - start + block_time - 1) / block_time;
  }
  std::int64_t ts(std::int64_t k) const { return start + k * block_time; }
  std::int64_t block(std::int64_t k) const { return first_block + k; }
};

struct Stamp {
  std::int64_t ts = 0;
  std::int64_t block = 0;
};

struct PoolState {
  PoolInfo info;
  std::string address;
  int dec_a = 8;
  int dec_b = 8;
  stochastic::CpmmPool cpmm;
};

struct AgentState {
  const AgentSpec* spec = nullptr;
  std::vector<std::string> eoas;
  std::vector<Route> routes;
  bool busy = false;
  std::int64_t retry_at = 0;
  std::map<std::string, std::int64_t> pair_ready;
  std::size_t rotation = 0;
};

struct Plan {
  std::size_t agent = 0;
  Route route;
  std::string id;
  double x_in = 0.0;
  Stamp leg1, out, in, leg2;
  std::int64_t sampled_latency = 0;
  std::string eoa1, eoa2;
  std::string tx1, tx2, tx_out, tx_in;
  Decimal gas1, gas2, tip1, tip2, bridge_gas;
  Decimal amount_in1, amount_out1, amount_in2;
  std::optional<std::int64_t> message_number;
};

enum class EventKind { NoiseClock, NoiseSwap, Leg1, Leg2 };

struct Event {
  std::int64_t time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::NoiseClock;
  std::size_t index = 0;  // pool for noise, plan for legs
  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

class Engine {
 public:
  explicit Engine(const Scenario& s)
      : s_(s),
        noise_rng_(Xoshiro256pp::for_stream(s.seed, 0)),
        agent_rng_(Xoshiro256pp::for_stream(s.seed, 1)),
        id_rng_(Xoshiro256pp::for_stream(s.seed, 2)) {
    end_ = s.start_time + s.horizon;
    path_len_ = s.horizon + s.window_other_seconds + 600;
    world_.registry = build_registry(s);
    for (const auto& c : s.chains) {
      grids_[c.id] = {s.start_time, c.block_time, c.first_block};
      chains_[c.id] = &c;
      world_.layers[c.id] = c.layer;
      routers_[c.id] = random_hex(id_rng_, 40);
      world_.labels.add(routers_[c.id], chain::LabelKind::NonMev);
    }
    for (const auto& a : effective_assets(s)) decimals_[{a.chain, a.asset}] = a.decimals;
    simulate_prices();
    auto infos = pool_infos(s, world_.registry);
    for (std::size_t i = 0; i < s.pools.size(); ++i) {
      const auto& p = s.pools[i];
      PoolState st;
      st.info = infos[i];
      st.address = random_hex(id_rng_, 40);
      st.dec_a = decimals_.at({p.chain, p.asset_a});
      st.dec_b = decimals_.at({p.chain, p.asset_b});
      double rb = p.reserve_b;
      if (rb <= 0.0) {
        rb = p.reserve_a * price(st.info.class_a, s.start_time) / price(st.info.class_b, s.start_time);
      }
      st.cpmm = {p.reserve_a, rb * (1.0 + p.price_offset)};
      pools_.push_back(st);
    }
    for (const auto& a : s.agents) {
      AgentState st;
      st.spec = &a;
      st.eoas.push_back(a.address);
      for (const auto& e : a.extra_eoas) st.eoas.push_back(e);
      st.routes = build_routes(s, a, world_.registry, infos);
      if (a.contract && a.mev_label) world_.labels.add(*a.contract, chain::LabelKind::Mev);
      agents_.push_back(std::move(st));
    }
    for (std::size_t ai = 0; ai < agents_.size(); ++ai) {
      std::set<std::size_t> touched;
      for (const auto& r : agents_[ai].routes) {
        touched.insert(r.pool_a);
        touched.insert(r.pool_b);
      }
      for (auto p : touched) watchers_[p].push_back(ai);
    }
  }

  World run() {
    if (s_.noise.rate > 0.0) {
      noise_clock_ = static_cast<double>(s_.start_time) + noise_rng_.exponential(s_.noise.rate);
      if (noise_clock_ <= static_cast<double>(end_)) {
        push(static_cast<std::int64_t>(std::ceil(noise_clock_)), EventKind::NoiseClock, 0);
      }
    }
    for (std::size_t ai = 0; ai < agents_.size(); ++ai) consider(ai, s_.start_time);
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      switch (ev.kind) {
        case EventKind::NoiseClock:
          on_noise_clock(ev.time);
          break;
        case EventKind::NoiseSwap:
          on_noise_swap(ev.index, ev.time);
          break;
        case EventKind::Leg1:
          on_leg1(ev.index);
          break;
        case EventKind::Leg2:
          on_leg2(ev.index);
          break;
      }
    }
    finish();
    return std::move(world_);
  }

 private:
  void push(std::int64_t t, EventKind k, std::size_t index) { queue_.push({t, seq_++, k, index}); }

  void simulate_prices() {
    for (std::size_t i = 0; i < s_.classes.size(); ++i) {
      const auto& c = s_.classes[i];
      std::vector<double> values;
      if (c.sigma == 0.0 && c.mu == 0.0) {
        values.assign(static_cast<std::size_t>(path_len_ + 1), c.usd_price);
      } else {
        auto path = stochastic::gbm_sample(c.usd_price, c.mu / kSecondsPerDay,
                                           c.sigma / std::sqrt(kSecondsPerDay), static_cast<double>(path_len_),
                                           1.0, mix64(s_.seed, 1000 + i));
        values = std::move(path.values);
      }
      paths_[c.id] = std::move(values);
    }
    const std::int64_t h0 = chain::PriceTable::hour_bucket(s_.start_time);
    const std::int64_t h1 = chain::PriceTable::hour_bucket(s_.start_time + path_len_);
    for (const auto& c : s_.classes) {
      for (std::int64_t h = h0; h <= h1; ++h) {
        world_.prices.set(c.id, h, price(c.id, std::max(h * 3600, s_.start_time)));
      }
    }
  }

  double price(const std::string& cls, std::int64_t t) const {
    const auto& v = paths_.at(cls);
    std::int64_t i = std::clamp<std::int64_t>(t - s_.start_time, 0, static_cast<std::int64_t>(v.size()) - 1);
    return v[static_cast<std::size_t>(i)];
  }

  double native_price(const std::string& chain, std::int64_t t) const {
    return price(chains_.at(chain)->native_class, t);
  }

  Stamp snap(const std::string& chain, std::int64_t t) const {
    const Grid& g = grids_.at(chain);
    std::int64_t k = g.index_at_or_after(t);
    return {g.ts(k), g.block(k)};
  }

  Decimal gas(const std::string& chain, Xoshiro256pp& rng) const {
    double mean = chains_.at(chain)->gas_fee_native;
    double u = rng.uniform();
    return mean > 0.0 ? Decimal::from_double(mean * (0.8 + 0.4 * u), kGasDecimals) : Decimal();
  }

  Decimal tip(const std::string& chain, Xoshiro256pp& rng) const {
    double mean = chains_.at(chain)->coinbase_tip_native;
    double u = rng.uniform();
    return mean > 0.0 ? Decimal::from_double(mean * (0.5 + u), kGasDecimals) : Decimal();
  }

  // Y received per X sold at the margin, for the pool's (class_x, class_y) view.
  static double reserve_of(const PoolState& p, const std::string& cls) {
    return p.info.class_a == cls ? p.cpmm.reserve_a : p.cpmm.reserve_b;
  }

  const std::string& asset_of(const PoolState& p, const std::string& cls) const {
    return p.info.class_a == cls ? p.info.asset_a : p.info.asset_b;
  }

  int decimals_of(const PoolState& p, const std::string& cls) const {
    return p.info.class_a == cls ? p.dec_a : p.dec_b;
  }

  // Sells `amount` of the class into the pool; returns the truncated output.
  Decimal swap(PoolState& p, const std::string& sell_class, const Decimal& amount) {
    const bool sell_a = p.info.class_a == sell_class;
    stochastic::CpmmPool view = sell_a ? p.cpmm : stochastic::CpmmPool{p.cpmm.reserve_b, p.cpmm.reserve_a};
    double out = stochastic::cpmm_swap(view, amount.to_double());
    Decimal out_dec = Decimal::from_double(out, sell_a ? p.dec_b : p.dec_a);
    view.reserve_b += out - out_dec.to_double();  // truncation dust stays in the pool
    p.cpmm = sell_a ? view : stochastic::CpmmPool{view.reserve_b, view.reserve_a};
    return out_dec;
  }

  void emit_swap(const PoolState& p, const std::string& tx, Stamp st, const std::string& who,
                 const std::string& contact, const std::string& sell_class, const Decimal& in,
                 const Decimal& out, const Decimal& gas_fee, const Decimal& tip_fee) {
    const std::string& buy_class = p.info.class_a == sell_class ? p.info.class_b : p.info.class_a;
    chain::SwapRecord r;
    r.chain = p.info.chain;
    r.tx_hash = tx;
    r.block = st.block;
    r.timestamp = st.ts;
    r.originator = who;
    r.first_contact = contact;
    r.asset_in = asset_of(p, sell_class);
    r.asset_out = asset_of(p, buy_class);
    r.amount_in = in;
    r.amount_out = out;
    r.gas_fee_native = gas_fee;
    r.coinbase_tip_native = tip_fee;
    r.pool = p.address;
    world_.swaps.push_back(r);
    transfer(r.chain, tx, 0, st, r.asset_in, who, p.address, in, std::nullopt);
    transfer(r.chain, tx, 1, st, r.asset_out, p.address, who, out, std::nullopt);
  }

  void transfer(const std::string& chain, const std::string& tx, std::int64_t log, Stamp st,
                const std::string& token, const std::string& from, const std::string& to, const Decimal& amount,
                std::optional<Decimal> fee) {
    chain::TransferRecord t;
    t.chain = chain;
    t.tx_hash = tx;
    t.log_index = log;
    t.block = st.block;
    t.timestamp = st.ts;
    t.token = token;
    t.from = from;
    t.to = to;
    t.amount = amount;
    t.fee_native = std::move(fee);
    world_.transfers.push_back(std::move(t));
  }

  void after_swap(std::size_t pool, std::int64_t now) {
    auto it = watchers_.find(pool);
    if (it == watchers_.end()) return;
    for (auto ai : it->second) consider(ai, now);
  }

  // ----- noise -----

  void on_noise_clock(std::int64_t now) {
    std::size_t pool = static_cast<std::size_t>(uniform_int(noise_rng_, 0, static_cast<std::int64_t>(pools_.size()) - 1));
    push(snap(pools_[pool].info.chain, now).ts, EventKind::NoiseSwap, pool);
    noise_clock_ += noise_rng_.exponential(s_.noise.rate);
    if (noise_clock_ <= static_cast<double>(end_)) {
      push(std::max(now, static_cast<std::int64_t>(std::ceil(noise_clock_))), EventKind::NoiseClock, 0);
    }
  }

  void on_noise_swap(std::size_t pi, std::int64_t now) {
    PoolState& p = pools_[pi];
    const auto& ca = p.info.class_a;
    const auto& cb = p.info.class_b;
    bool sell_a;
    if (noise_rng_.uniform() < s_.noise.informed_share) {
      // a overpriced in the pool when it fetches more b than the reference
      double pool_b_per_a = p.cpmm.reserve_b / p.cpmm.reserve_a;
      double ref_b_per_a = price(ca, now) / price(cb, now);
      sell_a = pool_b_per_a > ref_b_per_a;
    } else {
      sell_a = noise_rng_.uniform() < 0.5;
    }
    const std::string& sell = sell_a ? ca : cb;
    double usd = s_.noise.median_usd * std::exp(s_.noise.log_sigma * standard_normal(noise_rng_));
    double amount = std::min(usd / price(sell, now), s_.noise.max_reserve_fraction * reserve_of(p, sell));
    Decimal in = Decimal::from_double(amount, decimals_of(p, sell));
    const std::string who = random_hex(id_rng_, 40);
    const std::string tx = random_hex(id_rng_, 64);
    Decimal g = gas(p.info.chain, noise_rng_);
    if (in.is_zero()) return;
    Decimal out = swap(p, sell, in);
    emit_swap(p, tx, snap(p.info.chain, now), who, routers_.at(p.info.chain), sell, in, out, g, Decimal());
    ++world_.noise_swaps;
    after_swap(pi, now);
  }

  // ----- agents -----

  void consider(std::size_t ai, std::int64_t now) {
    AgentState& a = agents_[ai];
    if (a.busy || now < a.retry_at || now > end_) return;
    const AgentSpec& spec = *a.spec;
    const Route* best = nullptr;
    double best_edge = 0.0;
    double best_x = 0.0;
    for (const auto& r : a.routes) {
      auto ready = a.pair_ready.find(r.pair_key);
      if (ready != a.pair_ready.end() && now < ready->second) continue;
      const PoolState& pa = pools_[r.pool_a];
      const PoolState& pb = pools_[r.pool_b];
      const double ax = reserve_of(pa, r.sell_class), ay = reserve_of(pa, r.buy_class);
      const double by = reserve_of(pb, r.buy_class), bx = reserve_of(pb, r.sell_class);
      const double edge = (ay / ax) / (by / bx);
      if (edge < 1.0 + spec.min_edge) continue;
      // optimal input through two constant-product pools
      double x = (std::sqrt(ax * ay * bx * by) - ax * by) / (ay + by);
      x = std::min(x, spec.capital_usd / price(r.sell_class, now));
      if (x * price(r.sell_class, now) < spec.min_trade_usd) continue;
      if (edge > best_edge) {
        best = &r;
        best_edge = edge;
        best_x = x;
      }
    }
    if (best) plan(ai, *best, best_x, now);
  }

  void refuse(std::size_t ai, std::int64_t now, const char* reason, std::int64_t gap, std::int64_t window) {
    AgentState& a = agents_[ai];
    world_.truth.refused.push_back({a.spec->address, a.spec->strategy, now, reason, gap, window});
    a.retry_at = now + 60;
  }

  void plan(std::size_t ai, const Route& r, double x, std::int64_t now) {
    AgentState& a = agents_[ai];
    const AgentSpec& spec = *a.spec;
    const std::string& chain_a = pools_[r.pool_a].info.chain;
    const std::string& chain_b = pools_[r.pool_b].info.chain;
    Plan p;
    p.agent = ai;
    p.route = r;
    p.x_in = x;
    p.leg1 = snap(chain_a, now + uniform_int(agent_rng_, 1, 3));
    if (spec.strategy == Strategy::Inventory) {
      const Grid& g = grids_.at(chain_b);
      std::int64_t kmin = g.index_at_or_after(p.leg1.ts);
      std::int64_t limit = p.leg1.ts + spec.reaction_latency - g.start;
      std::int64_t kmax = limit < 0 ? -1 : limit / g.block_time;
      if (kmin > kmax) {
        refuse(ai, now, "block_time", g.ts(kmin) - p.leg1.ts, spec.reaction_latency);
        return;
      }
      std::int64_t k = uniform_int(agent_rng_, kmin, kmax);
      p.leg2 = {g.ts(k), g.block(k)};
    } else {
      const BridgeSpec& b = s_.bridges[*r.bridge];
      p.out = snap(chain_a, p.leg1.ts + uniform_int(agent_rng_, 1, 3));
      double sigma = (std::log(b.latency_p75) - std::log(b.latency_median)) / kZ75;
      double lat = std::exp(std::log(b.latency_median) + sigma * standard_normal(agent_rng_));
      p.sampled_latency = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(lat)));
      p.in = snap(chain_b, p.out.ts + p.sampled_latency);
      p.leg2 = snap(chain_b, p.in.ts + uniform_int(agent_rng_, 0, 2));
    }
    const std::int64_t gap = p.leg2.ts - p.leg1.ts;
    if (gap > r.window) {
      refuse(ai, now, "window", gap, r.window);
      return;
    }
    p.id = "arb-" + std::to_string(plans_.size() + 1);
    p.eoa1 = a.eoas[a.rotation % a.eoas.size()];
    p.eoa2 = a.eoas[(a.rotation + 1) % a.eoas.size()];
    ++a.rotation;
    p.tx1 = random_hex(id_rng_, 64);
    p.tx2 = random_hex(id_rng_, 64);
    p.gas1 = gas(chain_a, agent_rng_);
    p.gas2 = gas(chain_b, agent_rng_);
    p.tip1 = tip(chain_a, agent_rng_);
    p.tip2 = tip(chain_b, agent_rng_);
    if (spec.strategy != Strategy::Inventory) {
      p.tx_out = random_hex(id_rng_, 64);
      p.tx_in = random_hex(id_rng_, 64);
      p.bridge_gas = gas(chain_a, agent_rng_);
    }
    a.busy = true;
    plans_.push_back(std::move(p));
    push(plans_.back().leg1.ts, EventKind::Leg1, plans_.size() - 1);
  }

  std::string contact(const AgentState& a, const std::string& chain) const {
    return a.spec->contract ? *a.spec->contract : routers_.at(chain);
  }

  void on_leg1(std::size_t pi) {
    Plan& p = plans_[pi];
    AgentState& a = agents_[p.agent];
    PoolState& pa = pools_[p.route.pool_a];
    const PoolState& pb = pools_[p.route.pool_b];
    p.amount_in1 = Decimal::from_double(p.x_in, decimals_of(pa, p.route.sell_class));
    p.amount_out1 = swap(pa, p.route.sell_class, p.amount_in1);
    emit_swap(pa, p.tx1, p.leg1, p.eoa1, contact(a, pa.info.chain), p.route.sell_class, p.amount_in1,
              p.amount_out1, p.gas1, p.tip1);
    const int dec_b = decimals_of(pb, p.route.buy_class);
    if (a.spec->strategy == Strategy::Inventory) {
      p.amount_in2 = p.amount_out1.scaled(1, 1, dec_b);
    } else {
      const BridgeSpec& b = s_.bridges[*p.route.bridge];
      auto fee = static_cast<std::int64_t>(std::llround(b.fee_fraction * static_cast<double>(kFeeDenominator)));
      p.amount_in2 = p.amount_out1.scaled(kFeeDenominator - fee, kFeeDenominator, dec_b);
      const std::string& token_a = asset_of(pa, p.route.buy_class);
      if (b.kind == BridgeKind::Multichain) {
        transfer(pa.info.chain, p.tx_out, 0, p.out, token_a, p.eoa1, b.address, p.amount_out1, p.bridge_gas);
        transfer(pb.info.chain, p.tx_in, 0, p.in, asset_of(pb, p.route.buy_class), b.address, p.eoa2,
                 p.amount_in2, std::nullopt);
      } else {
        chain::NativeBridgeLink l;
        l.l1_chain = pa.info.chain;
        l.l2_chain = pb.info.chain;
        l.l1_tx = p.tx_out;
        l.l2_tx = p.tx_in;
        l.message_number = ++message_numbers_[*p.route.bridge];
        l.token = token_a;
        l.amount = p.amount_out1;
        l.sender = p.eoa1;
        l.recipient = p.eoa2;
        l.l1_timestamp = p.out.ts;
        l.l2_timestamp = p.in.ts;
        l.fee_native = p.bridge_gas;
        p.message_number = l.message_number;
        world_.native_links.push_back(std::move(l));
      }
    }
    push(p.leg2.ts, EventKind::Leg2, pi);
    after_swap(p.route.pool_a, p.leg1.ts);
  }

  void on_leg2(std::size_t pi) {
    Plan& p = plans_[pi];
    AgentState& a = agents_[p.agent];
    PoolState& pa = pools_[p.route.pool_a];
    PoolState& pb = pools_[p.route.pool_b];
    Decimal out2 = swap(pb, p.route.buy_class, p.amount_in2);
    emit_swap(pb, p.tx2, p.leg2, p.eoa2, contact(a, pb.info.chain), p.route.buy_class, p.amount_in2, out2, p.gas2,
              p.tip2);

    PlantedArbitrage t;
    t.id = p.id;
    t.strategy = a.spec->strategy;
    t.agent = a.spec->contract ? *a.spec->contract : a.spec->address;
    t.leg1 = {pa.info.chain, p.tx1};
    t.leg2 = {pb.info.chain, p.tx2};
    t.leg1_timestamp = p.leg1.ts;
    t.leg2_timestamp = p.leg2.ts;
    double fees = (p.gas1.to_double() + p.tip1.to_double()) * native_price(pa.info.chain, p.leg1.ts) +
                  (p.gas2.to_double() + p.tip2.to_double()) * native_price(pb.info.chain, p.leg2.ts);
    if (a.spec->strategy != Strategy::Inventory) {
      t.bridge_txs = {{pa.info.chain, p.tx_out}, {pb.info.chain, p.tx_in}};
      t.message_number = p.message_number;
      t.sampled_latency_seconds = p.sampled_latency;
      t.bridge_latency_seconds = p.in.ts - p.out.ts;
      fees += p.bridge_gas.to_double() * native_price(pa.info.chain, p.out.ts);
    }
    t.volume_usd = p.amount_in1.to_double() * *world_.prices.at_time(p.route.sell_class, p.leg1.ts);
    t.true_profit_usd = out2.to_double() * price(p.route.sell_class, p.leg2.ts) -
                        p.amount_in1.to_double() * price(p.route.sell_class, p.leg1.ts) - fees;
    world_.truth.planted.push_back(std::move(t));

    a.busy = false;
    // stay out of the pair until every leg of this trade is outside the window
    a.pair_ready[p.route.pair_key] = p.leg2.ts + p.route.window + 1;
    after_swap(p.route.pool_b, p.leg2.ts);
  }

  void finish() {
    auto& tr = world_.transfers;
    std::stable_sort(tr.begin(), tr.end(), [](const chain::TransferRecord& x, const chain::TransferRecord& y) {
      return std::tie(x.timestamp, x.chain, x.block) < std::tie(y.timestamp, y.chain, y.block);
    });
    auto& nl = world_.native_links;
    std::stable_sort(nl.begin(), nl.end(), [](const chain::NativeBridgeLink& x, const chain::NativeBridgeLink& y) {
      return std::tie(x.l1_timestamp, x.l1_chain, x.message_number) <
             std::tie(y.l1_timestamp, y.l1_chain, y.message_number);
    });
    auto& pl = world_.truth.planted;
    std::sort(pl.begin(), pl.end(), [](const PlantedArbitrage& x, const PlantedArbitrage& y) {
      return std::tie(x.leg1_timestamp, x.id) < std::tie(y.leg1_timestamp, y.id);
    });
    if (s_.collision_rate > 0.0) {
      world_.decoy_pairs = inject_collisions(world_.swaps, world_.registry, s_.chains, s_.collision_rate,
                                             mix64(s_.seed, 99), s_.window_stable_seconds, s_.window_other_seconds);
    }
    std::stable_sort(world_.swaps.begin(), world_.swaps.end(),
                     [](const chain::SwapRecord& x, const chain::SwapRecord& y) { return x.timestamp < y.timestamp; });
  }

  const Scenario& s_;
  Xoshiro256pp noise_rng_;
  Xoshiro256pp agent_rng_;
  Xoshiro256pp id_rng_;
  std::int64_t end_ = 0;
  std::int64_t path_len_ = 0;
  World world_;
  std::map<std::string, Grid> grids_;
  std::map<std::string, const ChainSpec*> chains_;
  std::map<std::string, std::string> routers_;
  std::map<std::pair<std::string, std::string>, int> decimals_;
  std::map<std::string, std::vector<double>> paths_;
  std::vector<PoolState> pools_;
  std::vector<AgentState> agents_;
  std::map<std::size_t, std::vector<std::size_t>> watchers_;
  std::vector<Plan> plans_;
  std::map<std::size_t, std::int64_t> message_numbers_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::uint64_t seq_ = 0;
  double noise_clock_ = 0.0;
};

// ----- truth encoding -----

ordered_json ref_json(const chain::TxRef& r) { return {{"chain", r.chain}, {"tx_hash", r.tx_hash}}; }

chain::TxRef ref_from(const json& j, const std::string& where) {
  check_keys(j, where, {"chain", "tx_hash", "timestamp"});
  return {get_string(j, "chain", where), get_string(j, "tx_hash", where)};
}

}  // namespace

void Scenario::validate() const {
  if (schema_version != kScenarioSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  }
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (window_stable_seconds <= 0 || window_other_seconds <= 0) throw ConfigError("windows must be positive");
  if (!(collision_rate >= 0.0 && collision_rate <= 1.0)) throw ConfigError("collision_rate must be in [0, 1]");
  if (chains.size() < 2) throw ConfigError("at least 2 chains are required");
  std::set<std::string> class_ids;
  for (const auto& c : classes) {
    if (c.id.empty() || !class_ids.insert(c.id).second) throw ConfigError("duplicate or empty class id '" + c.id + "'");
    if (!(c.usd_price > 0.0)) throw ConfigError("class " + c.id + ": usd_price must be positive");
    if (!(c.sigma >= 0.0) || !std::isfinite(c.mu)) throw ConfigError("class " + c.id + ": invalid mu/sigma");
  }
  std::set<std::string> chain_ids;
  for (const auto& c : chains) {
    if (c.id.empty() || !chain_ids.insert(c.id).second) throw ConfigError("duplicate or empty chain id '" + c.id + "'");
    if (c.block_time <= 0) throw ConfigError("chain " + c.id + ": block_time must be positive");
    if (c.layer != "l1" && c.layer != "l2") throw ConfigError("chain " + c.id + ": layer must be l1 or l2");
    if (!class_ids.count(c.native_class)) throw ConfigError("chain " + c.id + ": unknown native_class '" + c.native_class + "'");
    if (!(c.gas_fee_native >= 0.0) || !(c.coinbase_tip_native >= 0.0)) {
      throw ConfigError("chain " + c.id + ": fees must be nonnegative");
    }
    if (c.first_block < 0) throw ConfigError("chain " + c.id + ": first_block must be nonnegative");
  }
  std::set<std::pair<std::string, std::string>> asset_ids;
  for (const auto& a : assets) {
    if (!chain_ids.count(a.chain)) throw ConfigError("asset " + a.asset + ": unknown chain '" + a.chain + "'");
    if (!asset_ids.insert({a.chain, a.asset}).second) throw ConfigError("duplicate asset " + a.chain + "/" + a.asset);
    if (a.decimals < 0 || a.decimals > Decimal::kScale) throw ConfigError("asset " + a.asset + ": decimals out of range");
  }
  const auto reg = build_registry(*this);
  std::set<std::tuple<std::string, std::string, std::string>> pool_ids;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const auto& p = pools[i];
    const std::string where = at("pools", i);
    auto ca = reg.class_of(p.chain, p.asset_a);
    auto cb = reg.class_of(p.chain, p.asset_b);
    if (!ca || !cb) throw ConfigError(where + ": unknown asset on chain " + p.chain);
    if (*ca == *cb) throw ConfigError(where + ": both assets are in class " + *ca);
    if (!(p.reserve_a > 0.0) || !(p.reserve_b >= 0.0)) throw ConfigError(where + ": reserves must be positive");
    if (!(p.price_offset > -1.0)) throw ConfigError(where + ": price_offset must exceed -1");
    const auto key = std::make_tuple(p.chain, std::min(*ca, *cb), std::max(*ca, *cb));
    if (!pool_ids.insert(key).second) throw ConfigError(where + ": duplicate pool for the class pair on " + p.chain);
  }
  for (std::size_t i = 0; i < bridges.size(); ++i) {
    const auto& b = bridges[i];
    const std::string where = at("bridges", i);
    if (b.address.empty()) throw ConfigError(where + ": missing address");
    if (!(b.latency_median > 0.0) || !(b.latency_p75 >= b.latency_median)) {
      throw ConfigError(where + ": need 0 < latency_median <= latency_p75");
    }
    if (!(b.fee_fraction >= 0.0 && b.fee_fraction <= 0.004)) throw ConfigError(where + ": fee_fraction must be in [0, 0.004]");
    if (b.kind == BridgeKind::Native) {
      if (!chain_ids.count(b.l1) || !chain_ids.count(b.l2) || b.l1 == b.l2) {
        throw ConfigError(where + ": native bridge needs distinct known l1 and l2 chains");
      }
    }
    for (const auto& c : b.chains) {
      if (!chain_ids.count(c)) throw ConfigError(where + ": unknown chain '" + c + "'");
    }
  }
  if (!(noise.rate >= 0.0) || !(noise.median_usd > 0.0) || !(noise.log_sigma >= 0.0) ||
      !(noise.informed_share >= 0.0 && noise.informed_share <= 1.0) ||
      !(noise.max_reserve_fraction > 0.0 && noise.max_reserve_fraction < 1.0)) {
    throw ConfigError("noise: invalid parameters");
  }
  if (noise.rate > 0.0 && pools.empty()) throw ConfigError("noise: no pools to trade on");
  std::set<std::string> addresses;
  const auto infos = pool_infos(*this, reg);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string where = at("agents", i);
    if (a.address.empty()) throw ConfigError(where + ": missing address");
    for (const auto& e : a.extra_eoas) {
      if (!addresses.insert(e).second) throw ConfigError(where + ": address " + e + " is used twice");
    }
    if (!addresses.insert(a.address).second) throw ConfigError(where + ": address " + a.address + " is used twice");
    if (a.contract && !addresses.insert(*a.contract).second) {
      throw ConfigError(where + ": contract " + *a.contract + " is used twice");
    }
    if (!a.extra_eoas.empty() && !a.contract) throw ConfigError(where + ": extra_eoas need a contract");
    if (a.mev_label && !a.contract) throw ConfigError(where + ": mev_label needs a contract");
    if (!(a.capital_usd > 0.0) || a.reaction_latency < 0 || !(a.min_edge >= 0.0) || !(a.min_trade_usd >= 0.0)) {
      throw ConfigError(where + ": capital must be positive, latency and thresholds nonnegative");
    }
    for (const auto& [x, y] : a.pairs) {
      if (!class_ids.count(x) || !class_ids.count(y) || x == y) throw ConfigError(where + ": bad pair " + x + "/" + y);
    }
    for (const auto& c : a.chains) {
      if (!chain_ids.count(c)) throw ConfigError(where + ": unknown chain '" + c + "'");
    }
    build_routes(*this, a, reg, infos);
  }
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  check_keys(j, "scenario",
             {"schema_version", "seed", "start_time", "horizon", "chains", "classes", "assets", "pools", "agents",
              "bridges", "noise", "collision_rate", "window_stable_seconds", "window_other_seconds"});
  Scenario s;
  s.schema_version = static_cast<int>(get_int(j, "schema_version", "scenario", std::nullopt));
  if (s.schema_version != kScenarioSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(s.schema_version));
  }
  if (const json* seed = field(j, "seed")) {
    if (!seed->is_number_unsigned()) throw ConfigError("scenario.seed: expected a nonnegative integer");
    s.seed = seed->get<std::uint64_t>();
  }
  s.start_time = get_int(j, "start_time", "scenario", s.start_time);
  s.horizon = get_int(j, "horizon", "scenario", std::nullopt);
  s.collision_rate = get_double(j, "collision_rate", "scenario", 0.0);
  s.window_stable_seconds = get_int(j, "window_stable_seconds", "scenario", s.window_stable_seconds);
  s.window_other_seconds = get_int(j, "window_other_seconds", "scenario", s.window_other_seconds);

  const json& chains = get_array(j, "chains", "scenario");
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto& c = chains[i];
    const std::string w = at("chains", i);
    check_keys(c, w, {"id", "block_time", "layer", "native_class", "gas_fee_native", "coinbase_tip_native",
                      "first_block"});
    ChainSpec cs;
    cs.id = get_string(c, "id", w);
    cs.block_time = get_int(c, "block_time", w, std::nullopt);
    cs.layer = get_string(c, "layer", w, std::string("l1"));
    cs.native_class = get_string(c, "native_class", w);
    cs.gas_fee_native = get_double(c, "gas_fee_native", w, 0.0);
    cs.coinbase_tip_native = get_double(c, "coinbase_tip_native", w, 0.0);
    cs.first_block = get_int(c, "first_block", w, cs.first_block);
    s.chains.push_back(cs);
  }
  const json& classes = get_array(j, "classes", "scenario");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    const std::string w = at("classes", i);
    check_keys(c, w, {"id", "usd_price", "mu", "sigma", "is_stable", "is_native"});
    ClassSpec cs;
    cs.id = get_string(c, "id", w);
    cs.usd_price = get_double(c, "usd_price", w, std::nullopt);
    cs.mu = get_double(c, "mu", w, 0.0);
    cs.sigma = get_double(c, "sigma", w, 0.0);
    cs.is_stable = get_bool(c, "is_stable", w, false);
    cs.is_native = get_bool(c, "is_native", w, false);
    s.classes.push_back(cs);
  }
  if (field(j, "assets")) {
    const json& assets = get_array(j, "assets", "scenario");
    for (std::size_t i = 0; i < assets.size(); ++i) {
      const auto& a = assets[i];
      const std::string w = at("assets", i);
      check_keys(a, w, {"chain", "asset", "class", "decimals"});
      s.assets.push_back({get_string(a, "chain", w), get_string(a, "asset", w), get_string(a, "class", w),
                          static_cast<int>(get_int(a, "decimals", w, 8))});
    }
  }
  if (field(j, "pools")) {
    const json& pools = get_array(j, "pools", "scenario");
    for (std::size_t i = 0; i < pools.size(); ++i) {
      const auto& p = pools[i];
      const std::string w = at("pools", i);
      check_keys(p, w, {"chain", "asset_a", "asset_b", "reserve_a", "reserve_b", "price_offset"});
      PoolSpec ps;
      ps.chain = get_string(p, "chain", w);
      ps.asset_a = get_string(p, "asset_a", w);
      ps.asset_b = get_string(p, "asset_b", w);
      ps.reserve_a = get_double(p, "reserve_a", w, std::nullopt);
      ps.reserve_b = get_double(p, "reserve_b", w, 0.0);
      ps.price_offset = get_double(p, "price_offset", w, 0.0);
      s.pools.push_back(ps);
    }
  }
  if (field(j, "agents")) {
    const json& agents = get_array(j, "agents", "scenario");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& a = agents[i];
      const std::string w = at("agents", i);
      check_keys(a, w, {"address", "extra_eoas", "contract", "mev_label", "strategy", "capital_usd",
                        "reaction_latency", "min_edge", "min_trade_usd", "pairs", "chains"});
      AgentSpec as;
      as.address = get_string(a, "address", w);
      as.extra_eoas = get_strings(a, "extra_eoas", w);
      if (field(a, "contract")) as.contract = get_string(a, "contract", w);
      as.mev_label = get_bool(a, "mev_label", w, false);
      as.strategy = strategy_from_string(get_string(a, "strategy", w));
      as.capital_usd = get_double(a, "capital_usd", w, as.capital_usd);
      as.reaction_latency = get_int(a, "reaction_latency", w, as.reaction_latency);
      as.min_edge = get_double(a, "min_edge", w, as.min_edge);
      as.min_trade_usd = get_double(a, "min_trade_usd", w, as.min_trade_usd);
      as.chains = get_strings(a, "chains", w);
      if (const json* pairs = field(a, "pairs")) {
        if (!pairs->is_array()) throw ConfigError(w + ".pairs: expected an array");
        for (const auto& pr : *pairs) {
          if (!pr.is_array() || pr.size() != 2 || !pr[0].is_string() || !pr[1].is_string()) {
            throw ConfigError(w + ".pairs: expected [class, class] entries");
          }
          as.pairs.push_back({chain::normalize_id(pr[0].get<std::string>()),
                              chain::normalize_id(pr[1].get<std::string>())});
        }
      }
      s.agents.push_back(as);
    }
  }
  if (field(j, "bridges")) {
    const json& bridges = get_array(j, "bridges", "scenario");
    for (std::size_t i = 0; i < bridges.size(); ++i) {
      const auto& b = bridges[i];
      const std::string w = at("bridges", i);
      check_keys(b, w, {"kind", "address", "l1", "l2", "chains", "latency_median", "latency_p75", "fee_fraction"});
      BridgeSpec bs;
      const std::string kind = get_string(b, "kind", w);
      if (kind == "native") {
        bs.kind = BridgeKind::Native;
      } else if (kind == "multichain") {
        bs.kind = BridgeKind::Multichain;
      } else {
        throw ConfigError(w + ".kind: expected native or multichain");
      }
      bs.address = get_string(b, "address", w);
      bs.l1 = get_string(b, "l1", w, std::string());
      bs.l2 = get_string(b, "l2", w, std::string());
      bs.chains = get_strings(b, "chains", w);
      bs.latency_median = get_double(b, "latency_median", w, std::nullopt);
      bs.latency_p75 = get_double(b, "latency_p75", w, bs.latency_median);
      bs.fee_fraction = get_double(b, "fee_fraction", w, 0.0);
      s.bridges.push_back(bs);
    }
  }
  if (const json* n = field(j, "noise")) {
    check_keys(*n, "noise", {"rate", "median_usd", "log_sigma", "informed_share", "max_reserve_fraction"});
    s.noise.rate = get_double(*n, "rate", "noise", 0.0);
    s.noise.median_usd = get_double(*n, "median_usd", "noise", s.noise.median_usd);
    s.noise.log_sigma = get_double(*n, "log_sigma", "noise", s.noise.log_sigma);
    s.noise.informed_share = get_double(*n, "informed_share", "noise", s.noise.informed_share);
    s.noise.max_reserve_fraction = get_double(*n, "max_reserve_fraction", "noise", s.noise.max_reserve_fraction);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string to_json(const Scenario& s) {
  ordered_json j;
  j["schema_version"] = s.schema_version;
  j["seed"] = s.seed;
  j["start_time"] = s.start_time;
  j["horizon"] = s.horizon;
  j["window_stable_seconds"] = s.window_stable_seconds;
  j["window_other_seconds"] = s.window_other_seconds;
  j["collision_rate"] = s.collision_rate;
  j["chains"] = ordered_json::array();
  for (const auto& c : s.chains) {
    j["chains"].push_back({{"id", c.id},
                           {"block_time", c.block_time},
                           {"layer", c.layer},
                           {"native_class", c.native_class},
                           {"gas_fee_native", c.gas_fee_native},
                           {"coinbase_tip_native", c.coinbase_tip_native},
                           {"first_block", c.first_block}});
  }
  j["classes"] = ordered_json::array();
  for (const auto& c : s.classes) {
    j["classes"].push_back({{"id", c.id},
                            {"usd_price", c.usd_price},
                            {"mu", c.mu},
                            {"sigma", c.sigma},
                            {"is_stable", c.is_stable},
                            {"is_native", c.is_native}});
  }
  j["assets"] = ordered_json::array();
  for (const auto& a : s.assets) {
    j["assets"].push_back({{"chain", a.chain}, {"asset", a.asset}, {"class", a.cls}, {"decimals", a.decimals}});
  }
  j["pools"] = ordered_json::array();
  for (const auto& p : s.pools) {
    j["pools"].push_back({{"chain", p.chain},
                          {"asset_a", p.asset_a},
                          {"asset_b", p.asset_b},
                          {"reserve_a", p.reserve_a},
                          {"reserve_b", p.reserve_b},
                          {"price_offset", p.price_offset}});
  }
  j["agents"] = ordered_json::array();
  for (const auto& a : s.agents) {
    ordered_json o{{"address", a.address}, {"strategy", to_string(a.strategy)}};
    if (!a.extra_eoas.empty()) o["extra_eoas"] = a.extra_eoas;
    if (a.contract) o["contract"] = *a.contract;
    if (a.mev_label) o["mev_label"] = true;
    o["capital_usd"] = a.capital_usd;
    o["reaction_latency"] = a.reaction_latency;
    o["min_edge"] = a.min_edge;
    o["min_trade_usd"] = a.min_trade_usd;
    if (!a.pairs.empty()) {
      o["pairs"] = ordered_json::array();
      for (const auto& [x, y] : a.pairs) o["pairs"].push_back({x, y});
    }
    if (!a.chains.empty()) o["chains"] = a.chains;
    j["agents"].push_back(o);
  }
  j["bridges"] = ordered_json::array();
  for (const auto& b : s.bridges) {
    ordered_json o{{"kind", to_string(b.kind)}, {"address", b.address}};
    if (b.kind == BridgeKind::Native) {
      o["l1"] = b.l1;
      o["l2"] = b.l2;
    }
    if (!b.chains.empty()) o["chains"] = b.chains;
    o["latency_median"] = b.latency_median;
    o["latency_p75"] = b.latency_p75;
    o["fee_fraction"] = b.fee_fraction;
    j["bridges"].push_back(o);
  }
  j["noise"] = {{"rate", s.noise.rate},
                {"median_usd", s.noise.median_usd},
                {"log_sigma", s.noise.log_sigma},
                {"informed_share", s.noise.informed_share},
                {"max_reserve_fraction", s.noise.max_reserve_fraction}};
  return j.dump(2);
}

World generate(const Scenario& scenario) {
  scenario.validate();
  Engine e(scenario);
  return e.run();
}

std::size_t inject_collisions(std::vector<chain::SwapRecord>& swaps, const chain::EquivalenceRegistry& registry,
                              const std::vector<ChainSpec>& chains, double rate, std::uint64_t seed,
                              std::int64_t window_stable_seconds, std::int64_t window_other_seconds) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("collision rate must be in [0, 1]");
  if (rate == 0.0) return 0;
  Xoshiro256pp rng = Xoshiro256pp::for_stream(seed, 0);
  std::map<std::string, Grid> grids;
  for (const auto& c : chains) grids[c.id] = {0, c.block_time, c.first_block};
  // a chain's grid is anchored at the earliest swap seen on it
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> anchor;
  for (const auto& s : swaps) {
    auto it = anchor.find(s.chain);
    if (it == anchor.end() || s.timestamp < it->second.first) anchor[s.chain] = {s.timestamp, s.block};
  }
  auto snap = [&](const std::string& chain, std::int64_t t) -> Stamp {
    auto g = grids.find(chain);
    std::int64_t bt = g == grids.end() ? 1 : g->second.block_time;
    auto a = anchor.find(chain);
    std::int64_t t0 = a == anchor.end() ? t : a->second.first;
    std::int64_t b0 = a == anchor.end() ? 0 : a->second.second;
    std::int64_t k = t <= t0 ? 0 : (t - t0 + bt - 1) / bt;
    return {t0 + k * bt, b0 + k};
  };
  // class -> chain -> asset
  std::map<std::string, std::map<std::string, std::string>> by_class;
  for (const auto& [key, cls] : registry.assets()) {
    if (key.second == "native") continue;
    by_class[cls].emplace(key.first, key.second);
  }
  auto jitter = [&](const Decimal& d, std::int64_t ppm) {
    std::int64_t k = uniform_int(rng, -ppm, ppm);
    return d.scaled(1000000 + k, 1000000, 8);
  };
  const std::size_t n = swaps.size();
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rng.uniform() < rate)) continue;
    const chain::SwapRecord s = swaps[i];
    auto ca = registry.class_of(s.chain, s.asset_in);
    auto cb = registry.class_of(s.chain, s.asset_out);
    if (!ca || !cb) continue;
    std::vector<std::string> others;
    auto in_a = by_class.find(*ca);
    auto in_b = by_class.find(*cb);
    if (in_a == by_class.end() || in_b == by_class.end()) continue;
    for (const auto& [c, asset] : in_b->second) {
      (void)asset;
      if (c != s.chain && in_a->second.count(c)) others.push_back(c);
    }
    if (others.empty()) continue;
    const std::string other = others[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(others.size()) - 1))];
    const std::int64_t window = detect::pair_class_of(*ca, *cb, registry) == PairClass::StablecoinNative
                                    ? window_stable_seconds
                                    : window_other_seconds;
    chain::SwapRecord a = s;
    Stamp sa = snap(s.chain, s.timestamp + uniform_int(rng, 0, 5));
    a.tx_hash = random_hex(rng, 64);
    a.block = sa.block;
    a.timestamp = sa.ts;
    a.originator = random_hex(rng, 40);
    a.first_contact = random_hex(rng, 40);
    a.recipient.reset();
    a.pool.reset();
    a.amount_in = jitter(s.amount_in, 1000);
    a.amount_out = jitter(s.amount_out, 1000);
    a.coinbase_tip_native = Decimal();

    chain::SwapRecord b = a;
    Stamp sb = snap(other, a.timestamp + uniform_int(rng, 0, std::max<std::int64_t>(0, window / 2)));
    b.chain = other;
    b.tx_hash = random_hex(rng, 64);
    b.block = sb.block;
    b.timestamp = sb.ts;
    b.originator = random_hex(rng, 40);
    b.first_contact = random_hex(rng, 40);
    b.asset_in = in_b->second.at(other);
    b.asset_out = in_a->second.at(other);
    b.amount_in = jitter(a.amount_out, 2000);
    b.amount_out = jitter(a.amount_in, 5000);
    swaps.push_back(std::move(a));
    swaps.push_back(std::move(b));
    ++pairs;
  }
  return pairs;
}

void write_truth(std::ostream& out, const GroundTruth& truth) {
  out << ordered_json{{"schema_version", kScenarioSchemaVersion}}.dump() << '\n';
  for (const auto& p : truth.planted) {
    ordered_json j;
    j["id"] = p.id;
    j["strategy"] = to_string(p.strategy);
    j["agent"] = p.agent;
    j["leg1"] = ref_json(p.leg1);
    j["leg1"]["timestamp"] = p.leg1_timestamp;
    j["leg2"] = ref_json(p.leg2);
    j["leg2"]["timestamp"] = p.leg2_timestamp;
    if (!p.bridge_txs.empty()) {
      j["bridge_txs"] = ordered_json::array();
      for (const auto& r : p.bridge_txs) j["bridge_txs"].push_back(ref_json(r));
    }
    if (p.message_number) j["message_number"] = *p.message_number;
    if (p.sampled_latency_seconds) j["sampled_latency_seconds"] = *p.sampled_latency_seconds;
    if (p.bridge_latency_seconds) j["bridge_latency_seconds"] = *p.bridge_latency_seconds;
    j["volume_usd"] = p.volume_usd;
    j["true_profit_usd"] = p.true_profit_usd;
    out << j.dump() << '\n';
  }
}

void write_refused(std::ostream& out, const GroundTruth& truth) {
  out << ordered_json{{"schema_version", kScenarioSchemaVersion}}.dump() << '\n';
  for (const auto& r : truth.refused) {
    out << ordered_json{{"agent", r.agent},
                        {"strategy", to_string(r.strategy)},
                        {"time", r.time},
                        {"reason", r.reason},
                        {"planned_gap", r.planned_gap},
                        {"window", r.window}}
               .dump()
        << '\n';
  }
}

GroundTruth read_truth(std::istream& in, const std::string& source) {
  GroundTruth t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(n);
    try {
      json j = json::parse(line);
      if (n == 1 && j.is_object() && j.contains("schema_version") && !j.contains("id")) {
        if (get_int(j, "schema_version", where, std::nullopt) != kScenarioSchemaVersion) {
          throw DataError(where + ": unsupported schema_version");
        }
        continue;
      }
      check_keys(j, where,
                 {"id", "strategy", "agent", "leg1", "leg2", "bridge_txs", "message_number",
                  "sampled_latency_seconds", "bridge_latency_seconds", "volume_usd", "true_profit_usd"});
      PlantedArbitrage p;
      p.id = get_string(j, "id", where);
      p.strategy = strategy_from_string(get_string(j, "strategy", where));
      p.agent = get_string(j, "agent", where, std::string());
      p.leg1 = ref_from(j.at("leg1"), where + ".leg1");
      p.leg2 = ref_from(j.at("leg2"), where + ".leg2");
      p.leg1_timestamp = get_int(j.at("leg1"), "timestamp", where, 0);
      p.leg2_timestamp = get_int(j.at("leg2"), "timestamp", where, 0);
      if (const json* b = field(j, "bridge_txs")) {
        if (!b->is_array()) throw ConfigError(where + ": bridge_txs must be an array");
        for (const auto& r : *b) p.bridge_txs.push_back(ref_from(r, where + ".bridge_txs"));
      }
      if (field(j, "message_number")) p.message_number = get_int(j, "message_number", where, std::nullopt);
      if (field(j, "sampled_latency_seconds")) {
        p.sampled_latency_seconds = get_int(j, "sampled_latency_seconds", where, std::nullopt);
      }
      if (field(j, "bridge_latency_seconds")) {
        p.bridge_latency_seconds = get_int(j, "bridge_latency_seconds", where, std::nullopt);
      }
      p.volume_usd = get_double(j, "volume_usd", where, 0.0);
      p.true_profit_usd = get_double(j, "true_profit_usd", where, 0.0);
      t.planted.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
  }
  return t;
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_truth(in, path.filename().string());
}

std::vector<std::string> write_world(const World& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> names;
  auto open = [&](const char* name) {
    names.emplace_back(name);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw DataError("cannot write " + (dir / name).string());
    return f;
  };
  auto check = [&](std::ofstream& f) {
    f.flush();
    if (!f) throw DataError("write failed for " + (dir / names.back()).string());
  };
  {
    auto f = open("swaps.jsonl");
    chain::write_swaps(f, w.swaps);
    check(f);
  }
  {
    auto f = open("transfers.jsonl");
    chain::write_transfers(f, w.transfers);
    check(f);
  }
  {
    auto f = open("native_links.jsonl");
    chain::write_native_links(f, w.native_links);
    check(f);
  }
  {
    auto f = open("prices.csv");
    chain::write_prices(f, w.prices);
    check(f);
  }
  {
    auto f = open("equivalence.csv");
    chain::write_equivalence(f, w.registry);
    check(f);
  }
  {
    auto f = open("labels.csv");
    chain::write_labels(f, w.labels);
    check(f);
  }
  {
    auto f = open("chains.csv");
    bridge::write_chain_layers(f, w.layers);
    check(f);
  }
  {
    auto f = open("truth.jsonl");
    write_truth(f, w.truth);
    check(f);
  }
  {
    auto f = open("refused.jsonl");
    write_refused(f, w.truth);
    check(f);
  }
  return names;
}

Evaluation evaluate(const std::vector<ArbMatch>& matches, const GroundTruth& truth) {
  Evaluation e;
  e.planted = truth.planted.size();
  e.detected = matches.size();
  std::map<std::pair<chain::TxRef, chain::TxRef>, const PlantedArbitrage*> planted;
  for (const auto& p : truth.planted) planted[{p.leg1, p.leg2}] = &p;
  std::set<std::string> found;
  for (const auto& m : matches) {
    auto it = planted.find({m.leg1.ref(), m.leg2.ref()});
    if (it == planted.end()) {
      e.spurious.push_back(m.leg1.chain + ":" + m.leg1.tx_hash + "->" + m.leg2.chain + ":" + m.leg2.tx_hash);
      continue;
    }
    ++e.true_positives;
    found.insert(it->second->id);
    if (m.execution) {
      ++e.classified;
      if (m.execution->method == expected_method(it->second->strategy)) {
        ++e.classified_correct;
      } else {
        e.misclassified.push_back(it->second->id);
      }
    }
  }
  for (const auto& p : truth.planted) {
    if (!found.count(p.id)) e.missed.push_back(p.id);
  }
  if (e.planted > 0) e.recall = static_cast<double>(e.true_positives) / static_cast<double>(e.planted);
  if (e.detected > 0) e.precision = static_cast<double>(e.true_positives) / static_cast<double>(e.detected);
  if (e.classified > 0) {
    e.classification_accuracy = static_cast<double>(e.classified_correct) / static_cast<double>(e.classified);
  }
  return e;
}

std::string to_json(const Evaluation& e) {
  ordered_json j;
  j["planted"] = e.planted;
  j["detected"] = e.detected;
  j["true_positives"] = e.true_positives;
  j["recall"] = e.recall;
  j["precision"] = e.precision;
  j["zero_matches"] = e.detected == 0;  // precision reported as 1.0 then
  j["classified"] = e.classified;
  j["classified_correct"] = e.classified_correct;
  j["classification_accuracy"] = e.classification_accuracy;
  j["missed"] = e.missed;
  j["spurious"] = e.spurious;
  j["misclassified"] = e.misclassified;
  return j.dump(2);
}

}  // namespace xarb::scenario
