#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "xarb/bridgelink.hpp"
#include "xarb/percentile.hpp"

using namespace xarb;
using namespace xarb::chain;
using namespace xarb::bridge;

namespace {

EquivalenceRegistry registry() {
  EquivalenceRegistry r;
  for (const char* c : {"ethereum", "arbitrum", "base"}) {
    r.add(c, "weth", "eth", {false, true});
    r.add(c, "usdc", "usd", {true, false});
    r.add(c, "vow", "vow", {false, false});
  }
  return r;
}

// ethereum usdc -> vow at t=100, arbitrum vow -> usdc at t=1000.
ArbMatch match() {
  ArbMatch m;
  m.leg1.chain = "ethereum";
  m.leg1.tx_hash = "0xl1";
  m.leg1.block = 10;
  m.leg1.timestamp = 100;
  m.leg1.originator = "0xarb";
  m.leg1.asset_in = "usdc";
  m.leg1.asset_out = "vow";
  m.leg2.chain = "arbitrum";
  m.leg2.tx_hash = "0xl2";
  m.leg2.block = 500;
  m.leg2.timestamp = 1000;
  m.leg2.originator = "0xarb";
  m.leg2.asset_in = "vow";
  m.leg2.asset_out = "usdc";
  m.class_in = "usd";
  m.class_out = "vow";
  m.time_gap = 900;
  return m;
}

NativeBridgeLink link(std::int64_t msg, std::int64_t l1, std::int64_t l2, const std::string& token = "vow") {
  NativeBridgeLink l;
  l.l1_chain = "ethereum";
  l.l2_chain = "arbitrum";
  l.l1_tx = "0xd" + std::to_string(msg);
  l.l2_tx = "0xm" + std::to_string(msg);
  l.message_number = msg;
  l.token = token;
  l.amount = Decimal::parse("100");
  l.sender = "0xarb";
  l.recipient = "0xarb";
  l.l1_timestamp = l1;
  l.l2_timestamp = l2;
  l.fee_native = Decimal::parse("0.002");
  return l;
}

TransferRecord transfer(const std::string& chain, const std::string& tx, std::int64_t block, std::int64_t t,
                        const std::string& token, const std::string& from, const std::string& to) {
  TransferRecord r;
  r.chain = chain;
  r.tx_hash = tx;
  r.block = block;
  r.timestamp = t;
  r.token = token;
  r.from = from;
  r.to = to;
  r.amount = Decimal::parse("100");
  r.fee_native = Decimal::parse("0.003");
  return r;
}

}  // namespace

TEST(Native, PlantedLinkFound) {
  auto reg = registry();
  NativeIndex idx({link(7, 160, 800)});
  auto e = classify_native(match(), idx, reg);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->method, Method::NativeBridge);
  EXPECT_EQ(e->message_number, 7);
  EXPECT_EQ(e->bridge_latency_seconds, 640);
  EXPECT_EQ(e->bridge_out_tx->tx_hash, "0xd7");
  EXPECT_EQ(*e->bridge_fee_native, Decimal::parse("0.002"));
}

TEST(Native, WrongClassOrWindowRejected) {
  auto reg = registry();
  EXPECT_FALSE(classify_native(match(), NativeIndex({link(1, 160, 800, "weth")}), reg));
  EXPECT_FALSE(classify_native(match(), NativeIndex({link(1, 160, 1001)}), reg));
  EXPECT_FALSE(classify_native(match(), NativeIndex({link(1, 99, 800)}), reg));
  auto other = link(1, 160, 800);
  other.sender = other.recipient = "0xsomeone";
  EXPECT_FALSE(classify_native(match(), NativeIndex({other}), reg));
  auto via_recipient = link(2, 160, 800);
  via_recipient.sender = "0xsomeone";
  EXPECT_TRUE(classify_native(match(), NativeIndex({via_recipient}), reg));
}

TEST(Native, NearestLinkWins) {
  auto reg = registry();
  auto e = classify_native(match(), NativeIndex({link(9, 300, 900), link(4, 120, 950), link(5, 120, 700)}), reg);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->message_number, 4);
}

TEST(TokenTransfer, PairFound) {
  auto reg = registry();
  std::vector<TransferRecord> ts = {
      transfer("ethereum", "0xout", 15, 160, "vow", "0xarb", "0xbridge"),
      transfer("arbitrum", "0xin", 400, 700, "vow", "0xrelayer", "0xarb"),
  };
  auto e = classify_token_transfer(match(), TransferIndex(ts), reg);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->method, Method::MultichainBridge);
  EXPECT_EQ(e->bridge_out_tx->tx_hash, "0xout");
  EXPECT_EQ(e->bridge_in_tx->tx_hash, "0xin");
  EXPECT_EQ(e->bridge_latency_seconds, 540);
  EXPECT_EQ(*e->bridge_fee_native, Decimal::parse("0.003"));
}

TEST(TokenTransfer, OneSidedOrWrongRecipientRejected) {
  auto reg = registry();
  auto out = transfer("ethereum", "0xout", 15, 160, "vow", "0xarb", "0xbridge");
  EXPECT_FALSE(classify_token_transfer(match(), TransferIndex({out}), reg));
  auto wrong_to = transfer("arbitrum", "0xin", 400, 700, "vow", "0xrelayer", "0xother");
  EXPECT_FALSE(classify_token_transfer(match(), TransferIndex({out, wrong_to}), reg));
  auto wrong_token = transfer("arbitrum", "0xin", 400, 700, "usdc", "0xrelayer", "0xarb");
  EXPECT_FALSE(classify_token_transfer(match(), TransferIndex({out, wrong_token}), reg));
  auto before_out = transfer("arbitrum", "0xin", 40, 150, "vow", "0xrelayer", "0xarb");
  EXPECT_FALSE(classify_token_transfer(match(), TransferIndex({out, before_out}), reg));
}

TEST(TokenTransfer, RecipientFieldUsedForSource) {
  auto reg = registry();
  ArbMatch m = match();
  m.leg1.recipient = "0xvault";
  std::vector<TransferRecord> ts = {transfer("ethereum", "0xout", 15, 160, "vow", "0xarb", "0xbridge"),
                                    transfer("arbitrum", "0xin", 400, 700, "vow", "0xr", "0xarb")};
  EXPECT_FALSE(classify_token_transfer(m, TransferIndex(ts), reg));
  ts[0].from = "0xvault";
  EXPECT_TRUE(classify_token_transfer(m, TransferIndex(ts), reg));
}

TEST(TokenTransfer, NearestOnEachSideAndOrderIndependent) {
  auto reg = registry();
  std::vector<TransferRecord> ts = {
      transfer("ethereum", "0xo2", 30, 300, "vow", "0xarb", "0xbridge"),
      transfer("ethereum", "0xo1", 15, 160, "vow", "0xarb", "0xbridge"),
      transfer("arbitrum", "0xi1", 300, 600, "vow", "0xr", "0xarb"),
      transfer("arbitrum", "0xi2", 450, 900, "vow", "0xr", "0xarb"),
      transfer("arbitrum", "0xlate", 600, 1200, "vow", "0xr", "0xarb"),
  };
  auto e = classify_token_transfer(match(), TransferIndex(ts), reg);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->bridge_out_tx->tx_hash, "0xo1");
  EXPECT_EQ(e->bridge_in_tx->tx_hash, "0xi2");
  std::mt19937 rng(1);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(ts.begin(), ts.end(), rng);
    EXPECT_EQ(classify_token_transfer(match(), TransferIndex(ts), reg), e);
  }
}

TEST(Classify, PrecedenceAndAmbiguity) {
  auto reg = registry();
  EXPECT_EQ(classify(match(), {}, {}, reg).method, Method::Inventory);
  std::vector<TransferRecord> ts = {transfer("ethereum", "0xout", 15, 160, "vow", "0xarb", "0xbridge"),
                                    transfer("arbitrum", "0xin", 400, 700, "vow", "0xr", "0xarb")};
  auto only_token = classify(match(), {}, TransferIndex(ts), reg);
  EXPECT_EQ(only_token.method, Method::MultichainBridge);
  EXPECT_FALSE(only_token.ambiguous);
  auto both = classify(match(), NativeIndex({link(3, 160, 800)}), TransferIndex(ts), reg);
  EXPECT_EQ(both.method, Method::NativeBridge);
  EXPECT_TRUE(both.ambiguous);
}

TEST(Classify, SettlementShareBounded) {
  auto reg = registry();
  std::vector<ArbMatch> ms(3, match());
  ms[2].time_gap = 0;
  classify_all(ms, NativeIndex({link(3, 160, 800)}), {}, reg, 2);
  EXPECT_NEAR(bridge_settlement_share(ms[0]), 640.0 / 900.0, 1e-15);
  EXPECT_EQ(bridge_settlement_share(ms[2]), 0.0);
  ArbMatch inv = match();
  EXPECT_EQ(bridge_settlement_share(inv), 0.0);
}

TEST(Report, CountsAndCategories) {
  std::vector<ArbMatch> ms;
  for (int i = 0; i < 4; ++i) {
    ArbMatch m = match();
    m.time_gap = 10 * (i + 1);
    m.execution = ExecutionClass{};
    ms.push_back(m);
  }
  ArbMatch b = match();
  b.execution = ExecutionClass{};
  b.execution->method = Method::NativeBridge;
  b.execution->bridge_latency_seconds = 450;
  ms.push_back(b);
  ChainLayers layers = {{"ethereum", "l1"}, {"arbitrum", "l2"}};
  auto rep = bridge_report(ms, layers);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].category, "all");
  EXPECT_EQ(rep.rows[1].category, "L1-L2");
  EXPECT_EQ(rep.rows[0].methods[Method::Inventory].count, 4u);
  EXPECT_DOUBLE_EQ(rep.rows[0].methods[Method::Inventory].share, 0.8);
  EXPECT_EQ(*rep.rows[0].methods[Method::Inventory].median_settlement_seconds, 20.0);
  EXPECT_DOUBLE_EQ(*rep.rows[0].methods[Method::NativeBridge].bridge_time_share, 0.5);
  auto j = nlohmann::json::parse(to_json(rep));
  EXPECT_EQ(j["rows"][0]["native_bridge"]["count"], 1);
  EXPECT_TRUE(j["rows"][0]["multichain_bridge"]["median_settlement_seconds"].is_null());
}

TEST(Layers, RoundTripAndCategory) {
  ChainLayers layers = {{"ethereum", "l1"}, {"base", "l2"}, {"arbitrum", "l2"}};
  std::stringstream buf;
  write_chain_layers(buf, layers);
  EXPECT_EQ(read_chain_layers(buf), layers);
  EXPECT_EQ(pair_category("base", "arbitrum", layers), "L2-L2");
  EXPECT_EQ(pair_category("ethereum", "ethereum", layers), "L1-L1");
  EXPECT_EQ(pair_category("ethereum", "zk", layers), "unknown");
}

TEST(Percentile, NearestRank) {
  std::vector<int> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  std::shuffle(v.begin(), v.end(), std::mt19937(2));
  EXPECT_EQ(*nearest_rank(v, 25), 25);
  EXPECT_EQ(*nearest_rank(v, 50), 50);
  EXPECT_EQ(*nearest_rank(v, 75), 75);
  EXPECT_EQ(*nearest_rank(v, 100), 100);
  EXPECT_EQ(*nearest_rank(v, 0), 1);
  EXPECT_EQ(*nearest_rank(std::vector<int>{9}, 25), 9);
  EXPECT_FALSE(nearest_rank(std::vector<int>{}, 50));
}
