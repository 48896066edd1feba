#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "secmon/canned_scenarios.hpp"
#include "secmon/simulator.hpp"

using namespace secmon;
using nlohmann::json;

namespace {

ScenarioConfig canned_config(std::string_view name) { return load_scenario_text(find_canned(name)->json); }

bool contains(const std::vector<NodeId>& p, NodeId n) { return std::find(p.begin(), p.end(), n) != p.end(); }

}  // namespace

TEST(LinkChannel, FixedDelayWithoutJitter) {
  LinkSpec l{0, 1, 10.0, 0.0, 0.0, true};
  LinkChannel ch(l, 1);
  for (TimeMs t : {0, 7, 1000}) {
    auto a = ch.transmit(t);
    ASSERT_TRUE(a);
    EXPECT_EQ(*a, t + 10);
  }
}

TEST(LinkChannel, CertainLossNeverDelivers) {
  LinkSpec l{0, 1, 10.0, 0.0, 1.0, true};
  LinkChannel ch(l, 1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(ch.transmit(i));
}

TEST(LinkChannel, LossRateMatchesProbability) {
  LinkSpec l{0, 1, 10.0, 0.0, 0.1, true};
  LinkChannel ch(l, 99);
  int ok = 0;
  for (int i = 0; i < 10000; ++i) ok += ch.transmit(i).has_value();
  EXPECT_NEAR(ok / 10000.0, 0.90, 0.01);
}

TEST(LinkChannel, JitterNeverGoesNegative) {
  LinkSpec l{0, 1, 1.0, 20.0, 0.0, true};
  LinkChannel ch(l, 3);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(*ch.transmit(100), 100);
}

TEST(Simulator, SameSeedSameDigest) {
  for (const auto& c : canned_scenarios()) {
    SCOPED_TRACE(std::string(c.name));
    auto cfg = load_scenario_text(c.json);
    EXPECT_EQ(report_digest(run(cfg)), report_digest(run(cfg)));
  }
}

TEST(Simulator, DifferentSeedDifferentDigest) {
  auto cfg = canned_config("loss-injection");
  const auto a = report_digest(run(cfg));
  cfg.seed += 1;
  EXPECT_NE(a, report_digest(run(cfg)));
}

TEST(Simulator, PacketConservation) {
  for (const auto& c : canned_scenarios()) {
    SCOPED_TRACE(std::string(c.name));
    auto r = run(load_scenario_text(c.json));
    for (const auto& s : r.sessions) {
      EXPECT_TRUE(s.reconciled);
      EXPECT_EQ(s.injected, s.delivered + s.dropped_link + s.dropped_adversary + s.in_flight);
      EXPECT_EQ(s.covert_length_mismatch, 0u);
    }
  }
}

TEST(Simulator, CleanBaselineIsQuiet) {
  auto r = run(canned_config("clean-baseline"));
  EXPECT_TRUE(r.alarms.empty());
  EXPECT_TRUE(r.reroutes.empty());
  ASSERT_FALSE(r.qos.empty());
  for (const auto& q : r.qos) EXPECT_TRUE(q.psr_ok) << "interval " << q.interval;
  for (const auto& s : r.security) {
    if (s.ssr_ok) {
      EXPECT_TRUE(*s.ssr_ok) << "window " << s.window;
    }
  }
  EXPECT_DOUBLE_EQ(r.session(1)->delivered_fraction(), 1.0);
}

TEST(Simulator, DiamondReroutesAroundTamperer) {
  auto r = run(canned_config("tamper-diamond"));
  const auto* s = r.session(1);
  ASSERT_NE(s, nullptr);
  EXPECT_TRUE(contains(s->initial_path, 1));
  EXPECT_FALSE(contains(s->final_path, 1));
  ASSERT_FALSE(r.reroutes.empty());
  EXPECT_EQ(r.reroutes.front().trigger, Action::ReestablishAndIsolate);
  EXPECT_EQ(r.reroutes.front().subject, 1u);
}

TEST(Simulator, DirectLinkTriggerIsFlaggedWithSamePath) {
  auto cfg = canned_config("clean-baseline");
  cfg.topology.links.at(0).loss = 0.3;
  validate(cfg);
  auto r = run(cfg);
  ASSERT_FALSE(r.reroutes.empty());
  for (const auto& e : r.reroutes) {
    EXPECT_TRUE(e.flagged);
    EXPECT_TRUE(e.same_path);
    EXPECT_EQ(e.new_path, e.old_path);
  }
  EXPECT_EQ(r.session(1)->final_path, (std::vector<NodeId>{0, 1}));
}

TEST(Simulator, FloodAlarmWithinOneSecond) {
  auto cfg = canned_config("flood-ddos");
  for (auto& a : cfg.adversaries) a.start_ms = 10000;
  validate(cfg);
  auto r = run(cfg);
  ASSERT_FALSE(r.alarms.empty());
  const auto& first = r.alarms.front();
  EXPECT_GE(first.time, 10000);
  EXPECT_LE(first.time, 11000);
  EXPECT_EQ(first.type, AttackType::Flood);
  ASSERT_TRUE(first.suspected);
  EXPECT_EQ(*first.suspected, 5u);
}

TEST(Simulator, UnknownSessionPacketsAreNotCountedAsSessionTraffic) {
  auto r = run(canned_config("flood-ddos"));
  const auto* s = r.session(1);
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->injected, static_cast<std::uint64_t>(r.horizon_ms / 20));
}
