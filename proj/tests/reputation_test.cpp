#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "secmon/reputation.hpp"

namespace secmon {
namespace {

// Written straight from the equation with long double accumulation.
long double sr_oracle(long double alpha, long double oe, const std::vector<long double>& ir,
                      const std::vector<long double>& v) {
  if (ir.empty()) return oe;
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < ir.size(); ++i) num += ir[i] * v[i];
  for (auto x : ir) den += x;
  return alpha * oe + (1 - alpha) * (num / den);
}

TEST(OwnExperience, Updates) {
  EXPECT_DOUBLE_EQ(update_own_experience(0.5, 0.5, 0.3), 0.5);
  EXPECT_NEAR(update_own_experience(0.5, 1.0, 0.3), 0.65, 1e-15);
  double oe = 0.5;
  for (int n = 1; n <= 20; ++n) {
    oe = update_own_experience(oe, 0.0, 0.3);
    EXPECT_NEAR(oe, std::pow(0.7, n) * 0.5, 1e-15);
  }
  EXPECT_THROW(update_own_experience(0.5, 1.2, 0.3), DomainError);
  EXPECT_THROW(update_own_experience(0.5, -0.1, 0.3), DomainError);
}

TEST(ServiceReputation, Examples) {
  const WeightedVote one[] = {{1.0, 0.6}};
  EXPECT_NEAR(service_reputation(0.5, 0.8, one), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(service_reputation(0.5, 0.37, {}), 0.37);
  const WeightedVote two[] = {{0.5, 0.0}, {0.5, 1.0}};
  EXPECT_DOUBLE_EQ(service_reputation(0.5, 0.5, two), 0.5);
  const WeightedVote bad[] = {{0.0, 0.5}};
  EXPECT_THROW(service_reputation(0.5, 0.5, bad), DomainError);
}

TEST(ServiceReputation, MatchesOracleOnGrid) {
  std::mt19937 rng(41);
  auto grid = [&] { return (rng() % 21) * 0.05; };
  for (int i = 0; i < 1000; ++i) {
    const double alpha = 0.05 + (rng() % 19) * 0.05;
    const double oe = grid();
    const std::size_t k = rng() % 6;
    std::vector<WeightedVote> votes;
    std::vector<long double> ir, v;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 0.05 + (rng() % 20) * 0.05;
      const double x = grid();
      votes.push_back({w, x});
      ir.push_back(w);
      v.push_back(x);
    }
    EXPECT_NEAR(service_reputation(alpha, oe, votes), static_cast<double>(sr_oracle(alpha, oe, ir, v)), 1e-12);
  }
}

TEST(ServiceReputation, ConvexAndMonotone) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const double alpha = 0.01 + 0.98 * u(rng);
    const double oe = u(rng);
    std::vector<WeightedVote> votes(1 + rng() % 5);
    double lo = oe, hi = oe;
    for (auto& v : votes) {
      v = {0.01 + 0.99 * u(rng), u(rng)};
      lo = std::min(lo, v.value);
      hi = std::max(hi, v.value);
    }
    const double sr = service_reputation(alpha, oe, votes);
    EXPECT_GE(sr, lo - 1e-12);
    EXPECT_LE(sr, hi + 1e-12);
    const double bump = u(rng) * (1.0 - oe);
    EXPECT_GE(service_reputation(alpha, oe + bump, votes), sr - 1e-12);
    auto up = votes;
    auto& pick = up[rng() % up.size()];
    pick.value += u(rng) * (1.0 - pick.value);
    EXPECT_GE(service_reputation(alpha, oe, up), sr - 1e-12);
  }
}

TEST(CumulativeReputation, Examples) {
  const double all_one[] = {1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(cumulative_reputation(1.0, all_one), 1.0);
  const double mixed[] = {0.5, 1.0};
  EXPECT_NEAR(cumulative_reputation(0.8, mixed), 0.6, 1e-15);
  EXPECT_LE(cumulative_reputation(0.01, mixed), 0.01);
  EXPECT_DOUBLE_EQ(cumulative_reputation(0.6, {}), 0.3);
  EXPECT_THROW(cumulative_reputation(0.0, mixed), DomainError);
}

TEST(PathReputation, Examples) {
  EXPECT_DOUBLE_EQ(path_reputation(1.0, 1.0), 1.0);
  EXPECT_NEAR(path_reputation(0.7, 0.6), 0.42, 1e-15);
  EXPECT_DOUBLE_EQ(path_reputation(0.0, 0.9), 0.0);
}

TEST(InformationReputation, Updates) {
  EXPECT_NEAR(update_information_reputation(0.5, 0.3, 0.3, 0.1, 0.01), 0.6, 1e-15);
  EXPECT_NEAR(update_information_reputation(0.5, 0.0, 1.0, 0.1, 0.01), 0.4, 1e-15);
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> u(0, 1);
  double ir = 0.5;
  for (int i = 0; i < 100000; ++i) {
    ir = update_information_reputation(ir, u(rng), u(rng) < 0.5 ? 0.0 : u(rng), 0.1 + 0.5 * u(rng), 0.01);
    ASSERT_GE(ir, 0.01);
    ASSERT_LE(ir, 1.0);
  }
}

TEST(Pearson, Cases) {
  const std::vector<double> obs{0.1, 0.9, 0.4, 1.0, 0.0, 0.6};
  EXPECT_NEAR(*pearson(obs, obs), 1.0, 1e-12);
  std::vector<double> inv;
  for (double o : obs) inv.push_back(1.0 - o);
  EXPECT_NEAR(*pearson(inv, obs), -1.0, 1e-12);
  const std::vector<double> flat(6, 0.7);
  EXPECT_FALSE(pearson(flat, obs));
}

TEST(ValidateVoter, Cases) {
  ReputationParams p;
  std::vector<VotePair> echo, liar, flat, young;
  const double truth[] = {0.2, 0.9, 0.3, 1.0, 0.0, 0.8};
  for (std::uint64_t e = 0; e < 6; ++e) {
    echo.push_back({e, truth[e], truth[e]});
    liar.push_back({e, 1.0 - truth[e], truth[e]});
    flat.push_back({e, 0.5, truth[e]});
    if (e < 4) young.push_back({e, 1.0 - truth[e], truth[e]});
  }
  EXPECT_EQ(validate_voter(echo, p).status, VoteStatus::Retained);
  EXPECT_EQ(validate_voter(liar, p).status, VoteStatus::Excluded);
  EXPECT_EQ(validate_voter(flat, p).status, VoteStatus::Excluded);
  EXPECT_EQ(validate_voter(young, p).status, VoteStatus::Unvalidated);
}

TEST(DecideAction, TableRows) {
  EXPECT_EQ(decide_action(true, true), Action::Monitor);
  EXPECT_EQ(decide_action(true, false), Action::ReestablishAndIsolate);
  EXPECT_EQ(decide_action(false, true), Action::ShareReputationReroute);
  EXPECT_EQ(decide_action(false, false), Action::ReestablishSession);
}

TEST(RecommendNextHop, ArgmaxAndTies) {
  EXPECT_EQ(recommend_next_hop({{1, 0.9}, {2, 0.4}}, 0.25).node, 1u);
  EXPECT_EQ(recommend_next_hop({{1, 0.5}, {2, 0.5}}, 0.25).node, 1u);
  EXPECT_EQ(recommend_next_hop({{3, 0.5}, {2, 0.5}}, 0.25).node, 2u);
  const auto c = recommend_next_hop({{1, 0.1}, {2, std::nullopt}}, 0.25);
  EXPECT_EQ(c.node, 2u);
  EXPECT_TRUE(c.used_prior);
  EXPECT_THROW(recommend_next_hop({}, 0.25), RoutingError);
}

TEST(RecommendNextHop, InvariantUnderPositiveRescaling) {
  std::mt19937 rng(44);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    std::map<NodeId, std::optional<double>> c, scaled;
    const double k = 0.01 + 10 * u(rng);
    for (NodeId id = 0; id < 1 + rng() % 6; ++id) {
      const double v = (rng() % 10) * 0.1;
      c[id] = v;
      scaled[id] = v * k;
    }
    EXPECT_EQ(recommend_next_hop(c, 0.0).node, recommend_next_hop(scaled, 0.0).node);
  }
}

TEST(RepShare, Quantization) {
  EXPECT_EQ(quantize_unit(0.7), 179);
  std::mt19937 rng(45);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng);
    EXPECT_LE(std::abs(dequantize_unit(quantize_unit(x)) - x), 1.0 / 510.0 + 1e-15);
  }
  const std::vector<RepShareRecord> recs{{1, 179, 128}, {7, 0, 255}};
  EXPECT_EQ(decode_rep_share(encode_rep_share(recs)), recs);
  EXPECT_THROW(decode_rep_share(std::vector<std::uint8_t>{1, 2}), std::invalid_argument);
}

TEST(ReputationStore, EmptyVoterSetGivesOwnExperience) {
  ReputationStore b(0, ReputationParams{});
  b.record_own(1, Context::Psr, 1.0, 0);
  b.close_epoch(0);
  EXPECT_NEAR(*b.sr(1, Context::Psr), 0.65, 1e-15);
  EXPECT_NEAR(*b.oe(1, Context::Psr), 0.65, 1e-15);
}

TEST(ReputationStore, ShareWithNoNeighborsIsEmpty) {
  ReputationStore b(0, ReputationParams{});
  b.record_own(1, Context::Psr, 1.0, 0);
  b.close_epoch(0);
  EXPECT_TRUE(b.share_reputation(0).empty());
}

TEST(ReputationStore, ShareBudgetTruncatesByLargestChange) {
  ReputationParams p;
  p.share_budget = 2;
  ReputationStore b(0, p, {9});
  b.record_own(1, Context::Psr, 0.5, 0);   // no change
  b.record_own(2, Context::Psr, 1.0, 0);   // +0.15
  b.record_own(3, Context::Psr, 0.0, 0);   // -0.15
  b.close_epoch(0);
  const auto out = b.share_reputation(0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].truncated);
  ASSERT_EQ(out[0].records.size(), 2u);
  EXPECT_EQ(out[0].records[0].subject, 2u);
  EXPECT_EQ(out[0].records[1].subject, 3u);
}

TEST(ReputationStore, CumulativeUsesSubjectNeighborsUnknownToEvaluator) {
  ReputationStore b(0, ReputationParams{}, {1, 2});
  b.set_topology({{0, {1, 2}}, {1, {0, 2, 5, 6}}, {2, {0, 1}}});
  b.record_own(1, Context::Psr, 1.0, 0);
  // node 1 votes about 5, 6 (unknown to 0) and 2 (known: ignored)
  b.record_vote(1, 5, Context::Psr, 0.5, 0);
  b.record_vote(1, 6, Context::Psr, 1.0, 0);
  b.record_vote(1, 2, Context::Psr, 0.0, 0);
  b.close_epoch(0);
  EXPECT_NEAR(*b.cr(1, Context::Psr), 0.5 * 0.75, 1e-15);
  EXPECT_NEAR(*b.pr(1, Context::Psr), *b.sr(1, Context::Psr) * 0.375, 1e-15);
  EXPECT_THROW(b.pr(1, Context::Psr, 3), std::runtime_error);
}

TEST(ReputationStore, LiarExcludedAndIrDecays) {
  ReputationStore b(0, ReputationParams{}, {1, 2, 8, 9});
  std::mt19937 rng(46);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::uint64_t n = 0; n < 20; ++n) {
    for (NodeId s : {1u, 2u}) {
      const double truth = s == 1 ? 1.0 : (n % 2 ? 0.2 : 0.9);
      b.record_own(s, Context::Psr, truth, n);
      b.record_vote(8, s, Context::Psr, truth, n);        // honest
      b.record_vote(9, s, Context::Psr, 1.0 - truth, n);  // liar
    }
    b.close_epoch(n);
    if (n + 1 >= 5) {
      EXPECT_EQ(b.validation(9, Context::Psr)->status, VoteStatus::Excluded) << n;
      EXPECT_EQ(b.validation(8, Context::Psr)->status, VoteStatus::Retained) << n;
    }
  }
  EXPECT_LE(b.ir(9, Context::Psr), 0.2);
  EXPECT_GT(b.ir(8, Context::Psr), 0.5);
}

TEST(ReputationStore, RouteMetricPrefersHealthySubject) {
  ReputationStore b(0, ReputationParams{}, {1, 2});
  for (std::uint64_t n = 0; n < 5; ++n) {
    b.record_own(1, Context::Ssr, 1.0, n);
    b.record_own(1, Context::Psr, 1.0, n);
    b.record_own(2, Context::Ssr, 0.0, n);
    b.record_own(2, Context::Psr, 1.0, n);
    b.close_epoch(n);
  }
  EXPECT_EQ(b.recommend_next_hop({1, 2}).node, 1u);
  EXPECT_LT(*b.sr(2, Context::Ssr), *b.sr(1, Context::Ssr));
}

TEST(ReputationParams, Validation) {
  ReputationParams p;
  p.alpha = 1.5;
  EXPECT_THROW(p.validate(), DomainError);
  p.alpha = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p.alpha = 0.5;
  EXPECT_NO_THROW(p.validate());
}

}  // namespace
}  // namespace secmon

namespace secmon {
namespace {

TEST(EvidenceRepository, CommitAggregatesAndDecides) {
  ReputationStore b(0, ReputationParams{});
  EvidenceRepository repo;
  for (int i = 0; i < 10; ++i) {
    repo.add_psr(1, true);
    repo.add_ssr(1, i != 3);  // 0.9 < 0.99
    repo.add_psr(2, i < 5);
    repo.add_ssr(2, true);
  }
  const auto recs = repo.commit(b, 0);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].action, Action::ReestablishAndIsolate);
  EXPECT_EQ(recs[1].action, Action::ShareReputationReroute);
  EXPECT_NEAR(*b.oe(1, Context::Ssr), 0.3 * 0.9 + 0.7 * 0.5, 1e-15);
  EXPECT_TRUE(repo.empty());
}

TEST(EvidenceRepository, IdsFlagForcesZeroSsr) {
  ReputationStore b(0, ReputationParams{});
  EvidenceRepository repo;
  repo.add_ssr(3, true);
  repo.flag_ids(3, "FLOOD");
  const auto recs = repo.commit(b, 0);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(*recs[0].ssr_obs, 0.0);
  EXPECT_FALSE(recs[0].ssr_ok);
  EXPECT_NEAR(*b.oe(3, Context::Ssr), 0.35, 1e-15);
}

}  // namespace
}  // namespace secmon
