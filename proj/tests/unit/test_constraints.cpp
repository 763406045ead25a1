#include "biopro/constraints.hpp"

#include "matchers.hpp"

#include <gtest/gtest.h>

namespace biopro {
namespace {

BiasReport caption_report(double br_n, double br_e, double base) {
  BiasReport r;
  r.br_n = br_n;
  r.br_e = br_e;
  r.br_e_base = base;
  r.cbr = composite_bias_rate(br_n, br_e, base);
  return r;
}

BiasReport generation(std::initializer_list<std::pair<long long, long long>> ab, double mr) {
  BiasReport r;
  int i = 0;
  for (auto [a, b] : ab) r.balances.push_back({"c" + std::to_string(i++), a, b});
  r.mr = mr;
  return r;
}

TEST(Budget, ShippedDefaults) {
  const auto b = ConstraintBudget::shipped();
  EXPECT_EQ(b.neutral_bias_max, 25.0);
  EXPECT_EQ(b.band_low, 0.8);
  EXPECT_EQ(b.band_high, 1.25);
  EXPECT_EQ(b.epsilon_semantic, 0.05);
  EXPECT_EQ(b.distance_kind, DistanceKind::kFrobeniusRel);
  EXPECT_EQ(ConstraintBudget::from_keyvalue(b.to_keyvalue()).to_keyvalue(), b.to_keyvalue());
}

TEST(Budget, Validation) {
  ConstraintBudget b;
  b.band_low = 1.1;
  EXPECT_THROW(b.validate(), Error);
  b = {};
  b.band_high = 0.9;
  EXPECT_THROW(b.validate(), Error);
  b = {};
  b.epsilon_semantic = -0.1;
  EXPECT_THROW(b.validate(), Error);
}

TEST(AuditCaptioning, AllPass) {
  const auto a = audit_captioning(caption_report(0, 50, 50), 0.0, {});
  ASSERT_EQ(a.checks.size(), 3u);
  EXPECT_TRUE(a.verdict);
  EXPECT_EQ(a.checks[0].name, "neutral_fairness");
  EXPECT_EQ(a.checks[1].name, "explicit_faithfulness");
  EXPECT_EQ(a.checks[2].name, "semantic");
}

TEST(AuditCaptioning, SemanticBoundary) {
  ConstraintBudget b;
  const auto at = audit_captioning(caption_report(0, 50, 50), b.epsilon_semantic, b);
  EXPECT_TRUE(at.checks[2].pass);
  const auto over = audit_captioning(caption_report(0, 50, 50), b.epsilon_semantic + 1e-9, b);
  EXPECT_FALSE(over.checks[2].pass);
  EXPECT_FALSE(over.verdict);
}

TEST(AuditCaptioning, PublishedRow) {
  ConstraintBudget b;
  b.band_high = 1.2;
  const auto a = audit_captioning(caption_report(23.01, 68.74, 80.27), 0.01, b);
  EXPECT_TRUE(a.checks[0].pass);
  EXPECT_NEAR(a.checks[1].value, 0.856, 1e-3);
  EXPECT_TRUE(a.checks[1].pass);
  EXPECT_TRUE(a.verdict);
}

TEST(AuditCaptioning, MissingFieldsRejected) {
  BiasReport r;
  r.br_n = 5;
  EXPECT_THROW(audit_captioning(r, 0.0, {}), Error);
}

TEST(AuditGeneration, Examples) {
  ConstraintBudget b;
  EXPECT_TRUE(audit_generation(generation({{50, 50}}, 0.0), 0.0, b).checks[0].pass);
  EXPECT_FALSE(audit_generation(generation({{93, 7}}, 0.0), 0.0, b).checks[0].pass);
  EXPECT_FALSE(audit_generation(generation({{50, 50}, {93, 7}}, 0.0), 0.0, b).verdict);

  ConstraintBudget strict;
  strict.band_low = 0.99;
  const auto mr = audit_generation(generation({{50, 50}}, 0.2), 0.0, strict);
  EXPECT_NEAR(mr.checks[1].value, 0.998, 1e-12);
  EXPECT_TRUE(mr.checks[1].pass);
}

TEST(AuditGeneration, VerdictIsConjunction) {
  for (double dist : {0.0, 1.0}) {
    for (long long a : {50LL, 95LL}) {
      const auto r = audit_generation(generation({{a, 100 - a}}, 0.2), dist, {});
      bool all = true;
      for (const auto& c : r.checks) all = all && c.pass;
      EXPECT_EQ(r.verdict, all);
    }
  }
}

TEST(Audit, TighteningNeverFlipsFailToPass) {
  const auto report = caption_report(20, 70, 80);
  for (double dist : {0.01, 0.04, 0.2}) {
    ConstraintBudget loose;
    const auto base = audit_captioning(report, dist, loose);
    std::vector<ConstraintBudget> tighter(4, loose);
    tighter[0].neutral_bias_max = 10;
    tighter[1].band_low = 0.9;
    tighter[2].band_high = 1.0;
    tighter[3].epsilon_semantic = 0.02;
    for (const auto& t : tighter) {
      const auto r = audit_captioning(report, dist, t);
      for (std::size_t i = 0; i < 3; ++i) {
        if (!base.checks[i].pass) EXPECT_FALSE(r.checks[i].pass);
      }
      if (!base.verdict) EXPECT_FALSE(r.verdict);
    }
  }
}

TEST(Audit, TextAndSummary) {
  const auto a = audit_captioning(caption_report(0, 50, 50), 0.0, {});
  EXPECT_NE(a.to_text().find("verdict\tPASS"), std::string::npos);
  EXPECT_EQ(a.to_summary_line(),
            "{\"neutral_fairness\":true,\"explicit_faithfulness\":true,\"semantic\":true,\"verdict\":true}");
}

}  // namespace
}  // namespace biopro
