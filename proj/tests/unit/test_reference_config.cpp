#include "biopro/reference_config.hpp"

#include "matchers.hpp"

#include <gtest/gtest.h>

namespace biopro {
namespace {

TEST(ReferenceConfig, DeltaTable) {
  const auto& r = ReferenceConfig::shipped();
  EXPECT_EQ(r.find_delta_c("llava-1.5", 2), 6.95);
  EXPECT_EQ(r.find_delta_c("llava-1.5", 3), 8.70);
  EXPECT_EQ(r.find_delta_c("llava-1.5", 4), 9.72);
  EXPECT_EQ(r.find_delta_c("llava-1.6", 2), 15.56);
  EXPECT_EQ(r.find_delta_c("llava-1.6", 3), 19.78);
  EXPECT_EQ(r.find_delta_c("llava-1.6", 4), 22.32);
  EXPECT_FALSE(r.find_delta_c("llava-1.5", 5).has_value());
}

TEST(ReferenceConfig, LambdaGTable) {
  const auto& r = ReferenceConfig::shipped();
  EXPECT_EQ(r.find_lambda_g("llava-1.5", "chef"), 100.0);
  EXPECT_EQ(r.find_lambda_g("llava-1.5", "farmer"), 0.1);
  EXPECT_EQ(r.find_lambda_g("llava-1.6", "driver"), 50.0);
  EXPECT_EQ(r.find_lambda_g("llava-1.5", "banker"), 25.0);
  EXPECT_EQ(r.find_lambda_g("llava-1.6", "nurse"), 4.0);
  EXPECT_EQ(r.find_lambda_g("llava-1.6", "sky"), 1.0);
  EXPECT_EQ(r.lambda_g.size(), 28u);
  EXPECT_FALSE(r.find_lambda_g("llava-1.5", "astronaut").has_value());
}

TEST(ReferenceConfig, Groups) {
  const auto& r = ReferenceConfig::shipped();
  EXPECT_EQ(r.find_group("police"), StereotypeGroup::kMale);
  EXPECT_EQ(r.find_group("nurse"), StereotypeGroup::kFemale);
  EXPECT_EQ(r.find_group("grassland"), StereotypeGroup::kScene);
  EXPECT_EQ(r.groups.size(), 14u);
  EXPECT_EQ(r.models(), (std::vector<std::string>{"llava-1.5", "llava-1.6"}));
}

TEST(ReferenceConfig, SensitivityRows) {
  const auto& r = ReferenceConfig::shipped();
  EXPECT_EQ(r.sensitivity.size(), 9u);
  bool found = false;
  for (const auto& s : r.sensitivity) {
    if (s.k == 2 && s.lambda_c == 3.0) {
      EXPECT_EQ(s.br_n, 23.01);
      EXPECT_EQ(s.br_e, 68.74);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(ReferenceConfig, ParseErrors) {
  EXPECT_THROW(ReferenceConfig::parse("delta_c.m=1\n"), Error);
  EXPECT_THROW(ReferenceConfig::parse("group.chef=wizard\n"), Error);
  EXPECT_THROW(ReferenceConfig::parse("unknown.key=1\n"), Error);
  const auto r = ReferenceConfig::parse("delta_c.my.model.v2.3=1.5\n");
  EXPECT_EQ(r.find_delta_c("my.model.v2", 3), 1.5);
}

TEST(ReferenceConfig, StereotypeNames) {
  for (auto g : {StereotypeGroup::kMale, StereotypeGroup::kFemale, StereotypeGroup::kScene}) {
    EXPECT_EQ(parse_stereotype_group(to_string(g)), g);
  }
}

}  // namespace
}  // namespace biopro
