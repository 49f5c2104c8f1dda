#include "densreg/links.hpp"
#include "densreg/rng.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace densreg;

namespace {

Vector covariate_row(double age) {
  Vector x(3);
  x << 1.0, age, 0.0;
  return x;
}

}  // namespace

TEST(Links, FloorExpObservedAndCensored) {
  const LinkSet links = simulation_links();
  const Vector x = covariate_row(20.0);
  std::vector<double> y{std::log(17.4), std::log(25.0), 0.3};
  EXPECT_EQ(apply_link(links, 0, y, x), 17.0);
  EXPECT_EQ(apply_link(links, 1, y, x), 0.0);
  EXPECT_TRUE(link_censored(links, 1, y, x));
  EXPECT_EQ(apply_link(links, 2, y, x), 1.0);
  y[2] = -0.1;
  EXPECT_EQ(apply_link(links, 2, y, x), 0.0);
}

TEST(Links, CensoringBoundIsAgePlusOne) {
  const LinkSet links = simulation_links();
  const Vector x = covariate_row(20.0);
  std::vector<double> y{std::log(20.999), 0.0, 0.0};
  EXPECT_EQ(apply_link(links, 0, y, x), 20.0);
  y[0] = std::log(21.0);
  EXPECT_EQ(apply_link(links, 0, y, x), 0.0);
  const std::vector<double> z{0.0, 0.0, 1.0};
  const Interval b = bounds_for(links, 0, z, x, y);
  EXPECT_DOUBLE_EQ(b.lo, std::log(21.0));
  EXPECT_EQ(b.hi, kInf);
}

TEST(Links, SumConstrainedBoundsUseBaseDraw) {
  const LinkSet links = colombia_links();
  const Vector x = covariate_row(30.0);
  const double y1 = std::log(18.5);
  const std::vector<double> prefix{y1, 0.0, 0.0, 0.0};
  const std::vector<double> z{18.0, 0.0, 22.0, 1.0};
  const Interval b = bounds_for(links, 2, z, x, prefix);
  EXPECT_NEAR(b.lo, std::log(22.0 - 18.5), 1e-14);
  EXPECT_NEAR(b.hi, std::log(23.0 - 18.5), 1e-14);
  const std::vector<double> zc{18.0, 0.0, 0.0, 1.0};
  EXPECT_NEAR(bounds_for(links, 2, zc, x, prefix).lo, std::log(31.0 - 18.5), 1e-14);
  // Gap below zero on the lower side: any positive gap up to the upper bound works.
  const std::vector<double> ztie{18.0, 0.0, 18.0, 1.0};
  EXPECT_EQ(bounds_for(links, 2, ztie, x, prefix).lo, -kInf);
}

TEST(Links, OrdinalBounds) {
  const LinkSet links{LinkSpec::ordinal({-1.0, 0.5, 2.0})};
  const Vector x = covariate_row(20.0);
  const std::vector<double> y{1.0};
  EXPECT_EQ(apply_link(links, 0, y, x), 2.0);
  const std::vector<double> z{2.0};
  const Interval b = bounds_for(links, 0, z, x, y);
  EXPECT_EQ(b.lo, 0.5);
  EXPECT_EQ(b.hi, 2.0);
}

// Property: the bounds computed from h(y) always contain y.
TEST(Links, BoundsContainTheLatentThatProducedThem) {
  const LinkSet links = colombia_links();
  Rng rng(4);
  for (int rep = 0; rep < 5000; ++rep) {
    const double age = 15.0 + std::floor(rng.uniform() * 35.0);
    const Vector x = covariate_row(age);
    // Event ages below 1 would floor to the censoring code, so keep exp(y) >= 1.
    std::vector<double> y{std::log(1.0 + 40.0 * rng.uniform()), std::log(1.0 + 40.0 * rng.uniform()),
                          std::log(0.01 + 20.0 * rng.uniform()), rng.normal()};
    std::vector<double> z(4);
    for (int l = 0; l < 4; ++l) z[l] = apply_link(links, l, y, x);
    ASSERT_FALSE(check_record(links, z, x).has_value()) << *check_record(links, z, x);
    EXPECT_TRUE(log_in_bounds(links, y, z, x));
  }
}

TEST(Links, CheckRecordRejectsInconsistentRows) {
  const LinkSet links = colombia_links();
  const Vector x = covariate_row(25.0);
  EXPECT_TRUE(check_record(links, std::vector<double>{18.0, 0.0, 17.0, 1.0}, x).has_value());
  EXPECT_TRUE(check_record(links, std::vector<double>{0.0, 0.0, 20.0, 1.0}, x).has_value());
  EXPECT_TRUE(check_record(links, std::vector<double>{26.0, 0.0, 0.0, 1.0}, x).has_value());
  EXPECT_TRUE(check_record(links, std::vector<double>{18.5, 0.0, 0.0, 1.0}, x).has_value());
  EXPECT_TRUE(check_record(links, std::vector<double>{18.0, 0.0, 0.0, 2.0}, x).has_value());
  EXPECT_FALSE(check_record(links, std::vector<double>{18.0, 20.0, 19.0, 0.0}, x).has_value());
}

TEST(Links, ValidateRejectsBadLayouts) {
  EXPECT_THROW(validate_links({LinkSpec::sum_constrained(0)}), SchemaError);
  EXPECT_THROW(validate_links({LinkSpec::sign(), LinkSpec::sum_constrained(0)}), SchemaError);
  EXPECT_THROW(validate_links({LinkSpec::ordinal({1.0, 0.0})}), SchemaError);
  EXPECT_NO_THROW(validate_links(colombia_links()));
}

TEST(Links, CensorFlagsFollowZeroCode) {
  const auto c = derive_censor_flags(simulation_links(), std::vector<double>{0.0, 19.0, 0.0});
  EXPECT_TRUE(c[0]);
  EXPECT_FALSE(c[1]);
  EXPECT_FALSE(c[2]);
}
