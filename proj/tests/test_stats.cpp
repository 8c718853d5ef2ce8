#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pomcpshield/stats.hpp"

using namespace pomcpshield;

TEST_CASE("mean and sample standard deviation") {
  CHECK(mean({}) == 0.0);
  CHECK(mean({2.0}) == 2.0);
  CHECK(mean({1.0, 2.0, 3.0, 4.0}) == 2.5);

  CHECK(sample_stddev({}) == 0.0);
  CHECK(sample_stddev({5.0}) == 0.0);
  // Deviations (-3, -1, 1, 3): ss = 20, sd = sqrt(20 / 3).
  CHECK(sample_stddev({1.0, 3.0, 5.0, 7.0}) == doctest::Approx(std::sqrt(20.0 / 3.0)));
}

TEST_CASE("critical values follow the two-sided 5% table") {
  CHECK(critical_t_value(1) == 12.706);
  CHECK(critical_t_value(10) == 2.228);
  CHECK(critical_t_value(30) == 2.042);
  CHECK(critical_t_value(35) == 2.042);
  CHECK(critical_t_value(40) == 2.021);
  CHECK(critical_t_value(45) == 2.021);
  CHECK(critical_t_value(50) == 2.009);
  CHECK(critical_t_value(60) == 2.000);
  CHECK(critical_t_value(80) == 1.990);
  CHECK(critical_t_value(98) == 1.990);
  CHECK(critical_t_value(99) == 1.96);
  CHECK(critical_t_value(1000) == 1.96);
  CHECK_THROWS_AS((void)critical_t_value(0), std::invalid_argument);
}

TEST_CASE("degenerate paired tests") {
  const std::vector<double> a{1.0, 2.0, 3.0};

  PairedTResult same = paired_t_test(a, a);
  CHECK(same.t == 0.0);
  CHECK_FALSE(same.significant);
  CHECK(same.n == 3);

  PairedTResult shifted = paired_t_test(a, {2.0, 3.0, 4.0});
  CHECK(shifted.t == std::numeric_limits<double>::infinity());
  CHECK(shifted.significant);

  PairedTResult down = paired_t_test(a, {0.0, 1.0, 2.0});
  CHECK(down.t == -std::numeric_limits<double>::infinity());
  CHECK(down.significant);

  CHECK_THROWS_AS((void)paired_t_test(a, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)paired_t_test({1.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("a constructed sample hits t = 5 exactly") {
  // Differences 0.5 +/- sqrt(99)/10 in equal halves: mean 0.5, sample sd 1,
  // so t = 0.5 * sqrt(100) = 5.
  const double spread = std::sqrt(99.0) / 10.0;
  std::vector<double> a(100, 0.0);
  std::vector<double> b(100);
  for (int i = 0; i < 100; ++i) {
    b[static_cast<std::size_t>(i)] = 0.5 + (i % 2 == 0 ? spread : -spread);
  }
  PairedTResult r = paired_t_test(a, b);
  CHECK(r.t == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(r.significant);  // critical value at df = 99 is 1.96
  CHECK(r.n == 100);
}

TEST_CASE("relative increase is percent of the original magnitude") {
  auto ri = relative_increase_percent(3.088, 3.702);
  REQUIRE(ri.has_value());
  CHECK(*ri == doctest::Approx((3.702 - 3.088) / 3.088 * 100.0));

  CHECK_FALSE(relative_increase_percent(0.0, 1.0).has_value());

  auto negative = relative_increase_percent(-4.0, -2.0);
  REQUIRE(negative.has_value());
  CHECK(*negative == 50.0);

  auto worse = relative_increase_percent(2.0, 1.0);
  REQUIRE(worse.has_value());
  CHECK(*worse == -50.0);
}
