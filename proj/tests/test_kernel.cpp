#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlhom/kernel.hpp"
#include "nlhom/rng.hpp"

using namespace nlhom;

TEST_CASE("ball indicator evaluation") {
  Kernel k = Kernel::ball_indicator(2, 1.0);
  CHECK(k.eval({0.5, 0, 0}) == 1.0);
  CHECK(k.eval({1.5, 0, 0}) == 0.0);
  // Jump midpoint on the support sphere.
  CHECK(k.eval({1.0, 0, 0}) == 0.5);
  CHECK(k.eval({0.6, 0.8, 0}) == 0.5);
}

TEST_CASE("truncated gaussian normalizer") {
  for (int d : {1, 2, 3}) {
    Kernel k = Kernel::truncated_gaussian(d, 1.0, 2.0);
    CHECK(k.eval({0, 0, 0}) == doctest::Approx(std::pow(2.0 * M_PI, -0.5 * d)).epsilon(1e-12));
  }
  Kernel k = Kernel::truncated_gaussian(2, 1.0, 2.0);
  CHECK(k.eval({2.5, 0, 0}) == 0.0);
  CHECK(k.r0() == 1.0);
  CHECK(k.c() == doctest::Approx(k.eval_radial(1.0)));
}

TEST_CASE("evenness is exact") {
  Kernel ks[] = {Kernel::ball_indicator(2, 1.0), Kernel::truncated_gaussian(2, 0.7, 1.5),
                 Kernel::radial_table(2, {0.0, 0.5, 1.0}, {1.0, 0.5, 0.0})};
  for (const Kernel& k : ks)
    for (int i = 0; i < 50; ++i) {
      Vec xi{uniform_pm1(7, static_cast<std::uint64_t>(3 * i)),
             uniform_pm1(7, static_cast<std::uint64_t>(3 * i + 1)), 0};
      Vec neg{-xi[0], -xi[1], 0};
      CHECK(k.eval(xi) == k.eval(neg));
    }
}

TEST_CASE("moment closed forms") {
  Kernel k1 = Kernel::ball_indicator(1, 1.0);
  CHECK(k1.moment(2.0) == doctest::Approx(8.0 / 3.0).epsilon(2e-3));
  Kernel k2 = Kernel::ball_indicator(2, 1.0);
  CHECK(k2.moment(2.0) == doctest::Approx(1.5 * M_PI).epsilon(2e-3));
}

TEST_CASE("directional moment closed forms and symmetry") {
  Kernel k1 = Kernel::ball_indicator(1, 1.0);
  CHECK(k1.directional_moment(2.0) == doctest::Approx(2.0 / 3.0).epsilon(2e-3));
  Kernel k2 = Kernel::ball_indicator(2, 1.0);
  CHECK(k2.directional_moment(2.0) == doctest::Approx(M_PI / 4.0).epsilon(2e-3));
  CHECK(k2.directional_moment(2.0, 0) == doctest::Approx(k2.directional_moment(2.0, 1)).epsilon(1e-12));
}

TEST_CASE("moments grow with radius and exponent") {
  Kernel small = Kernel::ball_indicator(2, 1.0);
  Kernel big = Kernel::ball_indicator(2, 1.5);
  CHECK(small.moment(2.0) < big.moment(2.0));
  CHECK(big.moment(2.0) < big.moment(3.0));  // R0 >= 1 so larger p adds mass
}

TEST_CASE("interaction floor witness") {
  Kernel ks[] = {Kernel::ball_indicator(2, 0.8), Kernel::truncated_gaussian(2, 1.0, 2.0)};
  for (const Kernel& k : ks) {
    double lowest = 1e300;
    for (int i = 0; i <= 100; ++i) {
      double r = k.r0() * i / 100.0;
      lowest = std::min(lowest, k.eval_radial(r));
    }
    CHECK(lowest >= k.c() * (1.0 - 1e-12));
  }
}

TEST_CASE("radial table interpolation") {
  Kernel k = Kernel::radial_table(2, {0.0, 1.0, 2.0}, {2.0, 1.0, 0.0});
  CHECK(k.eval_radial(0.0) == 2.0);
  CHECK(k.eval_radial(0.5) == doctest::Approx(1.5));
  CHECK(k.eval_radial(1.5) == doctest::Approx(0.5));
  CHECK(k.eval_radial(2.5) == 0.0);
  CHECK(k.support_radius() == 2.0);
  CHECK_THROWS_AS(Kernel::radial_table(2, {0.0, 1.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(Kernel::radial_table(2, {0.5, 1.0}, {1.0, 0.0}), ConfigError);
}
