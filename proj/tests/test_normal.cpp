#include <doctest.h>

#include <cmath>

#include "exset/errors.hpp"
#include "exset/normal.hpp"

using namespace exset;

TEST_CASE("normal cdf matches reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(kInf) == 1.0);
  CHECK(normal_cdf(-kInf) == 0.0);
  // Phi(2) to 10 digits: 0.9772498680518208.
  CHECK(normal_cdf(2.0) == doctest::Approx(0.9772498680518208).epsilon(1e-14));
  CHECK(normal_cdf(-2.0) ==
        doctest::Approx(1.0 - 0.9772498680518208).epsilon(1e-13));
  // Deep tail via survival function: 1-Phi(8) = 6.22096057427178e-16.
  CHECK(normal_sf(8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-10));
}

TEST_CASE("normal quantile inverts the cdf") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.75) == doctest::Approx(0.6744897501960817).epsilon(1e-14));
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-10}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  // Round trip z -> p -> z across a wide range, through whichever tail
  // representation keeps the mass away from 1.
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    if (z <= 0.0)
      CHECK(normal_quantile(normal_cdf(z)) == doctest::Approx(z).epsilon(1e-9));
    else
      CHECK(normal_quantile_sf(normal_sf(z)) ==
            doctest::Approx(z).epsilon(1e-9));
  }
  CHECK(normal_quantile(0.0) == -kInf);
  CHECK(normal_quantile(1.0) == kInf);
}

TEST_CASE("interval mass is tail aware") {
  CHECK(normal_interval_mass(-kInf, kInf) == 1.0);
  CHECK(normal_interval_mass(0.0, kInf) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_interval_mass(-1.0, 1.0) ==
        doctest::Approx(0.6826894921370859).epsilon(1e-13));
  // Deep right tail keeps relative accuracy.
  const double m = normal_interval_mass(10.0, 11.0);
  CHECK(m == doctest::Approx(normal_sf(10.0) - normal_sf(11.0)).epsilon(1e-12));
  CHECK(m > 0.0);
  CHECK(normal_interval_mass(1.0, 1.0) == 0.0);
}

TEST_CASE("truncated quantile stays inside and matches medians") {
  CHECK(truncated_normal_quantile(-kInf, kInf, 0.5) == 0.0);
  CHECK(truncated_normal_quantile(0.0, kInf, 0.5) ==
        doctest::Approx(0.6744897501960817).epsilon(1e-13));
  for (double u : {0.01, 0.25, 0.5, 0.9, 0.999}) {
    const double z = truncated_normal_quantile(2.0, 3.0, u);
    CHECK(z > 2.0);
    CHECK(z < 3.0);
  }
  // Very deep truncation still produces a point in the interval.
  const double z = truncated_normal_quantile(20.0, 21.0, 0.5);
  CHECK(z > 20.0);
  CHECK(z < 21.0);
  CHECK_THROWS_AS(truncated_normal_quantile(38.0, 38.0 + 1e-9, 0.5),
                  interval_mass_underflow);
}
