#include <cmath>

#include "discfa/distributions.hpp"
#include "discfa/simulate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace discfa;
using doctest::Approx;

TEST_CASE("poisson log_pmf matches the closed form") {
  CHECK(log_pmf(0, BaseParams::poisson(1.0)) == Approx(-1.0).epsilon(1e-15));
  CHECK(log_pmf(2, BaseParams::poisson(2.0)) ==
        Approx(std::log(2.0) - 2.0).epsilon(1e-14));
}

TEST_CASE("negative binomial log_pmf matches the closed form") {
  // C(2,1) p^2 (1-p) with r=2, p=0.5: 2 * 0.25 * 0.5 = 0.25
  CHECK(log_pmf(1, BaseParams::negbin(2.0, 0.5)) == Approx(std::log(0.25)).epsilon(1e-14));
  // f(0) = p^r
  CHECK(log_pmf(0, BaseParams::negbin(3.7, 0.42)) ==
        Approx(3.7 * std::log(0.42)).epsilon(1e-14));
}

TEST_CASE("log_pmf rejects invalid parameters") {
  BaseParams bad;
  bad.kind = Base::poisson;
  bad.theta = -1.0;
  CHECK_THROWS_AS(log_pmf(1, bad), DomainError);
  bad.kind = Base::negbin;
  bad.r = 1.0;
  bad.p = 1.0;
  CHECK_THROWS_AS(log_pmf(1, bad), DomainError);
  CHECK_THROWS_AS(log_pmf(-1, BaseParams::poisson(1.0)), DomainError);
}

TEST_CASE("zi_log_pmf reduces exactly at pi = 0 and mixes at zero") {
  const BaseParams pois = BaseParams::poisson(1.0);
  for (int x : {0, 1, 2, 7}) CHECK(zi_log_pmf(x, 0.0, pois) == log_pmf(x, pois));

  CHECK(zi_log_pmf(0, 0.3, pois) ==
        Approx(std::log(0.3 + 0.7 * std::exp(-1.0))).epsilon(1e-14));
  CHECK(zi_log_pmf(2, 0.3, pois) ==
        Approx(std::log(0.7) + log_pmf(2, pois)).epsilon(1e-14));

  CHECK_THROWS_AS(zi_log_pmf(0, 1.0, pois), DomainError);
  CHECK_THROWS_AS(zi_log_pmf(0, -0.1, pois), DomainError);
}

TEST_CASE("cumulative_mass by forward recurrence") {
  CHECK(cumulative_mass(BaseParams::poisson(1.0), 1) ==
        Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(cumulative_mass(BaseParams::poisson(1.0), 200) == Approx(1.0).epsilon(1e-12));
  CHECK(cumulative_mass(BaseParams::negbin(1.0, 0.5), 0) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("mean of each base family") {
  CHECK(mean(BaseParams::poisson(2.5)) == 2.5);
  CHECK(mean(BaseParams::negbin(2.0, 0.5)) == Approx(2.0).epsilon(1e-15));
  CHECK(mean(BaseParams::negbin(3.0, 0.25)) == Approx(9.0).epsilon(1e-15));
}

TEST_CASE("pmf normalizes: partial sums stay below one and converge to it") {
  Rng rng(7);
  for (int kind = 0; kind < 2; ++kind) {
    for (int rep = 0; rep < 10; ++rep) {
      const BaseParams b =
          testutil::random_base(rng, kind == 0 ? Base::poisson : Base::negbin);
      const double mu = mean(b);
      const double var =
          b.kind == Base::poisson ? b.theta : b.r * (1.0 - b.p) / (b.p * b.p);
      const int far = static_cast<int>(mu + 40.0 * std::sqrt(var)) + 50;
      double prev = 0.0;
      for (int k : {0, 1, 2, 5, far}) {
        const double c = cumulative_mass(b, k);
        CHECK(c <= 1.0 + 1e-12);
        CHECK(c >= prev - 1e-15);
        prev = c;
      }
      CHECK(cumulative_mass(b, far) == Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("pmf ratio recurrence holds") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const BaseParams pois = testutil::random_base(rng, Base::poisson);
    const BaseParams nb = testutil::random_base(rng, Base::negbin);
    for (int x = 0; x < 12; ++x) {
      const double lhs_p = std::exp(log_pmf(x + 1, pois) - log_pmf(x, pois));
      CHECK(lhs_p == Approx(pois.theta / (x + 1)).epsilon(1e-12));
      const double lhs_nb = std::exp(log_pmf(x + 1, nb) - log_pmf(x, nb));
      CHECK(lhs_nb == Approx((nb.r + x) * (1.0 - nb.p) / (x + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("negative binomial draws are overdispersed") {
  Rng rng(101);
  for (double r : {0.5, 2.0}) {
    for (double p : {0.3, 0.7}) {
      const BaseParams b = BaseParams::negbin(r, p);
      const int n = 1000000;
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = draw_base(b, rng);
        sum += x;
        sumsq += x * x;
      }
      const double m = sum / n;
      const double v = sumsq / n - m * m;
      CHECK(v > m);  // variance exceeds the mean
    }
  }
}
