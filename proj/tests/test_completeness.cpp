#include <doctest.h>

#include "fixture.hpp"
#include "qrex/completeness.hpp"

using namespace qrex;

TEST_CASE("relative entropy and normal cdf") {
  CHECK(kl_bernoulli(0.3, 0.3) == 0);
  CHECK(kl_bernoulli(1, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(kl_bernoulli(0.3, 0.2) == doctest::Approx(0.028167557595283478).epsilon(1e-13));
  CHECK(normal_cdf(0) == 0.5);
  CHECK(normal_cdf(-1.234) + normal_cdf(1.234) == doctest::Approx(1).epsilon(1e-15));
  CHECK_THROWS_AS(kl_bernoulli(0.5, 0), DomainError);
}

TEST_CASE("binomial cdf bound") {
  CHECK(binomial_cdf_bound(1000, 0.2, 200) == 0.5);
  CHECK(binomial_cdf_bound(1e6, 0.012, 12240) == doctest::Approx(0.98598824511725342).epsilon(1e-11));
  CHECK(epsilon_com_category(1e6, 0.12, 0.1, 0.002) == doctest::Approx(0.014011754882746577).epsilon(1e-10));
  double half = epsilon_com_category(1e6, 0.12, 0.1, 0);
  CHECK(half == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("bound dominates exact tails for small n") {
  for (int n = 1; n <= 60; ++n)
    for (double p : {0.1, 0.3, 0.5}) {
      // exact upper tail P[X > k] by direct summation
      std::vector<double> pmf(n + 1);
      for (int k = 0; k <= n; ++k)
        pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                          (n - k) * std::log1p(-p));
      for (int k = 0; k < n; ++k) {
        if (k <= n * p) continue;
        double tail = 0;
        for (int j = k + 1; j <= n; ++j) tail += pmf[j];
        CHECK(binomial_upper_bound(n, p, k) >= tail * (1 - 1e-12));
      }
    }
}

TEST_CASE("calibrated tolerances") {
  auto t2 = load_fixture("table2.json");
  ScoreDistribution d;
  const int C = 7;
  d.omega.resize(C);
  d.delta = Vec::Zero(C);
  for (int c = 0; c < C; ++c) {
    d.labels.push_back(ScoreLabel::aggregate(t2["categories"][c]["label"].get<std::string>()));
    d.omega(c) = t2["categories"][c]["omega"].get<double>();
  }
  Vec delta = calibrate_delta(3e10, 0.12, d, 1e-3);
  for (int c = 0; c < C; ++c) {
    double pub = t2["categories"][c]["delta"].get<double>();
    CHECK(delta(c) > pub / 2);
    CHECK(delta(c) < pub * 2);
  }
  d.delta = delta;
  CompletenessReport r = completeness_report(3e10, 0.12, d);
  CHECK(r.total <= 1e-3 * (1 + 1e-9));
  CHECK(r.total >= 1e-3 * 0.99);

  // published tolerances are rounded to three digits, so they land on the target only to rounding
  ScoreDistribution pub = d;
  for (int c = 0; c < C; ++c) pub.delta(c) = t2["categories"][c]["delta"].get<double>();
  CHECK(completeness_report(3e10, 0.12, pub).total == doctest::Approx(1e-3).epsilon(0.01));

  Vec d2 = calibrate_delta(6e10, 0.12, d, 1e-3);
  for (int c = 0; c < C; ++c) CHECK(delta(c) / d2(c) == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));

  Vec prop = calibrate_delta(3e10, 0.12, d, 1e-3, Allocation::Proportional);
  d.delta = prop;
  CHECK(completeness_report(3e10, 0.12, d).total <= 1e-3 * (1 + 1e-9));
}

TEST_CASE("median threshold") {
  ScoreDistribution one;
  one.labels = {ScoreLabel::aggregate("all")};
  one.omega = Vec::Constant(1, 0.3);
  one.delta = Vec::Zero(1);
  Vec d = calibrate_delta(1e6, 0.5, one, 0.5);
  CHECK(d(0) < 1e-5);
  CHECK_THROWS_AS(calibrate_delta(1e6, 0.5, one, 1.5), DomainError);
}
