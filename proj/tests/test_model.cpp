#include <doctest.h>

#include <random>

#include "fixture.hpp"
#include "qrex/model.hpp"

using namespace qrex;

// Reference values from tools/oracles.py (mpmath, 40 digits).
TEST_CASE("coherent overlaps") {
  const double a = 0.0672;
  CHECK(std::abs(coherent_overlap(a, a) - 1.0) < 1e-15);
  Cplx pm = coherent_overlap(a, -a);
  CHECK(pm.real() == doctest::Approx(0.99100898311099405).epsilon(1e-14));
  CHECK(std::abs(pm.imag()) < 1e-15);
  Cplx pi = coherent_overlap(a, Cplx(0, a));
  CHECK(std::abs(pi) == doctest::Approx(0.99549434107431974).epsilon(1e-14));
  CHECK(std::arg(pi) == doctest::Approx(0.00451584).epsilon(1e-12));
}

TEST_CASE("gram matrix") {
  ProtocolParams p;
  p.amp = 0;
  Mat4c G0 = gram_matrix(p);
  CHECK((G0 - Mat4c::Ones()).norm() < 1e-15);

  p.amp = 0.0672;
  Mat4c G = gram_matrix(p);
  CHECK(G(0, 1).real() == doctest::Approx(0.99100898311099405).epsilon(1e-14));
  CHECK(G(2, 3).real() == doctest::Approx(0.99100898311099405).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 2);
  for (int t = 0; t < 1000; ++t) {
    p.amp = U(rng);
    Mat4c g = gram_matrix(p);
    CHECK((g - g.adjoint()).norm() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat4c> es(g);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(g(i, i) - 1.0) < 1e-15);
  }
}

TEST_CASE("quadrature means and bins") {
  ProtocolParams p;
  CHECK(std::abs(quadrature_mean(0, M_PI / 2, p)) < 1e-15);
  CHECK(quadrature_mean(0, 0, p) == doctest::Approx(0.1117218947207753).epsilon(1e-14));

  Vec two = bin_probabilities(2, Basis::P, p);
  CHECK(two(0) == doctest::Approx(0.45552195926781491).epsilon(1e-13));

  ProtocolParams vac = p;
  vac.eta = 0;
  CHECK(quadrature_pdf(1, 0, 0.3, vac) == doctest::Approx(std::exp(-0.045) / std::sqrt(2 * M_PI)));
  Vec half = bin_probabilities(0, M_PI / 2, p, 2);
  CHECK(half(0) == doctest::Approx(0.5).epsilon(1e-15));

  for (int m = 1; m <= 4; ++m)
    for (int x = 0; x < 4; ++x)
      for (double th : {0.0, M_PI / 2}) CHECK(std::abs(bin_probabilities(x, th, p, 2 * m).sum() - 1) < 1e-12);
}

TEST_CASE("outer bin grows with amplitude and efficiency") {
  ProtocolParams p;
  double prev = 0;
  for (double a = 0; a <= 1.0; a += 0.05) {
    p.amp = a;
    double v = bin_probabilities(0, Basis::X, p)(5);
    CHECK(v >= prev);
    prev = v;
  }
  p.amp = 0.0672;
  prev = 0;
  for (double e = 0; e <= 1.0; e += 0.05) {
    p.eta = e;
    double v = bin_probabilities(0, Basis::X, p)(5);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("honest score distribution at the default operating point") {
  ProtocolParams p;
  ScoreDistribution d = honest_score_distribution(p);
  const char* names[] = {"-3X", "-2X", "-1X", "-1P", "+3X", "+2X", "1-all"};
  const double ref[] = {0.065878734131118569, 0.068772841540297479, 0.093109403962491404, 0.22776097963390745,
                        0.092739796521621114, 0.081121170832310729, 0.37061707337825325};
  REQUIRE(d.size() == 7);
  for (int c = 0; c < 7; ++c) {
    CHECK(d.labels[c].name == names[c]);
    CHECK(d.omega(c) == doctest::Approx(ref[c]).epsilon(1e-12));
  }
  CHECK(std::abs(d.omega.sum() - 1) < 1e-12);

  // measured omega column, rounded to four digits
  auto t2 = load_fixture("table2.json");
  for (int c = 0; c < 7; ++c) CHECK(std::abs(d.omega(c) - t2["categories"][c]["omega"].get<double>()) < 1e-4);
  double listed = 0;
  for (int c = 0; c < 6; ++c) listed += t2["categories"][c]["omega"].get<double>();
  CHECK(1 - listed == doctest::Approx(0.3706).epsilon(1e-12));
}

TEST_CASE("vacuum scores are symmetric") {
  ProtocolParams p;
  p.amp = 0;
  p.layout = ScoreLayout::fine(6, 2);
  ScoreDistribution d = honest_score_distribution(p);
  for (int b = 1; b <= 3; ++b)
    CHECK(d.omega(d.index_of(raw_score_name(Basis::X, b))) ==
          doctest::Approx(d.omega(d.index_of(raw_score_name(Basis::X, -b)))).epsilon(1e-14));
  CHECK(d.omega(d.index_of("+1P")) == doctest::Approx(d.omega(d.index_of("-1P"))).epsilon(1e-14));
}

TEST_CASE("mirror states give mirrored bins") {
  ProtocolParams p;
  p.amp = 0.4;
  p.eta = 0.8;
  for (int y = 0; y < 2; ++y) {
    int x0 = 2 * y;
    Vec a = bin_probabilities(x0, Basis(y), p), b = bin_probabilities(x0 + 1, Basis(y), p);
    for (int i = 0; i < a.size(); ++i) CHECK(a(i) == doctest::Approx(b(a.size() - 1 - i)).epsilon(1e-14));
  }
}

TEST_CASE("scoring rule") {
  ScoreLayout L = ScoreLayout::standard(6, 2);
  CHECK(L.categories[assign_score(1, 0, 0, 2, L)].name == "+2X");
  CHECK(L.categories[assign_score(1, 3, 1, -1, L)].name == "1-all");
  CHECK(raw_score(3, 1, -1) == std::make_pair(Basis::P, 1));
  CHECK(assign_score(0, 0, 1, 1, L) == -1);
  CHECK(assign_score(0, 0, 1, -1, L) == -1);
  CHECK_THROWS_AS(raw_score(0, 1, 1), DomainError);

  // table-driven enumeration of every consistent test round
  ScoreLayout F = ScoreLayout::fine(6, 2);
  for (int x = 0; x < 4; ++x) {
    int y = basis_of_state(x);
    int m = y == 0 ? 3 : 1;
    for (int b = -m; b <= m; ++b) {
      if (!b) continue;
      int sign = (x == 0 || x == 2) ? 1 : -1;
      std::string want = raw_score_name(Basis(y), sign * b);
      CHECK(F.categories[assign_score(1, x, y, b, F)].name == want);
    }
  }
  CHECK(parse_raw_score("-3X") == std::make_pair(Basis::X, -3));
  CHECK_THROWS_AS(parse_raw_score("3X"), ConfigError);
}

TEST_CASE("acceptance rule") {
  ProtocolParams p;
  ScoreDistribution d = honest_score_distribution(p);
  d.delta = Vec::Constant(d.size(), 2e-5);
  const double n = 1e8, g = p.gamma;

  std::vector<std::int64_t> exact(d.size());
  for (int c = 0; c < d.size(); ++c) exact[c] = static_cast<std::int64_t>(std::floor(n * g * d.omega(c)));
  CHECK(accept_counts(exact, d, g, n).accept);

  auto edge = exact;
  edge[2] = static_cast<std::int64_t>(std::floor(n * g * (d.omega(2) + d.delta(2))));
  CHECK(accept_counts(edge, d, g, n).accept);
  edge[2] += 1;
  Verdict v = accept_counts(edge, d, g, n);
  CHECK_FALSE(v.accept);
  REQUIRE(v.violated.size() == 1);
  CHECK(v.violated[0] == 2);

  // measured deviations against the published tolerances
  auto t2 = load_fixture("table2.json");
  ScoreDistribution m = d;
  const double N = 3e10;
  std::vector<std::int64_t> cnt(7);
  for (int c = 0; c < 7; ++c) {
    auto& row = t2["categories"][c];
    m.omega(c) = row["omega"].get<double>();
    m.delta(c) = row["delta"].get<double>();
    cnt[c] = std::llround(N * g * (m.omega(c) + row["f_over_gamma_minus_omega"].get<double>()));
  }
  CHECK(accept_counts(cnt, m, g, N).accept);
}

TEST_CASE("parameter validation") {
  ProtocolParams p;
  p.gamma = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ProtocolParams();
  p.bins_x = 5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ProtocolParams();
  p.eta = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
