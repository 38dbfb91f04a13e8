#include <doctest.h>

#include <random>

#include "qrex/moment.hpp"
#include "qrex/strategy.hpp"

using namespace qrex;

TEST_CASE("score coefficients") {
  ProtocolParams p;
  p.layout = ScoreLayout::fine(6, 2);
  auto k = build_kappa(p);
  int c2 = 0;
  for (int c = 0; c < p.layout.size(); ++c)
    if (p.layout.categories[c].name == "+2X") c2 = c;
  CHECK(k.weight(c2, 2, 0, 0) == 0.25);
  CHECK(k.weight(c2, 2, 0, 1) == 0);
  double s = 0;
  for (int c = 0; c < k.categories; ++c) s += k.weight(c, 1, 2, 1);
  CHECK(s == 0.25);
}

TEST_CASE("moment problem structure") {
  ProtocolParams p;
  MomentProblem P1 = build_moment_problem(p, 1);
  CHECK(P1.full_monomials == 11);
  CHECK(P1.dim == 32);
  CHECK(P1.num_vars() == 353);
  MomentProblem P2 = build_moment_problem(p, 2);
  CHECK(P2.dim == 56);
  CHECK(P2.num_vars() == 513);
  CHECK((P1.S * P1.S - P1.G).norm() < 1e-12);
}

TEST_CASE("explicit strategies satisfy the relaxation") {
  ProtocolParams p;
  MomentProblem P = build_moment_problem(p, 1);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    ExplicitStrategy s = random_strategy(P, 2, 2, rng);
    optimize_eve(s, P);
    StrategyValue v = evaluate(s, P);
    CHECK(std::abs(v.omega.sum() - 1) < 1e-12);
    CHECK(v.pguess <= 1 + 1e-12);
    CHECK(v.pguess >= 0.5 - 1e-12);
  }
}

TEST_CASE("guessing probability at the default operating point") {
  ProtocolParams p;
  MomentProblem P = build_moment_problem(p, 1);
  ScoreDistribution d = honest_score_distribution(p);
  PguessResult r = solve_pguess(d, P);
  // independent cvxpy formulation of the same relaxation
  CHECK(r.primal_value == doctest::Approx(0.873516492358).epsilon(2e-8));
  // the certified bound is the rounded dual, never below the optimum
  CHECK(r.bound >= 0.873516492358 - 1e-9);
  CHECK(r.bound <= 0.873516492358 + 1e-6);
  CHECK(r.bound >= r.primal_value - 1e-9);
  CHECK(r.cert.evaluate(d.omega) == doctest::Approx(r.bound).epsilon(1e-12));
  CHECK(r.cert.validity_margin >= 0);
  CHECK(r.cert.params_hash == params_hash(p, 1));

  // the explicit optimum matches the bound from below
  std::mt19937_64 rng(7);
  double best = -1e9;
  for (int t = 0; t < 10; ++t) {
    ExplicitStrategy s = random_strategy(P, 2, 2, rng);
    best = std::max(best, seesaw(s, P, r.cert.lambda, 200));
  }
  CHECK(best <= r.cert.alpha + 1e-9);
  CHECK(best >= r.cert.alpha - 1e-4);

  ProtocolParams q = p;
  q.eta = 1;
  PguessResult r1 = solve_pguess(honest_score_distribution(q), build_moment_problem(q, 1));
  CHECK(r1.bound == doctest::Approx(0.80064227).epsilon(1e-7));
  CHECK(r1.bound <= r.bound);
}

TEST_CASE("unconstrained and uninformative cases") {
  ProtocolParams p;
  MomentProblem P = build_moment_problem(p, 1);
  PguessOptions o;
  o.use_scores = false;
  CHECK(solve_pguess(honest_score_distribution(p), P, o).bound == doctest::Approx(1).epsilon(1e-7));

  ProtocolParams v = p;
  v.amp = 0;
  PguessResult r = solve_pguess(honest_score_distribution(v), build_moment_problem(v, 1));
  CHECK(r.bound == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("inconsistent scores are rejected") {
  ProtocolParams p;
  MomentProblem P = build_moment_problem(p, 1);
  Vec w = honest_score_distribution(p).omega;
  w(0) += 0.05;  // no longer sums to one
  CHECK_THROWS_AS(solve_pguess(w, P), DomainError);
}

TEST_CASE("certificate validation and serialization") {
  ProtocolParams p;
  MomentProblem P = build_moment_problem(p, 1);
  ScoreDistribution d = honest_score_distribution(p);
  DualCertificate c = solve_pguess(d, P).cert;

  DualCertificate same = validate_certificate(c, P);
  CHECK(same.alpha == doctest::Approx(c.alpha).epsilon(1e-12));

  DualCertificate low = c;
  low.alpha -= 1e-7;
  DualCertificate fixed = validate_certificate(low, P);
  CHECK(fixed.alpha >= c.alpha - 1e-12);
  CHECK(fixed.validity_margin >= 1e-7 - 1e-12);

  DualCertificate far = c;
  far.alpha -= 1e-2;
  CHECK_THROWS_AS(validate_certificate(far, P), NumericalError);

  DualCertificate back = certificate_from_json(certificate_to_json(c));
  CHECK(back.alpha == c.alpha);
  CHECK(back.lambda == c.lambda);
  CHECK(back.labels == c.labels);
  CHECK(back.params_hash == c.params_hash);
  CHECK_THROWS_AS(certificate_from_json(R"({"alpha":1,"lambda":[],"labels":[],"extra":0})"), ConfigError);

  DualCertificate t = DualCertificate::trivial(c.labels);
  CHECK(t.evaluate(d.omega) == 1);

  ProtocolParams q = p;
  q.eta = 0.7;
  CHECK(params_hash(q, 1) != params_hash(p, 1));
  CHECK(params_hash(p, 2) != params_hash(p, 1));
}

TEST_CASE("interval constraints loosen the bound") {
  ProtocolParams p;
  MomentProblem P = build_moment_problem(p, 1);
  ScoreDistribution d = honest_score_distribution(p);
  PguessOptions o;
  o.halfwidth = Vec::Constant(d.size(), 1e-3);
  PguessResult r = solve_pguess(d, P, o);
  PguessResult e = solve_pguess(d, P);
  CHECK(r.bound > e.bound);
  CHECK(r.bound == doctest::Approx(0.88630).epsilon(1e-4));
}
