#include "qrex/eat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

namespace qrex {

double ErrorBudget::eps_sou() const { return std::max(eps_EA, 2 * eps_s + eps_ext); }

void ErrorBudget::validate() const {
  for (double e : {eps_s, eps_1, eps_2, eps_EA, eps_ext, eps_com_target})
    if (!(e > 0 && e < 1)) throw ConfigError("error parameters must lie in (0,1)");
  if (!(eps_s - eps_2 - 2 * eps_1 > 0)) throw ConfigError("need eps_s - eps_2 - 2 eps_1 > 0");
  if (!(eps_2 < eps_EA)) throw ConfigError("need eps_2 < eps_EA");
}

ErrorBudget ErrorBudget::with_default_split(double eps_s, double eps_EA, double eps_ext, double eps_com) {
  ErrorBudget b;
  b.eps_s = eps_s;
  b.eps_1 = b.eps_2 = eps_s / 4;
  b.eps_EA = eps_EA;
  b.eps_ext = eps_ext;
  b.eps_com_target = eps_com;
  return b;
}

double binary_entropy(double p) {
  if (p <= 0 || p >= 1) return 0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

ScoreDistribution tilde_omega(const ScoreDistribution& d, const Vec& lambda) {
  if (lambda.size() != d.size()) throw DomainError("tilde_omega: lambda size mismatch");
  // maximize lambda . w over w <= omega + delta, w >= 0, sum w = 1: start at the upper
  // bounds and take the excess from the smallest multipliers first
  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lambda(a) < lambda(b); });
  ScoreDistribution t = d;
  t.omega = d.omega + d.delta;
  double excess = t.omega.sum() - 1;
  for (int c : order) {
    if (excess <= 0) break;
    double take = std::min(excess, t.omega(c));
    t.omega(c) -= take;
    excess -= take;
  }
  t.freq.reset();
  return t;
}

EntropyRate single_round_h(const DualCertificate& cert, const Vec& w, double gamma) {
  double h = 2 * (1 - gamma) * (1 - cert.evaluate(w));
  if (h <= 0) return {0.0, true};
  return {h, false};
}

double variance_term_V(double gamma, int m, double span) {
  double s = std::log2(4.0 * m + 1) + std::sqrt(2 + 4 * (1 - gamma) * (1 - gamma) * span * span / gamma);
  return M_LN2 / 2 * s * s;
}

double correction_term_K(double beta, double gamma, int m, double span) {
  if (!(beta > 0 && beta < 1)) throw DomainError("correction_term_K: beta must lie in (0,1)");
  double s = std::log2(2.0 * m) + 2 * (1 - gamma) * span;
  // ln(2^s + e^2) without forming 2^s
  double lnarg = s * M_LN2 > 2 ? s * M_LN2 + std::log1p(std::exp(2 - s * M_LN2)) : 2 + std::log1p(std::exp(s * M_LN2 - 2));
  double logK = beta * s * M_LN2 - std::log(6 * M_LN2) - 3 * std::log1p(-beta) + 3 * std::log(lnarg);
  return std::exp(logK);
}

double qaep_xi(double eps_2, int m) {
  if (!(eps_2 > 0 && eps_2 < 1)) throw DomainError("qaep_xi: eps_2 must lie in (0,1)");
  return 2 * std::log2(1 + 4.0 * m) * std::sqrt(1 - 2 * std::log2(eps_2));
}

double input_entropy(double gamma) { return binary_entropy(gamma) + 2 * gamma; }

double input_length(double n, double gamma) { return n * input_entropy(gamma) + 3; }

double chain_rule_penalty(const ErrorBudget& b) { return std::log2(2 / (b.eps_s - b.eps_2 - 2 * b.eps_1)); }

RateContext make_rate_context(double n, const DualCertificate& cert, const ScoreDistribution& d,
                              const ProtocolParams& p, const ErrorBudget& b, ScoreDistribution* tilde) {
  b.validate();
  ScoreDistribution t = tilde_omega(d, cert.lambda);
  RateContext ctx;
  ctx.n = n;
  ctx.gamma = p.gamma;
  ctx.m = p.bins_x / 2;
  ctx.h = single_round_h(cert, t.omega, p.gamma).h;
  ctx.lambda_span = lambda_span(cert.lambda);
  ctx.budget = b;
  if (tilde) *tilde = t;
  return ctx;
}

double smooth_minentropy_bound_k(const RateContext& c, double beta) {
  const ErrorBudget& b = c.budget;
  double V = variance_term_V(c.gamma, c.m, c.lambda_span);
  double K = correction_term_K(beta, c.gamma, c.m, c.lambda_span);
  return c.n * (c.h + input_entropy(c.gamma)) - c.n * (beta * V + beta * beta * K) -
         (1 - 2 * std::log2(b.eps_EA * b.eps_1)) / beta - qaep_xi(b.eps_2, c.m) * std::sqrt(c.n) -
         chain_rule_penalty(b);
}

double output_length(double k, double eps_ext) { return std::floor(k - 2 * std::log2(1 / eps_ext) + 2); }

double net_rate(double n, double ell_out, double ell_in) { return (ell_out - ell_in) / n; }

double r_net_continuous(const RateContext& c, double beta) {
  double k = smooth_minentropy_bound_k(c, beta);
  return (k - 2 * std::log2(1 / c.budget.eps_ext) + 2 - input_length(c.n, c.gamma)) / c.n;
}

RateReport rate_report(const RateContext& c, double beta) {
  RateReport r;
  r.n = c.n;
  r.gamma = c.gamma;
  r.beta = beta;
  r.h = c.h;
  r.nonpositive_h = c.h <= 0;
  r.V = variance_term_V(c.gamma, c.m, c.lambda_span);
  r.K = correction_term_K(beta, c.gamma, c.m, c.lambda_span);
  r.xi = qaep_xi(c.budget.eps_2, c.m);
  r.k_bound = smooth_minentropy_bound_k(c, beta);
  r.ell_out = output_length(r.k_bound, c.budget.eps_ext);
  r.nonpositive_ell = r.ell_out <= 0;
  r.ell_in = input_length(c.n, c.gamma);
  r.r_net = net_rate(c.n, r.ell_out, r.ell_in);
  r.budget = c.budget;
  return r;
}

RateReport optimize_beta(const RateContext& c) {
  // golden section in log(beta); the objective is unimodal in beta
  double a = std::log(1e-9), b = std::log(1 - 1e-6);
  auto f = [&](double lb) { return r_net_continuous(c, std::exp(lb)); };
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-12) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  double best = 0.5 * (a + b);
  double lo = std::log(1e-9);
  if (f(lo) >= f(best)) best = lo;
  return rate_report(c, std::exp(best));
}

std::string rate_report_json(const RateReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["gamma"] = r.gamma;
  j["h"] = r.h;
  j["V"] = r.V;
  j["K"] = r.K;
  j["xi"] = r.xi;
  j["beta"] = r.beta;
  j["k_bound"] = r.k_bound;
  j["ell_out"] = r.ell_out;
  j["ell_in"] = r.ell_in;
  j["r_net"] = r.r_net;
  j["nonpositive_h"] = r.nonpositive_h;
  j["nonpositive_ell"] = r.nonpositive_ell;
  j["epsilon_budget"] = {{"eps_s", r.budget.eps_s},     {"eps_1", r.budget.eps_1},
                         {"eps_2", r.budget.eps_2},     {"eps_EA", r.budget.eps_EA},
                         {"eps_ext", r.budget.eps_ext}, {"eps_com", r.budget.eps_com_target},
                         {"eps_sou", r.budget.eps_sou()}};
  if (r.tilde_omega) {
    nlohmann::ordered_json t;
    for (int c = 0; c < r.tilde_omega->size(); ++c) t[r.tilde_omega->labels[c].name] = r.tilde_omega->omega(c);
    j["tilde_omega"] = t;
  }
  return j.dump(2);
}

}  // namespace qrex
