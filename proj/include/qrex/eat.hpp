#pragma once

#include <optional>
#include <string>

#include "qrex/certificate.hpp"
#include "qrex/model.hpp"

namespace qrex {

struct ErrorBudget {
  double eps_s = 4.99e-7;
  double eps_1 = 4.99e-7 / 4;
  double eps_2 = 4.99e-7 / 4;
  double eps_EA = 1e-6;
  double eps_ext = 1e-6;
  double eps_com_target = 1e-3;

  double eps_sou() const;
  void validate() const;
  // eps_1 = eps_2 = eps_s / 4
  static ErrorBudget with_default_split(double eps_s, double eps_EA, double eps_ext, double eps_com);
};

double binary_entropy(double p);

// c_min = argmin lambda (first on ties) absorbs the other categories' tolerances.
ScoreDistribution tilde_omega(const ScoreDistribution& d, const Vec& lambda);

struct EntropyRate {
  double h = 0;
  bool nonpositive = false;
};
EntropyRate single_round_h(const DualCertificate& cert, const Vec& tilde_omega, double gamma);

double variance_term_V(double gamma, int m, double lambda_span);
double correction_term_K(double beta, double gamma, int m, double lambda_span);
double qaep_xi(double eps_2, int m);
double input_entropy(double gamma);
double input_length(double n, double gamma);
double chain_rule_penalty(const ErrorBudget& b);

inline double lambda_span(const Vec& lambda) { return lambda.size() ? lambda.maxCoeff() - lambda.minCoeff() : 0.0; }

// Everything the finite-size bound needs besides beta.
struct RateContext {
  double n = 3e10;
  double gamma = 0.12;
  int m = 3;
  double h = 0;
  double lambda_span = 0;
  ErrorBudget budget;
};

RateContext make_rate_context(double n, const DualCertificate& cert, const ScoreDistribution& omega_delta,
                              const ProtocolParams& p, const ErrorBudget& b, ScoreDistribution* tilde = nullptr);

double smooth_minentropy_bound_k(const RateContext& ctx, double beta);
double output_length(double k, double eps_ext);
double net_rate(double n, double ell_out, double ell_in);
// (l - l_in)/n without the floor, used as the beta objective.
double r_net_continuous(const RateContext& ctx, double beta);

struct RateReport {
  double h = 0, V = 0, K = 0, xi = 0, beta = 0;
  double k_bound = 0, ell_out = 0, ell_in = 0, r_net = 0;
  double n = 0, gamma = 0;
  bool nonpositive_h = false;
  bool nonpositive_ell = false;
  ErrorBudget budget;
  std::optional<ScoreDistribution> tilde_omega;
};

RateReport rate_report(const RateContext& ctx, double beta);
RateReport optimize_beta(const RateContext& ctx);

std::string rate_report_json(const RateReport& r);

}  // namespace qrex
