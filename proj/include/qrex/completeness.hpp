#pragma once

#include "qrex/model.hpp"

namespace qrex {

double kl_bernoulli(double q, double p);
double normal_cdf(double a);
// Normal approximation bound F(n,p,k) on the binomial cdf P[Bin(n,p) <= k].
double binomial_cdf_bound(double n, double p, double k);
// 1 - F(n,p,k), evaluated as a lower tail so small values keep their digits.
double binomial_upper_bound(double n, double p, double k);
double epsilon_com_category(double n, double gamma, double omega_c, double delta_c);

struct CompletenessReport {
  std::vector<ScoreLabel> labels;
  Vec per_category;
  double total = 0;
};
CompletenessReport completeness_report(double n, double gamma, const ScoreDistribution& d);

enum class Allocation { Equal, Proportional };
Vec calibrate_delta(double n, double gamma, const ScoreDistribution& omega, double target,
                    Allocation alloc = Allocation::Equal);

}  // namespace qrex
