#include "qrex/completeness.hpp"

#include <cmath>

namespace qrex {

double kl_bernoulli(double q, double p) {
  if (!(p > 0 && p < 1)) throw DomainError("kl_bernoulli: p must lie in (0,1)");
  if (!(q >= 0 && q <= 1)) throw DomainError("kl_bernoulli: q must lie in [0,1]");
  double a = q > 0 ? q * std::log1p((q - p) / p) : 0.0;
  double b = q < 1 ? (1 - q) * std::log1p((p - q) / (1 - p)) : 0.0;
  return std::max(0.0, a + b);
}

double normal_cdf(double a) { return 0.5 * std::erfc(-a / M_SQRT2); }

static double bound_argument(double n, double p, double k) {
  if (!(k >= 0 && k <= n)) throw DomainError("binomial bound: need 0 <= k <= n");
  double q = k / n;
  double s = q > p ? 1.0 : (q < p ? -1.0 : 0.0);
  if (s == 0) return 0;
  return s * std::sqrt(2 * n * kl_bernoulli(q, p));
}

double binomial_cdf_bound(double n, double p, double k) { return normal_cdf(bound_argument(n, p, k)); }

double binomial_upper_bound(double n, double p, double k) { return normal_cdf(-bound_argument(n, p, k)); }

double epsilon_com_category(double n, double gamma, double omega_c, double delta_c) {
  if (delta_c < 0) throw DomainError("delta must be >= 0");
  double p = gamma * omega_c;
  double k = std::min(n, std::floor(n * gamma * (omega_c + delta_c)));
  return binomial_upper_bound(n, p, k);
}

CompletenessReport completeness_report(double n, double gamma, const ScoreDistribution& d) {
  CompletenessReport r;
  r.labels = d.labels;
  r.per_category.resize(d.size());
  for (int c = 0; c < d.size(); ++c) r.per_category(c) = epsilon_com_category(n, gamma, d.omega(c), d.delta(c));
  r.total = r.per_category.sum();
  return r;
}

Vec calibrate_delta(double n, double gamma, const ScoreDistribution& d, double target, Allocation alloc) {
  if (!(target > 0 && target < 1)) throw DomainError("target eps_com must lie in (0,1)");
  const int C = d.size();
  Vec w = Vec::Ones(C);
  if (alloc == Allocation::Proportional)
    for (int c = 0; c < C; ++c) w(c) = std::sqrt(d.omega(c) * (1 - d.omega(c)));
  if (w.sum() <= 0) throw DomainError("calibrate_delta: degenerate allocation weights");
  Vec delta(C);
  for (int c = 0; c < C; ++c) {
    double om = d.omega(c);
    if (!(om > 0)) throw DomainError("calibrate_delta: category '" + d.labels[c].name + "' has omega = 0");
    double budget = target * w(c) / w.sum();
    auto eps = [&](double del) { return epsilon_com_category(n, gamma, om, del); };
    double lo = 0, hi = std::max(1e-12, 1 - om);
    while (eps(hi) > budget) {
      if (hi >= 1 / gamma - om) throw DomainError("calibrate_delta: budget unreachable at this n");
      hi = std::min(2 * hi, 1 / gamma - om);
    }
    if (eps(lo) <= budget) hi = lo;
    while (hi - lo > 1e-12) {
      double mid = 0.5 * (lo + hi);
      if (eps(mid) <= budget)
        hi = mid;
      else
        lo = mid;
    }
    delta(c) = hi;
  }
  return delta;
}

}  // namespace qrex
