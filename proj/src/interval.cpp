#include "qrex/interval.hpp"

#include <cmath>

namespace qrex {

std::pair<std::int64_t, std::int64_t> snap_rational(double x, std::int64_t max_den) {
  if (!(x >= 0 && x <= 1)) throw DomainError("snap_rational: value outside [0, 1]");
  // continued fraction convergents, then the best semiconvergent under the cap
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    double a = std::floor(r);
    std::int64_t ai = static_cast<std::int64_t>(a);
    std::int64_t q2 = ai * q1 + q0;
    if (q2 > max_den) {
      std::int64_t k = (max_den - q0) / q1;
      std::int64_t ps = k * p1 + p0, qs = k * q1 + q0;
      if (std::abs(static_cast<double>(ps) / qs - x) < std::abs(static_cast<double>(p1) / q1 - x)) return {ps, qs};
      return {p1, q1};
    }
    std::int64_t p2 = ai * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double frac = r - a;
    if (frac < 1e-12 || std::abs(static_cast<double>(p1) / q1 - x) < 1e-15) break;
    r = 1 / frac;
  }
  return {p1, q1};
}

IntervalSampler::IntervalSampler(std::int64_t num, std::int64_t den, int restart)
    : num_(static_cast<std::uint64_t>(num)),
      den_(static_cast<std::uint64_t>(den)),
      k0_(static_cast<std::uint64_t>(den - num)),
      restart_(restart) {
  if (den <= 0 || num <= 0 || num >= den) throw DomainError("IntervalSampler: probability must lie in (0, 1)");
  if (restart < 1) throw DomainError("IntervalSampler: restart must be positive");
  reset();
}

void IntervalSampler::reset() {
  A_.set(0);
  W_.set(1);
  Q_.set(1);
  emitted_ = 0;
}

InputSampler::InputSampler(double gamma, int restart)
    : g_(snap_rational(gamma)), iv_(g_.first, g_.second, restart) {}

}  // namespace qrex
