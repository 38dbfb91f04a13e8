#include "qrex/device.hpp"

#include <algorithm>
#include <cmath>

namespace qrex {

void MzmConfig::validate() const {
  if (!(loss_slope >= 0)) throw ConfigError("loss_slope must be >= 0");
  if (!(ratio > 0 && ratio <= 1)) throw ConfigError("ratio must lie in (0,1]");
}

Cplx arm_amplitude(double phi, const MzmConfig& cfg) {
  double f = 1 - cfg.loss_slope * std::abs(phi);
  if (f < 0) throw DomainError("arm_amplitude: loss factor negative at phi = " + std::to_string(phi));
  return std::sqrt(f) * std::exp(Cplx(0, phi));
}

Cplx mzm_field(double phi1, const MzmConfig& cfg) {
  return 0.5 * (arm_amplitude(phi1, cfg) + arm_amplitude(cfg.ratio * phi1, cfg) * std::exp(Cplx(0, cfg.bias)));
}

MzmOutput mzm_output(double phi1, const MzmConfig& cfg) {
  Cplx f = mzm_field(phi1, cfg);
  return {std::norm(f), std::arg(f)};
}

void mzm_sweep(const MzmConfig& cfg, double a, double b, int samples, std::vector<double>& phi1,
               std::vector<double>& intensity, std::vector<double>& phase) {
  phi1.resize(samples);
  intensity.resize(samples);
  phase.resize(samples);
  Cplx prev;
  for (int i = 0; i < samples; ++i) {
    double t = samples == 1 ? a : a + (b - a) * i / (samples - 1);
    Cplx f = mzm_field(t, cfg);
    phi1[i] = t;
    intensity[i] = std::norm(f);
    phase[i] = i == 0 ? std::arg(f) : phase[i - 1] + std::arg(f / prev);
    prev = f;
  }
}

namespace {

struct Searcher {
  MzmConfig cfg;
  double target;
  double phi_max;
  double step = 4e-3;

  // End of the window starting at s, or NaN when the phase span is not reached.
  double window_end(double s) const {
    Cplx f0 = mzm_field(s, cfg);
    if (std::abs(f0) < 1e-9) return NAN;
    double acc = 0, t = s;
    Cplx prev = f0;
    while (t + step <= phi_max) {
      Cplx f = mzm_field(t + step, cfg);
      if (std::abs(f) < 1e-9) return NAN;
      double d = std::arg(f / prev);
      if (acc + d >= target) {
        double lo = t, hi = t + step;
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          if (acc + std::arg(mzm_field(mid, cfg) / prev) >= target)
            hi = mid;
          else
            lo = mid;
        }
        return hi;
      }
      acc += d;
      prev = f;
      t += step;
    }
    return NAN;
  }

  double mismatch(double s, double* e_out = nullptr) const {
    double e = window_end(s);
    if (e_out) *e_out = e;
    if (std::isnan(e)) return NAN;
    return std::norm(mzm_field(e, cfg)) - std::norm(mzm_field(s, cfg));
  }

  // Best equal-intensity window for the current bias; intensity < 0 if none.
  WorkingPoint best_for_bias(int grid) const {
    WorkingPoint best;
    best.endpoint_intensity = -1;
    double s_hi = std::min(phi_max, 2 * M_PI);
    double prev_s = 0, prev_g = mismatch(0);
    auto consider = [&](double s) {
      double e;
      mismatch(s, &e);
      if (std::isnan(e)) return;
      double I = std::norm(mzm_field(s, cfg));
      if (I > best.endpoint_intensity) {
        best.phi1_start = s;
        best.phi1_end = e;
        best.bias = cfg.bias;
        best.endpoint_intensity = I;
      }
    };
    if (prev_g == 0) consider(0);
    for (int i = 1; i <= grid; ++i) {
      double s = s_hi * i / grid;
      double g = mismatch(s);
      if (!std::isnan(g) && !std::isnan(prev_g) && (g == 0 || (g > 0) != (prev_g > 0))) {
        double lo = prev_s, hi = s, glo = prev_g;
        for (int it = 0; it < 50; ++it) {
          double mid = 0.5 * (lo + hi), gm = mismatch(mid);
          if (std::isnan(gm)) break;
          if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
          } else {
            hi = mid;
          }
        }
        consider(0.5 * (lo + hi));
      }
      prev_s = s;
      prev_g = g;
    }
    return best;
  }
};

}  // namespace

WorkingPoint find_working_point(const MzmConfig& cfg0, double target) {
  cfg0.validate();
  if (!(target >= 0)) throw DomainError("target phase range must be >= 0");
  WorkingPoint wp;
  if (target == 0) return wp;

  Searcher S{cfg0, target, cfg0.loss_slope > 0 ? 1 / cfg0.loss_slope - 1e-9 : 4 * M_PI};
  const int nb = 180;
  WorkingPoint best;
  best.endpoint_intensity = -1;
  for (int i = 0; i < nb; ++i) {
    S.cfg.bias = -M_PI + 2 * M_PI * i / nb;
    WorkingPoint w = S.best_for_bias(90);
    if (w.endpoint_intensity > best.endpoint_intensity) best = w;
  }
  if (best.endpoint_intensity < 0) throw DomainError("find_working_point: no window reaches the phase span");

  // golden-section refinement of the bias around the grid optimum
  double h = 2 * M_PI / nb;
  double a = best.bias - h, b = best.bias + h;
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  auto value = [&](double bias, WorkingPoint* out) {
    S.cfg.bias = bias;
    WorkingPoint w = S.best_for_bias(180);
    if (out) *out = w;
    return w.endpoint_intensity;
  };
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = value(c, nullptr), fd = value(d, nullptr);
  for (int it = 0; it < 40; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = value(c, nullptr);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = value(d, nullptr);
    }
  }
  WorkingPoint refined;
  if (value(0.5 * (a + b), &refined) > best.endpoint_intensity) best = refined;

  S.cfg.bias = best.bias;
  std::vector<double> p, I, ph;
  mzm_sweep(S.cfg, best.phi1_start, best.phi1_end, 401, p, I, ph);
  auto [mn, mx] = std::minmax_element(I.begin(), I.end());
  double mean = 0;
  for (double v : I) mean += v;
  mean /= I.size();
  best.mean_intensity = mean;
  best.max_intensity_ripple = mean > 0 ? (*mx - *mn) / mean : 0;
  return best;
}

}  // namespace qrex
