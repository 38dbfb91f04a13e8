#pragma once

#include <vector>

#include "qrex/types.hpp"

namespace qrex {

struct MzmConfig {
  double loss_slope = 0.35 / (1.5 * M_PI);  // 35% power loss at 1.5 pi
  double bias = 0;
  double ratio = 0.6;

  void validate() const;
};

// Slope that puts the power loss at phase phi_ref equal to frac.
inline double calibrated_loss_slope(double frac = 0.35, double phi_ref = 1.5 * M_PI) { return frac / phi_ref; }

Cplx arm_amplitude(double phi, const MzmConfig& cfg);
Cplx mzm_field(double phi1, const MzmConfig& cfg);

struct MzmOutput {
  double intensity;
  double phase;
};
MzmOutput mzm_output(double phi1, const MzmConfig& cfg);

struct WorkingPoint {
  double phi1_start = 0;
  double phi1_end = 0;
  double bias = 0;
  double max_intensity_ripple = 0;  // (max - min) / mean over the window
  double endpoint_intensity = 1;    // shared intensity at both ends
  double mean_intensity = 1;
};

// Window whose output phase spans target_range, with equal intensity at both ends
// (no phase-dependent loss between the two settings) and the largest such intensity
// (least total loss). cfg.bias is ignored; the bias is optimized.
WorkingPoint find_working_point(const MzmConfig& cfg, double target_range = M_PI / 2);

// Unwrapped output phase along [a, b] sampled at the given step.
void mzm_sweep(const MzmConfig& cfg, double a, double b, int samples, std::vector<double>& phi1,
               std::vector<double>& intensity, std::vector<double>& phase);

}  // namespace qrex
