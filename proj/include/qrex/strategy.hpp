#pragma once

#include <random>
#include <vector>

#include "qrex/moment.hpp"

namespace qrex {

// Explicit finite-dimensional attack: the source states live in C^4 (coordinates S.col(x)),
// the device holds a dB-dimensional memory entangled with a dE-dimensional adversary system
// through chi, the device measures POVMs on C^4 (x) C^dB and the adversary a binary POVM.
struct ExplicitStrategy {
  int dB = 2, dE = 2;
  CVec chi;              // index b * dE + e
  std::vector<CMat> M[2];  // per basis, one element per bin
  CMat E0;               // E1 = I - E0

  int bob_dim() const { return 4 * dB; }
};

struct StrategyValue {
  Vec omega;  // per category of the problem's layout
  double pguess = 0;
};

ExplicitStrategy random_strategy(const MomentProblem& P, int dB, int dE, std::mt19937_64& rng);
StrategyValue evaluate(const ExplicitStrategy& s, const MomentProblem& P);

// Helstrom measurement for the adversary; leaves omega unchanged.
void optimize_eve(ExplicitStrategy& s, const MomentProblem& P);

// Alternating maximization of pguess - lambda . omega over adversary measurement, shared
// state and device POVMs. Returns the final objective.
double seesaw(ExplicitStrategy& s, const MomentProblem& P, const Vec& lambda, int rounds = 50);

}  // namespace qrex
