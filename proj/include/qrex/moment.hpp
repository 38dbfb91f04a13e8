#pragma once

#include <string>
#include <vector>

#include "qrex/certificate.hpp"
#include "qrex/model.hpp"
#include "qrex/sdp.hpp"

namespace qrex {

// kappa^{(c)}_{b,x,y}: 1/4 when y = y(x) and the round scores into c.
struct ScoreConstraintCoefficients {
  int categories = 0;
  int nb[2] = {0, 0};
  // cat[x][y][bin] is the category index or -1
  std::vector<int> cat[4][2];

  double weight(int c, int signed_b, int x, int y) const;
};

ScoreConstraintCoefficients build_kappa(const ProtocolParams& p);

// One operator word: an optional Bob projector and an optional Eve projector E_0.
struct Word {
  int bob = -1;  // index into MomentProblem::letters
  bool eve = false;
};

// Canonical moment <e_k| w |e_l> in an orthonormal basis of the state span.
struct MomentKey {
  int k, l;
  std::vector<int> bob;  // up to two letters, different bases when two
  bool eve;
  bool operator<(const MomentKey& o) const;
  bool operator==(const MomentKey& o) const { return k == o.k && l == o.l && bob == o.bob && eve == o.eve; }
  MomentKey dagger() const;
  bool self_adjoint() const { return k == l && bob.size() <= 1; }
};

// Linear map y -> F0 + sum_j y_j F_j on a single Hermitian block, plus the objective
// and score rows A y + a0 = omega, all over the same real variables y.
struct MomentProblem {
  ProtocolParams params;
  int level = 2;
  Mat4c G, S;  // S = G^{1/2}; state x has coordinates S.col(x)
  std::vector<std::pair<int, int>> letters;  // (basis, bin) for every non-final outcome
  std::vector<Word> words;                   // reduced words indexing the block
  int full_monomials = 0;                    // identity + every projector + Eve products
  int dim = 0;

  std::vector<MomentKey> keys;  // representatives
  struct Var {
    int key;    // -1 for the Eve marginal e00
    bool imag;  // imaginary part
  };
  std::vector<Var> vars;

  std::vector<SdpEntry<Cplx>> F0;
  std::vector<std::vector<SdpEntry<Cplx>>> F;
  double c0 = 0;
  Vec c;
  Mat A;  // categories x vars
  Vec a0;
  ScoreConstraintCoefficients kappa;

  int num_vars() const { return static_cast<int>(vars.size()); }
  int key_index(const MomentKey& k) const;
  // Hermitian moment block for a moment vector y
  CMat moment_matrix(const Vec& y) const;
};

MomentProblem build_moment_problem(const ProtocolParams& p, int level = 2, int adversary_outcomes = 2);

struct PguessOptions {
  SdpOptions sdp;
  // when nonempty, constraints become |A y + a0 - omega| <= halfwidth
  Vec halfwidth;
  bool use_scores = true;
  double residual_cap = 1e-6;
};

struct PguessResult {
  double primal_value = 1;  // relaxation value at the solver's primal point
  double bound = 1;         // rigorous bound alpha + lambda . omega
  DualCertificate cert;
  SdpStatus status = SdpStatus::Optimal;
  int iterations = 0;
};

// Errors: SdpError for solver failure; DomainError when omega violates the linear
// structure of the relaxation (dependent rows that disagree).
PguessResult solve_pguess(const Vec& omega, const MomentProblem& prob, const PguessOptions& opt = {});
inline PguessResult solve_pguess(const ScoreDistribution& d, const MomentProblem& prob,
                                 const PguessOptions& opt = {}) {
  return solve_pguess(d.omega, prob, opt);
}

// Re-derives alpha for the certificate's lambda at 50-digit precision from its dual
// witness (solving the Lagrangian relaxation when the witness is absent) and folds the
// residual into alpha. Throws NumericalError when the repair exceeds residual_cap.
DualCertificate validate_certificate(const DualCertificate& cert, const MomentProblem& prob, int trials = 0,
                                     double residual_cap = 1e-6);

std::string params_hash(const ProtocolParams& p, int level);

}  // namespace qrex
