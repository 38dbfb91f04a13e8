#include "qrex/strategy.hpp"

#include <cmath>

namespace qrex {

namespace {

CMat gaussian(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  CMat A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = Cplx(n(rng), n(rng));
  return A;
}

CMat psd_power(const CMat& A, double p) {
  Eigen::SelfAdjointEigenSolver<CMat> es(A);
  Vec ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 1e-14 ? std::pow(ev(i), p) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMat positive_projector(const CMat& A) {
  Eigen::SelfAdjointEigenSolver<CMat> es(A);
  CMat P = CMat::Zero(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    if (es.eigenvalues()(i) > 0) P += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return P;
}

// Phi[(s,b), e] = psi[s] chi[b,e]
CMat joint(const CVec& psi, const ExplicitStrategy& s) {
  CMat Phi(s.bob_dim(), s.dE);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < s.dB; ++b)
      for (int e = 0; e < s.dE; ++e) Phi(a * s.dB + b, e) = psi(a) * s.chi(b * s.dE + e);
  return Phi;
}

CMat eve_element(const ExplicitStrategy& s, int b) {
  return b == 0 ? s.E0 : CMat(CMat::Identity(s.dE, s.dE) - s.E0);
}

CMat coarse_bob(const ExplicitStrategy& s, const MomentProblem& P, int b) {
  int nbp = P.params.bins_p;
  CMat M = CMat::Zero(s.bob_dim(), s.bob_dim());
  for (int bin = 0; bin < nbp; ++bin)
    if ((bin < nbp / 2 ? 0 : 1) == b) M += s.M[1][bin];
  return M;
}

// (psi^dagger (x) I) A (psi (x) I) on C^dB
CMat compress(const CMat& A, const CVec& psi, int dB) {
  CMat out = CMat::Zero(dB, dB);
  for (int a = 0; a < 4; ++a)
    for (int a2 = 0; a2 < 4; ++a2) {
      Cplx w = std::conj(psi(a)) * psi(a2);
      if (std::abs(w) == 0) continue;
      out += w * A.block(a * dB, a2 * dB, dB, dB);
    }
  return out;
}

CMat kron(const CMat& A, const CMat& B) {
  CMat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

CMat reduced_bob_memory(const ExplicitStrategy& s) {
  CMat X(s.dB, s.dE);
  for (int b = 0; b < s.dB; ++b)
    for (int e = 0; e < s.dE; ++e) X(b, e) = s.chi(b * s.dE + e);
  return X * X.adjoint();
}

double objective(const ExplicitStrategy& s, const MomentProblem& P, const Vec& lambda) {
  StrategyValue v = evaluate(s, P);
  return v.pguess - (lambda.size() ? lambda.dot(v.omega) : 0.0);
}

}  // namespace

ExplicitStrategy random_strategy(const MomentProblem& P, int dB, int dE, std::mt19937_64& rng) {
  ExplicitStrategy s;
  s.dB = dB;
  s.dE = dE;
  s.chi = gaussian(dB * dE, 1, rng).col(0);
  s.chi.normalize();
  int D = s.bob_dim();
  std::uniform_int_distribution<int> coin(0, 1);
  for (int y = 0; y < 2; ++y) {
    int nb = y == 0 ? P.params.bins_x : P.params.bins_p;
    s.M[y].clear();
    if (coin(rng)) {
      // projective: random basis split among outcomes
      Eigen::HouseholderQR<CMat> qr(gaussian(D, D, rng));
      CMat U = qr.householderQ();
      std::uniform_int_distribution<int> pick(0, nb - 1);
      s.M[y].assign(nb, CMat::Zero(D, D));
      for (int i = 0; i < D; ++i) s.M[y][pick(rng)] += U.col(i) * U.col(i).adjoint();
    } else {
      std::vector<CMat> Gs;
      CMat Ssum = CMat::Zero(D, D);
      for (int b = 0; b < nb; ++b) {
        CMat A = gaussian(D, D, rng);
        Gs.push_back(A * A.adjoint());
        Ssum += Gs.back();
      }
      CMat Si = psd_power(Ssum, -0.5);
      for (int b = 0; b < nb; ++b) s.M[y].push_back(Si * Gs[b] * Si);
    }
  }
  CMat A = gaussian(dE, dE, rng);
  s.E0 = positive_projector(A + A.adjoint());
  return s;
}

StrategyValue evaluate(const ExplicitStrategy& s, const MomentProblem& P) {
  StrategyValue v;
  const int C = P.params.layout.size();
  v.omega = Vec::Zero(C);
  CMat rhoB = reduced_bob_memory(s);
  for (int x = 0; x < 4; ++x) {
    int y = basis_of_state(x);
    CVec psi = P.S.col(x);
    for (std::size_t bin = 0; bin < s.M[y].size(); ++bin) {
      int c = P.kappa.cat[x][y][bin];
      if (c < 0) continue;
      v.omega(c) += 0.25 * (compress(s.M[y][bin], psi, s.dB) * rhoB).trace().real();
    }
  }
  CMat Phi = joint(P.S.col(0), s);
  for (int b = 0; b < 2; ++b) {
    CMat sig = Phi.adjoint() * coarse_bob(s, P, b) * Phi;
    v.pguess += (sig * eve_element(s, b).transpose()).trace().real();
  }
  return v;
}

void optimize_eve(ExplicitStrategy& s, const MomentProblem& P) {
  CMat Phi = joint(P.S.col(0), s);
  CMat s0 = (Phi.adjoint() * coarse_bob(s, P, 0) * Phi).conjugate();
  CMat s1 = (Phi.adjoint() * coarse_bob(s, P, 1) * Phi).conjugate();
  s.E0 = positive_projector(s0 - s1);
}

namespace {

void optimize_chi(ExplicitStrategy& s, const MomentProblem& P, const Vec& lambda) {
  CMat Q = CMat::Zero(s.dB * s.dE, s.dB * s.dE);
  CVec psi0 = P.S.col(0);
  for (int b = 0; b < 2; ++b) Q += kron(compress(coarse_bob(s, P, b), psi0, s.dB), eve_element(s, b));
  if (lambda.size()) {
    CMat I = CMat::Identity(s.dE, s.dE);
    for (int x = 0; x < 4; ++x) {
      int y = basis_of_state(x);
      for (std::size_t bin = 0; bin < s.M[y].size(); ++bin) {
        int c = P.kappa.cat[x][y][bin];
        if (c < 0) continue;
        Q -= 0.25 * lambda(c) * kron(compress(s.M[y][bin], P.S.col(x), s.dB), I);
      }
    }
  }
  Q = (0.5 * (Q + Q.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<CMat> es(Q);
  s.chi = es.eigenvectors().col(Q.rows() - 1);
}

// Maximize sum_b tr(M_b R_b) over POVMs.
void optimize_povm(std::vector<CMat>& M, std::vector<CMat> R) {
  const int n = static_cast<int>(M.size()), D = static_cast<int>(M[0].rows());
  if (n == 2) {
    M[0] = positive_projector(R[0] - R[1]);
    M[1] = CMat::Identity(D, D) - M[0];
    return;
  }
  double shift = 0;
  for (auto& r : R) {
    Eigen::SelfAdjointEigenSolver<CMat> es(r, Eigen::EigenvaluesOnly);
    shift = std::min(shift, es.eigenvalues().minCoeff());
  }
  for (auto& r : R) r += (1e-9 - shift) * CMat::Identity(D, D);
  auto value = [&](const std::vector<CMat>& Ms) {
    double v = 0;
    for (int b = 0; b < n; ++b) v += (Ms[b] * R[b]).trace().real();
    return v;
  };
  double best = value(M);
  for (int it = 0; it < 200; ++it) {
    CMat L = CMat::Zero(D, D);
    for (int b = 0; b < n; ++b) L += R[b] * M[b] * R[b];
    CMat Li = psd_power((0.5 * (L + L.adjoint())).eval(), -0.5);
    std::vector<CMat> next(n);
    for (int b = 0; b < n; ++b) {
      next[b] = Li * R[b] * M[b] * R[b] * Li;
      next[b] = (0.5 * (next[b] + next[b].adjoint())).eval();
    }
    double v = value(next);
    if (v < best - 1e-15) break;
    bool done = v - best < 1e-13;
    best = v;
    M = next;
    if (done) break;
  }
}

void optimize_bob(ExplicitStrategy& s, const MomentProblem& P, const Vec& lambda) {
  const int D = s.bob_dim();
  CMat rhoB = reduced_bob_memory(s);
  CMat Phi = joint(P.S.col(0), s);
  CMat tau[2];
  for (int b = 0; b < 2; ++b) tau[b] = Phi * eve_element(s, b).transpose() * Phi.adjoint();
  for (int y = 0; y < 2; ++y) {
    int nb = static_cast<int>(s.M[y].size());
    std::vector<CMat> R(nb, CMat::Zero(D, D));
    if (y == 1)
      for (int bin = 0; bin < nb; ++bin) R[bin] += tau[bin < nb / 2 ? 0 : 1];
    if (lambda.size())
      for (int x = 0; x < 4; ++x) {
        if (basis_of_state(x) != y) continue;
        CVec psi = P.S.col(x);
        CMat rho = kron(psi * psi.adjoint(), rhoB);
        for (int bin = 0; bin < nb; ++bin) {
          int c = P.kappa.cat[x][y][bin];
          if (c >= 0) R[bin] -= 0.25 * lambda(c) * rho;
        }
      }
    for (auto& r : R) r = (0.5 * (r + r.adjoint())).eval();
    optimize_povm(s.M[y], R);
  }
}

}  // namespace

double seesaw(ExplicitStrategy& s, const MomentProblem& P, const Vec& lambda, int rounds) {
  double prev = objective(s, P, lambda);
  for (int r = 0; r < rounds; ++r) {
    optimize_eve(s, P);
    optimize_chi(s, P, lambda);
    optimize_bob(s, P, lambda);
    double v = objective(s, P, lambda);
    if (std::abs(v - prev) < 1e-12) {
      prev = v;
      break;
    }
    prev = v;
  }
  optimize_eve(s, P);
  return objective(s, P, lambda);
}

}  // namespace qrex
