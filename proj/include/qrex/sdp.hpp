#pragma once

// Dense primal-dual interior point method for block-diagonal Hermitian SDPs.
//
//   (P)  max  Re tr(C X)   s.t.  Re tr(A_i X) = a_i,  X >= 0
//   (D)  min  a' y         s.t.  sum_i y_i A_i - C = Z >= 0
//
// HKM direction with a Mehrotra predictor-corrector, infeasible start.
// Scalar is double (symmetric blocks) or std::complex<double> (Hermitian blocks).

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "qrex/types.hpp"

namespace qrex {

enum class SdpStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, IllConditioned };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::PrimalInfeasible: return "primal infeasible";
    case SdpStatus::DualInfeasible: return "dual infeasible";
    case SdpStatus::MaxIterations: return "max iterations";
    case SdpStatus::IllConditioned: return "ill-conditioned";
  }
  return "?";
}

struct SdpError : NumericalError {
  SdpStatus status;
  SdpError(SdpStatus s, const std::string& what) : NumericalError(what), status(s) {}
};

template <typename Scalar>
struct SdpEntry {
  int block, row, col;  // row <= col; the mirrored entry is implied
  Scalar value;
};

template <typename Scalar>
struct SdpProblem {
  typedef Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> MatS;
  std::vector<int> blocks;
  std::vector<MatS> C;
  std::vector<std::vector<SdpEntry<Scalar>>> A;
  Vec a;

  int num_constraints() const { return static_cast<int>(A.size()); }
  int total_dim() const {
    int n = 0;
    for (int b : blocks) n += b;
    return n;
  }
  // Adds v at (r,c) and, implicitly, conj(v) at (c,r).
  static void add_entry(std::vector<SdpEntry<Scalar>>& Ai, int block, int r, int c, Scalar v) {
    if (r > c) {
      std::swap(r, c);
      v = Eigen::numext::conj(v);
    }
    if (r == c) v = Scalar(Eigen::numext::real(v));
    for (auto& e : Ai)
      if (e.block == block && e.row == r && e.col == c) {
        e.value += v;
        return;
      }
    Ai.push_back({block, r, c, v});
  }
};

struct SdpOptions {
  int max_iterations = 120;
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  double step_fraction = 0.95;
  double dependency_tol = 1e-10;
  int max_dim = 200;
  bool verbose = false;
};

template <typename Scalar>
struct SdpSolution {
  typedef Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> MatS;
  SdpStatus status = SdpStatus::MaxIterations;
  std::vector<MatS> X, Z;
  Vec y;
  double primal_obj = 0, dual_obj = 0;
  double primal_infeas = 0, dual_infeas = 0;
  int iterations = 0;
  std::vector<int> dropped;  // dependent constraints removed in presolve
};

namespace detail {

template <typename Scalar>
inline double re(const Scalar& s) {
  return Eigen::numext::real(s);
}

template <typename Scalar>
class HkmSolver {
 public:
  typedef Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> MatS;
  typedef std::vector<MatS> Blocks;

  HkmSolver(const SdpProblem<Scalar>& p, const SdpOptions& o) : P(p), opt(o) {}

  SdpSolution<Scalar> run() {
    SdpSolution<Scalar> sol;
    if (P.total_dim() > opt.max_dim)
      throw SdpError(SdpStatus::IllConditioned, "sdp_solve: matrix dimension above configured cap");
    presolve(sol);
    const int m = static_cast<int>(active.size());
    const double n = P.total_dim();

    double normC = 0, normA = 0, maxa = 0;
    for (auto& c : P.C) normC = std::max(normC, c.norm());
    for (int i : active) normA = std::max(normA, frob(P.A[i]));
    for (int i : active) maxa = std::max(maxa, (1 + std::abs(P.a(i))) / (1 + frob(P.A[i])));
    double xi = 10 * std::max(1.0, n * maxa);
    double eta = 10 * std::max(1.0, (1 + std::max(normA, normC)) / std::sqrt(n));

    Blocks X = identity(xi), Z = identity(eta);
    Vec y = Vec::Zero(m);
    Vec av(m);
    for (int k = 0; k < m; ++k) av(k) = P.a(active[k]);
    const double norm_a = av.norm(), norm_c = blocks_norm(P.C);

    double best_merit = 1e300;
    int stall = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
      sol.iterations = it;
      Vec rp = av - apply_A(X);
      Blocks Rd = add(P.C, Z);
      Blocks Ay = apply_At(y);
      for (std::size_t b = 0; b < Rd.size(); ++b) Rd[b] -= Ay[b];
      double pobj = inner(P.C, X), dobj = av.dot(y);
      double pinf = rp.norm() / (1 + norm_a), dinf = blocks_norm(Rd) / (1 + norm_c);
      double mu = inner(X, Z) / n;
      if (opt.verbose)
        std::fprintf(stderr, "it %3d pobj %.12e dobj %.12e pinf %.2e dinf %.2e mu %.2e\n", it, pobj, dobj, pinf,
                     dinf, mu);
      if (pinf < opt.feas_tol && dinf < opt.feas_tol && std::abs(dobj - pobj) < opt.gap_tol * (1 + std::abs(dobj)) &&
          mu * n < opt.gap_tol * (1 + std::abs(dobj))) {
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, SdpStatus::Optimal);
        return sol;
      }
      // stalled at a near-optimal point: residuals no longer improve
      double merit = std::max({pinf, dinf, std::abs(dobj - pobj) / (1 + std::abs(dobj))});
      if (merit < 0.5 * best_merit) {
        best_merit = merit;
        stall = 0;
      } else if (++stall >= 8 && merit < 1e-7) {
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, SdpStatus::Optimal);
        return sol;
      }
      // divergence tests: unbounded iterates with a vanishing residual
      double nx = blocks_norm(X), nz = blocks_norm(Z);
      if (dinf < 1e-6 && dobj < -1e8 * (1 + std::abs(pobj)) && nx > 1e8) {
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, SdpStatus::PrimalInfeasible);
        return sol;
      }
      if (pinf < 1e-6 && pobj > 1e8 * (1 + std::abs(dobj)) && nz > 1e8) {
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, SdpStatus::DualInfeasible);
        return sol;
      }
      if (nx > 1e14 || nz > 1e14) {
        SdpStatus s = dinf < pinf ? SdpStatus::PrimalInfeasible : SdpStatus::DualInfeasible;
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, s);
        return sol;
      }

      // Breakdown close to the optimum keeps the iterate; callers repair small residuals.
      const bool near = pinf < 1e-7 && dinf < 1e-7 && std::abs(dobj - pobj) < 1e-7 * (1 + std::abs(dobj));
      const SdpStatus broken = near ? SdpStatus::Optimal : SdpStatus::IllConditioned;
      Blocks Zi;
      if (!inverse(Z, Zi)) {
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, broken);
        return sol;
      }
      Mat M = schur(X, Zi);
      Eigen::LLT<Mat> llt(M);
      if (llt.info() != Eigen::Success) {
        M.diagonal().array() += 1e-14 * M.diagonal().cwiseAbs().maxCoeff();
        llt.compute(M);
      }
      if (llt.info() != Eigen::Success) {
        finish(sol, X, Z, y, pobj, dobj, pinf, dinf, broken);
        return sol;
      }
      // X Rd Zi appears in every right-hand side
      Blocks XRdZi(X.size());
      for (std::size_t b = 0; b < X.size(); ++b) XRdZi[b] = X[b] * Rd[b] * Zi[b];
      Vec AZi = apply_A(Zi), AXRdZi = apply_A(XRdZi);

      // predictor
      Vec dy = llt.solve(-av + AXRdZi);
      Blocks dZ = apply_At(dy), dX(X.size());
      for (std::size_t b = 0; b < X.size(); ++b) {
        dZ[b] -= Rd[b];
        dX[b] = -X[b] - X[b] * dZ[b] * Zi[b];
        herm(dX[b]);
      }
      double ap = max_step(X, dX), ad = max_step(Z, dZ);
      double mu_aff = 0;
      for (std::size_t b = 0; b < X.size(); ++b)
        mu_aff += re_trace(MatS(X[b] + std::min(1.0, ap) * dX[b]), MatS(Z[b] + std::min(1.0, ad) * dZ[b]));
      mu_aff /= n;
      double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3), 0.0, 1.0);

      // corrector
      Blocks corr(X.size());
      for (std::size_t b = 0; b < X.size(); ++b) corr[b] = dX[b] * dZ[b] * Zi[b];
      Vec rhs = sigma * mu * AZi - av + AXRdZi - apply_A(corr);
      Vec dy2 = llt.solve(rhs);
      Blocks dZ2 = apply_At(dy2), dX2(X.size());
      for (std::size_t b = 0; b < X.size(); ++b) {
        dZ2[b] -= Rd[b];
        dX2[b] = sigma * mu * Zi[b] - X[b] - X[b] * dZ2[b] * Zi[b] - corr[b];
        herm(dX2[b]);
      }
      double sp = std::min(1.0, opt.step_fraction * max_step(X, dX2));
      double sd = std::min(1.0, opt.step_fraction * max_step(Z, dZ2));
      if (opt.verbose) std::fprintf(stderr, "   sigma %.2e ap %.2e ad %.2e sp %.2e sd %.2e\n", sigma, ap, ad, sp, sd);
      for (std::size_t b = 0; b < X.size(); ++b) {
        X[b] += sp * dX2[b];
        Z[b] += sd * dZ2[b];
      }
      y += sd * dy2;
    }
    Vec rp = av - apply_A(X);
    finish(sol, X, Z, y, inner(P.C, X), av.dot(y), rp.norm() / (1 + norm_a), 0, SdpStatus::MaxIterations);
    return sol;
  }

 private:
  const SdpProblem<Scalar>& P;
  SdpOptions opt;
  std::vector<int> active;

  static double frob(const std::vector<SdpEntry<Scalar>>& Ai) {
    double s = 0;
    for (auto& e : Ai) s += (e.row == e.col ? 1.0 : 2.0) * std::norm(std::complex<double>(e.value));
    return std::sqrt(s);
  }

  Blocks identity(double s) const {
    Blocks B;
    for (int d : P.blocks) B.push_back(MatS::Identity(d, d) * Scalar(s));
    return B;
  }
  static Blocks add(const Blocks& A, const Blocks& B) {
    Blocks C(A.size());
    for (std::size_t b = 0; b < A.size(); ++b) C[b] = A[b] + B[b];
    return C;
  }
  static double blocks_norm(const Blocks& B) {
    double s = 0;
    for (auto& b : B) s += b.squaredNorm();
    return std::sqrt(s);
  }
  static double re_trace(const MatS& A, const MatS& B) {
    // Re tr(A B) for Hermitian A, B
    return re(A.cwiseProduct(B.transpose()).sum());
  }
  static double inner(const Blocks& A, const Blocks& B) {
    double s = 0;
    for (std::size_t b = 0; b < A.size(); ++b) s += re_trace(A[b], B[b]);
    return s;
  }
  static void herm(MatS& M) { M = (0.5 * (M + M.adjoint())).eval(); }

  double apply_one(const std::vector<SdpEntry<Scalar>>& Ai, const Blocks& X) const {
    double s = 0;
    for (auto& e : Ai) {
      // general (non-Hermitian) argument: Re tr(A X)
      if (e.row == e.col)
        s += re(e.value * X[e.block](e.row, e.row));
      else
        s += re(e.value * X[e.block](e.col, e.row) + Eigen::numext::conj(e.value) * X[e.block](e.row, e.col));
    }
    return s;
  }
  Vec apply_A(const Blocks& X) const {
    Vec v(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) v(k) = apply_one(P.A[active[k]], X);
    return v;
  }
  Blocks apply_At(const Vec& y) const {
    Blocks B;
    for (int d : P.blocks) B.push_back(MatS::Zero(d, d));
    for (std::size_t k = 0; k < active.size(); ++k)
      for (auto& e : P.A[active[k]]) {
        B[e.block](e.row, e.col) += y(k) * e.value;
        if (e.row != e.col) B[e.block](e.col, e.row) += y(k) * Eigen::numext::conj(e.value);
      }
    return B;
  }

  bool inverse(const Blocks& Z, Blocks& Zi) const {
    Zi.resize(Z.size());
    for (std::size_t b = 0; b < Z.size(); ++b) {
      Eigen::LLT<MatS> llt(Z[b]);
      if (llt.info() != Eigen::Success) return false;
      Zi[b] = llt.solve(MatS::Identity(Z[b].rows(), Z[b].cols()));
      herm(Zi[b]);
    }
    return true;
  }

  // M_ij = Re tr(A_i X A_j Zi)
  Mat schur(const Blocks& X, const Blocks& Zi) const {
    const int m = static_cast<int>(active.size());
    Mat M(m, m);
    std::vector<MatS> W(P.blocks.size());
    for (int j = 0; j < m; ++j) {
      const auto& Aj = P.A[active[j]];
      std::vector<bool> touched(P.blocks.size(), false);
      for (auto& e : Aj) {
        int b = e.block;
        if (!touched[b]) {
          W[b] = MatS::Zero(P.blocks[b], P.blocks[b]);
          touched[b] = true;
        }
        W[b].noalias() += (X[b].col(e.row) * e.value) * Zi[b].row(e.col);
        if (e.row != e.col) W[b].noalias() += (X[b].col(e.col) * Eigen::numext::conj(e.value)) * Zi[b].row(e.row);
      }
      for (int i = 0; i <= j; ++i) {
        double s = 0;
        for (auto& e : P.A[active[i]]) {
          if (!touched[e.block]) continue;
          const MatS& w = W[e.block];
          if (e.row == e.col)
            s += re(e.value * w(e.row, e.row));
          else
            s += re(e.value * w(e.col, e.row) + Eigen::numext::conj(e.value) * w(e.row, e.col));
        }
        M(i, j) = M(j, i) = s;
      }
    }
    return M;
  }

  // Largest alpha with S + alpha dS >= 0 (may exceed 1).
  static double max_step(const Blocks& S, const Blocks& dS) {
    double amax = 1e30;
    for (std::size_t b = 0; b < S.size(); ++b) {
      Eigen::LLT<MatS> llt(S[b]);
      MatS Li = llt.matrixL().solve(MatS::Identity(S[b].rows(), S[b].cols()));
      MatS T = Li * dS[b] * Li.adjoint();
      herm(T);
      Eigen::SelfAdjointEigenSolver<MatS> es(T, Eigen::EigenvaluesOnly);
      double lmin = es.eigenvalues().minCoeff();
      if (lmin < 0) amax = std::min(amax, -1.0 / lmin);
    }
    return amax;
  }

  void finish(SdpSolution<Scalar>& sol, const Blocks& X, const Blocks& Z, const Vec& y, double pobj, double dobj,
              double pinf, double dinf, SdpStatus s) const {
    sol.status = s;
    sol.X = X;
    sol.Z = Z;
    sol.y = Vec::Zero(P.num_constraints());
    for (std::size_t k = 0; k < active.size(); ++k) sol.y(active[k]) = y(k);
    sol.primal_obj = pobj;
    sol.dual_obj = dobj;
    sol.primal_infeas = pinf;
    sol.dual_infeas = dinf;
  }

  // Drops linearly dependent constraints; inconsistent ones make (P) infeasible.
  void presolve(SdpSolution<Scalar>& sol) {
    const int m = P.num_constraints();
    std::map<std::tuple<int, int, int>, int> pos;
    std::vector<std::vector<std::pair<int, std::complex<double>>>> rows(m);
    for (int i = 0; i < m; ++i)
      for (auto& e : P.A[i]) {
        auto key = std::make_tuple(e.block, e.row, e.col);
        auto it = pos.emplace(key, static_cast<int>(pos.size())).first;
        double w = e.row == e.col ? 1.0 : std::sqrt(2.0);
        rows[i].push_back({it->second, w * std::complex<double>(e.value)});
      }
    Mat Q = Mat::Zero(m, m);
    std::vector<std::map<int, std::complex<double>>> rm(m);
    for (int i = 0; i < m; ++i)
      for (auto& [k, v] : rows[i]) rm[i][k] += v;
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        const auto& small = rm[i].size() < rm[j].size() ? rm[i] : rm[j];
        const auto& big = rm[i].size() < rm[j].size() ? rm[j] : rm[i];
        double s = 0;
        for (auto& [k, v] : small) {
          auto it = big.find(k);
          if (it != big.end()) s += std::real(std::conj(v) * it->second);
        }
        Q(i, j) = Q(j, i) = s;
      }
    active.clear();
    if (m == 0) return;
    // normalize rows so the rank test is scale free
    Vec d = Q.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    for (int i = 0; i < m; ++i)
      if (Q(i, i) == 0) {
        if (std::abs(P.a(i)) > opt.feas_tol)
          throw SdpError(SdpStatus::PrimalInfeasible, "sdp_solve: zero constraint with nonzero right-hand side");
        sol.dropped.push_back(i);
      }
    Mat Qn = d.asDiagonal() * Q * d.asDiagonal();
    Eigen::ColPivHouseholderQR<Mat> qr(Qn);
    qr.setThreshold(opt.dependency_tol);
    int rank = static_cast<int>(qr.rank());
    std::vector<int> indep, dep;
    for (int k = 0; k < m; ++k) {
      int i = qr.colsPermutation().indices()(k);
      if (Q(i, i) == 0) continue;
      (k < rank ? indep : dep).push_back(i);
    }
    std::sort(indep.begin(), indep.end());
    if (!dep.empty()) {
      Mat QII(indep.size(), indep.size());
      Vec aI(indep.size());
      for (std::size_t r = 0; r < indep.size(); ++r) {
        aI(r) = P.a(indep[r]);
        for (std::size_t c = 0; c < indep.size(); ++c) QII(r, c) = Q(indep[r], indep[c]);
      }
      Eigen::LDLT<Mat> ldlt(QII);
      for (int i : dep) {
        Vec qd(indep.size());
        for (std::size_t r = 0; r < indep.size(); ++r) qd(r) = Q(indep[r], i);
        Vec coef = ldlt.solve(qd);
        if (std::abs(coef.dot(aI) - P.a(i)) > 1e-8 * (1 + std::abs(P.a(i))))
          throw SdpError(SdpStatus::PrimalInfeasible, "sdp_solve: inconsistent linear constraints");
        sol.dropped.push_back(i);
      }
    }
    active = indep;
  }
};

}  // namespace detail

template <typename Scalar>
SdpSolution<Scalar> sdp_solve(const SdpProblem<Scalar>& p, const SdpOptions& opt = {}) {
  detail::HkmSolver<Scalar> s(p, opt);
  return s.run();
}

}  // namespace qrex
