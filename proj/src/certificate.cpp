#include "qrex/certificate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <json.hpp>

#include "qrex/moment.hpp"
#include "qrex/strategy.hpp"

namespace qrex {

using nlohmann::ordered_json;

DualCertificate DualCertificate::trivial(const std::vector<std::string>& labels) {
  DualCertificate c;
  c.alpha = 1;
  c.lambda = Vec::Zero(static_cast<int>(labels.size()));
  c.labels = labels;
  return c;
}

std::string certificate_to_json(const DualCertificate& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["lambda"] = std::vector<double>(c.lambda.data(), c.lambda.data() + c.lambda.size());
  j["labels"] = c.labels;
  j["validity_margin"] = c.validity_margin;
  j["level"] = c.level;
  j["params_hash"] = c.params_hash;
  return j.dump(2);
}

DualCertificate certificate_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  DualCertificate c;
  try {
    for (auto& [k, v] : j.items())
      if (k != "alpha" && k != "lambda" && k != "labels" && k != "validity_margin" && k != "level" &&
          k != "params_hash")
        throw ConfigError("certificate: unknown key " + k);
    c.alpha = j.at("alpha").get<double>();
    auto l = j.at("lambda").get<std::vector<double>>();
    c.lambda = Eigen::Map<Vec>(l.data(), static_cast<int>(l.size()));
    c.labels = j.at("labels").get<std::vector<std::string>>();
    c.validity_margin = j.value("validity_margin", 0.0);
    c.level = j.value("level", 0);
    c.params_hash = j.value("params_hash", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  if (c.labels.size() != static_cast<std::size_t>(c.lambda.size()))
    throw ConfigError("certificate: lambda and labels differ in length");
  if (!std::isfinite(c.alpha) || !c.lambda.allFinite()) throw ConfigError("certificate: non-finite entries");
  return c;
}

std::string params_hash(const ProtocolParams& p, int level) {
  ordered_json j;
  j["amp"] = p.amp;
  j["eta"] = p.eta;
  j["bins_x"] = p.bins_x;
  j["bins_p"] = p.bins_p;
  j["bin_half_range"] = p.bin_half_range;
  std::vector<std::string> names;
  for (auto& c : p.layout.categories) names.push_back(c.name);
  j["layout"] = names;
  ordered_json agg = ordered_json::array();
  for (auto& [k, v] : p.layout.aggregation) agg.push_back({k.first, k.second, v});
  j["aggregation"] = agg;
  j["level"] = level;
  std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

typedef boost::multiprecision::cpp_bin_float_50 mp;
typedef Eigen::Matrix<mp, Eigen::Dynamic, Eigen::Dynamic> MatMp;

std::vector<std::string> label_names(const MomentProblem& P) {
  std::vector<std::string> out;
  for (auto& c : P.params.layout.categories) out.push_back(c.name);
  return out;
}

CMat dense(const std::vector<SdpEntry<Cplx>>& F, int n) {
  CMat M = CMat::Zero(n, n);
  for (auto& e : F) {
    M(e.row, e.col) += e.value;
    if (e.row != e.col) M(e.col, e.row) += std::conj(e.value);
  }
  return M;
}

double tr_entries(const std::vector<SdpEntry<Cplx>>& F, const CMat& W) {
  double s = 0;
  for (auto& e : F) {
    Cplx w = W(e.col, e.row);
    s += e.row == e.col ? e.value.real() * w.real() : 2 * (e.value * w).real();
  }
  return s;
}

mp tr_entries_mp(const std::vector<SdpEntry<Cplx>>& F, const MatMp& Wre, const MatMp& Wim) {
  mp s = 0;
  for (auto& e : F) {
    mp vr = e.value.real(), vi = e.value.imag();
    if (e.row == e.col)
      s += vr * Wre(e.row, e.row);
    else  // 2 Re(v * W(c, r)), W(c, r) = conj W(r, c)
      s += 2 * (vr * Wre(e.row, e.col) + vi * Wim(e.row, e.col));
  }
  return s;
}

// Solves the Lagrangian relaxation max P - lambda . (A y + a0) for its dual matrix.
CMat lagrangian_witness(const MomentProblem& P, const Vec& lambda, const SdpOptions& opt) {
  SdpProblem<Cplx> sp;
  sp.blocks = {P.dim};
  sp.C = {-dense(P.F0, P.dim)};
  sp.A = P.F;
  Vec cl = P.c - P.A.transpose() * lambda;
  sp.a = -cl;
  auto sol = sdp_solve(sp, opt);
  if (sol.status != SdpStatus::Optimal) throw SdpError(sol.status, "certificate: Lagrangian relaxation failed");
  return sol.X[0];
}

}  // namespace

DualCertificate validate_certificate(const DualCertificate& cert, const MomentProblem& P, int trials,
                                     double residual_cap) {
  const int C = P.params.layout.size(), nv = P.num_vars(), n = P.dim;
  if (cert.lambda.size() != C) throw DomainError("validate_certificate: lambda length differs from the layout");
  CMat W = cert.witness;
  if (W.rows() != n || W.cols() != n) W = lagrangian_witness(P, cert.lambda, SdpOptions{});
  W = (0.5 * (W + W.adjoint())).eval();

  // Shift W onto the PSD cone, verified by a 50-digit Cholesky of its real embedding.
  Eigen::SelfAdjointEigenSolver<CMat> es(W, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  double tau = lmin < 0 ? -lmin * (1 + 1e-6) : 0.0;
  double floor_tau = 1e-30 * (1 + W.cwiseAbs().maxCoeff());
  MatMp Wre(n, n), Wim(n, n);
  for (int attempt = 0;; ++attempt) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Wre(i, j) = mp(W(i, j).real());
        Wim(i, j) = mp(W(i, j).imag());
      }
    for (int i = 0; i < n; ++i) Wre(i, i) += mp(tau);
    MatMp R(2 * n, 2 * n);
    R << Wre, -Wim, Wim, Wre;
    Eigen::LLT<MatMp> llt(R);
    if (llt.info() == Eigen::Success) break;
    if (attempt > 60) throw NumericalError("validate_certificate: witness cannot be made positive semidefinite");
    tau = std::max(2 * tau, floor_tau);
  }

  mp g0 = tr_entries_mp(P.F0, Wre, Wim);
  mp alpha = mp(P.c0) + g0;
  for (int c = 0; c < C; ++c) alpha -= mp(cert.lambda(c)) * mp(P.a0(c));
  for (int j = 0; j < nv; ++j) {
    mp r = mp(P.c(j)) + tr_entries_mp(P.F[j], Wre, Wim);
    for (int c = 0; c < C; ++c) r -= mp(cert.lambda(c)) * mp(P.A(c, j));
    alpha += abs(r);  // moments are bounded by 1 in modulus
  }
  double needed = static_cast<double>(alpha);
  if (mp(needed) < alpha) needed = std::nextafter(needed, std::numeric_limits<double>::infinity());

  DualCertificate out = cert;
  out.witness = W;
  out.level = P.level;
  out.params_hash = params_hash(P.params, P.level);
  if (out.labels.empty()) out.labels = label_names(P);
  if (needed > cert.alpha) {
    double repair = needed - cert.alpha;
    if (repair > residual_cap)
      throw NumericalError("validate_certificate: residual " + std::to_string(repair) + " exceeds cap");
    out.alpha = needed;
    out.validity_margin = cert.validity_margin + repair;
  }

  if (trials > 0) {
    std::mt19937_64 rng(0x5eed);
    for (int t = 0; t < trials; ++t) {
      ExplicitStrategy s = random_strategy(P, 2, 2, rng);
      optimize_eve(s, P);
      StrategyValue v = evaluate(s, P);
      if (v.pguess > out.evaluate(v.omega) + 1e-9)
        throw NumericalError("validate_certificate: explicit strategy violates the bound");
    }
  }
  return out;
}

PguessResult solve_pguess(const Vec& omega, const MomentProblem& P, const PguessOptions& opt) {
  const int C = P.params.layout.size(), nv = P.num_vars(), n = P.dim;
  if (omega.size() != C) throw DomainError("solve_pguess: omega length differs from the layout");
  if (!omega.allFinite()) throw DomainError("solve_pguess: non-finite omega");
  PguessResult res;
  CMat F0d = dense(P.F0, n);
  Vec lambda = Vec::Zero(C);
  CMat W;
  SdpSolution<Cplx> sol;

  if (!opt.use_scores) {
    SdpProblem<Cplx> sp;
    sp.blocks = {n};
    sp.C = {-F0d};
    sp.A = P.F;
    sp.a = -P.c;
    sol = sdp_solve(sp, opt.sdp);
    W = sol.X[0];
    res.primal_value = P.c0 - sol.dual_obj;
  } else if (opt.halfwidth.size()) {
    if (opt.halfwidth.size() != C || (opt.halfwidth.array() < 0).any())
      throw DomainError("solve_pguess: bad halfwidth vector");
    // slack blocks: w_c + h_c - (A y + a0)_c >= 0 and (A y + a0)_c - w_c + h_c >= 0
    SdpProblem<Cplx> sp;
    sp.blocks = {n};
    for (int c = 0; c < 2 * C; ++c) sp.blocks.push_back(1);
    CMat Cm = -F0d;
    sp.C = {Cm};
    for (int c = 0; c < C; ++c) {
      sp.C.push_back(CMat::Constant(1, 1, -(omega(c) + opt.halfwidth(c) - P.a0(c))));
      sp.C.push_back(CMat::Constant(1, 1, -(P.a0(c) - omega(c) + opt.halfwidth(c))));
    }
    sp.A = P.F;
    for (int j = 0; j < nv; ++j)
      for (int c = 0; c < C; ++c) {
        if (P.A(c, j) == 0) continue;
        sp.A[j].push_back({1 + 2 * c, 0, 0, Cplx(-P.A(c, j))});
        sp.A[j].push_back({2 + 2 * c, 0, 0, Cplx(P.A(c, j))});
      }
    sp.a = -P.c;
    sol = sdp_solve(sp, opt.sdp);
    W = sol.X[0];
    for (int c = 0; c < C; ++c) lambda(c) = sol.X[1 + 2 * c](0, 0).real() - sol.X[2 + 2 * c](0, 0).real();
    res.primal_value = P.c0 - sol.dual_obj;
  } else {
    // Independent score rows, kept greedily in layout order.
    std::vector<int> I, dep;
    Mat basis(0, nv);
    for (int c = 0; c < C; ++c) {
      Vec v = P.A.row(c).transpose();
      Vec r = v;
      for (int k = 0; k < basis.rows(); ++k) r -= basis.row(k).dot(r) * basis.row(k).transpose();
      if (r.norm() > 1e-9 * std::max(1.0, v.norm())) {
        basis.conservativeResize(basis.rows() + 1, Eigen::NoChange);
        basis.row(basis.rows() - 1) = r.normalized().transpose();
        I.push_back(c);
      } else {
        dep.push_back(c);
      }
    }
    const int r = static_cast<int>(I.size());
    Mat AI(r, nv);
    Vec bI(r);
    for (int k = 0; k < r; ++k) {
      AI.row(k) = P.A.row(I[k]);
      bI(k) = omega(I[k]) - P.a0(I[k]);
    }
    if (!dep.empty()) {
      Eigen::ColPivHouseholderQR<Mat> qt(AI.transpose());
      for (int c : dep) {
        Vec coef = qt.solve(Vec(P.A.row(c).transpose()));
        double lhs = omega(c) - P.a0(c), rhs = coef.dot(bI);
        if (std::abs(lhs - rhs) > 1e-8 * (1 + std::abs(lhs)))
          throw DomainError("solve_pguess: omega violates a linear identity of the score layout");
      }
    }
    Eigen::ColPivHouseholderQR<Mat> qr(AI);
    std::vector<char> is_basic(nv, 0);
    std::vector<int> Bc, Nc;
    for (int k = 0; k < r; ++k) {
      Bc.push_back(qr.colsPermutation().indices()(k));
      is_basic[Bc.back()] = 1;
    }
    for (int j = 0; j < nv; ++j)
      if (!is_basic[j]) Nc.push_back(j);
    Mat AIB(r, r), AIN(r, static_cast<int>(Nc.size()));
    for (int k = 0; k < r; ++k) AIB.col(k) = AI.col(Bc[k]);
    for (std::size_t k = 0; k < Nc.size(); ++k) AIN.col(k) = AI.col(Nc[k]);
    Eigen::PartialPivLU<Mat> lu(AIB);
    Mat T = lu.solve(AIN);
    Vec t = lu.solve(bI);

    // y_B = t - T y_N
    std::vector<SdpEntry<Cplx>> F0r = P.F0;
    double c0r = P.c0;
    for (int k = 0; k < r; ++k) {
      for (auto& e : P.F[Bc[k]]) SdpProblem<Cplx>::add_entry(F0r, 0, e.row, e.col, t(k) * e.value);
      c0r += P.c(Bc[k]) * t(k);
    }
    SdpProblem<Cplx> sp;
    sp.blocks = {n};
    sp.C = {-dense(F0r, n)};
    sp.a = Vec(Nc.size());
    for (std::size_t q = 0; q < Nc.size(); ++q) {
      std::vector<SdpEntry<Cplx>> Fq = P.F[Nc[q]];
      double cq = P.c(Nc[q]);
      for (int k = 0; k < r; ++k) {
        if (T(k, q) == 0) continue;
        for (auto& e : P.F[Bc[k]]) SdpProblem<Cplx>::add_entry(Fq, 0, e.row, e.col, -T(k, q) * e.value);
        cq -= P.c(Bc[k]) * T(k, q);
      }
      sp.A.push_back(std::move(Fq));
      sp.a(q) = -cq;
    }
    sol = sdp_solve(sp, opt.sdp);
    W = sol.X[0];
    res.primal_value = c0r - sol.dual_obj;
    // stationarity on the basic columns fixes lambda on the kept rows
    Vec gB(r);
    for (int k = 0; k < r; ++k) gB(k) = P.c(Bc[k]) + tr_entries(P.F[Bc[k]], W);
    Vec lI = lu.transpose().solve(gB);
    for (int k = 0; k < r; ++k) lambda(I[k]) = lI(k);
  }

  res.status = sol.status;
  res.iterations = sol.iterations;
  if (sol.status != SdpStatus::Optimal) throw SdpError(sol.status, std::string("solve_pguess: ") + to_string(sol.status));

  DualCertificate cert;
  cert.lambda = lambda;
  cert.labels = label_names(P);
  cert.witness = W;
  // naive alpha from the witness, before the residual repair
  double naive = P.c0 + tr_entries(P.F0, W) - lambda.dot(P.a0);
  cert.alpha = naive;
  res.cert = validate_certificate(cert, P, 0, opt.residual_cap);
  res.cert.validity_margin = std::max(0.0, res.cert.alpha - naive);
  double bound = res.cert.evaluate(omega);
  if (opt.use_scores && opt.halfwidth.size()) bound += res.cert.lambda.cwiseAbs().dot(opt.halfwidth);
  res.bound = std::min(1.0, bound);
  return res;
}

}  // namespace qrex
