#include "qrex/moment.hpp"

#include <cmath>
#include <map>

namespace qrex {

double ScoreConstraintCoefficients::weight(int c, int signed_b, int x, int y) const {
  if (x < 0 || x > 3 || y < 0 || y > 1) return 0;
  if (basis_of_state(x) != y) return 0;
  int m = nb[y] / 2;
  if (signed_b == 0 || std::abs(signed_b) > m) return 0;
  return cat[x][y][bin_of_signed_index(signed_b, nb[y])] == c ? 0.25 : 0.0;
}

ScoreConstraintCoefficients build_kappa(const ProtocolParams& p) {
  p.layout.validate(p.bins_x, p.bins_p);
  ScoreConstraintCoefficients k;
  k.categories = p.layout.size();
  k.nb[0] = p.bins_x;
  k.nb[1] = p.bins_p;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 2; ++y) {
      k.cat[x][y].assign(k.nb[y], -1);
      if (basis_of_state(x) != y) continue;
      for (int bin = 0; bin < k.nb[y]; ++bin)
        k.cat[x][y][bin] = assign_score(1, x, y, signed_index_of_bin(bin, k.nb[y]), p.layout);
    }
  return k;
}

bool MomentKey::operator<(const MomentKey& o) const {
  if (k != o.k) return k < o.k;
  if (l != o.l) return l < o.l;
  if (eve != o.eve) return eve < o.eve;
  return bob < o.bob;
}

MomentKey MomentKey::dagger() const { return {l, k, std::vector<int>(bob.rbegin(), bob.rend()), eve}; }

int MomentProblem::key_index(const MomentKey& key) const {
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == key) return static_cast<int>(i);
  return -1;
}

CMat MomentProblem::moment_matrix(const Vec& y) const {
  CMat M = CMat::Zero(dim, dim);
  auto put = [&](const SdpEntry<Cplx>& e, Cplx s) {
    M(e.row, e.col) += s * e.value;
    if (e.row != e.col) M(e.col, e.row) += s * std::conj(e.value);
  };
  for (auto& e : F0) put(e, 1.0);
  for (int j = 0; j < num_vars(); ++j)
    for (auto& e : F[j]) put(e, y(j));
  return M;
}

namespace {

struct Builder {
  MomentProblem& P;
  std::map<MomentKey, int> rep;
  std::vector<int> re_var, im_var;
  int e00 = -1;

  explicit Builder(MomentProblem& p) : P(p) {}

  int new_var(int key, bool imag) {
    P.vars.push_back({key, imag});
    P.F.emplace_back();
    return P.num_vars() - 1;
  }

  int eve_var() {
    if (e00 < 0) e00 = new_var(-1, false);
    return e00;
  }

  // (representative index, conjugated)
  std::pair<int, bool> lookup(const MomentKey& key, bool create) {
    auto it = rep.find(key);
    if (it != rep.end()) return {it->second, false};
    it = rep.find(key.dagger());
    if (it != rep.end()) return {it->second, true};
    if (!create) throw NumericalError("moment key outside the relaxation");
    int idx = static_cast<int>(P.keys.size());
    P.keys.push_back(key);
    rep[key] = idx;
    re_var.push_back(new_var(idx, false));
    im_var.push_back(key.self_adjoint() ? -1 : new_var(idx, true));
    return {idx, false};
  }

  // Canonical product u^dagger v; false when it vanishes.
  bool product(const Word& u, const Word& v, std::vector<int>& bob, bool& eve) const {
    bob.clear();
    if (u.bob >= 0) bob.push_back(u.bob);
    if (v.bob >= 0) bob.push_back(v.bob);
    if (bob.size() == 2 && P.letters[bob[0]].first == P.letters[bob[1]].first) {
      if (bob[0] != bob[1]) return false;
      bob.pop_back();
    }
    eve = u.eve || v.eve;
    return true;
  }

  // Adds the moment <e_k| w |e_l> times coef into (row, const) as a real linear form.
  void add_expectation(int k, int l, const std::vector<int>& bob, bool eve, Cplx coef, Vec& row, double& cst) {
    if (bob.empty()) {
      if (k != l) return;
      if (!eve)
        cst += coef.real();
      else
        row(eve_var()) += coef.real();
      return;
    }
    auto [idx, conj] = lookup({k, l, bob, eve}, false);
    row(re_var[idx]) += coef.real();
    if (im_var[idx] >= 0) row(im_var[idx]) += (conj ? 1.0 : -1.0) * coef.imag();
  }

  // <psi_x (x) chi| w |psi_x (x) chi> as a real linear form
  void add_state_expectation(int x, const std::vector<int>& bob, bool eve, double w, Vec& row, double& cst) {
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) {
        Cplx coef = w * std::conj(P.S(k, x)) * P.S(l, x);
        if (std::abs(coef) == 0) continue;
        add_expectation(k, l, bob, eve, coef, row, cst);
      }
  }
};

}  // namespace

MomentProblem build_moment_problem(const ProtocolParams& p, int level, int adversary_outcomes) {
  p.validate();
  if (level != 1 && level != 2) throw DomainError("build_moment_problem: unsupported level");
  if (adversary_outcomes != 2) throw DomainError("build_moment_problem: adversary must have 2 outcomes");
  MomentProblem P;
  P.params = p;
  P.level = level;
  P.G = gram_matrix(p);
  Eigen::SelfAdjointEigenSolver<Mat4c> es(P.G);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  P.S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  P.kappa = build_kappa(p);

  const int nb[2] = {p.bins_x, p.bins_p};
  for (int y = 0; y < 2; ++y)
    for (int b = 0; b + 1 < nb[y]; ++b) P.letters.push_back({y, b});
  const int L = static_cast<int>(P.letters.size());
  P.words.push_back({-1, false});
  for (int i = 0; i < L; ++i) P.words.push_back({i, false});
  P.words.push_back({-1, true});
  if (level == 2)
    for (int i = 0; i < L; ++i) P.words.push_back({i, true});
  P.full_monomials = 1 + nb[0] + nb[1] + adversary_outcomes + (level == 2 ? (nb[0] + nb[1]) * adversary_outcomes : 0);
  const int W = static_cast<int>(P.words.size());
  P.dim = 4 * W;

  Builder B(P);
  std::vector<int> bob;
  bool eve;
  for (int p1 = 0; p1 < P.dim; ++p1)
    for (int p2 = p1; p2 < P.dim; ++p2) {
      int k = p1 / W, i = p1 % W, l = p2 / W, j = p2 % W;
      if (!B.product(P.words[i], P.words[j], bob, eve)) continue;
      if (bob.empty()) {
        if (k != l) continue;
        if (!eve)
          SdpProblem<Cplx>::add_entry(P.F0, 0, p1, p2, 1.0);
        else
          SdpProblem<Cplx>::add_entry(P.F[B.eve_var()], 0, p1, p2, 1.0);
        continue;
      }
      auto [idx, conj] = B.lookup({k, l, bob, eve}, true);
      SdpProblem<Cplx>::add_entry(P.F[B.re_var[idx]], 0, p1, p2, 1.0);
      if (B.im_var[idx] >= 0) SdpProblem<Cplx>::add_entry(P.F[B.im_var[idx]], 0, p1, p2, Cplx(0, conj ? -1 : 1));
    }

  const int nv = P.num_vars();
  auto letter_of = [&](int y, int bin) {
    for (int i = 0; i < L; ++i)
      if (P.letters[i] == std::make_pair(y, bin)) return i;
    return -1;
  };

  // score rows
  const int C = p.layout.size();
  P.A = Mat::Zero(C, nv);
  P.a0 = Vec::Zero(C);
  for (int c = 0; c < C; ++c) {
    Vec row = Vec::Zero(nv);
    double cst = 0;
    for (int x = 0; x < 4; ++x) {
      int y = basis_of_state(x);
      for (int bin = 0; bin < nb[y]; ++bin) {
        if (P.kappa.cat[x][y][bin] != c) continue;
        if (bin + 1 < nb[y]) {
          B.add_state_expectation(x, {letter_of(y, bin)}, false, 0.25, row, cst);
        } else {
          cst += 0.25;
          for (int bb = 0; bb + 1 < nb[y]; ++bb) B.add_state_expectation(x, {letter_of(y, bb)}, false, -0.25, row, cst);
        }
      }
    }
    P.A.row(c) = row.transpose();
    P.a0(c) = cst;
  }

  // P_guess = <M- E0> + <(1 - M-)(1 - E0)> at x = 0, M- the negative P bins
  Vec obj = Vec::Zero(nv);
  double cst = 1;
  for (int bin = 0; bin < nb[1] / 2; ++bin) {
    int i = letter_of(1, bin);
    B.add_state_expectation(0, {i}, false, -1.0, obj, cst);
    B.add_state_expectation(0, {i}, true, 2.0, obj, cst);
  }
  B.add_state_expectation(0, {}, true, -1.0, obj, cst);
  P.c0 = cst;
  P.c = obj;
  return P;
}

}  // namespace qrex
