#include "qrex/model.hpp"

#include <cmath>
#include <limits>

#include "qrex/completeness.hpp"

namespace qrex {

ScoreLabel ScoreLabel::signed_bin(Basis b, int idx) {
  if (idx == 0) throw DomainError("signed bin index must be nonzero");
  ScoreLabel l;
  l.kind = Kind::SignedBin;
  l.basis = b;
  l.index = idx;
  l.name = raw_score_name(b, idx);
  return l;
}

ScoreLabel ScoreLabel::aggregate(std::string name) {
  ScoreLabel l;
  l.kind = Kind::Aggregate;
  l.name = std::move(name);
  return l;
}

ScoreLabel ScoreLabel::bot() {
  ScoreLabel l;
  l.name = "bot";
  return l;
}

std::string raw_score_name(Basis b, int idx) {
  return (idx > 0 ? "+" : "-") + std::to_string(std::abs(idx)) + (b == Basis::X ? "X" : "P");
}

std::pair<Basis, int> parse_raw_score(const std::string& s) {
  if (s.size() < 3 || (s[0] != '+' && s[0] != '-') || (s.back() != 'X' && s.back() != 'P'))
    throw ConfigError("bad raw score '" + s + "'");
  int mag = 0;
  try {
    mag = std::stoi(s.substr(1, s.size() - 2));
  } catch (...) {
    throw ConfigError("bad raw score '" + s + "'");
  }
  if (mag <= 0) throw ConfigError("bad raw score '" + s + "'");
  return {s.back() == 'X' ? Basis::X : Basis::P, s[0] == '+' ? mag : -mag};
}

int ScoreLayout::category_of(Basis b, int idx) const {
  auto it = aggregation.find({static_cast<int>(b), idx});
  if (it == aggregation.end()) throw DomainError("raw score " + raw_score_name(b, idx) + " not in layout");
  return it->second;
}

void ScoreLayout::validate(int bins_x, int bins_p) const {
  std::vector<int> hits(categories.size(), 0);
  std::size_t expected = 0;
  for (int bi = 0; bi < 2; ++bi) {
    int m = (bi == 0 ? bins_x : bins_p) / 2;
    for (int s = -m; s <= m; ++s) {
      if (s == 0) continue;
      ++expected;
      auto it = aggregation.find({bi, s});
      if (it == aggregation.end())
        throw ConfigError("layout misses raw score " + raw_score_name(Basis(bi), s));
      if (it->second < 0 || it->second >= size()) throw ConfigError("layout maps to a bad category");
      hits[it->second]++;
    }
  }
  if (aggregation.size() != expected) throw ConfigError("layout maps raw scores outside the bin range");
  for (std::size_t c = 0; c < hits.size(); ++c)
    if (hits[c] == 0) throw ConfigError("layout category '" + categories[c].name + "' is empty");
}

ScoreLayout ScoreLayout::standard(int bins_x, int bins_p) {
  ScoreLayout L;
  int mx = bins_x / 2, mp = bins_p / 2;
  auto add = [&](Basis b, int s) {
    L.aggregation[{static_cast<int>(b), s}] = L.size();
    L.categories.push_back(ScoreLabel::signed_bin(b, s));
  };
  for (int s = -mx; s <= -1; ++s) add(Basis::X, s);
  for (int s = -mp; s <= -1; ++s) add(Basis::P, s);
  for (int s = mx; s >= 2; --s) add(Basis::X, s);
  for (int s = mp; s >= 2; --s) add(Basis::P, s);
  L.aggregation[{0, 1}] = L.size();
  L.aggregation[{1, 1}] = L.size();
  L.categories.push_back(ScoreLabel::aggregate("1-all"));
  return L;
}

ScoreLayout ScoreLayout::fine(int bins_x, int bins_p) {
  ScoreLayout L;
  for (int bi = 0; bi < 2; ++bi) {
    int m = (bi == 0 ? bins_x : bins_p) / 2;
    for (int s = -m; s <= m; ++s) {
      if (s == 0) continue;
      L.aggregation[{bi, s}] = L.size();
      L.categories.push_back(ScoreLabel::signed_bin(Basis(bi), s));
    }
  }
  return L;
}

void ProtocolParams::validate() const {
  if (!(gamma > 0 && gamma < 1)) throw ConfigError("gamma must lie in (0,1)");
  if (!(eta >= 0 && eta <= 1)) throw ConfigError("eta must lie in [0,1]");
  if (!(amp >= 0)) throw ConfigError("amp must be >= 0");
  if (bins_x < 2 || bins_x % 2 || bins_p < 2 || bins_p % 2) throw ConfigError("bin counts must be even and >= 2");
  if (!(bin_half_range > 0)) throw ConfigError("bin_half_range must be > 0");
  if (!(n_rounds >= 1)) throw ConfigError("n_rounds must be >= 1");
  layout.validate(bins_x, bins_p);
}

int ScoreDistribution::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (labels[i].name == name) return i;
  return -1;
}

Cplx state_amplitude(int x, double amp) {
  static const Cplx phase[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  return amp * phase[x];
}

Cplx coherent_overlap(Cplx a, Cplx b) {
  return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

Mat4c gram_matrix(const ProtocolParams& p) {
  Mat4c G;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) G(i, j) = coherent_overlap(state_amplitude(i, p.amp), state_amplitude(j, p.amp));
  return G;
}

double quadrature_mean(int x, double theta, const ProtocolParams& p) {
  return 2.0 * std::sqrt(p.eta) * std::real(state_amplitude(x, p.amp) * std::exp(Cplx(0, -theta)));
}

double quadrature_pdf(int x, double theta, double q, const ProtocolParams& p) {
  double d = q - quadrature_mean(x, theta, p);
  return std::exp(-0.5 * d * d) / std::sqrt(2 * M_PI);
}

Vec bin_edges(int nbins, double L) {
  const double inf = std::numeric_limits<double>::infinity();
  Vec e(nbins + 1);
  e(0) = -inf;
  e(nbins) = inf;
  if (nbins == 2) {
    e(1) = 0;
    return e;
  }
  for (int i = 1; i < nbins; ++i) e(i) = -L + 2 * L * (i - 1) / (nbins - 2);
  return e;
}

int signed_index_of_bin(int bin, int nbins) {
  int m = nbins / 2;
  return bin < m ? bin - m : bin - m + 1;
}

int bin_of_signed_index(int idx, int nbins) {
  int m = nbins / 2;
  return idx < 0 ? idx + m : idx + m - 1;
}

// Mass of N(mu,1) on (lo, hi), using the tail that keeps precision.
static double interval_mass(double lo, double hi, double mu) {
  double a = lo - mu, b = hi - mu;
  if (a >= 0) return normal_cdf(-a) - normal_cdf(-b);
  return normal_cdf(b) - normal_cdf(a);
}

Vec bin_probabilities(int x, double theta, const ProtocolParams& p, int nbins) {
  Vec e = bin_edges(nbins, p.bin_half_range);
  double mu = quadrature_mean(x, theta, p);
  Vec pr(nbins);
  for (int i = 0; i < nbins; ++i) pr(i) = interval_mass(e(i), e(i + 1), mu);
  return pr;
}

Vec bin_probabilities(int x, Basis y, const ProtocolParams& p) {
  return bin_probabilities(x, y == Basis::X ? 0.0 : M_PI / 2, p, p.bins(y));
}

ScoreDistribution honest_score_distribution(const ProtocolParams& p) {
  ScoreDistribution d;
  d.labels = p.layout.categories;
  d.omega = Vec::Zero(p.layout.size());
  d.delta = Vec::Zero(p.layout.size());
  for (int x = 0; x < 4; ++x) {
    Basis y = Basis(basis_of_state(x));
    Vec pr = bin_probabilities(x, y, p);
    for (int i = 0; i < pr.size(); ++i) {
      int c = assign_score(1, x, static_cast<int>(y), signed_index_of_bin(i, pr.size()), p.layout);
      d.omega(c) += 0.25 * pr(i);
    }
  }
  return d;
}

std::pair<Basis, int> raw_score(int x, int y, int b) {
  if (x < 0 || x > 3 || (y != 0 && y != 1)) throw DomainError("input out of range");
  if (basis_of_state(x) != y) throw DomainError("Y inconsistent with X on a test round");
  if (b == 0) throw DomainError("signed bin index must be nonzero");
  int sign = (x == 0 || x == 2) ? 1 : -1;
  return {Basis(y), sign * b};
}

int assign_score(int t, int x, int y, int b, const ScoreLayout& layout) {
  if (t == 0) return -1;
  auto [basis, s] = raw_score(x, y, b);
  return layout.category_of(basis, s);
}

Verdict accept_counts(const std::vector<std::int64_t>& counts, const ScoreDistribution& d, double gamma,
                      double n) {
  Verdict v;
  for (int c = 0; c < d.size(); ++c) {
    double thr = std::floor(n * gamma * (d.omega(c) + d.delta(c)));
    if (static_cast<double>(counts[c]) > thr) {
      v.accept = false;
      v.violated.push_back(c);
    }
  }
  return v;
}

Verdict accept_test(const ScoreDistribution& d, double gamma, double n) {
  if (!d.freq) throw DomainError("accept_test needs observed frequencies");
  Verdict v;
  for (int c = 0; c < d.size(); ++c) {
    double thr = std::floor(n * gamma * (d.omega(c) + d.delta(c)));
    double cnt = (*d.freq)(c) * n;
    // f = count/n round-trips to count up to a few ulps
    if (cnt > thr * (1 + 1e-14) + 1e-9) {
      v.accept = false;
      v.violated.push_back(c);
    }
  }
  return v;
}

}  // namespace qrex
