#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qrex/types.hpp"

namespace qrex {

enum class Basis : int { X = 0, P = 1 };

struct ScoreLabel {
  enum class Kind { SignedBin, Aggregate, Bot };
  Kind kind = Kind::Bot;
  Basis basis = Basis::X;
  int index = 0;  // signed bin index, nonzero for SignedBin
  std::string name;

  static ScoreLabel signed_bin(Basis b, int idx);
  static ScoreLabel aggregate(std::string name);
  static ScoreLabel bot();
  bool operator==(const ScoreLabel& o) const { return name == o.name && kind == o.kind; }
};

// "+2X", "-1P": the textual form used in fixtures and CSV headers.
std::string raw_score_name(Basis b, int idx);
std::pair<Basis, int> parse_raw_score(const std::string& s);

struct ScoreLayout {
  std::vector<ScoreLabel> categories;
  // keyed by (basis, signed index)
  std::map<std::pair<int, int>, int> aggregation;

  int category_of(Basis b, int idx) const;
  int size() const { return static_cast<int>(categories.size()); }
  void validate(int bins_x, int bins_p) const;

  // Every signed bin on its own, except +1X and +1P merged into "1-all".
  static ScoreLayout standard(int bins_x, int bins_p);
  // Every signed bin on its own.
  static ScoreLayout fine(int bins_x, int bins_p);
};

struct ProtocolParams {
  double gamma = 0.12;
  double amp = 0.0672;
  double eta = 0.691;
  int bins_x = 6;
  int bins_p = 2;
  double bin_half_range = 1.0064;
  double n_rounds = 3e10;
  ScoreLayout layout = ScoreLayout::standard(6, 2);

  void validate() const;
  int bins(Basis b) const { return b == Basis::X ? bins_x : bins_p; }
};

struct ScoreDistribution {
  std::vector<ScoreLabel> labels;
  Vec omega;
  Vec delta;
  // f(c) = count(c)/n over all rounds (test and generation)
  std::optional<Vec> freq;

  int size() const { return static_cast<int>(labels.size()); }
  int index_of(const std::string& name) const;
};

// Preparation labels: x = 0,1 displace along +X,-X and x = 2,3 along +P,-P.
Cplx state_amplitude(int x, double amp);
inline int basis_of_state(int x) { return x < 2 ? 0 : 1; }

Cplx coherent_overlap(Cplx alpha, Cplx beta);
Mat4c gram_matrix(const ProtocolParams& p);

double quadrature_mean(int x, double theta, const ProtocolParams& p);
double quadrature_pdf(int x, double theta, double q, const ProtocolParams& p);

// Bin edges in increasing order, including +-infinity at the ends.
Vec bin_edges(int nbins, double half_range);
int signed_index_of_bin(int bin, int nbins);
int bin_of_signed_index(int idx, int nbins);
Vec bin_probabilities(int x, double theta, const ProtocolParams& p, int nbins);
// Basis-y readout for state x: theta = 0 for y = 0, pi/2 for y = 1.
Vec bin_probabilities(int x, Basis y, const ProtocolParams& p);

ScoreDistribution honest_score_distribution(const ProtocolParams& p);

// Raw score before aggregation; throws DomainError for an inconsistent (x, y).
std::pair<Basis, int> raw_score(int x, int y, int b);
// Returns the category index, or -1 for a generation round.
int assign_score(int t, int x, int y, int b, const ScoreLayout& layout);

struct Verdict {
  bool accept = true;
  std::vector<int> violated;
};
Verdict accept_test(const ScoreDistribution& d, double gamma, double n_rounds);
// Count form of the same rule: count_c <= floor(n gamma (omega_c + delta_c)).
Verdict accept_counts(const std::vector<std::int64_t>& counts, const ScoreDistribution& d,
                      double gamma, double n_rounds);

}  // namespace qrex
