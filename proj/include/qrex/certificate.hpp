#pragma once

#include <string>
#include <vector>

#include "qrex/types.hpp"

namespace qrex {

// Affine bound P_guess(w) <= alpha + lambda . w, valid for every w the relaxation admits.
struct DualCertificate {
  double alpha = 1;
  Vec lambda;
  std::vector<std::string> labels;  // category names, aligned with lambda
  double validity_margin = 0;       // already folded into alpha
  int level = 0;
  std::string params_hash;
  // Dual matrix of the relaxation that produced lambda; not serialized.
  CMat witness;

  double evaluate(const Vec& w) const { return alpha + lambda.dot(w); }
  static DualCertificate trivial(const std::vector<std::string>& labels);
};

std::string certificate_to_json(const DualCertificate& c);
DualCertificate certificate_from_json(const std::string& text);

}  // namespace qrex
