#pragma once

#include <vector>

#include "torusrg/potential.hpp"

namespace torusrg {

struct LadderConstants {
  double gamma_j = 0.0;      // M 8^j
  double alpha_j = 0.0;      // 1/(M 8^{j-2})
  double alpha_bar_j = 0.0;  // 1/(M 8^{j+1})
};

/// gamma_j = M 8^j, alpha_j = 1/gamma_{j-2}, alpha_bar_j = 1/gamma_{j+1}.
LadderConstants ladder_constants(int M, int j);

/// The outer ladder: constants and sharp truncations V^j of the potential.
class ApproximationLadder {
 public:
  ApproximationLadder(Potential pot, int M, int jmax);

  int M() const { return M_; }
  int jmax() const { return jmax_; }
  const Potential& potential() const { return pot_; }
  LadderConstants constants(int j) const { return ladder_constants(M_, j); }

  /// V^j for 0 <= j <= jmax; V^{-1} is the zero potential.
  const Potential& truncation(int j) const;

  /// Smallest j with gamma_j >= max stored |q|_inf (V^j = V from there on).
  int covering_stage() const;

 private:
  Potential pot_;
  int M_;
  int jmax_;
  Potential zero_;
  std::vector<Potential> trunc_;
};

}  // namespace torusrg
