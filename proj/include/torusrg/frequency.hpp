#pragma once

#include <string>
#include <vector>

#include "torusrg/fourier_map.hpp"

namespace torusrg {

class ScaleDecomposition;

/// Frequency vector with a windowed Diophantine certificate:
/// |omega.q| >= gamma |q|_1^{-nu} for all 0 < |q|_1 <= Qmax.
struct DiophantineFrequency {
  std::vector<double> omega;
  double gamma = 0.0;
  double nu = 0.0;
  int Qmax = 0;
  Mode argmin{0, 0, 0, 0};  // lattice point attaining the certified gamma

  int dim() const { return static_cast<int>(omega.size()); }
};

double small_divisor(std::span<const double> omega, const Mode& q);

/// gamma = min over 0 < |q|_1 <= Qmax of |omega.q| |q|_1^nu, by exhaustive
/// scan. Throws ResonantFrequencyError when an exact zero divisor is found.
DiophantineFrequency certify(std::span<const double> omega, double nu, int Qmax);

/// "golden" -> (1, (1+sqrt 5)/2); "cubic" -> (1, rho, rho^2) with rho the real
/// root of x^3 - x - 1; otherwise a comma-separated vector literal.
std::vector<double> parse_frequency_spec(const std::string& spec);

/// Scale indices n with chi_n(omega.q) != 0; always one or two adjacent ones.
std::vector<int> scale_set(const DiophantineFrequency& freq, const Mode& q,
                           const ScaleDecomposition& scales);

}  // namespace torusrg
