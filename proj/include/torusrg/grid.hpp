#pragma once

#include <vector>

#include "torusrg/fourier_map.hpp"
#include "torusrg/potential.hpp"

namespace torusrg {

/// Pseudo-spectral evaluation of a map on the uniform N^d grid
/// theta_k = 2 pi k / N per axis, row-major over the axes.
/// Requires N >= 2 Q + 2 for an exact inverse (strict oversampling).
std::vector<Cd> grid_transform(const FourierMap& m, int N, int component);

/// All d components at once; result[c] is the grid of component c.
std::vector<std::vector<Cd>> grid_transform_all(const FourierMap& m, int N);

/// Recovers coefficients with |q|_inf <= bound from N^d samples.
/// tail_mass (optional) receives the l1 mass left beyond the bound.
FourierMap inverse_grid_transform(const std::vector<std::vector<Cd>>& samples,
                                  int dim, int N, int bound, bool real_valued,
                                  double* tail_mass = nullptr);

struct ComposeResult {
  FourierMap map;          // lambda dV(theta + X(theta)) truncated to out_bound
  double tail_mass = 0.0;  // measured l1 mass beyond out_bound
  bool tail_warning = false;
  int grid_size = 0;
};

/// d x d Hessian kernel lambda d^2 V(theta + X(theta)) as Fourier data:
/// block(p) holds the matrix coefficients at lattice point p.
struct HessianKernel {
  int dim = 0;
  std::map<Mode, std::array<Cd, kMaxDim * kMaxDim>> blocks;

  std::array<Cd, kMaxDim * kMaxDim> at(const Mode& p) const {
    auto it = blocks.find(p);
    if (it != blocks.end()) return it->second;
    std::array<Cd, kMaxDim * kMaxDim> z{};
    return z;
  }
  /// max column mass sum_p ||block(p)||_F (crude l1 operator scale)
  double l1_mass() const {
    double s = 0.0;
    for (const auto& [p, b] : blocks) {
      double f = 0.0;
      for (const auto& c : b) f += std::norm(c);
      s += std::sqrt(f);
    }
    return s;
  }
};

/// W0(X; theta) = lambda dV(theta + X(theta)), computed pseudo-spectrally:
/// X sampled on an oversampled grid, dV evaluated at the shifted points by
/// direct mode summation, then transformed back and truncated to out_bound.
/// X must be real-flagged. X identically zero short-circuits to lambda dV
/// bit-for-bit.
ComposeResult compose_w0(const Potential& pot, const FourierMap& X, double lambda,
                         int out_bound, double tail_tolerance = 1e-9,
                         int oversample = 4);

/// Same pass also returning the Hessian kernel lambda d^2 V(theta + X).
ComposeResult compose_w0_with_hessian(const Potential& pot, const FourierMap& X,
                                      double lambda, int out_bound,
                                      HessianKernel& hess,
                                      double tail_tolerance = 1e-9,
                                      int oversample = 4);

}  // namespace torusrg
