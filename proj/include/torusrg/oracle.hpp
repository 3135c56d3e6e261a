#pragma once

#include <vector>

#include "torusrg/frequency.hpp"
#include "torusrg/potential.hpp"

namespace torusrg {
namespace oracle {

// Everything in this namespace is deliberately independent of the grid/FFT
// composition path: compositions are evaluated by direct mode summation on a
// plain quadrature grid and transformed back by direct DFT sums. Only the
// FourierMap container is shared with the main solver.

/// lambda dV(theta + X(theta)) on the |q|_inf <= bound window, direct sums only.
FourierMap w0_direct(const Potential& pot, const FourierMap& X, double lambda,
                     int bound);

/// || D^2 X + lambda dV(. + X) ||_l1 using the direct evaluator.
double equation_residual_direct(const FourierMap& X, const Potential& pot,
                                double lambda, const DiophantineFrequency& freq);

struct OracleSolution {
  FourierMap X;
  double residual = 0.0;        // fixed-point residual ||x - G0 P W0(x)||_l1
  double mean_defect = 0.0;     // |w0(x; 0)|, checked a posteriori
  int newton_iters = 0;
  bool converged = false;
  std::vector<FourierMap> lindstedt_orders;
};

class DivergedOracle : public std::runtime_error {
 public:
  explicit DivergedOracle(const std::string& msg) : std::runtime_error(msg) {}
};

/// Solves x = G0 P W0(x) on the full truncated lattice by undamped-then-damped
/// Newton. Throws DivergedOracle when the iteration blows up.
OracleSolution newton_solve(const Potential& pot, const DiophantineFrequency& freq,
                            double lambda, int lattice_bound,
                            const FourierMap* x_init = nullptr,
                            double tol = 1e-13, int max_iters = 60);

/// Lindstedt series terms X_1..X_K on the window: X_1 from D^2 X_1 = -P dV,
/// higher orders by matching powers of lambda in dV(theta + sum lambda^k X_k).
/// Direct mode-space convolutions only.
std::vector<FourierMap> lindstedt(const Potential& pot, const DiophantineFrequency& freq,
                                  int order_K, int lattice_bound);

/// Closed form of the first order: x_1(q) = -i q v(q) / (omega.q)^2.
FourierMap lindstedt_first_order(const Potential& pot, const DiophantineFrequency& freq,
                                 int lattice_bound);

}  // namespace oracle
}  // namespace torusrg
