#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torusrg/rg_core.hpp"

namespace torusrg {

struct ResidualReport {
  double l1 = 0.0;         // || D^2 X + lambda dV(. + X) ||_l1 on the window
  double tail = 0.0;       // composition tail beyond the window
};

/// Coefficient-space residual of D^2 X = -lambda dV(theta + X(theta)).
ResidualReport equation_residual(const FourierMap& X, const Potential& pot,
                                 double lambda, const DiophantineFrequency& freq);

/// Action embedding Y = omega + DX (constant omega at q = 0).
FourierMap action_embedding(const FourierMap& X, const DiophantineFrequency& freq);

struct CsNorm {
  double s = 0.0;
  double windowed = 0.0;        // sum over the window of |q|_1^s |x(q)|
  double tail_estimate = 0.0;   // power-law extrapolation beyond the window
  double half_window = 0.0;     // same sum over the half window (stability probe)
  bool extrapolated = false;
};

CsNorm cs_norm(const FourierMap& X, double s);

struct DecayFit {
  double envelope = 0.0;        // fitted C in |x(q)| ~ C e^{-|q|/(4 gamma_j)} |q|^{-ell/3}
  double worst_ratio = 0.0;     // max |x(q)| / (C e^{-|q|/4g} |q|^{-ell/3})
  double fitted_rate = 0.0;     // plain exponential rate of log|x| vs |q|_1
  int sample_count = 0;
};

/// Least-squares fit of log|x(q)| against -|q|_1/(4 gamma_j) - (ell/3) log|q|_1.
DecayFit decay_check(const FourierMap& xj, double gamma_j, int ell);

struct TrajectoryRow {
  double t = 0.0;
  std::vector<double> theta;
  std::vector<double> action;
};

/// theta(t) = theta0 + omega t + X(theta0 + omega t), I(t) = Y(theta0 + omega t).
std::vector<TrajectoryRow> trajectory(const FourierMap& X, const DiophantineFrequency& freq,
                                      std::span<const double> theta0,
                                      std::span<const double> t_grid);

struct StageRecord {
  int j = 0;
  double y_norm = 0.0;
  double x_norm = 0.0;
  double stage_residual = 0.0;  // || x_j - G0 P W0^j(x_j) ||_l1, re-evaluated
  DecayFit decay;
  StageReport rg;
  FourierMap y;
};

struct SolveOptions {
  SolverConfig solver;
  int M = 8;
  int lattice_bound = 32;
  int forced_stages = -1;      // >0: run exactly this many stages (j = 0..forced_stages-1)
  std::vector<double> cs_norm_orders = {0.0, 1.0, 2.0};
};

struct SolveReport {
  std::vector<StageRecord> stages;
  FourierMap X;
  FourierMap Y_act;
  std::vector<CsNorm> cs_norms;
  SolveStatus status = SolveStatus::Success;
  std::string message;
  double final_residual = 0.0;
  double final_tail = 0.0;
};

/// Outer loop: telescopic accumulation x_j = x_{j-1} + y^j over ladder stages.
SolveReport solve(const Potential& pot, const DiophantineFrequency& freq,
                  double lambda, int ell, const ScaleDecomposition& scales,
                  const SolveOptions& opts);

}  // namespace torusrg
