#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "torusrg/frequency.hpp"
#include "torusrg/grid.hpp"
#include "torusrg/ladder.hpp"
#include "torusrg/scales.hpp"

namespace torusrg {

enum class SolveStatus {
  Success,
  MaxIterations,
  ContractionFailure,
  SingularResonanceMatrix,
  NonCauchy,
  DivergedOracle,
  ConfigError,
};

const char* to_string(SolveStatus s);

struct SolverConfig {
  double scale_tol = 1e-12;   // per-scale fixed-point tolerance (l1, relative)
  double stage_tol = 1e-11;   // ||z_n - z_{n-1}|| stopping threshold
  double global_tol = 1e-10;  // outer-loop stopping threshold on ||y_j||
  int max_newton = 50;
  int max_halvings = 8;
  int max_picard = 400;
  int max_scales = 64;
  double active_rel_threshold = 1e-16;  // Newton active-set cut
  double diag_rel_threshold = 1e-8;     // diagnostic significance cut (per map)
  double diag_reach_threshold = 1e-6;   // Hessian-support reachability cut
  double compose_tail_tol = 1e-9;
  std::vector<Mode> ward_probes;  // defaults to the 2d unit vectors
};

std::vector<Mode> default_ward_probes(int dim);

struct ScaleLogEntry {
  int iteration = 0;
  double residual = 0.0;
};

/// Per-(j,n) solver state: z is the cumulative fixed-point iterate
/// F_n(0) = Gamma_{<n} Wtilde0^j(F_n(0)), w_at_z its image under Wtilde0^j.
struct RGStageState {
  int j = 0;
  int n = 0;
  FourierMap z;
  FourierMap w_at_z;
  double ward_residual_constant = 0.0;
  double ward_residual_derivative = 0.0;
  std::vector<ScaleLogEntry> convergence_log;
  double contraction_estimate = 0.0;
  bool accepted = false;
  SolveStatus status = SolveStatus::Success;
  double final_residual = 0.0;
  double compose_tail = 0.0;
};

struct ResonanceDiagnostics {
  int n = 0;
  Eigen::MatrixXcd sigma00;   // d x d diagonal kernel block at kappa=0, q=0
  Eigen::MatrixXcd dsigma00;  // d/dkappa of the same, finite difference
  double rho_offdiag_decay = 0.0;  // fitted exponent of |rho(q,q')| vs |q-q'|
  double H_norm = 0.0;             // l1-induced norm of (1 - Dw~_{n-1}(0) Gamma_{n-1})^{-1}
  bool solve_ok = true;
};

struct ScaleReport {
  int n = 0;
  int iters = 0;
  double final_residual = 0.0;
  double ward_const = 0.0;
  double ward_deriv = 0.0;
  double H_norm = 0.0;
  double sigma00_abs = 0.0;
  double dsigma00_abs = 0.0;
  double z_norm = 0.0;
  double dz_norm = 0.0;
};

struct StageReport {
  int j = 0;
  std::vector<ScaleReport> scales;
  double y_norm = 0.0;
  SolveStatus status = SolveStatus::Success;
  std::string message;
};

/// Fixed data for one outer stage j; caches W0^{j-1}(xbar).
class StageContext {
 public:
  StageContext(const ApproximationLadder& ladder, int j, FourierMap xbar,
               double lambda, const DiophantineFrequency& freq,
               const ScaleDecomposition& scales, int lattice_bound,
               SolverConfig cfg);

  /// Wtilde0^j(Y) = W0^j(xbar + Y) - W0^{j-1}(xbar); optionally also the
  /// Hessian kernel of W0^j at xbar + Y.
  FourierMap wtilde0(const FourierMap& Y, HessianKernel* hess = nullptr,
                     double* tail = nullptr) const;

  const FourierMap& w_prev() const { return w_prev_; }
  const FourierMap& xbar() const { return xbar_; }
  const DiophantineFrequency& freq() const { return freq_; }
  const ScaleDecomposition& scales() const { return scales_; }
  const SolverConfig& config() const { return cfg_; }
  int bound() const { return bound_; }
  int stage() const { return j_; }
  double lambda() const { return lambda_; }
  const Potential& Vj() const { return *Vj_; }

  /// Gamma_{<n} P applied coefficient-wise.
  FourierMap apply_gamma_less(const FourierMap& m, int n) const;

 private:
  const Potential* Vj_;
  const Potential* Vjm1_;
  FourierMap xbar_;
  double lambda_;
  const DiophantineFrequency& freq_;
  const ScaleDecomposition& scales_;
  int bound_;
  SolverConfig cfg_;
  int j_;
  FourierMap w_prev_;
};

/// Standalone Wtilde0 evaluation (Eq-level entry point used by tests).
FourierMap wtilde0(const ApproximationLadder& ladder, int j, const FourierMap& xbar,
                   const FourierMap& Y, double lambda, int bound);

/// Solves the cumulative fixed point z = Gamma_{<n} P Wtilde0^j(z) by damped
/// Newton on the active modes, warm-started from state_prev, with a Picard
/// fallback when the Jacobian solve is unusable.
RGStageState solve_scale(const StageContext& ctx, int n, const RGStageState& state_prev);

/// Residual of the constant Ward identity at the accepted state:
///  | w~_n(0;0) - sum_{q != 0} i q chi_bar_n(omega.q) xbar(q).w~_n(0;-q) | (l1).
double ward_residual_constant(const StageContext& ctx, const RGStageState& state);

/// Residual of the derivative Ward identity at the accepted state, maximised
/// over the configured probe modes. Requires the renormalized Jacobian, so the
/// Hessian kernel at z_n must be supplied.
double ward_residual_derivative(const StageContext& ctx, const RGStageState& state,
                                const HessianKernel& hess);

/// Resonance diagnostics at scale n: H-norm certificate, sigma/rho split of
/// the interpolated kernel, and the kappa-derivative of sigma(0;0).
ResonanceDiagnostics linearization_H(const StageContext& ctx, const RGStageState& state,
                                     const HessianKernel& hess, int n);

/// Runs the inner renormalization over scales for stage j; returns y_j and
/// the per-scale report.
std::pair<FourierMap, StageReport> run_stage(const ApproximationLadder& ladder, int j,
                                             const FourierMap& xbar, double lambda,
                                             const DiophantineFrequency& freq,
                                             const ScaleDecomposition& scales,
                                             int lattice_bound, const SolverConfig& cfg);

}  // namespace torusrg
