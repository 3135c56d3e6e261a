#include "torusrg/rg_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace torusrg {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Success: return "success";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::ContractionFailure: return "contraction_failure";
    case SolveStatus::SingularResonanceMatrix: return "singular_resonance_matrix";
    case SolveStatus::NonCauchy: return "non_cauchy";
    case SolveStatus::DivergedOracle: return "diverged_oracle";
    case SolveStatus::ConfigError: return "config_error";
  }
  return "unknown";
}

std::vector<Mode> default_ward_probes(int dim) {
  std::vector<Mode> probes;
  for (int i = 0; i < dim; ++i) {
    Mode q{0, 0, 0, 0};
    q[static_cast<std::size_t>(i)] = 1;
    probes.push_back(q);
    q[static_cast<std::size_t>(i)] = -1;
    probes.push_back(q);
  }
  return probes;
}

StageContext::StageContext(const ApproximationLadder& ladder, int j, FourierMap xbar,
                           double lambda, const DiophantineFrequency& freq,
                           const ScaleDecomposition& scales, int lattice_bound,
                           SolverConfig cfg)
    : Vj_(&ladder.truncation(j)),
      Vjm1_(&ladder.truncation(j - 1)),
      xbar_(std::move(xbar)),
      lambda_(lambda),
      freq_(freq),
      scales_(scales),
      bound_(lattice_bound),
      cfg_(std::move(cfg)),
      j_(j) {
  if (cfg_.ward_probes.empty()) cfg_.ward_probes = default_ward_probes(freq.dim());
  const ComposeResult prev =
      compose_w0(*Vjm1_, xbar_, lambda_, bound_, cfg_.compose_tail_tol);
  w_prev_ = prev.map;
}

FourierMap StageContext::wtilde0(const FourierMap& Y, HessianKernel* hess,
                                 double* tail) const {
  const FourierMap point = Y.empty() ? xbar_ : map_add(xbar_, Y);
  ComposeResult cur;
  if (hess)
    cur = compose_w0_with_hessian(*Vj_, point, lambda_, bound_, *hess,
                                  cfg_.compose_tail_tol);
  else
    cur = compose_w0(*Vj_, point, lambda_, bound_, cfg_.compose_tail_tol);
  if (tail) *tail = cur.tail_mass;
  return map_sub(cur.map, w_prev_);
}

FourierMap StageContext::apply_gamma_less(const FourierMap& m, int n) const {
  FourierMap out(m.dim(), m.lattice_bound(), m.real_valued());
  for (const auto& [q, v] : m.coeffs()) {
    if (is_zero(q)) continue;
    const double g = scales_.gamma_less(small_divisor(freq_.omega, q), n);
    if (g == 0.0) continue;
    CoeffVec w = v;
    for (int i = 0; i < m.dim(); ++i) w[static_cast<std::size_t>(i)] *= g;
    out.set(q, w);
  }
  return out;
}

FourierMap wtilde0(const ApproximationLadder& ladder, int j, const FourierMap& xbar,
                   const FourierMap& Y, double lambda, int bound) {
  const Potential& Vj = ladder.truncation(j);
  const Potential& Vjm1 = ladder.truncation(j - 1);
  const FourierMap point = Y.empty() ? xbar : map_add(xbar, Y);
  const FourierMap a = compose_w0(Vj, point, lambda, bound).map;
  const FourierMap b = compose_w0(Vjm1, xbar, lambda, bound).map;
  return map_sub(a, b);
}

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

double block_spectral_norm(const MatrixXcd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

struct ModeBasis {
  std::vector<Mode> modes;               // sorted
  std::map<Mode, int> index;
  int dim = 0;

  int find(const Mode& q) const {
    auto it = index.find(q);
    return it == index.end() ? -1 : it->second;
  }
};

ModeBasis make_basis(std::set<Mode> set, int dim) {
  ModeBasis b;
  b.dim = dim;
  b.modes.assign(set.begin(), set.end());
  for (std::size_t i = 0; i < b.modes.size(); ++i) b.index[b.modes[i]] = static_cast<int>(i);
  return b;
}

// Kernel matrix of Dw~0(z): block(q, q') = Phi(q - q').
MatrixXcd kernel_matrix(const ModeBasis& basis, const HessianKernel& hess) {
  const int d = basis.dim;
  const int nb = static_cast<int>(basis.modes.size());
  MatrixXcd K = MatrixXcd::Zero(nb * d, nb * d);
  for (int i = 0; i < nb; ++i) {
    for (int j2 = 0; j2 < nb; ++j2) {
      const Mode p = mode_sub(basis.modes[static_cast<std::size_t>(i)],
                              basis.modes[static_cast<std::size_t>(j2)]);
      auto it = hess.blocks.find(p);
      if (it == hess.blocks.end()) continue;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          K(i * d + a, j2 * d + b) = it->second[static_cast<std::size_t>(a * kMaxDim + b)];
    }
  }
  return K;
}

// diag(gamma(omega.q)) as a vector over basis modes, repeated per component.
Eigen::VectorXd gamma_diagonal(const ModeBasis& basis, const DiophantineFrequency& freq,
                               const std::function<double(double)>& gamma_of_kappa) {
  const int d = basis.dim;
  Eigen::VectorXd g(static_cast<int>(basis.modes.size()) * d);
  for (std::size_t i = 0; i < basis.modes.size(); ++i) {
    const Mode& q = basis.modes[i];
    const double val = is_zero(q) ? 0.0 : gamma_of_kappa(small_divisor(freq.omega, q));
    for (int a = 0; a < d; ++a) g(static_cast<int>(i) * d + a) = val;
  }
  return g;
}

// l1-induced operator norm with spectral norms on the d x d blocks.
double block_l1_operator_norm(const MatrixXcd& M, int d) {
  const int nb = static_cast<int>(M.rows()) / d;
  double worst = 0.0;
  for (int j2 = 0; j2 < nb; ++j2) {
    double col = 0.0;
    for (int i = 0; i < nb; ++i) {
      col += block_spectral_norm(M.block(i * d, j2 * d, d, d));
    }
    worst = std::max(worst, col);
  }
  return worst;
}

struct LinearSolve {
  MatrixXcd solution;
  bool ok = false;
};

LinearSolve solve_resolvent(const MatrixXcd& K, const Eigen::VectorXd& gamma,
                            const MatrixXcd& rhs) {
  // (1 - K diag(gamma)) x = rhs
  MatrixXcd A = -K * gamma.asDiagonal().toDenseMatrix().cast<Cd>();
  A.diagonal().array() += Cd(1.0, 0.0);
  Eigen::PartialPivLU<MatrixXcd> lu(A);
  LinearSolve out;
  out.solution = lu.solve(rhs);
  const double resid = (A * out.solution - rhs).norm();
  const double scale = std::max(1.0, rhs.norm());
  out.ok = out.solution.allFinite() && resid <= 1e-8 * scale;
  return out;
}

}  // namespace

RGStageState solve_scale(const StageContext& ctx, int n, const RGStageState& state_prev) {
  const SolverConfig& cfg = ctx.config();
  const int d = ctx.freq().dim();

  RGStageState st;
  st.j = ctx.stage();
  st.n = n;
  st.z = state_prev.z.empty() ? FourierMap(d, ctx.bound(), true) : state_prev.z;

  auto evaluate = [&](const FourierMap& z, FourierMap& w, FourierMap& residual,
                      double* tail) {
    w = ctx.wtilde0(z, nullptr, tail);
    residual = map_sub(z, ctx.apply_gamma_less(w, n));
  };

  FourierMap w, R;
  double tail = 0.0;
  evaluate(st.z, w, R, &tail);
  st.compose_tail = tail;
  double rnorm = R.ell1_norm();
  st.convergence_log.push_back({0, rnorm});

  auto tol_of = [&](const FourierMap& z) {
    return cfg.scale_tol * std::max(1.0, z.ell1_norm());
  };

  HessianKernel hess;
  bool have_jacobian = false;
  ModeBasis basis;
  Eigen::PartialPivLU<MatrixXcd> lu;
  double prev_rnorm = rnorm;
  bool newton_usable = true;

  int iter = 0;
  while (rnorm > tol_of(st.z)) {
    if (++iter > cfg.max_newton) {
      st.status = SolveStatus::MaxIterations;
      st.final_residual = rnorm;
      return st;
    }

    if (newton_usable && !have_jacobian) {
      // active modes: Gamma_{<n} support intersected with the significant set
      double scale_ref = 0.0;
      for (const auto& [q, v] : st.z.coeffs()) scale_ref = std::max(scale_ref, coeff_norm(v, d));
      for (const auto& [q, v] : R.coeffs()) scale_ref = std::max(scale_ref, coeff_norm(v, d));
      const double thresh = cfg.active_rel_threshold * std::max(scale_ref, 1e-300);
      std::set<Mode> act;
      auto consider = [&](const Mode& q, const CoeffVec& v) {
        if (is_zero(q)) return;
        if (coeff_norm(v, d) < thresh) return;
        if (ctx.scales().gamma_less(small_divisor(ctx.freq().omega, q), n) == 0.0) return;
        act.insert(q);
      };
      for (const auto& [q, v] : st.z.coeffs()) consider(q, v);
      for (const auto& [q, v] : R.coeffs()) consider(q, v);
      FourierMap gw = ctx.apply_gamma_less(w, n);
      for (const auto& [q, v] : gw.coeffs()) consider(q, v);
      if (act.empty()) {
        // residual above tolerance yet no active mode: fall through to Picard
        newton_usable = false;
        continue;
      }
      basis = make_basis(std::move(act), d);

      ctx.wtilde0(st.z, &hess, nullptr);
      const MatrixXcd K = kernel_matrix(basis, hess);
      const Eigen::VectorXd g = gamma_diagonal(
          basis, ctx.freq(),
          [&](double kappa) { return ctx.scales().gamma_less(kappa, n); });
      MatrixXcd J = -(g.asDiagonal().toDenseMatrix().cast<Cd>()) * K;
      J.diagonal().array() += Cd(1.0, 0.0);
      lu.compute(J);
      have_jacobian = true;
    }

    bool stepped = false;
    if (newton_usable) {
      VectorXcd rhs(static_cast<int>(basis.modes.size()) * d);
      for (std::size_t i = 0; i < basis.modes.size(); ++i) {
        const CoeffVec v = R.at(basis.modes[i]);
        for (int a = 0; a < d; ++a) rhs(static_cast<int>(i) * d + a) = -v[static_cast<std::size_t>(a)];
      }
      VectorXcd delta = lu.solve(rhs);
      if (delta.allFinite()) {
        double t = 1.0;
        for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
          FourierMap trial = st.z;
          for (std::size_t i = 0; i < basis.modes.size(); ++i) {
            CoeffVec dv = zero_coeff();
            for (int a = 0; a < d; ++a) dv[static_cast<std::size_t>(a)] = t * delta(static_cast<int>(i) * d + a);
            trial.add(basis.modes[i], dv);
          }
          if (trial.real_valued()) trial.enforce_hermitian();
          FourierMap wt, Rt;
          double tt = 0.0;
          evaluate(trial, wt, Rt, &tt);
          const double rt = Rt.ell1_norm();
          if (rt < rnorm || rt <= tol_of(trial)) {
            st.z = trial;
            w = wt;
            R = Rt;
            st.compose_tail = tt;
            st.contraction_estimate = rnorm > 0.0 ? rt / rnorm : 0.0;
            rnorm = rt;
            stepped = true;
            break;
          }
        }
        if (stepped && rnorm > 0.25 * prev_rnorm) have_jacobian = false;  // stale Jacobian
        prev_rnorm = rnorm;
      }
      if (!stepped) {
        // Jacobian step unusable at this point: switch to Picard
        newton_usable = false;
      }
    }

    if (!newton_usable && !stepped) {
      int stalls = 0;
      int picard_iter = 0;
      while (rnorm > tol_of(st.z)) {
        if (++picard_iter > cfg.max_picard) {
          st.status = SolveStatus::MaxIterations;
          st.final_residual = rnorm;
          return st;
        }
        FourierMap trial = ctx.apply_gamma_less(w, n);
        if (trial.real_valued()) trial.enforce_hermitian();
        FourierMap wt, Rt;
        double tt = 0.0;
        evaluate(trial, wt, Rt, &tt);
        const double rt = Rt.ell1_norm();
        st.convergence_log.push_back({iter + picard_iter, rt});
        st.contraction_estimate = rnorm > 0.0 ? rt / rnorm : 0.0;
        if (rt >= rnorm) {
          if (++stalls >= 3) {
            st.status = SolveStatus::ContractionFailure;
            st.final_residual = rt;
            return st;
          }
        } else {
          stalls = 0;
        }
        st.z = trial;
        w = wt;
        R = Rt;
        st.compose_tail = tt;
        rnorm = rt;
      }
      break;
    }

    st.convergence_log.push_back({iter, rnorm});
  }

  st.w_at_z = w;
  st.final_residual = rnorm;
  st.accepted = true;
  st.status = SolveStatus::Success;
  return st;
}

double ward_residual_constant(const StageContext& ctx, const RGStageState& state) {
  const int d = ctx.freq().dim();
  const CoeffVec lhs = state.w_at_z.at(Mode{0, 0, 0, 0});
  CoeffVec rhs = zero_coeff();
  for (const auto& [q, xv] : ctx.xbar().coeffs()) {
    if (is_zero(q)) continue;
    const double cb = ctx.scales().chi_bar_n(small_divisor(ctx.freq().omega, q), state.n);
    if (cb == 0.0) continue;
    const CoeffVec wv = state.w_at_z.at(negate(q));
    Cd dot(0.0);
    for (int a = 0; a < d; ++a) dot += xv[static_cast<std::size_t>(a)] * wv[static_cast<std::size_t>(a)];
    for (int g = 0; g < d; ++g)
      rhs[static_cast<std::size_t>(g)] += Cd(0.0, static_cast<double>(q[static_cast<std::size_t>(g)])) * cb * dot;
  }
  double resid = 0.0;
  for (int g = 0; g < d; ++g) resid += std::abs(lhs[static_cast<std::size_t>(g)] - rhs[static_cast<std::size_t>(g)]);
  return resid;
}

namespace {

// Diagnostic mode set: deep resonant modes, the significant modes of the
// state, the Hessian support reachable from them, the probes, and q = 0.
ModeBasis diagnostic_basis(const StageContext& ctx, const RGStageState& state,
                           const HessianKernel& hess, int n) {
  const int d = ctx.freq().dim();
  const double etaN = std::pow(ctx.scales().eta(), n - 1);
  std::set<Mode> S;
  S.insert(Mode{0, 0, 0, 0});
  for (const auto& probe : ctx.config().ward_probes) S.insert(probe);

  const double cut = ctx.config().diag_rel_threshold;
  const double reach_cut = ctx.config().diag_reach_threshold;

  std::set<Mode> sig;
  sig.insert(Mode{0, 0, 0, 0});
  auto add_significant = [&](const std::map<Mode, CoeffVec>& coeffs) {
    double scale = 0.0;
    for (const auto& [q2, v] : coeffs) scale = std::max(scale, coeff_norm(v, d));
    if (scale <= 0.0) return;
    for (const auto& [q2, v] : coeffs)
      if (coeff_norm(v, d) >= cut * scale) sig.insert(q2);
  };
  add_significant(state.z.coeffs());
  add_significant(state.w_at_z.coeffs());
  add_significant(ctx.xbar().coeffs());

  // chains through modes dropped here weigh in at O(|phi_dropped|^2 gamma),
  // below the diagnostic floor, so the reach cut can stay coarse
  std::vector<Mode> hsupp;
  {
    double hscale = 0.0;
    std::vector<std::pair<Mode, double>> mags;
    for (const auto& [p, b] : hess.blocks) {
      double f = 0.0;
      for (const auto& c : b) f += std::norm(c);
      hscale = std::max(hscale, std::sqrt(f));
      mags.emplace_back(p, std::sqrt(f));
    }
    for (const auto& [p, m] : mags)
      if (m >= reach_cut * std::max(hscale, 1e-300)) hsupp.push_back(p);
  }

  for (const auto& q : sig) {
    S.insert(q);
    for (const auto& p : hsupp) {
      const Mode qp = mode_add(q, p);
      if (linf(qp) <= ctx.bound()) S.insert(qp);
    }
  }

  // deep resonant set |omega.q| <= eta^{n-1} on the window
  Mode q{0, 0, 0, 0};
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      if (!is_zero(q) && std::abs(small_divisor(ctx.freq().omega, q)) <= etaN) S.insert(q);
      return;
    }
    for (int c = -ctx.bound(); c <= ctx.bound(); ++c) {
      q[static_cast<std::size_t>(axis)] = c;
      rec(axis + 1);
    }
    q[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0);

  return make_basis(std::move(S), d);
}

}  // namespace

double ward_residual_derivative(const StageContext& ctx, const RGStageState& state,
                                const HessianKernel& hess) {
  const int d = ctx.freq().dim();
  const ModeBasis basis = diagnostic_basis(ctx, state, hess, state.n);
  const MatrixXcd K = kernel_matrix(basis, hess);
  const Eigen::VectorXd g = gamma_diagonal(
      basis, ctx.freq(),
      [&](double kappa) { return ctx.scales().gamma_less(kappa, state.n); });
  const LinearSolve J = solve_resolvent(K, g, K);  // Dw~_n(0) = (1-K Gamma_{<n})^{-1} K
  if (!J.ok) return std::numeric_limits<double>::quiet_NaN();

  const FourierMap w_full = map_add(state.w_at_z, ctx.w_prev());  // W0^j(xbar + z)
  const int i0 = basis.find(Mode{0, 0, 0, 0});

  double worst = 0.0;
  for (const auto& probe : ctx.config().ward_probes) {
    const int ip = basis.find(probe);
    if (ip < 0 || i0 < 0) continue;
    MatrixXcd lhs = J.solution.block(i0 * d, ip * d, d, d);

    MatrixXcd rhs = MatrixXcd::Zero(d, d);
    const CoeffVec wv = w_full.at(negate(probe));
    for (int gidx = 0; gidx < d; ++gidx)
      for (int a = 0; a < d; ++a)
        rhs(gidx, a) += Cd(0.0, static_cast<double>(probe[static_cast<std::size_t>(gidx)])) * wv[static_cast<std::size_t>(a)];

    for (const auto& [qp, xv] : ctx.xbar().coeffs()) {
      if (is_zero(qp)) continue;
      const double cb = ctx.scales().chi_bar_n(small_divisor(ctx.freq().omega, qp), state.n);
      if (cb == 0.0) continue;
      const int iq = basis.find(negate(qp));
      if (iq < 0) continue;
      const MatrixXcd Jblk = J.solution.block(iq * d, ip * d, d, d);
      for (int gidx = 0; gidx < d; ++gidx) {
        const Cd f = Cd(0.0, static_cast<double>(qp[static_cast<std::size_t>(gidx)])) * cb;
        for (int a = 0; a < d; ++a) {
          Cd acc(0.0);
          for (int b = 0; b < d; ++b) acc += xv[static_cast<std::size_t>(b)] * Jblk(b, a);
          rhs(gidx, a) += f * acc;
        }
      }
    }
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

ResonanceDiagnostics linearization_H(const StageContext& ctx, const RGStageState& state,
                                     const HessianKernel& hess, int n) {
  const int d = ctx.freq().dim();
  ResonanceDiagnostics diag;
  diag.n = n;
  diag.sigma00 = MatrixXcd::Zero(d, d);
  diag.dsigma00 = MatrixXcd::Zero(d, d);

  const ModeBasis basis = diagnostic_basis(ctx, state, hess, n);
  const MatrixXcd K = kernel_matrix(basis, hess);
  const int nb = static_cast<int>(basis.modes.size());

  auto gamma_less_shifted = [&](double kappa_shift, int upto) {
    return gamma_diagonal(basis, ctx.freq(), [&](double kappa) {
      return ctx.scales().gamma_less(kappa + kappa_shift, upto);
    });
  };

  // Dw~_{n-1}(0) from the cumulative identity, then H = (1 - M Gamma_{n-1})^{-1}.
  const LinearSolve M = solve_resolvent(K, gamma_less_shifted(0.0, n - 1), K);
  if (!M.ok) {
    diag.solve_ok = false;
    return diag;
  }
  Eigen::VectorXd gn1(nb * d);
  for (int i = 0; i < nb; ++i) {
    const Mode& q = basis.modes[static_cast<std::size_t>(i)];
    const double val = is_zero(q) ? 0.0
                                  : ctx.scales().gamma_n(small_divisor(ctx.freq().omega, q), n - 1);
    for (int a = 0; a < d; ++a) gn1(i * d + a) = val;
  }
  {
    MatrixXcd A = -M.solution * gn1.asDiagonal().toDenseMatrix().cast<Cd>();
    A.diagonal().array() += Cd(1.0, 0.0);
    Eigen::PartialPivLU<MatrixXcd> lu(A);
    MatrixXcd H = lu.solve(MatrixXcd::Identity(nb * d, nb * d));
    if (!H.allFinite()) {
      diag.solve_ok = false;
      return diag;
    }
    diag.H_norm = block_l1_operator_norm(H, d);
  }

  // pi_n(kappa; 0) = (1 - K Gamma_{<n}(kappa))^{-1} K at kappa = 0 and +/- dk.
  const LinearSolve pi0 = solve_resolvent(K, gamma_less_shifted(0.0, n), K);
  if (!pi0.ok) {
    diag.solve_ok = false;
    return diag;
  }
  const int i0 = basis.find(Mode{0, 0, 0, 0});
  diag.sigma00 = pi0.solution.block(i0 * d, i0 * d, d, d);

  const double dk = 1e-7 * std::pow(ctx.scales().eta(), n);
  const LinearSolve pip = solve_resolvent(K, gamma_less_shifted(dk, n), K);
  const LinearSolve pim = solve_resolvent(K, gamma_less_shifted(-dk, n), K);
  if (pip.ok && pim.ok) {
    diag.dsigma00 = (pip.solution.block(i0 * d, i0 * d, d, d) -
                     pim.solution.block(i0 * d, i0 * d, d, d)) /
                    (2.0 * dk);
  } else {
    diag.solve_ok = false;
  }

  // off-diagonal decay exponent of rho = offdiag(pi_n(0))
  {
    std::vector<double> lx, ly;
    for (int i = 0; i < nb; ++i) {
      for (int j2 = 0; j2 < nb; ++j2) {
        if (i == j2) continue;
        const double a = block_spectral_norm(pi0.solution.block(i * d, j2 * d, d, d));
        const int dist = l1(mode_sub(basis.modes[static_cast<std::size_t>(i)],
                                     basis.modes[static_cast<std::size_t>(j2)]));
        if (a > 1e-300 && dist > 0) {
          lx.push_back(std::log(static_cast<double>(dist)));
          ly.push_back(std::log(a));
        }
      }
    }
    // least squares slope; needs at least two distinct distances
    double n_pts = static_cast<double>(lx.size());
    if (n_pts >= 2.0) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
      }
      const double denom = n_pts * sxx - sx * sx;
      diag.rho_offdiag_decay = denom > 1e-12 ? -(n_pts * sxy - sx * sy) / denom : 0.0;
    }
  }
  return diag;
}

std::pair<FourierMap, StageReport> run_stage(const ApproximationLadder& ladder, int j,
                                             const FourierMap& xbar, double lambda,
                                             const DiophantineFrequency& freq,
                                             const ScaleDecomposition& scales,
                                             int lattice_bound, const SolverConfig& cfg) {
  const int d = freq.dim();
  StageContext ctx(ladder, j, xbar, lambda, freq, scales, lattice_bound, cfg);

  StageReport rep;
  rep.j = j;

  // smallest nonzero divisor on the window fixes the last nonempty scale
  double kmin = std::numeric_limits<double>::infinity();
  {
    Mode q{0, 0, 0, 0};
    std::function<void(int)> rec = [&](int axis) {
      if (axis == d) {
        if (!is_zero(q)) kmin = std::min(kmin, std::abs(small_divisor(freq.omega, q)));
        return;
      }
      for (int c = -lattice_bound; c <= lattice_bound; ++c) {
        q[static_cast<std::size_t>(axis)] = c;
        rec(axis + 1);
      }
      q[static_cast<std::size_t>(axis)] = 0;
    };
    rec(0);
  }
  const int n_complete = scales.completion_scale(kmin);

  RGStageState prev;
  prev.j = j;
  prev.n = 0;
  prev.z = FourierMap(d, lattice_bound, true);
  prev.accepted = true;

  int rising = 0;
  double last_dz = std::numeric_limits<double>::infinity();

  for (int n = 1; n <= std::max(n_complete, 1); ++n) {
    if (n > cfg.max_scales) {
      rep.status = SolveStatus::MaxIterations;
      rep.message = "scale budget exhausted";
      return {prev.z, rep};
    }
    RGStageState st = solve_scale(ctx, n, prev);
    if (!st.accepted) {
      rep.status = st.status;
      rep.message = "scale " + std::to_string(n) + " failed";
      ScaleReport sr;
      sr.n = n;
      sr.iters = static_cast<int>(st.convergence_log.size());
      sr.final_residual = st.final_residual;
      rep.scales.push_back(sr);
      return {prev.z, rep};
    }

    HessianKernel hess;
    ctx.wtilde0(st.z, &hess, nullptr);
    st.ward_residual_constant = ward_residual_constant(ctx, st);
    st.ward_residual_derivative = ward_residual_derivative(ctx, st, hess);
    const ResonanceDiagnostics diag = linearization_H(ctx, st, hess, n);

    const double dz = l1_distance(st.z, prev.z);

    ScaleReport sr;
    sr.n = n;
    sr.iters = st.convergence_log.empty() ? 0 : st.convergence_log.back().iteration;
    sr.final_residual = st.final_residual;
    sr.ward_const = st.ward_residual_constant;
    sr.ward_deriv = st.ward_residual_derivative;
    sr.H_norm = diag.H_norm;
    sr.sigma00_abs = block_spectral_norm(diag.sigma00);
    sr.dsigma00_abs = block_spectral_norm(diag.dsigma00);
    sr.z_norm = st.z.ell1_norm();
    sr.dz_norm = dz;
    rep.scales.push_back(sr);

    if (!diag.solve_ok) {
      rep.status = SolveStatus::SingularResonanceMatrix;
      rep.message = "resonance solve failed at scale " + std::to_string(n);
      return {st.z, rep};
    }

    if (dz > last_dz) {
      if (++rising >= 3) {
        rep.status = SolveStatus::NonCauchy;
        rep.message = "||z_n - z_{n-1}|| failed to decrease for 3 scales";
        return {st.z, rep};
      }
    } else {
      rising = 0;
    }
    last_dz = dz;
    prev = std::move(st);

    if (n >= n_complete) break;
    if (dz <= cfg.stage_tol * std::max(1.0, prev.z.ell1_norm()) && n >= 2) break;
  }

  FourierMap y = prev.z;
  y.set(Mode{0, 0, 0, 0}, zero_coeff());  // y_j(0) = 0
  rep.y_norm = y.ell1_norm();
  rep.status = SolveStatus::Success;
  return {y, rep};
}

}  // namespace torusrg
