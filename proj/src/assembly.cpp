#include "torusrg/assembly.hpp"

#include <cmath>

namespace torusrg {

ResidualReport equation_residual(const FourierMap& X, const Potential& pot,
                                 double lambda, const DiophantineFrequency& freq) {
  ResidualReport rep;
  const ComposeResult w = compose_w0(pot, X, lambda, X.lattice_bound());
  const FourierMap lhs = apply_D2(X, freq.omega);
  rep.l1 = map_add(lhs, w.map).ell1_norm();
  rep.tail = w.tail_mass;
  return rep;
}

FourierMap action_embedding(const FourierMap& X, const DiophantineFrequency& freq) {
  FourierMap out = apply_D(X, freq.omega);
  CoeffVec w0 = zero_coeff();
  for (int i = 0; i < freq.dim(); ++i) w0[static_cast<std::size_t>(i)] = Cd(freq.omega[static_cast<std::size_t>(i)], 0.0);
  out.add(Mode{0, 0, 0, 0}, w0);
  return out;
}

CsNorm cs_norm(const FourierMap& X, double s) {
  CsNorm out;
  out.s = s;
  const int W = X.max_linf_mode();
  const int half = W / 2;
  double log_sum_x = 0.0;
  for (const auto& [q, v] : X.coeffs()) {
    if (is_zero(q)) continue;
    const double a = coeff_norm(v, X.dim());
    const double term = std::pow(static_cast<double>(l1(q)), s) * a;
    out.windowed += term;
    if (linf(q) <= half) out.half_window += term;
  }
  (void)log_sum_x;

  // power-law tail estimate from the outer half of the window
  std::vector<double> lx, ly;
  for (const auto& [q, v] : X.coeffs()) {
    if (is_zero(q) || linf(q) <= half) continue;
    const double a = coeff_norm(v, X.dim());
    if (a <= 1e-300) continue;
    lx.push_back(std::log(static_cast<double>(l1(q))));
    ly.push_back(std::log(a));
  }
  if (lx.size() >= 8 && W >= 4) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom > 1e-12) {
      const double p = (n * sxy - sx * sy) / denom;  // log|x| ~ c + p log|q|
      const double c = (sy - p * sx) / n;
      const double expo = p + s + static_cast<double>(X.dim()) - 1.0;
      if (expo < -1.0) {
        // sum_{R > W} (shell count ~ c_d R^{d-1}) R^{s} C R^{p} ~ integral
        const double Wd = static_cast<double>(W);
        out.tail_estimate = std::exp(c) * 2.0 * static_cast<double>(X.dim()) *
                            std::pow(Wd, expo + 1.0) / (-(expo + 1.0));
        out.extrapolated = true;
      }
    }
  }
  return out;
}

DecayFit decay_check(const FourierMap& xj, double gamma_j, int ell) {
  DecayFit fit;
  std::vector<double> resid;
  for (const auto& [q, v] : xj.coeffs()) {
    if (is_zero(q)) continue;
    const double a = coeff_norm(v, xj.dim());
    if (a <= 1e-300) continue;
    const double aq = static_cast<double>(l1(q));
    const double model = -aq / (4.0 * gamma_j) - (static_cast<double>(ell) / 3.0) * std::log(aq);
    resid.push_back(std::log(a) - model);
  }
  fit.sample_count = static_cast<int>(resid.size());
  if (resid.empty()) return fit;  // vacuous pass on the zero map
  double mean = 0.0;
  for (double r : resid) mean += r;
  mean /= static_cast<double>(resid.size());
  fit.envelope = std::exp(mean);
  double worst = -std::numeric_limits<double>::infinity();
  for (double r : resid) worst = std::max(worst, r - mean);
  fit.worst_ratio = std::exp(worst);

  // plain exponential-rate fit: log|x| ~ a - rate |q|_1
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& [q, v] : xj.coeffs()) {
    if (is_zero(q)) continue;
    const double a = coeff_norm(v, xj.dim());
    if (a <= 1e-300) continue;
    const double x = static_cast<double>(l1(q));
    const double y = std::log(a);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1.0;
  }
  const double denom = n * sxx - sx * sx;
  if (denom > 1e-12) fit.fitted_rate = -(n * sxy - sx * sy) / denom;
  return fit;
}

std::vector<TrajectoryRow> trajectory(const FourierMap& X, const DiophantineFrequency& freq,
                                      std::span<const double> theta0,
                                      std::span<const double> t_grid) {
  const int d = freq.dim();
  const FourierMap Y = action_embedding(X, freq);
  std::vector<TrajectoryRow> rows;
  rows.reserve(t_grid.size());
  std::vector<double> xi(static_cast<std::size_t>(d));
  for (double t : t_grid) {
    for (int i = 0; i < d; ++i)
      xi[static_cast<std::size_t>(i)] = (theta0.empty() ? 0.0 : theta0[static_cast<std::size_t>(i)]) + freq.omega[static_cast<std::size_t>(i)] * t;
    const CoeffVec xv = X.eval(xi);
    const CoeffVec yv = Y.eval(xi);
    TrajectoryRow row;
    row.t = t;
    row.theta.resize(static_cast<std::size_t>(d));
    row.action.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      row.theta[static_cast<std::size_t>(i)] = xi[static_cast<std::size_t>(i)] + xv[static_cast<std::size_t>(i)].real();
      row.action[static_cast<std::size_t>(i)] = yv[static_cast<std::size_t>(i)].real();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SolveReport solve(const Potential& pot, const DiophantineFrequency& freq,
                  double lambda, int ell, const ScaleDecomposition& scales,
                  const SolveOptions& opts) {
  SolveReport rep;
  const int d = freq.dim();
  const int bound = opts.lattice_bound;

  if (pot.max_linf_mode() > bound) {
    rep.status = SolveStatus::ConfigError;
    rep.message = "lattice bound smaller than the largest potential mode";
    return rep;
  }

  int jstop;
  {
    // smallest j with gamma_j covering every stored mode
    int j = 0;
    while (ladder_constants(opts.M, j).gamma_j < pot.max_linf_mode()) ++j;
    jstop = j;
  }
  const int nstages = opts.forced_stages > 0 ? opts.forced_stages : jstop + 1;
  ApproximationLadder ladder(pot, opts.M, nstages);

  FourierMap x(d, bound, true);
  rep.status = SolveStatus::Success;

  for (int j = 0; j < nstages; ++j) {
    auto [y, stage_rep] = run_stage(ladder, j, x, lambda, freq, scales, bound, opts.solver);
    StageRecord rec;
    rec.j = j;
    rec.rg = stage_rep;
    rec.y = y;
    rec.y_norm = y.ell1_norm();

    if (stage_rep.status != SolveStatus::Success) {
      rep.status = stage_rep.status;
      rep.message = "stage " + std::to_string(j) + ": " + stage_rep.message;
      rep.stages.push_back(std::move(rec));
      break;
    }

    x = map_add(x, y);
    x.set(Mode{0, 0, 0, 0}, zero_coeff());
    rec.x_norm = x.ell1_norm();

    // independent re-evaluation of the stage fixed point x_j = G0 P W0^j(x_j)
    {
      const ComposeResult w = compose_w0(ladder.truncation(j), x, lambda, bound);
      const FourierMap gw = apply_G0(project_P(w.map), freq.omega);
      rec.stage_residual = l1_distance(x, gw);
    }
    rec.decay = decay_check(x, ladder.constants(j).gamma_j, ell);
    rep.stages.push_back(std::move(rec));

    if (opts.forced_stages <= 0 && j >= jstop) break;
    if (opts.forced_stages <= 0 && rep.stages.back().y_norm <= opts.solver.global_tol &&
        j >= jstop)
      break;
  }

  rep.X = x;
  rep.Y_act = action_embedding(x, freq);
  if (rep.status == SolveStatus::Success) {
    const ResidualReport rr = equation_residual(x, pot, lambda, freq);
    rep.final_residual = rr.l1;
    rep.final_tail = rr.tail;
  }
  for (double s : opts.cs_norm_orders) rep.cs_norms.push_back(cs_norm(x, s));
  return rep;
}

}  // namespace torusrg
