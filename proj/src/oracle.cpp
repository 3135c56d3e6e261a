#include "torusrg/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

namespace torusrg {
namespace oracle {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

std::size_t pow_int(int base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void for_each_window_mode(int d, int bound, const std::function<void(const Mode&)>& fn) {
  Mode q{0, 0, 0, 0};
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      fn(q);
      return;
    }
    for (int c = -bound; c <= bound; ++c) {
      q[static_cast<std::size_t>(axis)] = c;
      rec(axis + 1);
    }
    q[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0);
}

struct DirectGrid {
  int d = 0;
  int M = 0;                         // points per axis
  std::vector<std::vector<double>> theta;  // theta[k][i]

  explicit DirectGrid(int dim, int points) : d(dim), M(points) {
    const std::size_t total = pow_int(M, d);
    theta.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
      theta[k].resize(static_cast<std::size_t>(d));
      std::size_t rem = k;
      for (int i = d - 1; i >= 0; --i) {
        theta[k][static_cast<std::size_t>(i)] =
            2.0 * std::numbers::pi * static_cast<double>(rem % static_cast<std::size_t>(M)) / static_cast<double>(M);
        rem /= static_cast<std::size_t>(M);
      }
    }
  }
};

// shifted points y_k = theta_k + X(theta_k), by direct mode summation
std::vector<std::vector<double>> shifted_points(const DirectGrid& g, const FourierMap& X) {
  std::vector<std::vector<double>> y(g.theta.size());
  for (std::size_t k = 0; k < g.theta.size(); ++k) {
    y[k] = g.theta[k];
    for (const auto& [q, v] : X.coeffs()) {
      double phase = 0.0;
      for (int i = 0; i < g.d; ++i) phase += q[static_cast<std::size_t>(i)] * g.theta[k][static_cast<std::size_t>(i)];
      const Cd e = std::polar(1.0, -phase);
      for (int i = 0; i < g.d; ++i) y[k][static_cast<std::size_t>(i)] += (e * v[static_cast<std::size_t>(i)]).real();
    }
  }
  return y;
}

// gradient of V at given points, direct mode summation
std::vector<CoeffVec> gradient_at(const Potential& pot, const std::vector<std::vector<double>>& pts,
                                  double lambda) {
  const int d = pot.dim();
  std::vector<CoeffVec> out(pts.size(), zero_coeff());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    for (const auto& [p, v] : pot.coeffs()) {
      if (is_zero(p)) continue;
      double phase = 0.0;
      for (int i = 0; i < d; ++i) phase += p[static_cast<std::size_t>(i)] * pts[k][static_cast<std::size_t>(i)];
      const Cd base = lambda * v * std::polar(1.0, -phase);
      for (int i = 0; i < d; ++i)
        out[k][static_cast<std::size_t>(i)] += Cd(0.0, -static_cast<double>(p[static_cast<std::size_t>(i)])) * base;
    }
  }
  return out;
}

// coefficient extraction by the plain quadrature sum
FourierMap project_window(const DirectGrid& g, const std::vector<CoeffVec>& samples,
                          int bound, int dim) {
  FourierMap out(dim, bound, true);
  const double invM = 1.0 / static_cast<double>(g.theta.size());
  for_each_window_mode(dim, bound, [&](const Mode& q) {
    CoeffVec acc = zero_coeff();
    for (std::size_t k = 0; k < g.theta.size(); ++k) {
      double phase = 0.0;
      for (int i = 0; i < dim; ++i) phase += q[static_cast<std::size_t>(i)] * g.theta[k][static_cast<std::size_t>(i)];
      const Cd e = std::polar(1.0, phase);
      for (int i = 0; i < dim; ++i) acc[static_cast<std::size_t>(i)] += e * samples[k][static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < dim; ++i) acc[static_cast<std::size_t>(i)] *= invM;
    bool nonzero = false;
    for (int i = 0; i < dim; ++i)
      if (std::abs(acc[static_cast<std::size_t>(i)]) > 1e-300) nonzero = true;
    if (nonzero) out.set(q, acc);
  });
  out.enforce_hermitian();
  return out;
}

int grid_points_for(const Potential& pot, const FourierMap& X, int bound) {
  const int b = std::max({pot.max_linf_mode() + X.max_linf_mode(), bound, 1});
  return 2 * b + bound + 3;  // window exact, aliases pushed past the decayed tail
}

}  // namespace

FourierMap w0_direct(const Potential& pot, const FourierMap& X, double lambda, int bound) {
  if (lambda == 0.0) return FourierMap(pot.dim(), bound, true);
  const DirectGrid g(pot.dim(), grid_points_for(pot, X, bound));
  const auto pts = shifted_points(g, X);
  const auto grad = gradient_at(pot, pts, lambda);
  return project_window(g, grad, bound, pot.dim());
}

double equation_residual_direct(const FourierMap& X, const Potential& pot,
                                double lambda, const DiophantineFrequency& freq) {
  const FourierMap w = w0_direct(pot, X, lambda, X.lattice_bound());
  const FourierMap lhs = apply_D2(X, freq.omega);
  return map_add(lhs, w).ell1_norm();
}

namespace {

// Hessian coefficients lambda d^2V(.+X) at the lattice differences needed by
// the Newton matrix, by direct quadrature.
std::map<Mode, std::array<Cd, kMaxDim * kMaxDim>> hessian_direct(
    const Potential& pot, const FourierMap& X, double lambda, int bound,
    const std::set<Mode>& diffs) {
  const int d = pot.dim();
  const DirectGrid g(d, grid_points_for(pot, X, bound));
  const auto pts = shifted_points(g, X);
  // sample the d(d+1)/2 Hessian components
  const std::size_t total = pts.size();
  std::vector<std::vector<Cd>> comp(static_cast<std::size_t>(d * d),
                                    std::vector<Cd>(total, Cd(0.0)));
  for (std::size_t k = 0; k < total; ++k) {
    for (const auto& [p, v] : pot.coeffs()) {
      if (is_zero(p)) continue;
      double phase = 0.0;
      for (int i = 0; i < d; ++i) phase += p[static_cast<std::size_t>(i)] * pts[k][static_cast<std::size_t>(i)];
      const Cd base = lambda * v * std::polar(1.0, -phase);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          comp[static_cast<std::size_t>(a * d + b)][k] +=
              Cd(-static_cast<double>(p[static_cast<std::size_t>(a)]) * static_cast<double>(p[static_cast<std::size_t>(b)]), 0.0) * base;
    }
  }
  std::map<Mode, std::array<Cd, kMaxDim * kMaxDim>> out;
  const double invM = 1.0 / static_cast<double>(total);
  for (const Mode& pdiff : diffs) {
    std::array<Cd, kMaxDim * kMaxDim> blk{};
    for (std::size_t k = 0; k < total; ++k) {
      double phase = 0.0;
      for (int i = 0; i < d; ++i) phase += pdiff[static_cast<std::size_t>(i)] * g.theta[k][static_cast<std::size_t>(i)];
      const Cd e = std::polar(1.0, phase);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          blk[static_cast<std::size_t>(a * kMaxDim + b)] += e * comp[static_cast<std::size_t>(a * d + b)][k];
    }
    for (auto& c : blk) c *= invM;
    out[pdiff] = blk;
  }
  return out;
}

FourierMap g0p_of(const FourierMap& w, const DiophantineFrequency& freq) {
  return apply_G0(project_P(w), freq.omega);
}

}  // namespace

OracleSolution newton_solve(const Potential& pot, const DiophantineFrequency& freq,
                            double lambda, int lattice_bound, const FourierMap* x_init,
                            double tol, int max_iters) {
  const int d = pot.dim();
  OracleSolution sol;
  sol.X = x_init ? *x_init : FourierMap(d, lattice_bound, true);

  if (lambda == 0.0 && !x_init) {
    sol.converged = true;
    return sol;
  }

  FourierMap w = w0_direct(pot, sol.X, lambda, lattice_bound);
  FourierMap R = map_sub(sol.X, g0p_of(w, freq));
  double rnorm = R.ell1_norm();
  const double r0 = std::max(rnorm, 1.0);

  for (int iter = 0; iter < max_iters && rnorm > tol; ++iter) {
    ++sol.newton_iters;
    if (!std::isfinite(rnorm) || rnorm > 1e6 * r0)
      throw DivergedOracle("newton_solve: residual blow-up (lambda too large for the window)");

    // active modes: the significant part of x and of the residual
    double scale = 0.0;
    for (const auto& [q, v] : sol.X.coeffs()) scale = std::max(scale, coeff_norm(v, d));
    for (const auto& [q, v] : R.coeffs()) scale = std::max(scale, coeff_norm(v, d));
    const double cut = 1e-16 * std::max(scale, 1e-300);
    std::set<Mode> act;
    for (const auto& [q, v] : sol.X.coeffs())
      if (!is_zero(q) && coeff_norm(v, d) >= cut) act.insert(q);
    for (const auto& [q, v] : R.coeffs())
      if (!is_zero(q) && coeff_norm(v, d) >= cut) act.insert(q);
    if (act.empty()) break;

    std::vector<Mode> modes(act.begin(), act.end());
    std::map<Mode, int> index;
    for (std::size_t i = 0; i < modes.size(); ++i) index[modes[i]] = static_cast<int>(i);

    // The Hessian spectrum concentrates on supp(v) shifted by the significant
    // modes of x; restricting to that set leaves an O(lambda |x|^2) Jacobian
    // error, which only costs Newton steps, never solution accuracy.
    std::set<Mode> plausible;
    {
      std::set<Mode> shifts;
      shifts.insert(Mode{0, 0, 0, 0});
      double xmax = 0.0;
      for (const auto& [q, v] : sol.X.coeffs()) xmax = std::max(xmax, coeff_norm(v, d));
      for (const auto& [q, v] : sol.X.coeffs())
        if (coeff_norm(v, d) >= 1e-10 * std::max(xmax, 1e-300)) shifts.insert(q);
      for (const auto& [p, v] : pot.coeffs()) {
        if (is_zero(p)) continue;
        for (const auto& s : shifts) {
          const Mode ps = mode_add(p, s);
          if (linf(ps) <= 2 * lattice_bound) plausible.insert(ps);
        }
      }
      plausible.insert(Mode{0, 0, 0, 0});
    }
    std::set<Mode> diffs;
    for (const auto& qa : modes)
      for (const auto& qb : modes) {
        const Mode dq = mode_sub(qa, qb);
        if (plausible.count(dq)) diffs.insert(dq);
      }
    const auto hess = hessian_direct(pot, sol.X, lambda, lattice_bound, diffs);

    const int nb = static_cast<int>(modes.size());
    MatrixXcd J = MatrixXcd::Zero(nb * d, nb * d);
    for (int i = 0; i < nb; ++i) {
      const double wq = small_divisor(freq.omega, modes[static_cast<std::size_t>(i)]);
      const double g0 = 1.0 / (wq * wq);
      for (int j = 0; j < nb; ++j) {
        const auto it = hess.find(mode_sub(modes[static_cast<std::size_t>(i)], modes[static_cast<std::size_t>(j)]));
        if (it == hess.end()) continue;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            J(i * d + a, j * d + b) = -g0 * it->second[static_cast<std::size_t>(a * kMaxDim + b)];
      }
    }
    J.diagonal().array() += Cd(1.0, 0.0);

    VectorXcd rhs(nb * d);
    for (int i = 0; i < nb; ++i) {
      const CoeffVec v = R.at(modes[static_cast<std::size_t>(i)]);
      for (int a = 0; a < d; ++a) rhs(i * d + a) = -v[static_cast<std::size_t>(a)];
    }
    Eigen::PartialPivLU<MatrixXcd> lu(J);
    VectorXcd delta = lu.solve(rhs);
    if (!delta.allFinite())
      throw DivergedOracle("newton_solve: singular Newton matrix");

    // undamped step first, then halvings if the residual refuses to drop
    bool stepped = false;
    double t = 1.0;
    for (int h = 0; h < 10; ++h, t *= 0.5) {
      FourierMap trial = sol.X;
      for (int i = 0; i < nb; ++i) {
        CoeffVec dv = zero_coeff();
        for (int a = 0; a < d; ++a) dv[static_cast<std::size_t>(a)] = t * delta(i * d + a);
        trial.add(modes[static_cast<std::size_t>(i)], dv);
      }
      trial.enforce_hermitian();
      FourierMap wt = w0_direct(pot, trial, lambda, lattice_bound);
      FourierMap Rt = map_sub(trial, g0p_of(wt, freq));
      const double rt = Rt.ell1_norm();
      if (rt < rnorm || rt <= tol) {
        sol.X = trial;
        w = wt;
        R = Rt;
        rnorm = rt;
        stepped = true;
        break;
      }
    }
    if (!stepped)
      throw DivergedOracle("newton_solve: no descent along the Newton direction");
  }

  sol.residual = rnorm;
  sol.converged = rnorm <= tol;
  if (!sol.converged)
    throw DivergedOracle("newton_solve: max iterations without convergence");
  double md = 0.0;
  const CoeffVec w0c = w.at(Mode{0, 0, 0, 0});
  for (int i = 0; i < d; ++i) md += std::abs(w0c[static_cast<std::size_t>(i)]);
  sol.mean_defect = md;
  sol.X.set(Mode{0, 0, 0, 0}, zero_coeff());
  return sol;
}

namespace {

// scalar truncated Fourier series with naive convolution, for the Lindstedt
// recursion
using ScalarSeries = std::map<Mode, Cd>;

ScalarSeries convolve(const ScalarSeries& a, const ScalarSeries& b, int bound) {
  ScalarSeries out;
  for (const auto& [qa, va] : a) {
    for (const auto& [qb, vb] : b) {
      const Mode q = mode_add(qa, qb);
      if (linf(q) > bound) continue;
      out[q] += va * vb;
    }
  }
  return out;
}

void axpy(ScalarSeries& acc, const ScalarSeries& a, Cd f) {
  for (const auto& [q, v] : a) acc[q] += f * v;
}

}  // namespace

FourierMap lindstedt_first_order(const Potential& pot, const DiophantineFrequency& freq,
                                 int lattice_bound) {
  const int d = pot.dim();
  FourierMap x1(d, lattice_bound, true);
  for (const auto& [q, v] : pot.coeffs()) {
    if (is_zero(q) || linf(q) > lattice_bound) continue;
    const double wq = small_divisor(freq.omega, q);
    CoeffVec c = zero_coeff();
    for (int i = 0; i < d; ++i)
      c[static_cast<std::size_t>(i)] = Cd(0.0, -static_cast<double>(q[static_cast<std::size_t>(i)])) * v / (wq * wq);
    x1.set(q, c);
  }
  return x1;
}

std::vector<FourierMap> lindstedt(const Potential& pot, const DiophantineFrequency& freq,
                                  int order_K, int lattice_bound) {
  if (order_K < 1) throw std::invalid_argument("lindstedt: order must be >= 1");
  const int d = pot.dim();
  std::vector<FourierMap> X;  // X[k-1] = X_k
  X.push_back(lindstedt_first_order(pot, freq, lattice_bound));

  // E_p = e^{-i p.S(lambda)} as a series in lambda, per potential mode p:
  //   (m+1) e_{p,m+1} = -i sum_{r=0..m} (r+1) (p.X_{r+1}) e_{p,m-r}
  // and the lambda^k coefficient of W0 is sum_p (-i p) v(p) e^{-ip.theta} e_{p,k-1}.
  std::vector<Mode> pmodes;
  std::vector<Cd> pcoef;
  for (const auto& [p, v] : pot.coeffs()) {
    if (is_zero(p)) continue;
    pmodes.push_back(p);
    pcoef.push_back(v);
  }
  // e[pi][m]
  std::vector<std::vector<ScalarSeries>> e(pmodes.size());
  for (auto& row : e) row.push_back(ScalarSeries{{Mode{0, 0, 0, 0}, Cd(1.0)}});

  auto dot_series = [&](const Mode& p, const FourierMap& Xk) {
    ScalarSeries s;
    for (const auto& [q, v] : Xk.coeffs()) {
      Cd acc(0.0);
      for (int i = 0; i < d; ++i) acc += static_cast<double>(p[static_cast<std::size_t>(i)]) * v[static_cast<std::size_t>(i)];
      if (acc != Cd(0.0)) s[q] = acc;
    }
    return s;
  };

  for (int k = 2; k <= order_K; ++k) {
    // extend every e_p to order m = k-1
    const int m_new = k - 1;
    for (std::size_t pi = 0; pi < pmodes.size(); ++pi) {
      ScalarSeries acc;
      for (int r = 0; r <= m_new - 1; ++r) {
        const ScalarSeries pX = dot_series(pmodes[pi], X[static_cast<std::size_t>(r)]);
        ScalarSeries term = convolve(pX, e[pi][static_cast<std::size_t>(m_new - 1 - r)], lattice_bound);
        axpy(acc, term, Cd(0.0, -(1.0 + r)));
      }
      for (auto& [q, v] : acc) v /= static_cast<double>(m_new);
      e[pi].push_back(std::move(acc));
    }

    // T_{k-1}: lambda^k coefficient of W0 (the leading lambda already absorbed)
    FourierMap T(d, lattice_bound, false);
    for (std::size_t pi = 0; pi < pmodes.size(); ++pi) {
      for (const auto& [q, ev] : e[pi][static_cast<std::size_t>(m_new)]) {
        const Mode qq = mode_add(q, pmodes[pi]);
        if (linf(qq) > lattice_bound) continue;
        CoeffVec c = zero_coeff();
        for (int i = 0; i < d; ++i)
          c[static_cast<std::size_t>(i)] = Cd(0.0, -static_cast<double>(pmodes[pi][static_cast<std::size_t>(i)])) * pcoef[pi] * ev;
        T.add(qq, c);
      }
    }

    FourierMap xk(d, lattice_bound, true);
    for (const auto& [q, v] : T.coeffs()) {
      if (is_zero(q)) continue;  // mean must vanish order by order; checked in tests
      const double wq = small_divisor(freq.omega, q);
      CoeffVec c = v;
      for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] /= (wq * wq);
      xk.set(q, c);
    }
    xk.enforce_hermitian();
    X.push_back(std::move(xk));
  }
  return X;
}

}  // namespace oracle
}  // namespace torusrg
