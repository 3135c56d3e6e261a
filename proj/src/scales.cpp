#include "torusrg/scales.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "torusrg/frequency.hpp"

namespace torusrg {

namespace {

double bump_raw(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(1.0 / (x * x - 1.0));
}

// Adaptive Simpson with absolute tolerance.
double adaptive_simpson(double (*f)(double), double a, double b, double fa,
                        double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate_bump(double a, double b, double tol) {
  if (a >= b) return 0.0;
  return adaptive_simpson(&bump_raw, a, b, bump_raw(a), bump_raw(0.5 * (a + b)),
                          bump_raw(b), tol, 48);
}

}  // namespace

ScaleDecomposition::ScaleDecomposition(double eta, int table_size)
    : eta_(eta), table_n_(table_size) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("ScaleDecomposition: eta must lie in (0,1)");
  const double I = integrate_bump(-1.0, 1.0, 1e-15);
  C_ = 1.0 / I;
  table_du_ = 2.0 / static_cast<double>(table_n_);
  cdf_.resize(static_cast<std::size_t>(table_n_) + 1);
  dens_.resize(static_cast<std::size_t>(table_n_) + 1);
  double acc = 0.0;
  cdf_[0] = 0.0;
  dens_[0] = 0.0;
  for (int i = 1; i <= table_n_; ++i) {
    const double ua = -1.0 + table_du_ * (i - 1);
    const double ub = -1.0 + table_du_ * i;
    acc += C_ * integrate_bump(ua, ub, 1e-16);
    cdf_[static_cast<std::size_t>(i)] = acc;
    dens_[static_cast<std::size_t>(i)] = C_ * bump_raw(ub);
  }
  // pin the endpoint so chi_bar vanishes identically at |k| >= 1
  cdf_[static_cast<std::size_t>(table_n_)] = 1.0;
}

double ScaleDecomposition::mollifier_h(double kappa) const { return C_ * bump_raw(kappa); }

double ScaleDecomposition::mollifier_cdf(double u) const {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double t = (u + 1.0) / table_du_;
  int i = static_cast<int>(t);
  if (i >= table_n_) i = table_n_ - 1;
  const double s = t - static_cast<double>(i);
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  const std::size_t k = static_cast<std::size_t>(i);
  double v = h00 * cdf_[k] + h01 * cdf_[k + 1] +
             table_du_ * (h10 * dens_[k] + h11 * dens_[k + 1]);
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return v;
}

double ScaleDecomposition::chi_bar(double kappa) const {
  return 1.0 - mollifier_cdf(u0(std::abs(kappa)));
}

double ScaleDecomposition::chi_bar_deriv(double kappa) const {
  const double a = std::abs(kappa);
  const double du = 2.0 / (1.0 - eta_);
  double d = -mollifier_h(u0(a)) * du;
  return kappa >= 0.0 ? d : -d;
}

double ScaleDecomposition::chi_n(double kappa, int n) const {
  if (n == 0) return mollifier_cdf(u0(std::abs(kappa) / eta_));
  return chi_bar_n(kappa, n) - chi_bar_n(kappa, n + 1);
}

double ScaleDecomposition::gamma_n(double kappa, int n) const {
  const double c = chi_n(kappa, n);
  if (c == 0.0) return 0.0;
  return c / (kappa * kappa);
}

double ScaleDecomposition::gamma_n_deriv(double kappa, int n) const {
  const double c = chi_n(kappa, n);
  const double sn = std::pow(eta_, -n);
  double dc;
  if (n == 0) {
    dc = -chi_bar_deriv(kappa / eta_) / eta_;
  } else {
    dc = sn * chi_bar_deriv(sn * kappa) - (sn / eta_) * chi_bar_deriv(sn * kappa / eta_);
  }
  if (c == 0.0 && dc == 0.0) return 0.0;
  return dc / (kappa * kappa) - 2.0 * c / (kappa * kappa * kappa);
}

double ScaleDecomposition::gamma_less(double kappa, int n) const {
  if (kappa == 0.0) return 0.0;
  // 1 - chi_bar_n(k) = cdf(u0(eta^{-n}|k|)), cancellation-free
  const double m = mollifier_cdf(u0(std::pow(eta_, -n) * std::abs(kappa)));
  if (m == 0.0) return 0.0;
  return m / (kappa * kappa);
}

double ScaleDecomposition::shifted_gamma(int n, double kappa_shift, const Mode& q,
                                         std::span<const double> omega) const {
  double wq = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) wq += omega[i] * q[i];
  return gamma_n(wq + kappa_shift, n);
}

int ScaleDecomposition::completion_scale(double kappa_min) const {
  if (kappa_min <= 0.0) throw std::invalid_argument("completion_scale: kappa_min must be > 0");
  int n = 0;
  double p = 1.0;
  while (p > kappa_min) {
    p *= eta_;
    ++n;
    if (n > 4096) throw std::runtime_error("completion_scale: runaway scale index");
  }
  return n;
}

std::vector<ScaleOccupancyRow> scale_occupancy(const ScaleDecomposition& scales,
                                               const DiophantineFrequency& freq,
                                               int bound) {
  const int d = freq.dim();
  double kmin = 0.0;
  bool have = false;
  std::vector<double> divisors;
  Mode q{0, 0, 0, 0};
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      if (is_zero(q)) return;
      const double k = std::abs(small_divisor(freq.omega, q));
      divisors.push_back(k);
      if (!have || k < kmin) {
        kmin = k;
        have = true;
      }
      return;
    }
    for (int c = -bound; c <= bound; ++c) {
      q[static_cast<std::size_t>(axis)] = c;
      rec(axis + 1);
    }
    q[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0);

  const int nmax = scales.completion_scale(kmin);
  std::vector<ScaleOccupancyRow> rows;
  for (int n = 0; n <= nmax; ++n) {
    ScaleOccupancyRow r;
    r.n = n;
    r.annulus_lo = std::pow(scales.eta(), n + 2);
    r.annulus_hi = n == 0 ? std::numeric_limits<double>::infinity()
                          : std::pow(scales.eta(), n);
    for (double k : divisors) {
      const double g = scales.gamma_n(k, n);
      if (g != 0.0) {
        ++r.mode_count;
        r.max_gamma_n = std::max(r.max_gamma_n, g);
      }
    }
    rows.push_back(r);
  }
  return rows;
}

std::string scale_occupancy_csv(const std::vector<ScaleOccupancyRow>& rows) {
  std::ostringstream os;
  os << "n,annulus_lo,annulus_hi,mode_count,max_gamma_n\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.n << ',' << r.annulus_lo << ',' << r.annulus_hi << ','
       << r.mode_count << ',' << r.max_gamma_n << '\n';
  return os.str();
}

}  // namespace torusrg
