#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "torusrg/fourier_map.hpp"

namespace torusrg {

struct DiophantineFrequency;

/// Smooth scale decomposition of the small-divisor operator built from the
/// standard mollifier h(k) = C e^{1/(k^2-1)} on |k| < 1:
///
///   chi_bar(k) = 1 on |k| <= eta, 0 on |k| >= 1, smoothly monotone between;
///   chi_bar_n(k) = chi_bar(eta^{-n} k);
///   chi_0 = 1 - chi_bar_1,  chi_n = chi_bar_n - chi_bar_{n+1}  (n >= 1);
///   gamma_n(k) = chi_n(k)/k^2.
///
/// chi_bar is served from a precomputed cumulative table of h (2048 panels,
/// cubic Hermite with exact slopes), checked against quadrature in tests.
class ScaleDecomposition {
 public:
  explicit ScaleDecomposition(double eta, int table_size = 2048);

  double eta() const { return eta_; }
  double mollifier_norm_C() const { return C_; }

  /// Normalized bump: C e^{1/(k^2-1)} for |k| < 1, else 0.
  double mollifier_h(double kappa) const;

  /// CDF of the mollifier: integral of h over (-inf, u]; exact 0/1 outside [-1,1].
  double mollifier_cdf(double u) const;

  double chi_bar(double kappa) const;
  double chi_bar_deriv(double kappa) const;   // analytic d/dk
  double chi_bar_n(double kappa, int n) const { return chi_bar(std::pow(eta_, -n) * kappa); }

  double chi_n(double kappa, int n) const;
  double gamma_n(double kappa, int n) const;  // chi_n(k)/k^2
  double gamma_n_deriv(double kappa, int n) const;  // analytic d/dk of gamma_n

  /// gamma_{<n}(k) = sum_{m<n} gamma_m(k) = (1 - chi_bar_n(k))/k^2, computed
  /// cancellation-free as cdf-form / k^2; zero at k = 0.
  double gamma_less(double kappa, int n) const;

  /// Shifted kernel Gamma_n[kappa](q) = gamma_n(omega.q + kappa).
  double shifted_gamma(int n, double kappa_shift, const Mode& q,
                       std::span<const double> omega) const;

  /// First scale n with chi_bar_n(|kappa|) = 0 for every |kappa| >= kappa_min,
  /// i.e. eta^n <= kappa_min: from there Gamma_{<n} equals 1/k^2 on the lattice.
  int completion_scale(double kappa_min) const;

 private:
  double u0(double abs_kappa) const { return (2.0 * abs_kappa - 1.0 - eta_) / (1.0 - eta_); }

  double eta_;
  double C_;
  int table_n_;
  double table_du_;
  std::vector<double> cdf_;    // H(u_i) on the uniform grid u_i in [-1, 1]
  std::vector<double> dens_;   // h(u_i)
};

struct ScaleOccupancyRow {
  int n = 0;
  double annulus_lo = 0.0;
  double annulus_hi = 0.0;
  int mode_count = 0;
  double max_gamma_n = 0.0;
};

/// Per-scale occupancy of the lattice window |q|_inf <= bound (scale n hosts
/// the modes with gamma_n(omega.q) != 0).
std::vector<ScaleOccupancyRow> scale_occupancy(const ScaleDecomposition& scales,
                                               const DiophantineFrequency& freq,
                                               int bound);

std::string scale_occupancy_csv(const std::vector<ScaleOccupancyRow>& rows);

}  // namespace torusrg
