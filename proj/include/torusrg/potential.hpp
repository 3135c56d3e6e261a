#pragma once

#include <cstdint>
#include <map>

#include "torusrg/fourier_map.hpp"

namespace torusrg {

/// Scalar potential V(theta) = sum_q v(q) e^{-i q.theta} with Hermitian
/// coefficients (v(-q) = conj(v(q)) for real V) and a declared smoothness
/// index ell. Only dV enters the dynamics, so v(0) is irrelevant.
class Potential {
 public:
  Potential() : dim_(1), ell_(1) {}
  Potential(int dim, int ell) : dim_(dim), ell_(ell) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Potential: dim out of range");
  }

  int dim() const { return dim_; }
  int ell() const { return ell_; }
  const std::map<Mode, Cd>& coeffs() const { return v_; }

  Cd at(const Mode& q) const {
    auto it = v_.find(q);
    return it == v_.end() ? Cd(0.0) : it->second;
  }

  void set(const Mode& q, Cd v) {
    if (v == Cd(0.0))
      v_.erase(q);
    else
      v_[q] = v;
  }

  int max_linf_mode() const {
    int m = 0;
    for (const auto& [q, v] : v_) m = std::max(m, linf(q));
    return m;
  }

  double hermitian_defect() const {
    double worst = 0.0;
    for (const auto& [q, v] : v_) worst = std::max(worst, std::abs(at(negate(q)) - std::conj(v)));
    return worst;
  }

  /// V at a complex point xi (for strip-supremum diagnostics).
  Cd eval_complex(std::span<const Cd> xi) const {
    Cd s(0.0);
    for (const auto& [q, v] : v_) {
      Cd phase(0.0);
      for (int i = 0; i < dim_; ++i) phase += static_cast<double>(q[static_cast<std::size_t>(i)]) * xi[static_cast<std::size_t>(i)];
      s += v * std::exp(Cd(0.0, -1.0) * phase);
    }
    return s;
  }

  bool same_coeffs(const Potential& other) const { return v_ == other.v_; }

 private:
  int dim_;
  int ell_;
  std::map<Mode, Cd> v_;
};

/// Coefficients of lambda * dV as a vector-valued map: lambda * (-i q) v(q).
FourierMap gradient_map(const Potential& pot, double lambda, int out_bound);

/// Sharp l_inf-ball truncation to |q|_inf <= gamma.
Potential truncate(const Potential& pot, double gamma);

/// C = sum_q |q|_1^{ell+1} |v(q)| over the stored window.
double smoothness_constant(const Potential& pot, int ell);

/// Deterministic synthetic potential with unit-modulus pseudo-random phases:
/// v(q) = rho(q) / |q|_1^{ell+2+d} on 0 < |q|_inf <= mode_window, v(0) = 0,
/// v(-q) = conj(v(q)). Identical (d, ell, window, seed) give bit-identical
/// coefficients.
Potential synth_ck_potential(int d, int ell, int mode_window, std::uint64_t seed);

struct TailBound {
  double weighted_sum = 0.0;  // sum over the annulus of |q|_1 |v(q)| e^{|q|_1/(2 gamma_j)}
  double ratio = 0.0;         // weighted_sum / gamma_{j-1}^{-ell}
};

/// Measures the annulus gamma_{j-1} < |q|_inf <= gamma_j of the gradient
/// difference dV^j - dV^{j-1} against the gamma_{j-1}^{-ell} envelope.
TailBound tail_difference_bound(const Potential& pot, int ell, int j, int M);

}  // namespace torusrg
