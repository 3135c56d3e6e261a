#include "torusrg/fourier_map.hpp"

#include <cmath>

namespace torusrg {

CoeffVec FourierMap::eval(std::span<const double> theta) const {
  CoeffVec out = zero_coeff();
  for (const auto& [q, v] : coeffs_) {
    double phase = 0.0;
    for (int i = 0; i < dim_; ++i) phase += q[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    const Cd e = std::polar(1.0, -phase);
    for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] += e * v[static_cast<std::size_t>(i)];
  }
  return out;
}

double FourierMap::ell1_norm() const {
  double s = 0.0;
  for (const auto& [q, v] : coeffs_) s += coeff_norm(v, dim_);
  return s;
}

double FourierMap::weighted_norm(double sigma) const {
  if (sigma < 0.0) throw std::invalid_argument("weighted_norm: sigma must be >= 0");
  double s = 0.0;
  for (const auto& [q, v] : coeffs_) {
    const double term = std::exp(sigma * l1(q)) * coeff_norm(v, dim_);
    if (!std::isfinite(term)) throw std::overflow_error("weighted_norm: term overflow");
    s += term;
  }
  if (!std::isfinite(s)) throw std::overflow_error("weighted_norm: sum overflow");
  return s;
}

double FourierMap::hermitian_defect() const {
  double worst = 0.0;
  for (const auto& [q, v] : coeffs_) {
    const CoeffVec w = at(negate(q));
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
      s += std::norm(w[static_cast<std::size_t>(i)] - std::conj(v[static_cast<std::size_t>(i)]));
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

void FourierMap::enforce_hermitian() {
  std::map<Mode, CoeffVec> fixed;
  for (const auto& [q, v] : coeffs_) {
    const Mode nq = negate(q);
    if (fixed.count(q)) continue;
    const CoeffVec w = at(nq);
    CoeffVec a = zero_coeff(), b = zero_coeff();
    for (int i = 0; i < dim_; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      a[k] = 0.5 * (v[k] + std::conj(w[k]));
      b[k] = std::conj(a[k]);
    }
    if (q == nq) {
      // self-paired mode: force a real coefficient
      for (int i = 0; i < dim_; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        a[k] = Cd(v[k].real(), 0.0);
      }
      fixed[q] = a;
    } else {
      fixed[q] = a;
      fixed[nq] = b;
    }
  }
  coeffs_.clear();
  for (const auto& [q, v] : fixed)
    if (!coeff_is_zero(v, dim_)) coeffs_[q] = v;
}

FourierMap map_add(const FourierMap& a, const FourierMap& b) {
  FourierMap out(a.dim(), std::max(a.lattice_bound(), b.lattice_bound()),
                 a.real_valued() && b.real_valued());
  for (const auto& [q, v] : a.coeffs()) out.add(q, v);
  for (const auto& [q, v] : b.coeffs()) out.add(q, v);
  return out;
}

FourierMap map_sub(const FourierMap& a, const FourierMap& b) {
  FourierMap out(a.dim(), std::max(a.lattice_bound(), b.lattice_bound()),
                 a.real_valued() && b.real_valued());
  for (const auto& [q, v] : a.coeffs()) out.add(q, v);
  for (const auto& [q, v] : b.coeffs()) {
    CoeffVec w = v;
    for (int i = 0; i < out.dim(); ++i) w[static_cast<std::size_t>(i)] = -w[static_cast<std::size_t>(i)];
    out.add(q, w);
  }
  return out;
}

FourierMap map_scale(const FourierMap& a, double s) {
  FourierMap out(a.dim(), a.lattice_bound(), a.real_valued());
  for (const auto& [q, v] : a.coeffs()) {
    CoeffVec w = v;
    for (int i = 0; i < a.dim(); ++i) w[static_cast<std::size_t>(i)] *= s;
    out.set(q, w);
  }
  return out;
}

double l1_distance(const FourierMap& a, const FourierMap& b) {
  return map_sub(a, b).ell1_norm();
}

FourierMap shift(const FourierMap& m, std::span<const Cd> beta) {
  bool beta_real = true;
  for (std::size_t i = 0; i < beta.size(); ++i)
    if (beta[i].imag() != 0.0) beta_real = false;
  FourierMap out(m.dim(), m.lattice_bound(), m.real_valued() && beta_real);
  for (const auto& [q, v] : m.coeffs()) {
    Cd phase(0.0, 0.0);
    for (int i = 0; i < m.dim(); ++i) phase += static_cast<double>(q[static_cast<std::size_t>(i)]) * beta[static_cast<std::size_t>(i)];
    const Cd e = std::exp(Cd(0.0, 1.0) * phase);
    CoeffVec w = v;
    for (int i = 0; i < m.dim(); ++i) w[static_cast<std::size_t>(i)] *= e;
    out.set(q, w);
  }
  return out;
}

FourierMap shift_real(const FourierMap& m, std::span<const double> beta) {
  std::vector<Cd> b(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) b[i] = Cd(beta[i], 0.0);
  return shift(m, b);
}

static double dot_omega(const Mode& q, std::span<const double> omega) {
  double s = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) s += omega[i] * q[i];
  return s;
}

FourierMap apply_D2(const FourierMap& m, std::span<const double> omega) {
  FourierMap out(m.dim(), m.lattice_bound(), m.real_valued());
  for (const auto& [q, v] : m.coeffs()) {
    const double w2 = dot_omega(q, omega);
    CoeffVec w = v;
    for (int i = 0; i < m.dim(); ++i) w[static_cast<std::size_t>(i)] *= -(w2 * w2);
    out.set(q, w);
  }
  return out;
}

FourierMap apply_D(const FourierMap& m, std::span<const double> omega) {
  FourierMap out(m.dim(), m.lattice_bound(), m.real_valued());
  for (const auto& [q, v] : m.coeffs()) {
    const Cd f = Cd(0.0, -dot_omega(q, omega));
    CoeffVec w = v;
    for (int i = 0; i < m.dim(); ++i) w[static_cast<std::size_t>(i)] *= f;
    out.set(q, w);
  }
  return out;
}

FourierMap apply_G0(const FourierMap& m, std::span<const double> omega) {
  FourierMap out(m.dim(), m.lattice_bound(), m.real_valued());
  for (const auto& [q, v] : m.coeffs()) {
    if (is_zero(q)) continue;  // constant discarded per definition
    const double wq = dot_omega(q, omega);
    if (wq == 0.0)
      throw ResonantFrequencyError("apply_G0: exact resonance omega.q = 0", q);
    CoeffVec w = v;
    for (int i = 0; i < m.dim(); ++i) w[static_cast<std::size_t>(i)] /= (wq * wq);
    out.set(q, w);
  }
  return out;
}

FourierMap project_P(const FourierMap& m) {
  FourierMap out = m;
  out.set(Mode{0, 0, 0, 0}, zero_coeff());
  return out;
}

}  // namespace torusrg
