#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace torusrg {

using Cd = std::complex<double>;

// Hard cap on the torus dimension; everything at desk scale is d <= 4.
inline constexpr int kMaxDim = 4;

// Lattice point in Z^d, stored with trailing zeros so lexicographic
// comparison works independently of d.
using Mode = std::array<int, kMaxDim>;

inline Mode make_mode(std::initializer_list<int> v) {
  Mode m{0, 0, 0, 0};
  int i = 0;
  for (int x : v) m[static_cast<std::size_t>(i++)] = x;
  return m;
}

inline Mode mode_from(std::span<const int> v) {
  Mode m{0, 0, 0, 0};
  for (std::size_t i = 0; i < v.size() && i < kMaxDim; ++i) m[i] = v[i];
  return m;
}

inline Mode negate(const Mode& q) {
  return {-q[0], -q[1], -q[2], -q[3]};
}

inline Mode mode_add(const Mode& a, const Mode& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

inline Mode mode_sub(const Mode& a, const Mode& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

inline int l1(const Mode& q) {
  return std::abs(q[0]) + std::abs(q[1]) + std::abs(q[2]) + std::abs(q[3]);
}

inline int linf(const Mode& q) {
  int m = 0;
  for (int c : q) m = std::max(m, std::abs(c));
  return m;
}

inline bool is_zero(const Mode& q) { return q == Mode{0, 0, 0, 0}; }

// Complex d-vector coefficient; slots beyond dim stay zero.
using CoeffVec = std::array<Cd, kMaxDim>;

inline CoeffVec zero_coeff() { return {Cd(0), Cd(0), Cd(0), Cd(0)}; }

inline double coeff_norm(const CoeffVec& v, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += std::norm(v[static_cast<std::size_t>(i)]);
  return std::sqrt(s);
}

inline bool coeff_is_zero(const CoeffVec& v, int dim) {
  for (int i = 0; i < dim; ++i)
    if (v[static_cast<std::size_t>(i)] != Cd(0)) return false;
  return true;
}

class ResonantFrequencyError : public std::runtime_error {
 public:
  ResonantFrequencyError(const std::string& msg, Mode q)
      : std::runtime_error(msg), mode(q) {}
  Mode mode;
};

/// Truncated vector-valued Fourier series on Z^d with the convention
///   X(theta) = sum_q x(q) e^{-i q.theta}.
/// Absent modes are exactly zero; stored modes satisfy |q|_inf <= bound.
/// A map flagged real-valued keeps the Hermitian pairing x(-q) = conj(x(q)).
class FourierMap {
 public:
  FourierMap() : dim_(1), bound_(0), real_(true) {}
  FourierMap(int dim, int lattice_bound, bool real_valued)
      : dim_(dim), bound_(lattice_bound), real_(real_valued) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("FourierMap: dim out of range");
    if (lattice_bound < 0) throw std::invalid_argument("FourierMap: negative lattice bound");
  }

  int dim() const { return dim_; }
  int lattice_bound() const { return bound_; }
  bool real_valued() const { return real_; }
  void set_real_valued(bool f) { real_ = f; }

  const std::map<Mode, CoeffVec>& coeffs() const { return coeffs_; }
  std::size_t mode_count() const { return coeffs_.size(); }
  bool empty() const { return coeffs_.empty(); }

  CoeffVec at(const Mode& q) const {
    auto it = coeffs_.find(q);
    return it == coeffs_.end() ? zero_coeff() : it->second;
  }

  void set(const Mode& q, const CoeffVec& v) {
    if (linf(q) > bound_) throw std::out_of_range("FourierMap::set: mode outside lattice bound");
    if (coeff_is_zero(v, dim_))
      coeffs_.erase(q);
    else
      coeffs_[q] = v;
  }

  void add(const Mode& q, const CoeffVec& v) {
    auto cur = at(q);
    for (int i = 0; i < dim_; ++i) cur[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
    set(q, cur);
  }

  /// Drops stored modes with |x(q)| below `threshold` (absolute).
  void prune(double threshold) {
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
      if (coeff_norm(it->second, dim_) < threshold)
        it = coeffs_.erase(it);
      else
        ++it;
    }
  }

  int max_linf_mode() const {
    int m = 0;
    for (const auto& [q, v] : coeffs_) m = std::max(m, linf(q));
    return m;
  }

  /// sum_q x(q) e^{-i q.theta} over stored modes.
  CoeffVec eval(std::span<const double> theta) const;

  /// sum_q |x(q)| with |.| the Euclidean norm on C^d.
  double ell1_norm() const;

  /// sum_q e^{sigma |q|_1} |x(q)|; throws on overflow.
  double weighted_norm(double sigma) const;

  /// max_q |x(-q) - conj(x(q))| over stored modes.
  double hermitian_defect() const;

  /// Symmetrizes stored coefficients so x(-q) = conj(x(q)) exactly.
  void enforce_hermitian();

 private:
  int dim_;
  int bound_;
  bool real_;
  std::map<Mode, CoeffVec> coeffs_;
};

FourierMap map_add(const FourierMap& a, const FourierMap& b);
FourierMap map_sub(const FourierMap& a, const FourierMap& b);
FourierMap map_scale(const FourierMap& a, double s);
double l1_distance(const FourierMap& a, const FourierMap& b);

/// Translation tau_beta: coefficient-wise multiplication by e^{i q.beta}.
/// The real flag survives only a purely real shift of a real map.
FourierMap shift(const FourierMap& m, std::span<const Cd> beta);
FourierMap shift_real(const FourierMap& m, std::span<const double> beta);

/// D^2 multiplies x(q) by -(omega.q)^2, with D = omega . d/dtheta.
FourierMap apply_D2(const FourierMap& m, std::span<const double> omega);

/// D multiplies x(q) by -i (omega.q).
FourierMap apply_D(const FourierMap& m, std::span<const double> omega);

/// G0 = (-D^2)^{-1}: divides by (omega.q)^2 for q != 0 and zeroes q = 0.
/// Throws ResonantFrequencyError when a stored q != 0 has omega.q == 0.
FourierMap apply_G0(const FourierMap& m, std::span<const double> omega);

/// P projects out the constant: zeroes the q = 0 coefficient.
FourierMap project_P(const FourierMap& m);

}  // namespace torusrg
