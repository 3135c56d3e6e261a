#include "torusrg/potential.hpp"

#include <cmath>
#include <functional>

#include "torusrg/ladder.hpp"

namespace torusrg {

FourierMap gradient_map(const Potential& pot, double lambda, int out_bound) {
  FourierMap out(pot.dim(), out_bound, true);
  if (lambda == 0.0) return out;
  for (const auto& [q, v] : pot.coeffs()) {
    if (is_zero(q) || linf(q) > out_bound) continue;
    CoeffVec c = zero_coeff();
    for (int i = 0; i < pot.dim(); ++i)
      c[static_cast<std::size_t>(i)] = lambda * Cd(0.0, -static_cast<double>(q[static_cast<std::size_t>(i)])) * v;
    out.set(q, c);
  }
  return out;
}

Potential truncate(const Potential& pot, double gamma) {
  Potential out(pot.dim(), pot.ell());
  for (const auto& [q, v] : pot.coeffs())
    if (linf(q) <= gamma) out.set(q, v);
  return out;
}

double smoothness_constant(const Potential& pot, int ell) {
  double s = 0.0;
  for (const auto& [q, v] : pot.coeffs()) {
    if (is_zero(q)) continue;
    s += std::pow(static_cast<double>(l1(q)), ell + 1) * std::abs(v);
  }
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mode_hash(std::uint64_t seed, const Mode& q) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  for (int i = 0; i < kMaxDim; ++i)
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::int64_t>(q[static_cast<std::size_t>(i)])) + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
  return h;
}

// canonical representative of the {q, -q} pair: first nonzero entry positive
bool is_canonical(const Mode& q) {
  for (int c : q) {
    if (c > 0) return true;
    if (c < 0) return false;
  }
  return true;
}

void enumerate_box(int d, int window, const std::function<void(const Mode&)>& fn) {
  Mode q{0, 0, 0, 0};
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      fn(q);
      return;
    }
    for (int c = -window; c <= window; ++c) {
      q[static_cast<std::size_t>(axis)] = c;
      rec(axis + 1);
    }
    q[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0);
}

}  // namespace

Potential synth_ck_potential(int d, int ell, int mode_window, std::uint64_t seed) {
  if (ell < 1) throw std::invalid_argument("synth_ck_potential: ell must be >= 1");
  Potential out(d, ell);
  const double expo = static_cast<double>(ell + 2 + d);
  enumerate_box(d, mode_window, [&](const Mode& q) {
    if (is_zero(q) || !is_canonical(q)) return;
    const std::uint64_t h = mode_hash(seed, q);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
    const double phase = 2.0 * M_PI * u;
    const Cd v = std::polar(std::pow(static_cast<double>(l1(q)), -expo), phase);
    out.set(q, v);
    out.set(negate(q), std::conj(v));
  });
  return out;
}

TailBound tail_difference_bound(const Potential& pot, int ell, int j, int M) {
  if (j < 1) throw std::invalid_argument("tail_difference_bound: j must be >= 1");
  const LadderConstants cj = ladder_constants(M, j);
  const LadderConstants cjm1 = ladder_constants(M, j - 1);
  TailBound tb;
  for (const auto& [q, v] : pot.coeffs()) {
    const int a = linf(q);
    if (a <= cjm1.gamma_j || a > cj.gamma_j) continue;
    const double aq = static_cast<double>(l1(q));
    tb.weighted_sum += aq * std::abs(v) * std::exp(aq / (2.0 * cj.gamma_j));
  }
  tb.ratio = tb.weighted_sum * std::pow(cjm1.gamma_j, ell);
  return tb;
}

LadderConstants ladder_constants(int M, int j) {
  if (M < 1 || j < 0) throw std::invalid_argument("ladder_constants: need M >= 1, j >= 0");
  if (j > 60) throw std::overflow_error("ladder_constants: j too large");
  const double p = std::pow(8.0, j);
  LadderConstants c;
  c.gamma_j = static_cast<double>(M) * p;
  c.alpha_j = 64.0 / (static_cast<double>(M) * p);          // 1/(M 8^{j-2})
  c.alpha_bar_j = 1.0 / (8.0 * static_cast<double>(M) * p); // 1/(M 8^{j+1})
  if (!std::isfinite(c.gamma_j)) throw std::overflow_error("ladder_constants: overflow");
  return c;
}

ApproximationLadder::ApproximationLadder(Potential pot, int M, int jmax)
    : pot_(std::move(pot)), M_(M), jmax_(jmax), zero_(pot_.dim(), pot_.ell()) {
  trunc_.reserve(static_cast<std::size_t>(jmax_ + 1));
  for (int j = 0; j <= jmax_; ++j)
    trunc_.push_back(truncate(pot_, ladder_constants(M_, j).gamma_j));
}

const Potential& ApproximationLadder::truncation(int j) const {
  if (j < 0) return zero_;
  if (j > jmax_) throw std::out_of_range("ApproximationLadder::truncation: j beyond jmax");
  return trunc_[static_cast<std::size_t>(j)];
}

int ApproximationLadder::covering_stage() const {
  const int top = pot_.max_linf_mode();
  for (int j = 0; j <= jmax_; ++j)
    if (ladder_constants(M_, j).gamma_j >= top) return j;
  return jmax_;
}

}  // namespace torusrg
