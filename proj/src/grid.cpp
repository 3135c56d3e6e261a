#include "torusrg/grid.hpp"

#include <cmath>
#include <numbers>

namespace torusrg {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT, sign = -1 forward (e^{-2pi i mk/N}).
void fft_1d(Cd* a, int n, int sign) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / len;
    const Cd wl = std::polar(1.0, ang);
    for (int i = 0; i < n; i += len) {
      Cd w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const Cd u = a[i + k];
        const Cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// d-dimensional FFT over a row-major N^d array.
void fft_nd(std::vector<Cd>& a, int dim, int N, int sign) {
  std::vector<Cd> line(static_cast<std::size_t>(N));
  std::size_t total = a.size();
  for (int axis = dim - 1; axis >= 0; --axis) {
    // stride of this axis in row-major layout
    std::size_t stride = 1;
    for (int ax = axis + 1; ax < dim; ++ax) stride *= static_cast<std::size_t>(N);
    const std::size_t block = stride * static_cast<std::size_t>(N);
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (int k = 0; k < N; ++k) line[static_cast<std::size_t>(k)] = a[base + off + static_cast<std::size_t>(k) * stride];
        fft_1d(line.data(), N, sign);
        for (int k = 0; k < N; ++k) a[base + off + static_cast<std::size_t>(k) * stride] = line[static_cast<std::size_t>(k)];
      }
    }
  }
}

std::size_t grid_total(int dim, int N) {
  std::size_t t = 1;
  for (int i = 0; i < dim; ++i) t *= static_cast<std::size_t>(N);
  return t;
}

std::size_t flat_index_of_mode(const Mode& q, int dim, int N) {
  std::size_t idx = 0;
  for (int i = 0; i < dim; ++i) {
    int c = q[static_cast<std::size_t>(i)] % N;
    if (c < 0) c += N;
    idx = idx * static_cast<std::size_t>(N) + static_cast<std::size_t>(c);
  }
  return idx;
}

Mode mode_of_flat_index(std::size_t idx, int dim, int N) {
  Mode q{0, 0, 0, 0};
  for (int i = dim - 1; i >= 0; --i) {
    int c = static_cast<int>(idx % static_cast<std::size_t>(N));
    idx /= static_cast<std::size_t>(N);
    if (c > N / 2) c -= N;  // wrap to signed frequency
    q[static_cast<std::size_t>(i)] = c;
  }
  return q;
}

}  // namespace

std::vector<std::vector<Cd>> grid_transform_all(const FourierMap& m, int N) {
  if (!is_pow2(N)) throw std::invalid_argument("grid_transform: N must be a power of two");
  if (N < 2 * m.max_linf_mode() + 2)
    throw std::invalid_argument("grid_transform: N < 2Q+2 (aliasing)");
  const int d = m.dim();
  const std::size_t total = grid_total(d, N);
  std::vector<std::vector<Cd>> fields(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) {
    std::vector<Cd> a(total, Cd(0.0));
    for (const auto& [q, v] : m.coeffs())
      a[flat_index_of_mode(q, d, N)] += v[static_cast<std::size_t>(c)];
    // X(theta_k) = sum_q x(q) e^{-i q.theta_k} is the forward DFT of the
    // scattered coefficients.
    fft_nd(a, d, N, -1);
    fields[static_cast<std::size_t>(c)] = std::move(a);
  }
  return fields;
}

std::vector<Cd> grid_transform(const FourierMap& m, int N, int component) {
  auto all = grid_transform_all(m, N);
  return std::move(all[static_cast<std::size_t>(component)]);
}

FourierMap inverse_grid_transform(const std::vector<std::vector<Cd>>& samples,
                                  int dim, int N, int bound, bool real_valued,
                                  double* tail_mass) {
  if (!is_pow2(N)) throw std::invalid_argument("inverse_grid_transform: N must be a power of two");
  const std::size_t total = grid_total(dim, N);
  const double invN = 1.0 / static_cast<double>(total);
  std::vector<std::vector<Cd>> spec(samples.size());
  for (std::size_t c = 0; c < samples.size(); ++c) {
    spec[c] = samples[c];
    if (spec[c].size() != total) throw std::invalid_argument("inverse_grid_transform: bad sample size");
    fft_nd(spec[c], dim, N, +1);
    for (auto& z : spec[c]) z *= invN;
  }
  FourierMap out(dim, bound, real_valued);
  double tail = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Mode q = mode_of_flat_index(idx, dim, N);
    CoeffVec v = zero_coeff();
    for (std::size_t c = 0; c < spec.size(); ++c) v[c] = spec[c][idx];
    if (linf(q) <= bound)
      out.set(q, v);
    else
      tail += coeff_norm(v, dim);
  }
  if (tail_mass) *tail_mass = tail;
  if (real_valued) out.enforce_hermitian();
  return out;
}

namespace {

// Direct evaluation of sum_p c_p e^{-i p.y} at every grid point, where
// y = theta_k + X(theta_k). Outputs the gradient (d fields) and optionally
// the Hessian (d(d+1)/2 unique fields), sharing one phase sweep.
struct DirectSummation {
  int dim = 0;
  int N = 0;
  std::vector<Mode> modes;       // sorted lexicographically
  std::vector<Cd> vcoef;         // v(q) per mode
  int pmax = 0;

  void run(const std::vector<std::vector<Cd>>& xfields, double lambda,
           std::vector<std::vector<Cd>>& grad,
           std::vector<std::vector<Cd>>* hess) const {
    const std::size_t total = xfields.empty() ? 0 : xfields[0].size();
    const int d = dim;
    const std::size_t nh = static_cast<std::size_t>(d * (d + 1) / 2);
    grad.assign(static_cast<std::size_t>(d), std::vector<Cd>(total, Cd(0.0)));
    if (hess) hess->assign(nh, std::vector<Cd>(total, Cd(0.0)));

    // per-axis power tables B_i^m for m in [-pmax, pmax]
    const int tw = 2 * pmax + 1;
    std::vector<Cd> table(static_cast<std::size_t>(d * tw));
    std::vector<double> theta(static_cast<std::size_t>(d));

    for (std::size_t k = 0; k < total; ++k) {
      // grid coordinates of point k (row-major)
      std::size_t rem = k;
      for (int i = d - 1; i >= 0; --i) {
        theta[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi *
            static_cast<double>(rem % static_cast<std::size_t>(N)) / static_cast<double>(N);
        rem /= static_cast<std::size_t>(N);
      }
      for (int i = 0; i < d; ++i) {
        const double y = theta[static_cast<std::size_t>(i)] + xfields[static_cast<std::size_t>(i)][k].real();
        const Cd b = std::polar(1.0, -y);
        Cd* row = table.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(tw);
        row[pmax] = Cd(1.0, 0.0);
        for (int m = 1; m <= pmax; ++m) {
          row[pmax + m] = row[pmax + m - 1] * b;
          row[pmax - m] = std::conj(row[pmax + m]);
        }
      }
      for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        const Mode& p = modes[mi];
        Cd phase = table[static_cast<std::size_t>(pmax + p[0])];
        for (int i = 1; i < d; ++i)
          phase *= table[static_cast<std::size_t>(i) * static_cast<std::size_t>(tw) +
                         static_cast<std::size_t>(pmax + p[static_cast<std::size_t>(i)])];
        const Cd base = lambda * vcoef[mi] * phase;
        // gradient of e^{-i p.theta}: factor -i p_a
        for (int a = 0; a < d; ++a)
          grad[static_cast<std::size_t>(a)][k] += Cd(0.0, -static_cast<double>(p[static_cast<std::size_t>(a)])) * base;
        if (hess) {
          std::size_t h = 0;
          for (int a = 0; a < d; ++a)
            for (int b2 = a; b2 < d; ++b2, ++h)
              (*hess)[h][k] += Cd(-static_cast<double>(p[static_cast<std::size_t>(a)]) *
                                  static_cast<double>(p[static_cast<std::size_t>(b2)]), 0.0) * base;
        }
      }
    }
  }
};

ComposeResult compose_impl(const Potential& pot, const FourierMap& X, double lambda,
                           int out_bound, HessianKernel* hess_out,
                           double tail_tolerance, int oversample) {
  if (!X.real_valued())
    throw std::invalid_argument("compose_w0: X must be real-valued-flagged");
  const int d = pot.dim();
  ComposeResult res;

  if (lambda == 0.0) {
    res.map = FourierMap(d, out_bound, true);
    if (hess_out) {
      hess_out->dim = d;
      hess_out->blocks.clear();
    }
    return res;
  }

  if (X.empty() && !hess_out) {
    // no composition: exactly lambda dV on the stored lattice
    res.map = gradient_map(pot, lambda, out_bound);
    for (const auto& [q, v] : pot.coeffs())
      if (!is_zero(q) && linf(q) > out_bound)
        res.tail_mass += std::abs(lambda) * static_cast<double>(l1(q)) * std::abs(v);
    res.tail_warning = res.tail_mass > tail_tolerance;
    return res;
  }

  const int bw_x = X.max_linf_mode();
  const int bw_v = pot.max_linf_mode();
  const int joint = std::max(1, bw_x + bw_v);
  int N = next_pow2(std::max(oversample * joint, 2 * std::max(out_bound, bw_x) + 2));

  DirectSummation ds;
  ds.dim = d;
  ds.N = N;
  ds.pmax = bw_v;
  ds.modes.reserve(pot.coeffs().size());
  for (const auto& [p, v] : pot.coeffs()) {
    if (is_zero(p)) continue;  // v(0) never enters dV
    ds.modes.push_back(p);
    ds.vcoef.push_back(v);
  }

  std::vector<std::vector<Cd>> xfields;
  if (X.empty()) {
    const std::size_t total = [&] {
      std::size_t t = 1;
      for (int i = 0; i < d; ++i) t *= static_cast<std::size_t>(N);
      return t;
    }();
    xfields.assign(static_cast<std::size_t>(d), std::vector<Cd>(total, Cd(0.0)));
  } else {
    xfields = grid_transform_all(X, N);
  }

  std::vector<std::vector<Cd>> grad;
  std::vector<std::vector<Cd>> hess;
  ds.run(xfields, lambda, grad, hess_out ? &hess : nullptr);

  res.grid_size = N;
  res.map = inverse_grid_transform(grad, d, N, out_bound, true, &res.tail_mass);
  res.tail_warning = res.tail_mass > tail_tolerance;

  if (hess_out) {
    hess_out->dim = d;
    hess_out->blocks.clear();
    double htail = 0.0;
    std::size_t h = 0;
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b, ++h) {
        std::vector<std::vector<Cd>> one(1, hess[h]);
        FourierMap comp = inverse_grid_transform(one, d, N, out_bound, false, &htail);
        for (const auto& [p, v] : comp.coeffs()) {
          auto& blk = hess_out->blocks[p];
          blk[static_cast<std::size_t>(a * kMaxDim + b)] = v[0];
          if (a != b) blk[static_cast<std::size_t>(b * kMaxDim + a)] = v[0];
        }
      }
    }
    // drop negligible blocks to keep downstream linear algebra sparse
    for (auto it = hess_out->blocks.begin(); it != hess_out->blocks.end();) {
      double f = 0.0;
      for (const auto& c : it->second) f += std::norm(c);
      if (std::sqrt(f) < 1e-300)
        it = hess_out->blocks.erase(it);
      else
        ++it;
    }
  }
  return res;
}

}  // namespace

ComposeResult compose_w0(const Potential& pot, const FourierMap& X, double lambda,
                         int out_bound, double tail_tolerance, int oversample) {
  return compose_impl(pot, X, lambda, out_bound, nullptr, tail_tolerance, oversample);
}

ComposeResult compose_w0_with_hessian(const Potential& pot, const FourierMap& X,
                                      double lambda, int out_bound,
                                      HessianKernel& hess, double tail_tolerance,
                                      int oversample) {
  return compose_impl(pot, X, lambda, out_bound, &hess, tail_tolerance, oversample);
}

}  // namespace torusrg
