#include "torusrg/frequency.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "torusrg/scales.hpp"

namespace torusrg {

double small_divisor(std::span<const double> omega, const Mode& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) s += omega[i] * q[i];
  return s;
}

DiophantineFrequency certify(std::span<const double> omega, double nu, int Qmax) {
  if (Qmax < 1) throw std::invalid_argument("certify: Qmax must be >= 1");
  const int d = static_cast<int>(omega.size());
  DiophantineFrequency out;
  out.omega.assign(omega.begin(), omega.end());
  out.nu = nu;
  out.Qmax = Qmax;
  out.gamma = std::numeric_limits<double>::infinity();

  Mode q{0, 0, 0, 0};
  std::function<void(int, int)> rec = [&](int axis, int budget) {
    if (axis == d) {
      if (is_zero(q)) return;
      const double wq = std::abs(small_divisor(omega, q));
      if (wq == 0.0)
        throw ResonantFrequencyError("certify: exact resonance omega.q = 0", q);
      const double val = wq * std::pow(static_cast<double>(l1(q)), nu);
      if (val < out.gamma) {
        out.gamma = val;
        out.argmin = q;
      }
      return;
    }
    for (int c = -budget; c <= budget; ++c) {
      q[static_cast<std::size_t>(axis)] = c;
      rec(axis + 1, budget - std::abs(c));
    }
    q[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0, Qmax);  // enumerates the l1 ball |q|_1 <= Qmax
  return out;
}

std::vector<double> parse_frequency_spec(const std::string& spec) {
  if (spec == "golden") {
    return {1.0, 0.5 * (1.0 + std::sqrt(5.0))};
  }
  if (spec == "cubic") {
    // real root of x^3 - x - 1 (plastic number), by Newton from 1.3
    double r = 1.3;
    for (int i = 0; i < 64; ++i) r -= (r * r * r - r - 1.0) / (3.0 * r * r - 1.0);
    return {1.0, r, r * r};
  }
  std::vector<double> v;
  std::string s = spec;
  for (auto& c : s)
    if (c == '[' || c == ']' || c == '(' || c == ')') c = ' ';
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    v.push_back(std::stod(item));
  }
  if (v.empty() || v.size() > kMaxDim)
    throw std::invalid_argument("parse_frequency_spec: bad frequency spec '" + spec + "'");
  return v;
}

std::vector<int> scale_set(const DiophantineFrequency& freq, const Mode& q,
                           const ScaleDecomposition& scales) {
  if (is_zero(q)) throw std::invalid_argument("scale_set: q must be nonzero");
  const double k = std::abs(small_divisor(freq.omega, q));
  std::vector<int> out;
  // chi_n is supported in (eta^{n+2}, eta^n); only two candidates can host k
  const double eta = scales.eta();
  int n0 = 0;
  if (k < 1.0) {
    n0 = static_cast<int>(std::floor(std::log(k) / std::log(eta))) - 2;
    if (n0 < 0) n0 = 0;
  }
  for (int n = n0; n <= n0 + 4; ++n)
    if (scales.chi_n(k, n) != 0.0) out.push_back(n);
  return out;
}

}  // namespace torusrg
