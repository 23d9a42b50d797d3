#pragma once

// Independent reference computations for the test suite. Nothing here calls
// into the library: each routine recomputes its quantity from first
// principles so that agreement with the library is meaningful.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

namespace oracle {

inline const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

/// Lattice points z in Z^D, |z_i| <= K, with |<z, nu>| < eta and in-plane
/// distance |z - <z,nu> nu| <= radius, for a unit normal nu.
inline std::set<std::vector<std::int64_t>> brute_force_periods(const std::vector<double>& nu, double eta,
                                                               double radius) {
  const int D = static_cast<int>(nu.size());
  const auto K = static_cast<std::int64_t>(std::ceil(radius + eta)) + 1;
  std::set<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> z(static_cast<std::size_t>(D), -K);
  while (true) {
    double dot = 0.0, sq = 0.0;
    for (int i = 0; i < D; ++i) {
      dot += static_cast<double>(z[static_cast<std::size_t>(i)]) * nu[static_cast<std::size_t>(i)];
      sq += static_cast<double>(z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)]);
    }
    const double inplane = std::sqrt(std::max(0.0, sq - dot * dot));
    if (std::abs(dot) < eta && inplane <= radius) out.insert(z);
    int i = 0;
    while (i < D && z[static_cast<std::size_t>(i)] == K) z[static_cast<std::size_t>(i++)] = -K;
    if (i == D) break;
    ++z[static_cast<std::size_t>(i)];
  }
  return out;
}

/// Largest empty gap of sorted points over [lo, hi] (including the ends).
inline double max_gap(std::vector<double> pts, double lo, double hi) {
  std::sort(pts.begin(), pts.end());
  double prev = lo, gap = 0.0;
  for (double p : pts) {
    if (p < lo || p > hi) continue;
    gap = std::max(gap, p - prev);
    prev = p;
  }
  return std::max(gap, hi - prev);
}

/// 1 / mean(1/a) over one period by composite Simpson.
inline double harmonic_mean(const std::function<double(double)>& a, int n = 20000) {
  const double hstep = 1.0 / n;
  double s = 1.0 / a(0.0) + 1.0 / a(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) / a(i * hstep);
  return 1.0 / (s * hstep / 3.0);
}

/// Central difference of a scalar function of a flat parameter vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& F,
                                       std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + step;
    const double fp = F(x);
    x[i] = x0 - step;
    const double fm = F(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Lower end of {y in [h-delta, h] : (h+eta-y) g <= C / log(delta/eta)} for
/// constant g, where C = h g.
inline double constant_g_slice_lower(double h, double delta, double eta) {
  return std::max(h - delta, h + eta - h / std::log(delta / eta));
}

/// Extremes of a + c cos(2 pi x1) cos(2 pi x2) on a fine grid.
inline std::array<double, 2> trig_product_range(double a, double c, int n = 400) {
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double v = a + c * std::cos(2.0 * M_PI * i / n) * std::cos(2.0 * M_PI * j / n);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

/// Distance of the integer point (p, q) to the line spanned by (phi, 1):
/// |p - q phi| / sqrt(1 + phi^2) for the golden normal (1, -phi).
inline double golden_defect(std::int64_t p, std::int64_t q) {
  return std::abs(static_cast<double>(p) - static_cast<double>(q) * kGolden) / std::sqrt(1.0 + kGolden * kGolden);
}

}  // namespace oracle
