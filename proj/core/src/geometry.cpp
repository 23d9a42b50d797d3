#include "thinfilm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace thinfilm {
namespace {

__extension__ using i128 = __int128;

void check_ambient_dim(Eigen::Index n) {
  if (n < 2 || n > kMaxDim) {
    throw InvalidArgument("frame normal must have 2 or 3 components (d = 1 or 2), got " +
                          std::to_string(n));
  }
}

std::int64_t lcm_checked(std::int64_t a, std::int64_t b) {
  const std::int64_t g = std::gcd(a, b);
  const i128 l = static_cast<i128>(a / g) * b;
  if (l > INT64_MAX) throw InvalidArgument("rational normal: common denominator overflows 64 bits");
  return static_cast<std::int64_t>(l);
}

/// Flip so that the first nonzero entry is positive.
void canonical_sign(IntVec& z) {
  for (auto v : z) {
    if (v == 0) continue;
    if (v < 0) {
      for (auto& w : z) w = -w;
    }
    return;
  }
}

double norm2(const IntVec& z) {
  double s = 0;
  for (auto v : z) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

/// All nonzero integer points of Pi with sup norm <= bound, canonical sign,
/// deduplicated, sorted by length then lexicographically.
std::vector<IntVec> plane_lattice_points(const IsometryFrame& frame, std::int64_t bound) {
  const int D = frame.ambient_dim();
  // Pivot on the largest normal component and solve for it.
  Eigen::Index pivot = 0;
  frame.normal.cwiseAbs().maxCoeff(&pivot);

  std::vector<IntVec> out;
  IntVec z(D, 0);
  std::vector<int> free_axes;
  for (int i = 0; i < D; ++i) {
    if (i != pivot) free_axes.push_back(static_cast<int>(i));
  }

  const auto visit = [&]() {
    if (frame.integer_normal) {
      const IntVec& n = *frame.integer_normal;
      i128 s = 0;
      for (int i : free_axes) s += static_cast<i128>(n[i]) * z[i];
      if (s % n[pivot] != 0) return;
      const i128 zp = -s / n[pivot];
      if (zp > bound || zp < -bound) return;
      z[pivot] = static_cast<std::int64_t>(zp);
    } else {
      double s = 0;
      for (int i : free_axes) s += frame.normal[i] * static_cast<double>(z[i]);
      const double zp = std::nearbyint(-s / frame.normal[pivot]);
      if (std::abs(zp) > static_cast<double>(bound)) return;
      z[pivot] = static_cast<std::int64_t>(zp);
      double dot = 0;
      for (int i = 0; i < D; ++i) dot += frame.normal[i] * static_cast<double>(z[i]);
      if (std::abs(dot) >= 1e-12) return;
    }
    if (std::all_of(z.begin(), z.end(), [](auto v) { return v == 0; })) return;
    IntVec c = z;
    canonical_sign(c);
    out.push_back(std::move(c));
  };

  if (free_axes.size() == 1) {
    for (std::int64_t a = -bound; a <= bound; ++a) {
      z[free_axes[0]] = a;
      visit();
    }
  } else {
    for (std::int64_t a = -bound; a <= bound; ++a) {
      for (std::int64_t b = -bound; b <= bound; ++b) {
        z[free_axes[0]] = a;
        z[free_axes[1]] = b;
        visit();
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const IntVec& a, const IntVec& b) {
    const double na = norm2(a), nb = norm2(b);
    if (na != nb) return na < nb;
    return a < b;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool independent_of(const std::vector<IntVec>& basis, const IntVec& z) {
  if (basis.empty()) return true;
  if (basis.size() >= 2) return false;  // at most d = 2 in-plane directions
  const IntVec& g = basis.front();
  if (z.size() == 2) {
    return static_cast<i128>(g[0]) * z[1] - static_cast<i128>(g[1]) * z[0] != 0;
  }
  const i128 c0 = static_cast<i128>(g[1]) * z[2] - static_cast<i128>(g[2]) * z[1];
  const i128 c1 = static_cast<i128>(g[2]) * z[0] - static_cast<i128>(g[0]) * z[2];
  const i128 c2 = static_cast<i128>(g[0]) * z[1] - static_cast<i128>(g[1]) * z[0];
  return c0 != 0 || c1 != 0 || c2 != 0;
}

}  // namespace

IsometryFrame build_frame(const Vec& normal) {
  check_ambient_dim(normal.size());
  const double len = normal.norm();
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw InvalidArgument("frame normal must be a finite nonzero vector");
  }
  const int D = static_cast<int>(normal.size());
  IsometryFrame frame;
  frame.dim_d = D - 1;
  frame.normal = normal / len;

  std::vector<int> order(D);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(frame.normal[a]) < std::abs(frame.normal[b]);
  });

  for (int k = 0; k < frame.dim_d; ++k) {
    Vec v = Vec::Zero(D);
    v[order[k]] = 1.0;
    v -= v.dot(frame.normal) * frame.normal;
    for (const auto& p : frame.basis) v -= v.dot(p) * p;
    // Second pass keeps R orthogonal to round-off.
    v -= v.dot(frame.normal) * frame.normal;
    for (const auto& p : frame.basis) v -= v.dot(p) * p;
    frame.basis.push_back(v / v.norm());
  }

  frame.matrix_R = SquareMat::Zero(D, D);
  for (int k = 0; k < frame.dim_d; ++k) frame.matrix_R.col(k) = frame.basis[k];
  frame.matrix_R.col(D - 1) = frame.normal;
  return frame;
}

IsometryFrame build_frame(const std::vector<Rational>& normal) {
  check_ambient_dim(static_cast<Eigen::Index>(normal.size()));
  std::int64_t den = 1;
  for (const auto& r : normal) den = lcm_checked(den, r.denominator());
  IntVec n;
  for (const auto& r : normal) {
    const i128 v = static_cast<i128>(r.numerator()) * (den / r.denominator());
    if (v > INT64_MAX || v < -INT64_MAX) throw InvalidArgument("rational normal overflows 64 bits");
    n.push_back(static_cast<std::int64_t>(v));
  }
  std::int64_t g = 0;
  for (auto v : n) g = std::gcd(g, v);
  if (g == 0) throw InvalidArgument("frame normal must be a finite nonzero vector");
  Vec as_double(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) {
    n[i] /= g;
    as_double[static_cast<Eigen::Index>(i)] = static_cast<double>(n[i]);
  }
  IsometryFrame frame = build_frame(as_double);
  frame.integer_normal = std::move(n);
  return frame;
}

IsometryFrame frame_from_angle(double theta) {
  Vec n(2);
  n << -std::sin(theta), std::cos(theta);
  return build_frame(n);
}

CommensurabilityReport classify_rationality(const IsometryFrame& frame,
                                            std::int64_t denominator_bound) {
  if (denominator_bound < 1) throw InvalidArgument("denominator_bound must be >= 1");
  CommensurabilityReport report;
  report.certified = frame.exact();
  for (auto& z : plane_lattice_points(frame, denominator_bound)) {
    if (static_cast<int>(report.generators.size()) == frame.dim_d) break;
    if (independent_of(report.generators, z)) report.generators.push_back(std::move(z));
  }
  report.lattice_rank = static_cast<int>(report.generators.size());
  return report;
}

std::optional<std::vector<IntVec>> axis_lattice_vectors(const IsometryFrame& frame,
                                                        std::int64_t bound) {
  if (bound < 1) throw InvalidArgument("search bound must be >= 1");
  const auto points = plane_lattice_points(frame, bound);
  std::vector<IntVec> axes;
  for (int i = 0; i < frame.dim_d; ++i) {
    std::optional<IntVec> found;
    for (const auto& z : points) {
      Vec zv(frame.ambient_dim());
      for (int k = 0; k < frame.ambient_dim(); ++k) zv[k] = static_cast<double>(z[k]);
      const double len = zv.norm();
      bool aligned = true;
      for (int j = 0; j < frame.dim_d; ++j) {
        if (j != i && std::abs(zv.dot(frame.basis[j])) > 1e-9 * len) aligned = false;
      }
      if (!aligned) continue;
      IntVec oriented = z;
      if (zv.dot(frame.basis[i]) < 0) {
        for (auto& v : oriented) v = -v;
      }
      found = oriented;
      break;  // points are sorted by length
    }
    if (!found) return std::nullopt;
    axes.push_back(*found);
  }
  return axes;
}

double orthogonality_defect(const IsometryFrame& frame) {
  const auto D = frame.matrix_R.rows();
  return (frame.matrix_R.transpose() * frame.matrix_R - SquareMat::Identity(D, D))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace thinfilm
