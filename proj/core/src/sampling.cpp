#include "thinfilm/sampling.hpp"

#include <cmath>

namespace thinfilm {

QuasiRandom::QuasiRandom(int dim, std::uint64_t skip) : dim_(dim), engine_(static_cast<std::size_t>(dim)) {
  if (dim < 1) throw InvalidArgument("QuasiRandom: dim must be >= 1");
  // Skip the origin as well; it is a degenerate sample for most checks.
  engine_.discard((skip + 1) * static_cast<std::uint64_t>(dim));
}

std::vector<double> QuasiRandom::next() {
  std::vector<double> out(static_cast<std::size_t>(dim_));
  // The engine emits 64-bit integers; keep the top 53 bits for [0, 1).
  for (auto& v : out) v = std::ldexp(static_cast<double>(engine_() >> 11), -53);
  return out;
}

PointMatrixSampler::PointMatrixSampler(int ambient_dim, int rows, double x_range, double max_norm,
                                       std::uint64_t skip)
    : D_(ambient_dim),
      m_(rows),
      x_range_(x_range),
      max_norm_(max_norm),
      qrng_(ambient_dim + rows * ambient_dim + 1, skip) {}

void PointMatrixSampler::next(Vec& x, Mat& A) {
  const auto u = qrng_.next();
  x.resize(D_);
  A.resize(m_, D_);
  std::size_t k = 0;
  for (int i = 0; i < D_; ++i) x[i] = x_range_ * (2.0 * u[k++] - 1.0);
  for (int r = 0; r < m_; ++r) {
    for (int c = 0; c < D_; ++c) A(r, c) = 2.0 * u[k++] - 1.0;
  }
  const double n = A.norm();
  const double radius = max_norm_ * u[k];
  if (n > 0) {
    A *= radius / n;
  }
}

}  // namespace thinfilm
