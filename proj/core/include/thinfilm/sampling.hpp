#pragma once

#include "thinfilm/types.hpp"

#include <boost/random/sobol.hpp>

#include <cstdint>
#include <vector>

namespace thinfilm {

/// Deterministic low-discrepancy points in [0,1)^dim (Sobol), optionally
/// skipping the first `skip` points.
class QuasiRandom {
 public:
  QuasiRandom(int dim, std::uint64_t skip = 0);

  std::vector<double> next();
  [[nodiscard]] int dim() const { return dim_; }

 private:
  int dim_;
  boost::random::sobol engine_;
};

/// (x, A) sampler used by the density verifiers: x in [-x_range, x_range]^D,
/// A of Frobenius norm <= max_norm.
class PointMatrixSampler {
 public:
  PointMatrixSampler(int ambient_dim, int rows, double x_range, double max_norm,
                     std::uint64_t skip = 0);

  void next(Vec& x, Mat& A);

 private:
  int D_, m_;
  double x_range_, max_norm_;
  QuasiRandom qrng_;
};

}  // namespace thinfilm
