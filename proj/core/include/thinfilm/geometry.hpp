#pragma once

#include "thinfilm/types.hpp"

#include <boost/rational.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace thinfilm {

using Rational = boost::rational<std::int64_t>;
using IntVec = std::vector<std::int64_t>;

/// Cutting hyperplane Pi = {<x, nu> = 0} in R^{d+1} together with the linear
/// isometry x -> R x that sends e_1..e_d to an orthonormal basis of Pi and
/// e_{d+1} to nu.
struct IsometryFrame {
  int dim_d = 0;
  Vec normal;
  std::vector<Vec> basis;
  /// Columns pi_1..pi_d, nu.
  SquareMat matrix_R;
  /// Primitive integer vector parallel to nu when the plane was given exactly.
  std::optional<IntVec> integer_normal;

  [[nodiscard]] int ambient_dim() const { return dim_d + 1; }
  /// phi(x) = R x.
  [[nodiscard]] Vec apply(const Vec& x) const { return matrix_R * x; }
  /// Frame coordinates (tau, z) of an ambient point: R^T x.
  [[nodiscard]] Vec to_frame(const Vec& x) const { return matrix_R.transpose() * x; }
  [[nodiscard]] bool exact() const { return integer_normal.has_value(); }
};

/// Builds the frame from a nonzero normal. The in-plane basis is obtained by
/// Gram-Schmidt from the d standard basis vectors least aligned with nu
/// (ties broken by index), processed in that order.
IsometryFrame build_frame(const Vec& normal);

/// Same as build_frame, but keeps the exact direction of a rational normal so
/// that rationality can be certified.
IsometryFrame build_frame(const std::vector<Rational>& normal);

/// d = 1 convenience: Pi spanned by (cos theta, sin theta).
IsometryFrame frame_from_angle(double theta);

struct CommensurabilityReport {
  /// Rank n of the lattice Pi cap Z^{d+1} detected within the search bound.
  int lattice_rank = 0;
  /// Independent lattice vectors in Pi, shortest first, first nonzero entry positive.
  std::vector<IntVec> generators;
  /// True when the check used exact integer arithmetic.
  bool certified = false;
};

/// Searches integer z with |z_i| <= denominator_bound and <z, nu> = 0.
/// Exact frames are checked in integer arithmetic, floating frames with
/// |<z, nu>| < 1e-12.
CommensurabilityReport classify_rationality(const IsometryFrame& frame,
                                            std::int64_t denominator_bound);

/// For a plane of full lattice rank, the shortest lattice vector along each
/// frame axis pi_i, searched up to `bound` in the sup norm. Returns the
/// vectors (ambient coordinates) or nullopt if some axis has none in range.
std::optional<std::vector<IntVec>> axis_lattice_vectors(const IsometryFrame& frame,
                                                        std::int64_t bound);

/// Max |R^T R - I| entry.
double orthogonality_defect(const IsometryFrame& frame);

}  // namespace thinfilm
