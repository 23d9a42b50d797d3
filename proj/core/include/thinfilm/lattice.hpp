#pragma once

#include "thinfilm/geometry.hpp"
#include "thinfilm/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace thinfilm {

/// A lattice point z of Z^{d+1} written in frame coordinates as (tau, z_tau):
/// tau is the in-plane translation, z_tau the transverse shift along nu.
struct AlmostPeriod {
  Vec tau;
  double z_tau = 0.0;
  double defect = 0.0;  ///< |z_tau|
  IntVec source;
};

/// Output of almost_periods: the enumeration parameters travel with the list
/// so downstream consumers can refuse regions the enumeration did not cover.
struct AlmostPeriodSet {
  int dim_d = 0;
  double eta = 0.0;
  double radius = 0.0;
  std::vector<AlmostPeriod> periods;

  [[nodiscard]] bool empty() const { return periods.empty(); }
  [[nodiscard]] std::size_t size() const { return periods.size(); }
};

/// Axis-aligned box in plane coordinates.
struct Box {
  Vec lo;
  Vec hi;
  [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
  [[nodiscard]] bool contains(const Vec& p) const;
};

Box cube(int dim, double lo, double hi);

struct InclusionReport {
  double eta = 0.0;
  /// Every closed cube of this side inside the region contains some tau.
  double L_eta = 0.0;
  Box region;
  /// Side of the largest empty cube found.
  double largest_gap = 0.0;
  /// Grid cell size used for d = 2 (0 for the exact d = 1 sweep).
  double grid_step = 0.0;
  std::size_t periods_in_region = 0;
};

inline constexpr std::size_t kDefaultCandidateCap = 50'000'000;

/// All z in Z^{d+1} with |<z, nu>| < eta and in-plane distance |tau| <= radius,
/// sorted by |tau|, then defect, then source point.
AlmostPeriodSet almost_periods(const IsometryFrame& frame, double eta, double radius,
                               std::size_t candidate_cap = kDefaultCandidateCap);

/// Empirical inclusion length of the tau's over `region`. Exact gap sweep for
/// d = 1; for d = 2 a grid occupancy count with `grid_cells` cells per side
/// certifies an upper bound.
InclusionReport inclusion_length(const AlmostPeriodSet& set, const Box& region,
                                 int grid_cells = 256);

/// Period minimizing |tau - target|; ties go to smaller defect, then to the
/// lexicographically smaller source point.
AlmostPeriod select_translation(const std::vector<AlmostPeriod>& periods, const Vec& target);

/// Period with tau inside the closed `window`, preferring small defect, then
/// lexicographically smaller tau.
std::optional<AlmostPeriod> select_in_window(const std::vector<AlmostPeriod>& periods,
                                             const Box& window);

}  // namespace thinfilm
