#include "thinfilm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace thinfilm {

bool Box::contains(const Vec& p) const {
  for (int i = 0; i < dim(); ++i) {
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  }
  return true;
}

Box cube(int dim, double lo, double hi) {
  return Box{Vec::Constant(dim, lo), Vec::Constant(dim, hi)};
}

namespace {

bool period_less(const AlmostPeriod& a, const AlmostPeriod& b) {
  const double na = a.tau.norm(), nb = b.tau.norm();
  if (na != nb) return na < nb;
  if (a.defect != b.defect) return a.defect < b.defect;
  return a.source < b.source;
}

}  // namespace

AlmostPeriodSet almost_periods(const IsometryFrame& frame, double eta, double radius,
                               std::size_t candidate_cap) {
  if (!(eta > 0.0)) throw InvalidArgument("almost_periods: eta must be > 0");
  if (!(radius > 0.0)) throw InvalidArgument("almost_periods: radius must be > 0");

  const int D = frame.ambient_dim();
  const auto K = static_cast<std::int64_t>(std::ceil(std::hypot(radius, eta)));
  const double side = 2.0 * static_cast<double>(K) + 1.0;
  if (std::pow(side, D) > static_cast<double>(candidate_cap)) {
    throw NumericalError("almost_periods: " + std::to_string(static_cast<long long>(std::pow(side, D))) +
                         " candidate lattice points exceed the cap of " + std::to_string(candidate_cap) +
                         "; use a smaller radius");
  }

  AlmostPeriodSet set;
  set.dim_d = frame.dim_d;
  set.eta = eta;
  set.radius = radius;

  IntVec z(D, -K);
  Vec zv(D);
  while (true) {
    for (int i = 0; i < D; ++i) zv[i] = static_cast<double>(z[i]);
    const Vec coords = frame.to_frame(zv);
    const double zt = coords[D - 1];
    if (std::abs(zt) < eta) {
      const Vec tau = coords.head(frame.dim_d);
      if (tau.norm() <= radius) {
        set.periods.push_back(AlmostPeriod{tau, zt, std::abs(zt), z});
      }
    }
    int k = 0;
    while (k < D && z[k] == K) z[k++] = -K;
    if (k == D) break;
    ++z[k];
  }
  std::sort(set.periods.begin(), set.periods.end(), period_less);
  return set;
}

InclusionReport inclusion_length(const AlmostPeriodSet& set, const Box& region, int grid_cells) {
  if (set.empty()) throw InvalidArgument("inclusion_length: empty period list");
  const int d = set.dim_d;
  if (region.dim() != d) throw InvalidArgument("inclusion_length: region dimension mismatch");
  for (int i = 0; i < d; ++i) {
    if (!(region.hi[i] > region.lo[i])) throw InvalidArgument("inclusion_length: empty region");
  }
  // Farthest point of the box from the origin must lie inside the enumeration ball.
  double far = 0;
  for (int i = 0; i < d; ++i) {
    const double c = std::max(std::abs(region.lo[i]), std::abs(region.hi[i]));
    far += c * c;
  }
  if (std::sqrt(far) > set.radius * (1 + 1e-12)) {
    throw InvalidArgument("inclusion_length: region reaches beyond the enumeration radius " +
                          std::to_string(set.radius));
  }

  InclusionReport report;
  report.eta = set.eta;
  report.region = region;

  if (d == 1) {
    std::vector<double> taus;
    for (const auto& p : set.periods) {
      if (region.contains(p.tau)) taus.push_back(p.tau[0]);
    }
    if (taus.empty()) throw InvalidArgument("inclusion_length: no almost period inside the region");
    std::sort(taus.begin(), taus.end());
    double gap = taus.front() - region.lo[0];
    for (std::size_t i = 1; i < taus.size(); ++i) gap = std::max(gap, taus[i] - taus[i - 1]);
    gap = std::max(gap, region.hi[0] - taus.back());
    report.L_eta = gap;
    report.largest_gap = gap;
    report.periods_in_region = taus.size();
    return report;
  }

  // d == 2: occupancy grid plus 2-d prefix sums; a window of k x k empty cells
  // is an empty square of side k*step, and any square of side (k+1)*step
  // contains a full k x k block of cells.
  if (grid_cells < 2) throw InvalidArgument("inclusion_length: grid_cells must be >= 2");
  const double wx = region.hi[0] - region.lo[0], wy = region.hi[1] - region.lo[1];
  const double step = std::max(wx, wy) / grid_cells;
  const int nx = static_cast<int>(std::ceil(wx / step - 1e-9));
  const int ny = static_cast<int>(std::ceil(wy / step - 1e-9));
  std::vector<int> occ(static_cast<std::size_t>(nx) * ny, 0);
  for (const auto& p : set.periods) {
    if (!region.contains(p.tau)) continue;
    ++report.periods_in_region;
    const int i = std::min(nx - 1, static_cast<int>((p.tau[0] - region.lo[0]) / step));
    const int j = std::min(ny - 1, static_cast<int>((p.tau[1] - region.lo[1]) / step));
    occ[static_cast<std::size_t>(j) * nx + i] = 1;
  }
  if (report.periods_in_region == 0) {
    throw InvalidArgument("inclusion_length: no almost period inside the region");
  }
  std::vector<int> pre(static_cast<std::size_t>(nx + 1) * (ny + 1), 0);
  const auto P = [&](int i, int j) -> int& { return pre[static_cast<std::size_t>(j) * (nx + 1) + i]; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      P(i + 1, j + 1) = occ[static_cast<std::size_t>(j) * nx + i] + P(i, j + 1) + P(i + 1, j) - P(i, j);
    }
  }
  const auto has_empty_window = [&](int k) {
    for (int j = 0; j + k <= ny; ++j) {
      for (int i = 0; i + k <= nx; ++i) {
        if (P(i + k, j + k) - P(i, j + k) - P(i + k, j) + P(i, j) == 0) return true;
      }
    }
    return false;
  };
  int k = 0;  // largest k with an empty k x k window
  while (k < std::min(nx, ny) && has_empty_window(k + 1)) ++k;
  report.grid_step = step;
  report.largest_gap = k * step;
  report.L_eta = (k + 2) * step;
  return report;
}

AlmostPeriod select_translation(const std::vector<AlmostPeriod>& periods, const Vec& target) {
  if (periods.empty()) throw InvalidArgument("select_translation: empty period list");
  const AlmostPeriod* best = &periods.front();
  double best_dist = (best->tau - target).norm();
  for (const auto& p : periods) {
    const double dist = (p.tau - target).norm();
    if (dist < best_dist || (dist == best_dist && (p.defect < best->defect ||
                                                   (p.defect == best->defect && p.source < best->source)))) {
      best = &p;
      best_dist = dist;
    }
  }
  return *best;
}

std::optional<AlmostPeriod> select_in_window(const std::vector<AlmostPeriod>& periods,
                                             const Box& window) {
  const AlmostPeriod* best = nullptr;
  for (const auto& p : periods) {
    if (!window.contains(p.tau)) continue;
    if (best == nullptr || p.defect < best->defect ||
        (p.defect == best->defect &&
         std::lexicographical_compare(p.tau.begin(), p.tau.end(), best->tau.begin(), best->tau.end()))) {
      best = &p;
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

}  // namespace thinfilm
