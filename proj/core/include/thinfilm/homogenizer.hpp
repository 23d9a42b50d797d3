#pragma once

#include "thinfilm/cell_solver.hpp"
#include "thinfilm/construction.hpp"
#include "thinfilm/energy.hpp"
#include "thinfilm/geometry.hpp"
#include "thinfilm/lattice.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace thinfilm {

struct HomogOptions {
  GridOptions grid;
  SolverOptions solver;
  /// Concurrent cell problems (one per T); each uses solver.workers threads.
  int jobs = 1;
  /// Tail spread above this flags the estimate as not yet Cauchy.
  double spread_tol = 1e-2;
};

struct HomogEstimate {
  Mat A;
  std::vector<double> schedule;
  std::vector<double> values;      ///< g_A(T), NaN where the solve failed
  std::vector<bool> converged;
  std::vector<int> iterations;
  std::vector<std::string> errors; ///< empty string on success
  double extrapolated = 0.0;       ///< mean of the last ceil(k/3) values
  double spread = 0.0;             ///< max - min over the last max(2, ceil(k/3)) values
  bool cauchy = true;
  int n_per_unit = 0;
  int n_y = 0;
  double h = 0.0;

  /// |g(T_i) - g(T_{i-1})| for i = 1..k-1.
  [[nodiscard]] std::vector<double> increments() const;
};

/// g_A(T) over an increasing schedule (>= 3 values) at fixed resolution.
/// Failed solves are recorded per T; throws NumericalError if fewer than two
/// values succeed.
HomogEstimate estimate_fhom(const Mat& A, const EnergyDensity& f, const std::vector<double>& schedule,
                            const HomogOptions& opts = {});

struct PatchworkReport {
  double T = 0.0;
  double S = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double L_eta = 0.0;
  double g_T = 0.0;
  double lhs = 0.0;  ///< assembled energy of u_S on the S slab
  double rhs = 0.0;
  std::size_t blocks = 0;
  double Q_S_plan = 0.0;
  double Q_S_measured = 0.0;
  double Q_S_bound = 0.0;
  double boundary_layer = 0.0;  ///< allowed |measured - plan|
  SlicePair slices;
  SliceBoundReport slice_bound;
  [[nodiscard]] bool inequality_holds() const { return lhs <= rhs; }
  [[nodiscard]] bool measure_matches() const {
    return std::abs(Q_S_measured - Q_S_plan) <= boundary_layer && Q_S_plan <= Q_S_bound;
  }
};

/// Builds u_S from the cell solution by slicing, clamp-extension and
/// patchwork, and compares its energy on (0,S)^d with the right-hand side
/// (T/(T+L))^d (1+eta/alpha)(1+2beta/(alpha|log(delta/eta)|))(g_T + 1/T)
///   + (eta h + beta(delta+eta)) (T/(T+L))^d + beta h (1 - (T/(T+L) - T/S)^d)(1+|A|)^p.
PatchworkReport upper_bound_patchwork(const CellSolution& sol_T, const EnergyDensity& f, double S, double delta,
                                      const AlmostPeriodSet& periods, double L_eta, int workers = 1);

/// Value and tolerance of an estimate of f_hom at A.
using FhatFn = std::function<std::pair<double, double>(const Mat&)>;

struct RankOneProbe {
  Mat A;
  Mat direction;  ///< a (x) b
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  [[nodiscard]] double margin() const { return rhs - lhs; }
  [[nodiscard]] bool passed() const { return margin() >= -tolerance; }
};

struct RankOneReport {
  std::vector<RankOneProbe> probes;
  std::size_t violations = 0;
  double worst_margin = 0.0;  ///< min over probes of margin + tolerance
  [[nodiscard]] bool passed() const { return violations == 0; }
};

/// Checks fhat(A) <= t fhat(A + (1-t) a(x)b) + (1-t) fhat(A - t a(x)b) + tol at
/// quasi-random probes with |A|, |a|, |b| <= a_range.
RankOneReport rank_one_scan(const FhatFn& fhat, int m, int d, std::size_t probes, double a_range = 1.0,
                            std::uint64_t seed = 0);

/// f_hom estimates cached by A. The tolerance is the solver tolerance plus the
/// change of g_A at the last T when the in-plane resolution is halved.
class CachedFhat {
 public:
  CachedFhat(EnergyDensity f, std::vector<double> schedule, HomogOptions opts);
  std::pair<double, double> operator()(const Mat& A);
  [[nodiscard]] std::size_t evaluations() const { return cache_.size(); }

 private:
  EnergyDensity f_;
  std::vector<double> schedule_;
  HomogOptions opts_;
  std::map<std::vector<double>, std::pair<double, double>> cache_;
  std::mutex mutex_;
};

struct ReferenceResult {
  double value = 0.0;
  double period = 0.0;        ///< in-plane period length P
  std::vector<IntVec> generators;
  CellSolution solution;
};

/// Classical thin-film cell problem for a plane of full lattice rank: the
/// pulled-back density is P-periodic along each frame axis, so the cell is
/// solved on one period with periodic in-plane conditions and free faces.
ReferenceResult commensurate_reference(const EnergyDensity& ftilde, const IsometryFrame& frame, const Mat& A,
                                       const GridOptions& grid = {}, const SolverOptions& solver = {},
                                       std::int64_t search_bound = 64);

}  // namespace thinfilm
