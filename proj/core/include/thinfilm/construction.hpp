#pragma once

#include "thinfilm/cell_solver.hpp"
#include "thinfilm/energy.hpp"
#include "thinfilm/lattice.hpp"
#include "thinfilm/types.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace thinfilm {

// Function surgery used to compare cell problems of different sizes: pick
// transverse slices with small energy, flatten the field beyond them, shift
// the result by an almost period and tile a large slab with copies.

/// g(t) sampled at transverse positions t in [0, h].
struct LayerSample {
  double t = 0.0;
  double g = 0.0;
};

/// One-sided slice selection on [h - delta, h].
struct SliceSelection {
  double h = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double t = 0.0;        ///< selected position in [h - delta, h]
  std::size_t index = 0; ///< index into the sample list
  double weighted = 0.0; ///< (h + eta - t) g(t) at the selection
  double C = 0.0;        ///< energy mass int_0^h g
  double threshold = 0.0;///< C / log(delta / eta)
  /// Sampled positions in [h - delta, h] meeting the threshold, ascending.
  std::vector<double> qualifying;
};

/// Picks the sample in [h - delta, h] minimizing (h + eta - t) g(t) and checks
/// it against C / log(delta / eta). C is the trapezoid integral of the
/// samples unless `mass` is given. Throws NumericalError when no sampled
/// layer qualifies (refine n_y or increase eta).
SliceSelection slice_select(const std::vector<LayerSample>& samples, double h, double delta, double eta,
                            std::optional<double> mass = std::nullopt);

/// Layer energies g(y_k) = int_{(0,T)^d} |(A + grad_x u | d_y u)(x, y_k)|^p dx
/// at every grid layer k, with d_y u averaged over the two adjacent element
/// rows (one-sided on the faces).
std::vector<double> layer_energies(const SlabGrid& grid, const Field& u, const Mat& A, double p);

/// Top and bottom selections on grid layers.
struct SlicePair {
  SliceSelection top;
  SliceSelection bottom;  ///< in the mirrored variable t = -y
  int k_plus = 0;
  int k_minus = 0;
  double y_plus = 0.0;
  double y_minus = 0.0;
};

SlicePair select_slices(const SlabGrid& grid, const Field& u, const Mat& A, double p, double delta,
                        double eta);

/// u frozen above y_plus and below y_minus; constant in y beyond +-h.
struct ExtendedField {
  SlabGrid grid;
  Field values;
  int m = 1;
  int k_plus = 0;
  int k_minus = 0;
  double y_plus = 0.0;
  double y_minus = 0.0;

  /// Value at in-plane point x (d entries) and any height y.
  [[nodiscard]] Vec eval(const Vec& x, double y) const;
};

ExtendedField clamp_extend(const SlabGrid& grid, const Field& u, int m, const SlicePair& sel);

struct SliceBoundReport {
  double top_energy = 0.0;
  double bottom_energy = 0.0;
  double bound = 0.0;
  double C_T = 0.0;  ///< unnormalized slab energy of u
  bool passed = false;
  [[nodiscard]] double margin() const { return bound - std::max(top_energy, bottom_energy); }
};

/// Energy of the flat caps (y_plus, h + eta) and (-h - eta, y_minus) of the
/// extended field against beta (T^d (delta + eta) + C_T / (alpha |log(delta/eta)|)).
/// `u` is the original field, used for C_T.
SliceBoundReport verify_slice_bound(const ExtendedField& ext, const Field& u, const Mat& A,
                                    const EnergyDensity& f, const SlicePair& sel);

/// v(x, y) = ext(x - tau, y - z_tau) on the target grid nodes inside the block
/// tau + [0, T]^d, zero elsewhere. Throws if the block leaves the target domain.
Field translate_test_function(const ExtendedField& ext, const AlmostPeriod& ap, const SlabGrid& target);

struct PatchworkPlan {
  int dim_d = 1;
  double T = 0.0;
  double S = 0.0;
  double L_eta = 0.0;
  double eta = 0.0;
  double h = 0.0;
  /// Blocks per direction, floor(S / (T + L_eta)).
  int blocks_per_side = 0;
  std::vector<IntVec> index_set;
  std::vector<AlmostPeriod> placements;
  /// 2h (S^d - |I| T^d).
  double Q_S_measure = 0.0;
  /// 2h S^d (1 - (T/(T+L_eta) - T/S)^d).
  double Q_S_bound = 0.0;
};

/// One almost period per window (T + L_eta) l + [0, L_eta]^d, l in
/// {0..N-1}^d. Throws if S <= T + L_eta or a window holds no period (the
/// message names the window).
PatchworkPlan plan_patchwork(const AlmostPeriodSet& periods, double T, double S, double L_eta, double h);

/// Throws if two blocks overlap or a block leaves (0, S)^d.
void check_plan(const PatchworkPlan& plan);

/// Translated copies of the extended field, zero on the remainder set.
Field patchwork_assemble(const ExtendedField& ext, const PatchworkPlan& plan, const SlabGrid& S_grid);

/// Measure of the S-grid elements not contained in any placed block: the
/// discrete counterpart of Q_S.
double remainder_measure(const PatchworkPlan& plan, const SlabGrid& S_grid);

}  // namespace thinfilm
