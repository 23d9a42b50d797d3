#pragma once

#include "thinfilm/energy.hpp"
#include "thinfilm/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace thinfilm {

/// How the lateral faces x in boundary((0,T)^d) are treated.
enum class Lateral {
  clamped,   ///< u = 0 there (the admissible class W_T)
  periodic,  ///< u periodic in-plane, one node pinned to remove translations
};

/// Tensor-product Q1 grid of the slab (0,T)^d x (-h,h).
///
/// Node (i[, j], k) has index i + P*(j + P*k) (d = 2) or i + P*k (d = 1) with
/// P = cells + 1; k runs over the transverse layers y_k = -h + k*dy.
class SlabGrid {
 public:
  SlabGrid() = default;
  SlabGrid(int d, double length, int cells, double h, int n_y, Lateral lateral = Lateral::clamped);

  [[nodiscard]] int dim_d() const { return d_; }
  [[nodiscard]] int ambient_dim() const { return d_ + 1; }
  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] int cells() const { return cells_; }
  [[nodiscard]] int n_y() const { return n_y_; }
  [[nodiscard]] double dx() const { return dx_; }
  [[nodiscard]] double dy() const { return dy_; }
  [[nodiscard]] Lateral lateral() const { return lateral_; }

  [[nodiscard]] int nodes_per_side() const { return cells_ + 1; }
  [[nodiscard]] std::size_t node_count() const;
  [[nodiscard]] std::size_t element_count() const;
  [[nodiscard]] std::size_t nodes_per_element() const { return std::size_t{1} << ambient_dim(); }

  [[nodiscard]] std::size_t node_index(int i, int j, int k) const;
  /// (i, j, k); j = 0 when d = 1.
  [[nodiscard]] std::array<int, 3> node_multi_index(std::size_t node) const;
  [[nodiscard]] Vec node_coords(std::size_t node) const;
  [[nodiscard]] double y_layer(int k) const { return -h_ + k * dy_; }
  [[nodiscard]] bool on_lateral_boundary(std::size_t node) const;
  /// Element e = i + C*(j + C*k); its local node a has offsets given by the bits of a.
  [[nodiscard]] std::size_t element_node(std::size_t element, std::size_t local) const;
  [[nodiscard]] Vec element_origin(std::size_t element) const;

  /// Free dof block of each node (-1 when clamped or pinned).
  [[nodiscard]] const std::vector<std::int64_t>& node_dof() const { return node_dof_; }
  [[nodiscard]] std::size_t free_node_count() const { return free_nodes_; }

  [[nodiscard]] bool same_layout(const SlabGrid& other) const;

 private:
  int d_ = 1;
  double length_ = 0.0;
  double h_ = 0.5;
  int cells_ = 0;
  int n_y_ = 0;
  double dx_ = 0.0;
  double dy_ = 0.0;
  Lateral lateral_ = Lateral::clamped;
  std::vector<std::int64_t> node_dof_;
  std::size_t free_nodes_ = 0;
};

struct GridOptions {
  double h = 0.5;
  int n_per_unit = 8;
  /// 0 picks max(2, round(2 h n_per_unit)), i.e. square elements.
  int n_y = 0;
  Lateral lateral = Lateral::clamped;
};

/// Grid on (0,T)^d x (-h,h) with round(n_per_unit T) in-plane intervals.
SlabGrid build_grid(int d, double T, double h, int n_per_unit, int n_y,
                    Lateral lateral = Lateral::clamped);
SlabGrid build_grid(int d, double T, const GridOptions& opts);

/// Multilinear interpolation of a nodal field at a point (x, y) of the grid's
/// closed box; `point` has d+1 entries.
Vec interpolate(const SlabGrid& grid, const Field& u, int m, const Vec& point);

/// Sets the constrained (clamped or pinned) entries of u to zero and copies
/// periodic images from their representative node.
void apply_constraints(const SlabGrid& grid, Field& u, int m);

/// Scaling of the assembled functional: f is evaluated at (x_scale x, y),
/// the transverse derivative is multiplied by dy_factor and the sum by
/// normalization.
struct AssemblyScaling {
  double x_scale = 1.0;
  double dy_factor = 1.0;
  double normalization = 1.0;
};

/// g_A-form scaling 1 / (2 h T^d).
AssemblyScaling cell_scaling(const SlabGrid& grid);

/// Element-wise Q1 assembly with 2-point Gauss quadrature per direction and
/// cached coefficient values at the quadrature points.
///
/// Element contributions are computed in parallel into per-element buffers and
/// reduced in element order, so results do not depend on the worker count.
class CellAssembler {
 public:
  CellAssembler(const SlabGrid& grid, const EnergyDensity& f, AssemblyScaling scaling, int workers = 1);

  [[nodiscard]] const SlabGrid& grid() const { return grid_; }
  [[nodiscard]] const EnergyDensity& density() const { return f_; }
  [[nodiscard]] int dim_m() const { return f_.dim_m(); }
  [[nodiscard]] std::size_t field_size() const { return grid_.node_count() * static_cast<std::size_t>(dim_m()); }

  /// A is m x d (the in-plane macroscopic gradient).
  [[nodiscard]] double energy(const Field& u, const Mat& A) const;
  /// Raw nodal gradient; constrained nodes are zeroed.
  [[nodiscard]] Field gradient(const Field& u, const Mat& A) const;
  double energy_and_gradient(const Field& u, const Mat& A, Field& grad) const;

  /// Per-element energy contributions (already scaled).
  [[nodiscard]] std::vector<double> element_energies(const Field& u, const Mat& A) const;

  // Free-dof view used by the solvers.
  [[nodiscard]] std::size_t free_size() const { return grid_.free_node_count() * static_cast<std::size_t>(dim_m()); }
  [[nodiscard]] Field expand(const Eigen::VectorXd& free) const;
  [[nodiscard]] Eigen::VectorXd restrict_gradient(const Field& nodal) const;
  [[nodiscard]] Eigen::VectorXd restrict_values(const Field& nodal) const;
  /// Diagonal of the Hessian at u = 0 in free dofs (exact for quadratic f).
  [[nodiscard]] Eigen::VectorXd hessian_diagonal() const;

 private:
  struct QuadPoint {
    std::vector<double> shape;    // N_a
    std::vector<Vec> shape_grad;  // physical gradient of N_a, y entry times dy_factor
    Vec ref;                      // position in [0,1]^{d+1}
  };

  Mat full_gradient(const Mat& A, const Field& u, std::size_t element, const QuadPoint& q) const;
  void check_inputs(const Field& u, const Mat& A) const;
  Vec quad_point_coords(std::size_t element, const QuadPoint& q) const;

  SlabGrid grid_;
  EnergyDensity f_;
  AssemblyScaling scaling_;
  int workers_;
  std::vector<QuadPoint> quad_;
  double weight_ = 0.0;
  std::vector<EnergyDensity::Local> locals_;
};

/// (1 / (2 h T^d)) * quadrature of f(x, (A + grad_x u | d_y u)) over the slab.
double assemble_energy(const Field& u, const Mat& A, const EnergyDensity& f, const SlabGrid& grid);
Field assemble_gradient(const Field& u, const Mat& A, const EnergyDensity& f, const SlabGrid& grid);

struct SolverOptions {
  double cg_tol = 1e-10;      ///< relative residual for quadratic densities
  int cg_max_iter = 200000;
  double grad_tol = 1e-8;     ///< L-BFGS: |grad|_inf < grad_tol (1 + |value|)
  int max_iter = 5000;
  int lbfgs_memory = 10;
  int workers = 1;
  bool force_lbfgs = false;
};

struct CellSolution {
  SlabGrid grid;
  Mat A;
  Field u_star;
  double value = 0.0;  ///< g_A(T) upper bound from the discrete minimizer
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::string method;
  [[nodiscard]] double T() const { return grid.length(); }
};

/// Minimizes the cell energy over the grid's admissible fields. Quadratic
/// densities use Jacobi-preconditioned conjugate gradients on the
/// stationarity system, others L-BFGS with Armijo backtracking. A run that
/// hits the iteration cap returns converged = false; its value is still a
/// valid upper bound.
CellSolution minimize_on_grid(const Mat& A, const SlabGrid& grid, const EnergyDensity& f,
                              const SolverOptions& opts = {}, const Field* initial = nullptr);

CellSolution minimize_cell(const Mat& A, double T, const EnergyDensity& f, const GridOptions& grid_opts = {},
                           const SolverOptions& opts = {});

struct RescalingReport {
  double t_form = 0.0;
  double eps_form = 0.0;
  double relative_difference = 0.0;
  bool passed = false;
};

/// Unit-length copy of a grid with the same number of cells.
SlabGrid unit_grid_like(const SlabGrid& grid);

/// Compares the g_A-form energy of u on (0,T)^d with the eps = 1/T scaled
/// functional of u(T x, y) / T on (0,1)^d.
RescalingReport rescaling_check(const Field& u, const Mat& A, const EnergyDensity& f, const SlabGrid& grid,
                                const SlabGrid& unit_grid, double tolerance = 1e-12);

/// Plain-text nodal dump: one line per node with index, coordinates, components.
void write_field(std::ostream& os, const SlabGrid& grid, const Field& u, int m);

}  // namespace thinfilm
