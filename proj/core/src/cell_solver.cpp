#include "thinfilm/cell_solver.hpp"

#include "thinfilm/parallel.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>

namespace thinfilm {

// --- SlabGrid ----------------------------------------------------------------

SlabGrid::SlabGrid(int d, double length, int cells, double h, int n_y, Lateral lateral)
    : d_(d), length_(length), h_(h), cells_(cells), n_y_(n_y), lateral_(lateral) {
  if (d < 1 || d > 2) throw InvalidArgument("grid: d must be 1 or 2");
  if (!(length > 0.0)) throw InvalidArgument("grid: T must be > 0");
  if (!(h > 0.0)) throw InvalidArgument("grid: h must be > 0");
  if (cells < 2) throw InvalidArgument("grid: need at least 2 in-plane intervals, got " + std::to_string(cells));
  if (n_y < 1) throw InvalidArgument("grid: n_y must be >= 1");
  dx_ = length / cells;
  dy_ = 2.0 * h / n_y;

  node_dof_.assign(node_count(), -1);
  std::int64_t next = 0;
  if (lateral == Lateral::clamped) {
    for (std::size_t n = 0; n < node_count(); ++n) {
      if (!on_lateral_boundary(n)) node_dof_[n] = next++;
    }
  } else {
    // Representatives are nodes with in-plane indices < cells; node 0 is pinned.
    for (std::size_t n = 1; n < node_count(); ++n) {
      const auto [i, j, k] = node_multi_index(n);
      if (i < cells_ && j < cells_) node_dof_[n] = next++;
    }
    for (std::size_t n = 0; n < node_count(); ++n) {
      const auto [i, j, k] = node_multi_index(n);
      if (i == cells_ || j == cells_) {
        node_dof_[n] = node_dof_[node_index(i % cells_, j % cells_, k)];
      }
    }
  }
  free_nodes_ = static_cast<std::size_t>(next);
}

std::size_t SlabGrid::node_count() const {
  const auto P = static_cast<std::size_t>(nodes_per_side());
  return (d_ == 1 ? P : P * P) * static_cast<std::size_t>(n_y_ + 1);
}

std::size_t SlabGrid::element_count() const {
  const auto C = static_cast<std::size_t>(cells_);
  return (d_ == 1 ? C : C * C) * static_cast<std::size_t>(n_y_);
}

std::size_t SlabGrid::node_index(int i, int j, int k) const {
  const auto P = static_cast<std::size_t>(nodes_per_side());
  if (d_ == 1) return static_cast<std::size_t>(i) + P * static_cast<std::size_t>(k);
  return static_cast<std::size_t>(i) + P * (static_cast<std::size_t>(j) + P * static_cast<std::size_t>(k));
}

std::array<int, 3> SlabGrid::node_multi_index(std::size_t node) const {
  const auto P = static_cast<std::size_t>(nodes_per_side());
  const int i = static_cast<int>(node % P);
  if (d_ == 1) return {i, 0, static_cast<int>(node / P)};
  const std::size_t rest = node / P;
  return {i, static_cast<int>(rest % P), static_cast<int>(rest / P)};
}

Vec SlabGrid::node_coords(std::size_t node) const {
  const auto [i, j, k] = node_multi_index(node);
  Vec x(d_ + 1);
  x[0] = i * dx_;
  if (d_ == 2) x[1] = j * dx_;
  x[d_] = y_layer(k);
  return x;
}

bool SlabGrid::on_lateral_boundary(std::size_t node) const {
  const auto [i, j, k] = node_multi_index(node);
  if (i == 0 || i == cells_) return true;
  return d_ == 2 && (j == 0 || j == cells_);
}

std::size_t SlabGrid::element_node(std::size_t element, std::size_t local) const {
  const auto C = static_cast<std::size_t>(cells_);
  const int i = static_cast<int>(element % C);
  if (d_ == 1) {
    const int k = static_cast<int>(element / C);
    return node_index(i + static_cast<int>(local & 1u), 0, k + static_cast<int>((local >> 1) & 1u));
  }
  const std::size_t rest = element / C;
  const int j = static_cast<int>(rest % C);
  const int k = static_cast<int>(rest / C);
  return node_index(i + static_cast<int>(local & 1u), j + static_cast<int>((local >> 1) & 1u),
                    k + static_cast<int>((local >> 2) & 1u));
}

Vec SlabGrid::element_origin(std::size_t element) const { return node_coords(element_node(element, 0)); }

bool SlabGrid::same_layout(const SlabGrid& o) const {
  return d_ == o.d_ && cells_ == o.cells_ && n_y_ == o.n_y_ && h_ == o.h_ && lateral_ == o.lateral_;
}

SlabGrid build_grid(int d, double T, double h, int n_per_unit, int n_y, Lateral lateral) {
  if (n_per_unit < 1) throw InvalidArgument("grid: n_per_unit must be >= 1");
  if (!(T > 0.0)) throw InvalidArgument("grid: T must be > 0");
  const auto cells = static_cast<int>(std::lround(n_per_unit * T));
  return SlabGrid(d, T, cells, h, n_y, lateral);
}

SlabGrid build_grid(int d, double T, const GridOptions& o) {
  const int n_y = o.n_y > 0 ? o.n_y : std::max(2, static_cast<int>(std::lround(2.0 * o.h * o.n_per_unit)));
  return build_grid(d, T, o.h, o.n_per_unit, n_y, o.lateral);
}

// --- Field helpers -------------------------------------------------------------

Vec interpolate(const SlabGrid& grid, const Field& u, int m, const Vec& point) {
  const int D = grid.ambient_dim();
  if (point.size() != D) throw InvalidArgument("interpolate: point dimension mismatch");
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int a = 0; a < D; ++a) {
    const bool transverse = a == D - 1;
    const double lo = transverse ? -grid.h() : 0.0;
    const double step = transverse ? grid.dy() : grid.dx();
    const int cells = transverse ? grid.n_y() : grid.cells();
    double s = (point[a] - lo) / step;
    if (s < -1e-9 || s > cells + 1e-9) {
      throw InvalidArgument(fmt::format("interpolate: coordinate {} = {} outside the grid", a, point[a]));
    }
    if (std::abs(s - std::round(s)) < 1e-9) s = std::round(s);
    s = std::clamp(s, 0.0, static_cast<double>(cells));
    int i = std::min(static_cast<int>(std::floor(s)), cells - 1);
    base[static_cast<std::size_t>(a)] = i;
    frac[static_cast<std::size_t>(a)] = s - i;
  }
  Vec out = Vec::Zero(m);
  for (std::size_t local = 0; local < (std::size_t{1} << D); ++local) {
    double w = 1.0;
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < D; ++a) {
      const bool bit = (local >> a) & 1u;
      const double f = frac[static_cast<std::size_t>(a)];
      w *= bit ? f : 1.0 - f;
      idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + (bit ? 1 : 0);
    }
    if (w == 0.0) continue;
    const std::size_t node = D == 2 ? grid.node_index(idx[0], 0, idx[1]) : grid.node_index(idx[0], idx[1], idx[2]);
    out += w * u.segment(static_cast<Eigen::Index>(node) * m, m);
  }
  return out;
}

void apply_constraints(const SlabGrid& grid, Field& u, int m) {
  const auto& dof = grid.node_dof();
  std::vector<std::size_t> rep(grid.free_node_count(), 0);
  std::vector<bool> seen(grid.free_node_count(), false);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    if (dof[n] < 0) {
      u.segment(static_cast<Eigen::Index>(n) * m, m).setZero();
    } else if (!seen[static_cast<std::size_t>(dof[n])]) {
      seen[static_cast<std::size_t>(dof[n])] = true;
      rep[static_cast<std::size_t>(dof[n])] = n;
    } else {
      u.segment(static_cast<Eigen::Index>(n) * m, m) =
          u.segment(static_cast<Eigen::Index>(rep[static_cast<std::size_t>(dof[n])]) * m, m).eval();
    }
  }
}

AssemblyScaling cell_scaling(const SlabGrid& grid) {
  return AssemblyScaling{1.0, 1.0, 1.0 / (2.0 * grid.h() * std::pow(grid.length(), grid.dim_d()))};
}

// --- CellAssembler -------------------------------------------------------------

CellAssembler::CellAssembler(const SlabGrid& grid, const EnergyDensity& f, AssemblyScaling scaling, int workers)
    : grid_(grid), f_(f), scaling_(scaling), workers_(std::max(workers, 1)) {
  if (f.dim_d() != grid.dim_d()) {
    throw InvalidArgument(fmt::format("density has d = {} but the grid has d = {}", f.dim_d(), grid.dim_d()));
  }
  const int D = grid.ambient_dim();
  const std::size_t nloc = grid.nodes_per_element();
  const double g = 1.0 / std::sqrt(3.0);
  const std::array<double, 2> gauss{0.5 * (1.0 - g), 0.5 * (1.0 + g)};
  std::array<double, 3> step{};
  weight_ = 1.0;
  for (int a = 0; a < D; ++a) {
    step[static_cast<std::size_t>(a)] = a == D - 1 ? grid.dy() : grid.dx();
    weight_ *= 0.5 * step[static_cast<std::size_t>(a)];
  }

  for (std::size_t qi = 0; qi < nloc; ++qi) {
    QuadPoint q;
    q.ref.resize(D);
    for (int a = 0; a < D; ++a) q.ref[a] = gauss[(qi >> a) & 1u];
    for (std::size_t n = 0; n < nloc; ++n) {
      double N = 1.0;
      Vec dN(D);
      for (int a = 0; a < D; ++a) {
        const bool bit = (n >> a) & 1u;
        N *= bit ? q.ref[a] : 1.0 - q.ref[a];
      }
      for (int a = 0; a < D; ++a) {
        double v = ((n >> a) & 1u) ? 1.0 : -1.0;
        for (int b = 0; b < D; ++b) {
          if (b == a) continue;
          v *= ((n >> b) & 1u) ? q.ref[b] : 1.0 - q.ref[b];
        }
        dN[a] = v / step[static_cast<std::size_t>(a)];
      }
      dN[D - 1] *= scaling_.dy_factor;
      q.shape.push_back(N);
      q.shape_grad.push_back(dN);
    }
    quad_.push_back(std::move(q));
  }

  locals_.resize(grid.element_count() * quad_.size());
  parallel_for(grid.element_count(), workers_, [&](std::size_t b, std::size_t e) {
    for (std::size_t el = b; el < e; ++el) {
      for (std::size_t qi = 0; qi < quad_.size(); ++qi) {
        locals_[el * quad_.size() + qi] = f_.local(quad_point_coords(el, quad_[qi]));
      }
    }
  });
}

Vec CellAssembler::quad_point_coords(std::size_t element, const QuadPoint& q) const {
  const int D = grid_.ambient_dim();
  Vec x = grid_.element_origin(element);
  for (int a = 0; a < D - 1; ++a) x[a] = scaling_.x_scale * (x[a] + q.ref[a] * grid_.dx());
  x[D - 1] += q.ref[D - 1] * grid_.dy();
  return x;
}

void CellAssembler::check_inputs(const Field& u, const Mat& A) const {
  if (static_cast<std::size_t>(u.size()) != field_size()) {
    throw InvalidArgument(fmt::format("field has {} entries, grid needs {}", u.size(), field_size()));
  }
  if (A.rows() != dim_m() || A.cols() != grid_.dim_d()) {
    throw InvalidArgument(fmt::format("A must be {}x{}, got {}x{}", dim_m(), grid_.dim_d(), A.rows(), A.cols()));
  }
}

Mat CellAssembler::full_gradient(const Mat& A, const Field& u, std::size_t element, const QuadPoint& q) const {
  const int D = grid_.ambient_dim();
  const int m = dim_m();
  Mat G = Mat::Zero(m, D);
  G.leftCols(D - 1) = A;
  for (std::size_t n = 0; n < q.shape_grad.size(); ++n) {
    const auto node = static_cast<Eigen::Index>(grid_.element_node(element, n));
    G.noalias() += u.segment(node * m, m) * q.shape_grad[n].transpose();
  }
  return G;
}

std::vector<double> CellAssembler::element_energies(const Field& u, const Mat& A) const {
  check_inputs(u, A);
  std::vector<double> out(grid_.element_count());
  const double w = weight_ * scaling_.normalization;
  parallel_for(out.size(), workers_, [&](std::size_t b, std::size_t e) {
    for (std::size_t el = b; el < e; ++el) {
      double s = 0.0;
      for (std::size_t qi = 0; qi < quad_.size(); ++qi) {
        const double v = f_.eval(locals_[el * quad_.size() + qi], full_gradient(A, u, el, quad_[qi]));
        if (!std::isfinite(v)) {
          const Vec x = quad_point_coords(el, quad_[qi]);
          throw NumericalError(fmt::format("non-finite energy density {} at quadrature point ({})", v,
                                           fmt::join(x.begin(), x.end(), ", ")));
        }
        s += v;
      }
      out[el] = w * s;
    }
  });
  return out;
}

double CellAssembler::energy(const Field& u, const Mat& A) const {
  const auto e = element_energies(u, A);
  return pairwise_sum(e);
}

double CellAssembler::energy_and_gradient(const Field& u, const Mat& A, Field& grad) const {
  check_inputs(u, A);
  const int m = dim_m();
  const std::size_t nloc = grid_.nodes_per_element();
  const std::size_t ne = grid_.element_count();
  const double w = weight_ * scaling_.normalization;
  std::vector<double> energies(ne);
  std::vector<double> local_grad(ne * nloc * static_cast<std::size_t>(m), 0.0);

  parallel_for(ne, workers_, [&](std::size_t b, std::size_t e) {
    for (std::size_t el = b; el < e; ++el) {
      double s = 0.0;
      double* lg = &local_grad[el * nloc * static_cast<std::size_t>(m)];
      for (std::size_t qi = 0; qi < quad_.size(); ++qi) {
        const auto& q = quad_[qi];
        const auto& loc = locals_[el * quad_.size() + qi];
        const Mat G = full_gradient(A, u, el, q);
        const double v = f_.eval(loc, G);
        if (!std::isfinite(v)) {
          const Vec x = quad_point_coords(el, q);
          throw NumericalError(fmt::format("non-finite energy density {} at quadrature point ({})", v,
                                           fmt::join(x.begin(), x.end(), ", ")));
        }
        s += v;
        const Mat P = f_.grad(loc, G);
        for (std::size_t n = 0; n < nloc; ++n) {
          const Vec contrib = P * q.shape_grad[n];
          for (int c = 0; c < m; ++c) lg[n * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] += w * contrib[c];
        }
      }
      energies[el] = w * s;
    }
  });

  grad = Field::Zero(static_cast<Eigen::Index>(field_size()));
  for (std::size_t el = 0; el < ne; ++el) {
    const double* lg = &local_grad[el * nloc * static_cast<std::size_t>(m)];
    for (std::size_t n = 0; n < nloc; ++n) {
      const auto node = static_cast<Eigen::Index>(grid_.element_node(el, n));
      for (int c = 0; c < m; ++c) grad[node * m + c] += lg[n * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)];
    }
  }
  const auto& dof = grid_.node_dof();
  for (std::size_t n = 0; n < grid_.node_count(); ++n) {
    if (dof[n] < 0) grad.segment(static_cast<Eigen::Index>(n) * m, m).setZero();
  }
  return pairwise_sum(energies);
}

Field CellAssembler::gradient(const Field& u, const Mat& A) const {
  Field g;
  energy_and_gradient(u, A, g);
  return g;
}

Field CellAssembler::expand(const Eigen::VectorXd& free) const {
  const int m = dim_m();
  Field u = Field::Zero(static_cast<Eigen::Index>(field_size()));
  const auto& dof = grid_.node_dof();
  for (std::size_t n = 0; n < grid_.node_count(); ++n) {
    if (dof[n] >= 0) u.segment(static_cast<Eigen::Index>(n) * m, m) = free.segment(dof[n] * m, m);
  }
  return u;
}

Eigen::VectorXd CellAssembler::restrict_gradient(const Field& nodal) const {
  const int m = dim_m();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_size()));
  const auto& dof = grid_.node_dof();
  for (std::size_t n = 0; n < grid_.node_count(); ++n) {
    if (dof[n] >= 0) out.segment(dof[n] * m, m) += nodal.segment(static_cast<Eigen::Index>(n) * m, m);
  }
  return out;
}

Eigen::VectorXd CellAssembler::restrict_values(const Field& nodal) const {
  const int m = dim_m();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_size()));
  const auto& dof = grid_.node_dof();
  for (std::size_t n = grid_.node_count(); n-- > 0;) {
    if (dof[n] >= 0) out.segment(dof[n] * m, m) = nodal.segment(static_cast<Eigen::Index>(n) * m, m);
  }
  return out;
}

Eigen::VectorXd CellAssembler::hessian_diagonal() const {
  const int m = dim_m();
  const int D = grid_.ambient_dim();
  const std::size_t nloc = grid_.nodes_per_element();
  const double w = weight_ * scaling_.normalization;
  Field diag = Field::Zero(static_cast<Eigen::Index>(field_size()));
  // H[(c,k),(c,l)] = d/dG_{cl} of grad_{ck}, exact for quadratic densities.
  std::vector<Mat> columns(static_cast<std::size_t>(m * D));
  for (std::size_t el = 0; el < grid_.element_count(); ++el) {
    for (std::size_t qi = 0; qi < quad_.size(); ++qi) {
      const auto& loc = locals_[el * quad_.size() + qi];
      for (int c = 0; c < m; ++c) {
        for (int l = 0; l < D; ++l) {
          Mat E = Mat::Zero(m, D);
          E(c, l) = 1.0;
          columns[static_cast<std::size_t>(c * D + l)] = f_.grad(loc, E) - f_.grad(loc, Mat::Zero(m, D));
        }
      }
      for (std::size_t n = 0; n < nloc; ++n) {
        const Vec& g = quad_[qi].shape_grad[n];
        const auto node = static_cast<Eigen::Index>(grid_.element_node(el, n));
        for (int c = 0; c < m; ++c) {
          double s = 0.0;
          for (int l = 0; l < D; ++l) {
            const Mat& col = columns[static_cast<std::size_t>(c * D + l)];
            for (int k = 0; k < D; ++k) s += g[k] * g[l] * col(c, k);
          }
          diag[node * m + c] += w * s;
        }
      }
    }
  }
  return restrict_gradient(diag);
}

double assemble_energy(const Field& u, const Mat& A, const EnergyDensity& f, const SlabGrid& grid) {
  return CellAssembler(grid, f, cell_scaling(grid)).energy(u, A);
}

Field assemble_gradient(const Field& u, const Mat& A, const EnergyDensity& f, const SlabGrid& grid) {
  return CellAssembler(grid, f, cell_scaling(grid)).gradient(u, A);
}

// --- Solvers -------------------------------------------------------------------

namespace {

void solve_quadratic(const CellAssembler& asmb, const Mat& A, const SolverOptions& opts, Eigen::VectorXd& x,
                     CellSolution& sol) {
  const Mat zero = Mat::Zero(A.rows(), A.cols());
  const Eigen::VectorXd g0 = asmb.restrict_gradient(asmb.gradient(asmb.expand(Eigen::VectorXd::Zero(x.size())), A));
  // E(x) = E(0) + g0.x + x.Kx/2 and K v is the gradient at v with A = 0.
  const auto apply_K = [&](const Eigen::VectorXd& v) { return asmb.restrict_gradient(asmb.gradient(asmb.expand(v), zero)); };

  Eigen::VectorXd r = -g0 - apply_K(x);
  const double bnorm = g0.norm();
  sol.method = "pcg";
  if (bnorm == 0.0 && r.norm() == 0.0) {
    sol.converged = true;
    sol.iterations = 0;
    sol.residual_norm = 0.0;
    return;
  }
  Eigen::VectorXd diag = asmb.hessian_diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) diag[i] = 1.0;
  }
  const double target = opts.cg_tol * std::max(bnorm, 1e-300);
  Eigen::VectorXd z = r.cwiseQuotient(diag);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  int it = 0;
  while (r.norm() > target && it < opts.cg_max_iter) {
    const Eigen::VectorXd Kp = apply_K(p);
    const double pKp = p.dot(Kp);
    if (!(pKp > 0.0)) throw NumericalError("conjugate gradients: operator not positive definite");
    const double alpha = rz / pKp;
    x += alpha * p;
    r -= alpha * Kp;
    z = r.cwiseQuotient(diag);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++it;
  }
  sol.iterations = it;
  sol.residual_norm = (g0 + apply_K(x)).norm();
  sol.converged = sol.residual_norm <= 10.0 * target || r.norm() <= target;
}

void solve_lbfgs(const CellAssembler& asmb, const Mat& A, const SolverOptions& opts, Eigen::VectorXd& x,
                 CellSolution& sol) {
  sol.method = "lbfgs";
  const auto evaluate = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
    Field nodal_grad;
    const double e = asmb.energy_and_gradient(asmb.expand(v), A, nodal_grad);
    g = asmb.restrict_gradient(nodal_grad);
    return e;
  };
  const int mem = std::max(opts.lbfgs_memory, 1);
  std::vector<Eigen::VectorXd> S, Y;
  std::vector<double> rho;
  Eigen::VectorXd g;
  double e = evaluate(x, g);
  int it = 0;
  sol.converged = false;
  while (true) {
    const double gnorm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    sol.residual_norm = gnorm;
    if (gnorm < opts.grad_tol * (1.0 + std::abs(e))) {
      sol.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = S.empty() ? std::min(1.0, 1.0 / std::max(gnorm, 1e-300)) : 1.0;
    Eigen::VectorXd x_new, g_new;
    double e_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      e_new = evaluate(x_new, g_new);
      if (std::isfinite(e_new) && e_new <= e + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = x_new - x, y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      if (static_cast<int>(S.size()) == mem) {
        S.erase(S.begin());
        Y.erase(Y.begin());
        rho.erase(rho.begin());
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    x = std::move(x_new);
    g = std::move(g_new);
    e = e_new;
    ++it;
  }
  sol.iterations = it;
}

}  // namespace

CellSolution minimize_on_grid(const Mat& A, const SlabGrid& grid, const EnergyDensity& f, const SolverOptions& opts,
                              const Field* initial) {
  if (f.dim_d() != grid.dim_d()) throw InvalidArgument("minimize_cell: density and grid dimensions differ");
  if (A.rows() != f.dim_m() || A.cols() != f.dim_d()) {
    throw InvalidArgument(fmt::format("minimize_cell: A must be {}x{}", f.dim_m(), f.dim_d()));
  }
  CellAssembler asmb(grid, f, cell_scaling(grid), opts.workers);
  CellSolution sol;
  sol.grid = grid;
  sol.A = A;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(asmb.free_size()));
  if (initial != nullptr) x = asmb.restrict_values(*initial);

  if (f.quadratic() && !opts.force_lbfgs) {
    solve_quadratic(asmb, A, opts, x, sol);
  } else {
    solve_lbfgs(asmb, A, opts, x, sol);
  }
  sol.u_star = asmb.expand(x);
  sol.value = asmb.energy(sol.u_star, A);
  // The zero field is admissible, so never report worse than it.
  const double zero_value = asmb.energy(Field::Zero(static_cast<Eigen::Index>(asmb.field_size())), A);
  if (zero_value < sol.value) {
    sol.u_star.setZero();
    sol.value = zero_value;
  }
  return sol;
}

CellSolution minimize_cell(const Mat& A, double T, const EnergyDensity& f, const GridOptions& grid_opts,
                           const SolverOptions& opts) {
  return minimize_on_grid(A, build_grid(f.dim_d(), T, grid_opts), f, opts);
}

// --- Rescaling -----------------------------------------------------------------

SlabGrid unit_grid_like(const SlabGrid& grid) {
  return SlabGrid(grid.dim_d(), 1.0, grid.cells(), grid.h(), grid.n_y(), grid.lateral());
}

RescalingReport rescaling_check(const Field& u, const Mat& A, const EnergyDensity& f, const SlabGrid& grid,
                                const SlabGrid& unit_grid, double tolerance) {
  if (!grid.same_layout(unit_grid) || unit_grid.length() != 1.0) {
    throw InvalidArgument("rescaling_check: the unit grid must have length 1 and the same cells, n_y, h as the T grid");
  }
  const double T = grid.length();
  RescalingReport r;
  r.t_form = CellAssembler(grid, f, cell_scaling(grid)).energy(u, A);
  const AssemblyScaling eps_scaling{T, T, 1.0 / (2.0 * grid.h())};
  const Field ubar = u / T;
  r.eps_form = CellAssembler(unit_grid, f, eps_scaling).energy(ubar, A);
  const double scale = std::max({std::abs(r.t_form), std::abs(r.eps_form), 1e-300});
  r.relative_difference = std::abs(r.t_form - r.eps_form) / scale;
  r.passed = r.relative_difference <= tolerance;
  return r;
}

void write_field(std::ostream& os, const SlabGrid& grid, const Field& u, int m) {
  os << "# node";
  for (int a = 0; a < grid.dim_d(); ++a) os << " x" << a + 1;
  os << " y";
  for (int c = 0; c < m; ++c) os << " u" << c + 1;
  os << '\n';
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Vec x = grid.node_coords(n);
    fmt::print(os, "{}", n);
    for (Eigen::Index a = 0; a < x.size(); ++a) fmt::print(os, " {:.17g}", x[a]);
    for (int c = 0; c < m; ++c) fmt::print(os, " {:.17g}", u[static_cast<Eigen::Index>(n) * m + c]);
    os << '\n';
  }
}

}  // namespace thinfilm
