#include "thinfilm/homogenizer.hpp"

#include "thinfilm/parallel.hpp"
#include "thinfilm/sampling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace thinfilm {

std::vector<double> HomogEstimate::increments() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < values.size(); ++i) out.push_back(std::abs(values[i] - values[i - 1]));
  return out;
}

HomogEstimate estimate_fhom(const Mat& A, const EnergyDensity& f, const std::vector<double>& schedule,
                            const HomogOptions& opts) {
  if (schedule.size() < 3) throw InvalidArgument("estimate_fhom: the T schedule needs at least 3 values");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0)) throw InvalidArgument("estimate_fhom: T values must be > 0");
    if (i > 0 && !(schedule[i] > schedule[i - 1])) {
      throw InvalidArgument("estimate_fhom: the T schedule must be strictly increasing");
    }
  }
  const std::size_t k = schedule.size();
  HomogEstimate est;
  est.A = A;
  est.schedule = schedule;
  est.values.assign(k, std::numeric_limits<double>::quiet_NaN());
  est.converged.assign(k, false);
  est.iterations.assign(k, 0);
  est.errors.assign(k, std::string{});
  est.n_per_unit = opts.grid.n_per_unit;
  est.h = opts.grid.h;

  std::vector<int> n_y(k, 0);
  parallel_for(k, std::max(opts.jobs, 1), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        const auto sol = minimize_cell(A, schedule[i], f, opts.grid, opts.solver);
        est.values[i] = sol.value;
        est.converged[i] = sol.converged;
        est.iterations[i] = sol.iterations;
        n_y[i] = sol.grid.n_y();
      } catch (const NumericalError& err) {
        est.errors[i] = err.what();
      }
    }
  });
  est.n_y = n_y.back() != 0 ? n_y.back() : n_y.front();

  std::vector<double> ok;
  for (std::size_t i = 0; i < k; ++i) {
    if (est.errors[i].empty()) ok.push_back(est.values[i]);
  }
  if (ok.size() < 2) {
    throw NumericalError(fmt::format("estimate_fhom: only {} of {} cell problems succeeded; first error: {}",
                                     ok.size(), k, est.errors.front().empty() ? est.errors.back() : est.errors.front()));
  }
  const std::size_t n = ok.size();
  const std::size_t tail = (n + 2) / 3;
  const std::size_t window = std::max<std::size_t>(2, tail);
  double s = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) s += ok[i];
  est.extrapolated = s / static_cast<double>(tail);
  const auto [lo, hi] = std::minmax_element(ok.end() - static_cast<std::ptrdiff_t>(window), ok.end());
  est.spread = *hi - *lo;
  est.cauchy = est.spread <= opts.spread_tol;
  return est;
}

PatchworkReport upper_bound_patchwork(const CellSolution& sol_T, const EnergyDensity& f, double S, double delta,
                                      const AlmostPeriodSet& periods, double L_eta, int workers) {
  const SlabGrid& grid = sol_T.grid;
  const int d = grid.dim_d();
  const int m = f.dim_m();
  const double T = grid.length();
  const double h = grid.h();
  const double eta = periods.eta;
  if (grid.lateral() != Lateral::clamped) throw InvalidArgument("upper_bound_patchwork: the T cell must be clamped");
  if (periods.dim_d != d) throw InvalidArgument("upper_bound_patchwork: period set and cell dimensions differ");

  PatchworkReport r;
  r.T = T;
  r.S = S;
  r.eta = eta;
  r.delta = delta;
  r.L_eta = L_eta;
  r.g_T = sol_T.value;

  r.slices = select_slices(grid, sol_T.u_star, sol_T.A, f.exponent(), delta, eta);
  const ExtendedField ext = clamp_extend(grid, sol_T.u_star, m, r.slices);
  r.slice_bound = verify_slice_bound(ext, sol_T.u_star, sol_T.A, f, r.slices);

  const PatchworkPlan plan = plan_patchwork(periods, T, S, L_eta, h);
  const auto cells_S = static_cast<int>(std::lround(S * grid.cells() / T));
  const SlabGrid S_grid(d, S, cells_S, h, grid.n_y(), Lateral::clamped);
  const Field u_S = patchwork_assemble(ext, plan, S_grid);
  r.lhs = CellAssembler(S_grid, f, cell_scaling(S_grid), workers).energy(u_S, sol_T.A);

  const auto& g = f.growth();
  const double ratio = T / (T + L_eta);
  const double rd = std::pow(ratio, d);
  const double log_term = 1.0 + 2.0 * g.beta / (g.alpha * std::abs(std::log(delta / eta)));
  r.rhs = rd * (1.0 + eta / g.alpha) * log_term * (r.g_T + 1.0 / T) + (eta * h + g.beta * (delta + eta)) * rd +
          g.beta * h * (1.0 - std::pow(ratio - T / S, d)) * std::pow(1.0 + sol_T.A.norm(), g.p);

  r.blocks = plan.placements.size();
  r.Q_S_plan = plan.Q_S_measure;
  r.Q_S_bound = plan.Q_S_bound;
  r.Q_S_measured = remainder_measure(plan, S_grid);
  const double Td = std::pow(T, d);
  r.boundary_layer =
      2.0 * h * static_cast<double>(r.blocks) * (Td - std::pow(std::max(T - 2.0 * S_grid.dx(), 0.0), d)) + 1e-9;
  return r;
}

RankOneReport rank_one_scan(const FhatFn& fhat, int m, int d, std::size_t probes, double a_range,
                            std::uint64_t seed) {
  if (m < 1 || d < 1) throw InvalidArgument("rank_one_scan: m and d must be >= 1");
  QuasiRandom qrng(m * d + m + d + 1, seed);
  RankOneReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probes; ++i) {
    const auto u = qrng.next();
    std::size_t c = 0;
    const auto coord = [&] { return a_range * (2.0 * u[c++] - 1.0); };
    RankOneProbe p;
    p.A.resize(m, d);
    for (int r = 0; r < m; ++r)
      for (int s = 0; s < d; ++s) p.A(r, s) = coord();
    Vec a(m), b(d);
    for (int r = 0; r < m; ++r) a[r] = coord();
    for (int s = 0; s < d; ++s) b[s] = coord();
    p.direction = a * b.transpose();
    p.t = 0.05 + 0.9 * u[c];
    const auto [v0, t0] = fhat(p.A);
    const auto [v1, t1] = fhat(p.A + (1.0 - p.t) * p.direction);
    const auto [v2, t2] = fhat(p.A - p.t * p.direction);
    p.lhs = v0;
    p.rhs = p.t * v1 + (1.0 - p.t) * v2;
    p.tolerance = t0 + p.t * t1 + (1.0 - p.t) * t2;
    if (!p.passed()) ++report.violations;
    report.worst_margin = std::min(report.worst_margin, p.margin() + p.tolerance);
    report.probes.push_back(std::move(p));
  }
  return report;
}

CachedFhat::CachedFhat(EnergyDensity f, std::vector<double> schedule, HomogOptions opts)
    : f_(std::move(f)), schedule_(std::move(schedule)), opts_(std::move(opts)) {}

std::pair<double, double> CachedFhat::operator()(const Mat& A) {
  std::vector<double> key(A.data(), A.data() + A.size());
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const auto est = estimate_fhom(A, f_, schedule_, opts_);
  GridOptions coarse = opts_.grid;
  coarse.n_per_unit = std::max(1, coarse.n_per_unit / 2);
  if (coarse.n_y > 0) coarse.n_y = std::max(1, coarse.n_y / 2);
  const double g_fine = est.values.back();
  const double g_coarse = minimize_cell(A, schedule_.back(), f_, coarse, opts_.solver).value;
  const double solver_tol = opts_.solver.grad_tol * (1.0 + std::abs(est.extrapolated));
  const std::pair<double, double> out{est.extrapolated, solver_tol + std::abs(g_coarse - g_fine)};
  std::lock_guard lock(mutex_);
  cache_.emplace(std::move(key), out);
  return out;
}

ReferenceResult commensurate_reference(const EnergyDensity& ftilde, const IsometryFrame& frame, const Mat& A,
                                       const GridOptions& grid, const SolverOptions& solver,
                                       std::int64_t search_bound) {
  const int d = frame.dim_d;
  const auto report = classify_rationality(frame, search_bound);
  if (report.lattice_rank < d) {
    throw InvalidArgument(fmt::format("commensurate_reference: the plane has lattice rank {} < d = {} within bound {}",
                                      report.lattice_rank, d, search_bound));
  }
  const auto axes = axis_lattice_vectors(frame, search_bound);
  if (!axes) {
    throw InvalidArgument("commensurate_reference: no lattice vector along some frame axis within the search bound");
  }
  ReferenceResult out;
  out.generators = *axes;
  std::vector<double> lengths;
  for (const auto& v : *axes) {
    double s = 0.0;
    for (auto c : v) s += static_cast<double>(c) * static_cast<double>(c);
    lengths.push_back(std::sqrt(s));
  }
  for (double L : lengths) {
    if (std::abs(L - lengths.front()) > 1e-12 * L) {
      throw InvalidArgument("commensurate_reference: the frame axes have different lattice periods");
    }
  }
  out.period = lengths.front();
  const EnergyDensity f = pull_back_density(ftilde, frame);
  const int cells = std::max(2, static_cast<int>(std::lround(grid.n_per_unit * out.period)));
  const int n_y = grid.n_y > 0 ? grid.n_y : std::max(2, static_cast<int>(std::lround(2.0 * grid.h * grid.n_per_unit)));
  const SlabGrid g(d, out.period, cells, grid.h, n_y, Lateral::periodic);
  out.solution = minimize_on_grid(A, g, f, solver);
  out.value = out.solution.value;
  return out;
}

}  // namespace thinfilm
