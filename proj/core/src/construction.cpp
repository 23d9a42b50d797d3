#include "thinfilm/construction.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace thinfilm {
namespace {

constexpr double kSnap = 1e-9;

void check_delta_eta(double delta, double eta) {
  if (!(eta > 0.0) || !(delta > eta) || !std::isfinite(delta)) {
    throw InvalidArgument(fmt::format("slice selection requires δ>η>0 (delta > eta > 0), got delta = {}, eta = {}",
                                      delta, eta));
  }
}

// In-plane cell c (lexicographic, i fastest) and Gauss point q of one grid layer.
struct LayerPoint {
  std::array<std::size_t, 4> nodes{};  // in-plane local node -> node index at layer 0
  std::array<double, 4> shape{};
  std::array<std::array<double, 2>, 4> dshape{};
  double weight = 0.0;
  Vec x;  // in-plane coordinates
};

std::vector<LayerPoint> layer_points(const SlabGrid& grid) {
  const int d = grid.dim_d();
  const int C = grid.cells();
  const double dx = grid.dx();
  const double g = 1.0 / std::sqrt(3.0);
  const std::array<double, 2> gauss{0.5 * (1.0 - g), 0.5 * (1.0 + g)};
  const std::size_t n_local = std::size_t{1} << d;
  const std::size_t n_cells = d == 1 ? static_cast<std::size_t>(C) : static_cast<std::size_t>(C) * C;
  std::vector<LayerPoint> out;
  out.reserve(n_cells * n_local);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const int i = static_cast<int>(c % static_cast<std::size_t>(C));
    const int j = d == 2 ? static_cast<int>(c / static_cast<std::size_t>(C)) : 0;
    for (std::size_t q = 0; q < n_local; ++q) {
      LayerPoint lp;
      std::array<double, 2> s{gauss[q & 1u], d == 2 ? gauss[(q >> 1) & 1u] : 0.0};
      lp.x.resize(d);
      lp.x[0] = (i + s[0]) * dx;
      if (d == 2) lp.x[1] = (j + s[1]) * dx;
      lp.weight = std::pow(0.5 * dx, d);
      for (std::size_t a = 0; a < n_local; ++a) {
        const int bi = static_cast<int>(a & 1u), bj = static_cast<int>((a >> 1) & 1u);
        lp.nodes[a] = grid.node_index(i + bi, j + bj, 0);
        const double ni = bi ? s[0] : 1.0 - s[0];
        const double di = (bi ? 1.0 : -1.0) / dx;
        if (d == 1) {
          lp.shape[a] = ni;
          lp.dshape[a] = {di, 0.0};
        } else {
          const double nj = bj ? s[1] : 1.0 - s[1];
          const double dj = (bj ? 1.0 : -1.0) / dx;
          lp.shape[a] = ni * nj;
          lp.dshape[a] = {di * nj, ni * dj};
        }
      }
      out.push_back(std::move(lp));
    }
  }
  return out;
}

std::size_t layer_stride(const SlabGrid& grid) {
  const auto P = static_cast<std::size_t>(grid.nodes_per_side());
  return grid.dim_d() == 1 ? P : P * P;
}

// u and its in-plane gradient at a layer point of layer k.
void layer_values(const SlabGrid& grid, const Field& u, int m, const LayerPoint& lp, int k, Vec& val, Mat& grad) {
  const int d = grid.dim_d();
  const std::size_t shift = static_cast<std::size_t>(k) * layer_stride(grid);
  val = Vec::Zero(m);
  grad = Mat::Zero(m, d);
  const std::size_t n_local = std::size_t{1} << d;
  for (std::size_t a = 0; a < n_local; ++a) {
    const auto node = static_cast<Eigen::Index>(lp.nodes[a] + shift);
    const auto ua = u.segment(node * m, m);
    val += lp.shape[a] * ua;
    for (int l = 0; l < d; ++l) grad.col(l) += lp.dshape[a][static_cast<std::size_t>(l)] * ua;
  }
}

double frobenius_pow(const Mat& G, double p) { return std::pow(G.norm(), p); }

double trapezoid(const std::vector<LayerSample>& s) {
  double C = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) C += 0.5 * (s[i].g + s[i - 1].g) * (s[i].t - s[i - 1].t);
  return C;
}

}  // namespace

SliceSelection slice_select(const std::vector<LayerSample>& samples, double h, double delta, double eta,
                            std::optional<double> mass) {
  check_delta_eta(delta, eta);
  if (!(h > 0.0)) throw InvalidArgument("slice_select: h must be > 0");
  if (samples.empty()) throw InvalidArgument("slice_select: no samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].g >= 0.0) || !std::isfinite(samples[i].g)) {
      throw InvalidArgument(fmt::format("slice_select: g must be finite and >= 0, sample {} has {}", i, samples[i].g));
    }
    if (i > 0 && !(samples[i].t > samples[i - 1].t)) {
      throw InvalidArgument("slice_select: sample positions must be strictly increasing");
    }
  }
  if (mass && !(*mass >= 0.0)) throw InvalidArgument("slice_select: mass must be >= 0");

  SliceSelection sel;
  sel.h = h;
  sel.delta = delta;
  sel.eta = eta;
  sel.C = mass ? *mass : trapezoid(samples);
  sel.threshold = sel.C / std::log(delta / eta);
  const double slack = 1e-14 * std::max(1.0, sel.threshold);

  bool found = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = samples[i].t;
    if (t < h - delta - kSnap || t > h + kSnap) continue;
    const double w = (h + eta - t) * samples[i].g;
    if (!found || w < sel.weighted) {
      sel.weighted = w;
      sel.t = t;
      sel.index = i;
      found = true;
    }
    if (w <= sel.threshold + slack) sel.qualifying.push_back(t);
  }
  if (!found) {
    throw InvalidArgument(fmt::format("slice_select: no sample layer in [h - delta, h] = [{}, {}]", h - delta, h));
  }
  if (sel.weighted > sel.threshold + slack) {
    throw NumericalError(fmt::format(
        "slice_select: no sampled layer in [{}, {}] satisfies (h+eta-y) g(y) <= C/log(delta/eta) = {} "
        "(best {} at y = {}); refine n_y or increase eta",
        h - delta, h, sel.threshold, sel.weighted, sel.t));
  }
  return sel;
}

std::vector<double> layer_energies(const SlabGrid& grid, const Field& u, const Mat& A, double p) {
  const int d = grid.dim_d();
  const int m = static_cast<int>(A.rows());
  if (A.cols() != d) throw InvalidArgument("layer_energies: A must have d columns");
  if (static_cast<std::size_t>(u.size()) != grid.node_count() * static_cast<std::size_t>(m)) {
    throw InvalidArgument("layer_energies: field size does not match the grid");
  }
  const auto points = layer_points(grid);
  const int ny = grid.n_y();
  std::vector<double> g(static_cast<std::size_t>(ny + 1), 0.0);
  Vec v0, vm, vp;
  Mat g0, gtmp;
  for (int k = 0; k <= ny; ++k) {
    double s = 0.0;
    for (const auto& lp : points) {
      layer_values(grid, u, m, lp, k, v0, g0);
      Vec dy = Vec::Zero(m);
      int sides = 0;
      if (k > 0) {
        layer_values(grid, u, m, lp, k - 1, vm, gtmp);
        dy += (v0 - vm) / grid.dy();
        ++sides;
      }
      if (k < ny) {
        layer_values(grid, u, m, lp, k + 1, vp, gtmp);
        dy += (vp - v0) / grid.dy();
        ++sides;
      }
      dy /= sides;
      Mat G(m, d + 1);
      G.leftCols(d) = A + g0;
      G.col(d) = dy;
      s += lp.weight * frobenius_pow(G, p);
    }
    g[static_cast<std::size_t>(k)] = s;
  }
  return g;
}

SlicePair select_slices(const SlabGrid& grid, const Field& u, const Mat& A, double p, double delta, double eta) {
  check_delta_eta(delta, eta);
  const auto g = layer_energies(grid, u, A, p);
  const int ny = grid.n_y();
  std::vector<LayerSample> top, bottom;
  std::vector<int> top_k, bottom_k;
  for (int k = 0; k <= ny; ++k) {
    const double y = grid.y_layer(k);
    if (y >= -kSnap) {
      top.push_back({std::max(y, 0.0), g[static_cast<std::size_t>(k)]});
      top_k.push_back(k);
    }
  }
  for (int k = ny; k >= 0; --k) {
    const double y = grid.y_layer(k);
    if (y <= kSnap) {
      bottom.push_back({std::max(-y, 0.0), g[static_cast<std::size_t>(k)]});
      bottom_k.push_back(k);
    }
  }
  SlicePair out;
  out.top = slice_select(top, grid.h(), delta, eta);
  out.bottom = slice_select(bottom, grid.h(), delta, eta);
  out.k_plus = top_k[out.top.index];
  out.k_minus = bottom_k[out.bottom.index];
  out.y_plus = grid.y_layer(out.k_plus);
  out.y_minus = grid.y_layer(out.k_minus);
  return out;
}

Vec ExtendedField::eval(const Vec& x, double y) const {
  const int d = grid.dim_d();
  Vec point(d + 1);
  point.head(d) = x;
  point[d] = std::clamp(y, -grid.h(), grid.h());
  return interpolate(grid, values, m, point);
}

ExtendedField clamp_extend(const SlabGrid& grid, const Field& u, int m, const SlicePair& sel) {
  if (static_cast<std::size_t>(u.size()) != grid.node_count() * static_cast<std::size_t>(m)) {
    throw InvalidArgument("clamp_extend: field size does not match the grid");
  }
  if (sel.k_minus < 0 || sel.k_plus > grid.n_y() || sel.k_minus > sel.k_plus) {
    throw InvalidArgument("clamp_extend: selected layers do not lie on the grid");
  }
  ExtendedField ext;
  ext.grid = grid;
  ext.values = u;
  ext.m = m;
  ext.k_plus = sel.k_plus;
  ext.k_minus = sel.k_minus;
  ext.y_plus = grid.y_layer(sel.k_plus);
  ext.y_minus = grid.y_layer(sel.k_minus);
  const std::size_t stride = layer_stride(grid) * static_cast<std::size_t>(m);
  const auto copy_layer = [&](int from, int to) {
    ext.values.segment(static_cast<Eigen::Index>(static_cast<std::size_t>(to) * stride),
                       static_cast<Eigen::Index>(stride)) =
        u.segment(static_cast<Eigen::Index>(static_cast<std::size_t>(from) * stride),
                  static_cast<Eigen::Index>(stride));
  };
  for (int k = sel.k_plus + 1; k <= grid.n_y(); ++k) copy_layer(sel.k_plus, k);
  for (int k = 0; k < sel.k_minus; ++k) copy_layer(sel.k_minus, k);
  return ext;
}

SliceBoundReport verify_slice_bound(const ExtendedField& ext, const Field& u, const Mat& A, const EnergyDensity& f,
                                    const SlicePair& sel) {
  const SlabGrid& grid = ext.grid;
  const int d = grid.dim_d();
  const int m = ext.m;
  const double h = grid.h();
  const double eta = sel.top.eta, delta = sel.top.delta;
  check_delta_eta(delta, eta);
  const auto points = layer_points(grid);
  const double gq = 1.0 / std::sqrt(3.0);

  // Flat cap over [lo, hi] using the in-plane gradient of layer k and d_y u = 0.
  const auto cap = [&](int k, double lo, double hi) {
    const int n_sub = std::max(1, static_cast<int>(std::ceil((hi - lo) / grid.dy() - 1e-12)));
    const double len = (hi - lo) / n_sub;
    double s = 0.0;
    Vec val;
    Mat gx;
    Vec x(d + 1);
    for (const auto& lp : points) {
      layer_values(grid, ext.values, m, lp, k, val, gx);
      Mat G = Mat::Zero(m, d + 1);
      G.leftCols(d) = A + gx;
      x.head(d) = lp.x;
      for (int sub = 0; sub < n_sub; ++sub) {
        for (double r : {0.5 * (1.0 - gq), 0.5 * (1.0 + gq)}) {
          x[d] = lo + (sub + r) * len;
          s += lp.weight * 0.5 * len * f.eval(x, G);
        }
      }
    }
    return s;
  };

  SliceBoundReport r;
  r.top_energy = cap(ext.k_plus, ext.y_plus, h + eta);
  r.bottom_energy = cap(ext.k_minus, -h - eta, ext.y_minus);
  const double Td = std::pow(grid.length(), d);
  r.C_T = assemble_energy(u, A, f, grid) * 2.0 * h * Td;
  const auto& g = f.growth();
  r.bound = g.beta * (Td * (delta + eta) + r.C_T / (g.alpha * std::abs(std::log(delta / eta))));
  r.passed = r.top_energy <= r.bound && r.bottom_energy <= r.bound;
  return r;
}

Field translate_test_function(const ExtendedField& ext, const AlmostPeriod& ap, const SlabGrid& target) {
  const int d = target.dim_d();
  const int m = ext.m;
  if (ext.grid.dim_d() != d || ap.tau.size() != d) {
    throw InvalidArgument("translate_test_function: dimension mismatch between field, period and target grid");
  }
  const double T = ext.grid.length();
  const double S = target.length();
  for (int i = 0; i < d; ++i) {
    if (ap.tau[i] < -kSnap || ap.tau[i] + T > S + kSnap) {
      throw InvalidArgument(fmt::format("translate_test_function: block tau + [0, {}]^d with tau_{} = {} leaves (0, {})",
                                        T, i + 1, ap.tau[i], S));
    }
  }
  Field v = Field::Zero(static_cast<Eigen::Index>(target.node_count() * static_cast<std::size_t>(m)));
  for (std::size_t n = 0; n < target.node_count(); ++n) {
    const Vec x = target.node_coords(n);
    Vec local = x.head(d) - ap.tau;
    bool inside = true;
    for (int i = 0; i < d; ++i) inside = inside && local[i] >= -kSnap && local[i] <= T + kSnap;
    if (!inside) continue;
    for (int i = 0; i < d; ++i) local[i] = std::clamp(local[i], 0.0, T);
    v.segment(static_cast<Eigen::Index>(n) * m, m) = ext.eval(local, x[d] - ap.z_tau);
  }
  apply_constraints(target, v, m);
  return v;
}

PatchworkPlan plan_patchwork(const AlmostPeriodSet& periods, double T, double S, double L_eta, double h) {
  const int d = periods.dim_d;
  if (!(T > 0.0) || !(L_eta > 0.0) || !(h > 0.0)) {
    throw InvalidArgument("plan_patchwork: T, L_eta and h must be > 0");
  }
  if (!(S > T + L_eta)) {
    throw InvalidArgument(fmt::format("plan_patchwork: S = {} too small, need S > T + L_eta = {}", S, T + L_eta));
  }
  PatchworkPlan plan;
  plan.dim_d = d;
  plan.T = T;
  plan.S = S;
  plan.L_eta = L_eta;
  plan.eta = periods.eta;
  plan.h = h;
  const int N = static_cast<int>(std::floor(S / (T + L_eta)));
  plan.blocks_per_side = N;
  const double reach = std::sqrt(static_cast<double>(d)) * ((T + L_eta) * (N - 1) + L_eta);
  if (reach > periods.radius + 1e-12) {
    throw InvalidArgument(fmt::format(
        "plan_patchwork: windows reach |tau| = {} beyond the enumeration radius {}", reach, periods.radius));
  }

  const int total = d == 1 ? N : N * N;
  for (int flat = 0; flat < total; ++flat) {
    IntVec l(static_cast<std::size_t>(d));
    l[0] = flat % N;
    if (d == 2) l[1] = flat / N;
    Box window;
    window.lo.resize(d);
    window.hi.resize(d);
    for (int i = 0; i < d; ++i) {
      window.lo[i] = (T + L_eta) * static_cast<double>(l[static_cast<std::size_t>(i)]);
      window.hi[i] = window.lo[i] + L_eta;
    }
    auto ap = select_in_window(periods.periods, window);
    if (!ap) {
      throw NumericalError(fmt::format("plan_patchwork: no eta-almost period in the window of block l = ({})",
                                       fmt::join(l, ", ")));
    }
    plan.index_set.push_back(std::move(l));
    plan.placements.push_back(std::move(*ap));
  }
  const double Sd = std::pow(S, d), Td = std::pow(T, d);
  plan.Q_S_measure = 2.0 * h * (Sd - static_cast<double>(plan.placements.size()) * Td);
  plan.Q_S_bound = 2.0 * h * Sd * (1.0 - std::pow(T / (T + L_eta) - T / S, d));
  check_plan(plan);
  return plan;
}

void check_plan(const PatchworkPlan& plan) {
  const int d = plan.dim_d;
  const double tol = 1e-12 * std::max(1.0, plan.S);
  for (std::size_t a = 0; a < plan.placements.size(); ++a) {
    const Vec& ta = plan.placements[a].tau;
    for (int i = 0; i < d; ++i) {
      if (ta[i] < -tol || ta[i] + plan.T > plan.S + tol) {
        throw InvalidArgument(fmt::format("patchwork: block {} leaves (0, S)^d", a));
      }
    }
    for (std::size_t b = a + 1; b < plan.placements.size(); ++b) {
      const Vec& tb = plan.placements[b].tau;
      bool overlap = true;
      for (int i = 0; i < d; ++i) overlap = overlap && std::abs(ta[i] - tb[i]) < plan.T - tol;
      if (overlap) throw InvalidArgument(fmt::format("patchwork: blocks {} and {} overlap", a, b));
    }
  }
}

Field patchwork_assemble(const ExtendedField& ext, const PatchworkPlan& plan, const SlabGrid& S_grid) {
  check_plan(plan);
  if (S_grid.dim_d() != plan.dim_d || std::abs(S_grid.length() - plan.S) > 1e-12 * plan.S) {
    throw InvalidArgument("patchwork_assemble: S grid does not match the plan");
  }
  if (std::abs(ext.grid.length() - plan.T) > 1e-12 * plan.T) {
    throw InvalidArgument("patchwork_assemble: field block length does not match the plan");
  }
  const int m = ext.m;
  Field u = Field::Zero(static_cast<Eigen::Index>(S_grid.node_count() * static_cast<std::size_t>(m)));
  for (const auto& ap : plan.placements) u += translate_test_function(ext, ap, S_grid);

  double trace = 0.0;
  for (std::size_t n = 0; n < S_grid.node_count(); ++n) {
    if (S_grid.on_lateral_boundary(n)) {
      trace = std::max(trace, u.segment(static_cast<Eigen::Index>(n) * m, m).cwiseAbs().maxCoeff());
    }
  }
  if (trace != 0.0) throw NumericalError(fmt::format("patchwork_assemble: lateral trace {} is not zero", trace));
  return u;
}

double remainder_measure(const PatchworkPlan& plan, const SlabGrid& S_grid) {
  const int d = S_grid.dim_d();
  const int C = S_grid.cells();
  const double dx = S_grid.dx();
  const std::size_t n_cells = d == 1 ? static_cast<std::size_t>(C) : static_cast<std::size_t>(C) * C;
  std::size_t outside = 0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const std::array<int, 2> idx{static_cast<int>(c % static_cast<std::size_t>(C)),
                                 static_cast<int>(c / static_cast<std::size_t>(C))};
    bool covered = false;
    for (const auto& ap : plan.placements) {
      bool in = true;
      for (int i = 0; i < d; ++i) {
        const double lo = idx[static_cast<std::size_t>(i)] * dx;
        in = in && lo >= ap.tau[i] - kSnap && lo + dx <= ap.tau[i] + plan.T + kSnap;
      }
      if (in) {
        covered = true;
        break;
      }
    }
    if (!covered) ++outside;
  }
  return 2.0 * S_grid.h() * std::pow(dx, d) * static_cast<double>(outside);
}

}  // namespace thinfilm
