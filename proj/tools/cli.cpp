#include "cli.hpp"

#include "thinfilm/config.hpp"
#include "thinfilm/construction.hpp"
#include "thinfilm/homogenizer.hpp"
#include "thinfilm/lattice.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <random>

namespace thinfilm::cli {
namespace {

constexpr const char* kUnits =
    "lengths in lattice periods (the medium is Z^(d+1)-periodic); energies per unit mid-plane volume";

std::string num(double x) { return fmt::format("{:.17g}", x); }

class Csv {
 public:
  Csv(std::ostream& os, const std::string& command, const std::string& hash, const std::vector<std::string>& columns)
      : os_(os) {
    fmt::print(os_, "# thinfilm {}; config_hash={}; units: {}\n", command, hash, kUnits);
    row(columns);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

struct Streams {
  std::ostream* csv;
  std::ostream* log;
};

struct Options {
  std::string config;
  std::optional<double> T;
  std::optional<double> eta;
  std::optional<std::string> out;
  std::optional<std::string> baseline;
  std::optional<std::string> record_baseline;
};

std::vector<std::string> matrix_cells(const Mat& A) {
  std::vector<std::string> out;
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) out.push_back(num(A(r, c)));
  return out;
}

std::vector<std::string> matrix_columns(int m, int d) {
  std::vector<std::string> out;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < d; ++c) out.push_back(fmt::format("A_{}{} [1]", r + 1, c + 1));
  return out;
}

const Mat& first_A(const RunConfig& cfg) {
  if (cfg.A_list.empty()) throw ConfigError("A: this command needs 'A' or 'A_list'");
  return cfg.A_list.front();
}

double need(const std::optional<double>& v, const char* key, const char* command) {
  if (!v) throw ConfigError(fmt::format("{}: required by '{}'", key, command));
  return *v;
}

bool in_growth_band(const EnergyDensity& f, const Mat& A, double value, double tol = 1e-8) {
  const auto& g = f.growth();
  const double n = std::pow(A.norm(), g.p);
  return value >= g.alpha * n - tol && value <= g.beta * (1.0 + n) + tol;
}

// --- frame -------------------------------------------------------------------

int cmd_frame(const RunConfig& cfg, Streams s) {
  const IsometryFrame frame = cfg.build_frame();
  const int D = frame.ambient_dim();
  std::vector<std::string> cols{"vector"};
  for (int i = 0; i < D; ++i) cols.push_back(fmt::format("component_{} [1]", i + 1));
  Csv csv(*s.csv, "frame", cfg.hash, cols);
  for (int c = 0; c < D; ++c) {
    std::vector<std::string> row{c < frame.dim_d ? fmt::format("pi_{}", c + 1) : std::string("nu")};
    for (int i = 0; i < D; ++i) row.push_back(num(frame.matrix_R(i, c)));
    csv.row(row);
  }
  const auto rep = classify_rationality(frame, cfg.denominator_bound);
  fmt::print(*s.log, "frame: d = {}, orthogonality defect {:.3g}\n", frame.dim_d, orthogonality_defect(frame));
  fmt::print(*s.log, "lattice rank {} within bound {} ({})\n", rep.lattice_rank, cfg.denominator_bound,
             rep.certified ? "certified, exact arithmetic" : "heuristic, floating normal");
  for (const auto& g : rep.generators) fmt::print(*s.log, "  generator ({})\n", fmt::join(g, ", "));
  return kOk;
}

// --- almost-periods ----------------------------------------------------------

int cmd_almost_periods(const RunConfig& cfg, Streams s) {
  const IsometryFrame frame = cfg.build_frame();
  const double eta = need(cfg.eta, "eta", "almost-periods");
  const double radius = need(cfg.radius, "radius", "almost-periods");
  const auto set = almost_periods(frame, eta, radius);
  const int d = frame.dim_d;
  std::vector<std::string> cols;
  for (int i = 0; i < d; ++i) cols.push_back(fmt::format("tau_{} [length]", i + 1));
  cols.emplace_back("z_tau [length]");
  cols.emplace_back("defect [length]");
  for (int i = 0; i <= d; ++i) cols.push_back(fmt::format("source_{} [lattice index]", i + 1));
  Csv csv(*s.csv, "almost-periods", cfg.hash, cols);
  for (const auto& p : set.periods) {
    std::vector<std::string> row;
    for (int i = 0; i < d; ++i) row.push_back(num(p.tau[i]));
    row.push_back(num(p.z_tau));
    row.push_back(num(p.defect));
    for (auto z : p.source) row.push_back(std::to_string(z));
    csv.row(row);
  }
  fmt::print(*s.log, "{} almost periods with defect < {} and |tau| <= {}\n", set.size(), eta, radius);
  if (cfg.region) {
    const auto rep = inclusion_length(set, cube(d, cfg.region->first, cfg.region->second), cfg.inclusion_cells);
    fmt::print(*s.log, "inclusion length over [{}, {}]^{}: L_eta = {:.17g} ({} periods in region)\n",
               cfg.region->first, cfg.region->second, d, rep.L_eta, rep.periods_in_region);
  }
  return kOk;
}

// --- cell ----------------------------------------------------------------------

int cmd_cell(const RunConfig& cfg, Streams s) {
  const Mat& A = first_A(cfg);
  const double T = need(cfg.T, "T", "cell");
  const EnergyDensity f = cfg.film_density();
  const auto sol = minimize_cell(A, T, f, cfg.grid, cfg.solver);
  auto cols = matrix_columns(cfg.dim_m(), cfg.dim_d());
  for (const char* c : {"T [length]", "g_A [energy/volume]", "iterations [1]", "residual [energy/volume]",
                        "converged [bool]"}) {
    cols.emplace_back(c);
  }
  Csv csv(*s.csv, "cell", cfg.hash, cols);
  auto row = matrix_cells(A);
  row.insert(row.end(), {num(T), num(sol.value), std::to_string(sol.iterations), num(sol.residual_norm),
                         sol.converged ? "1" : "0"});
  csv.row(row);
  if (cfg.field_output) {
    std::ofstream fo(*cfg.field_output);
    if (!fo) throw ConfigError(fmt::format("field_output: cannot open '{}'", *cfg.field_output));
    write_field(fo, sol.grid, sol.u_star, cfg.dim_m());
  }
  fmt::print(*s.log, "g_A(T = {}) = {:.17g} via {} in {} iterations{}\n", T, sol.value, sol.method, sol.iterations,
             sol.converged ? "" : " (iteration cap reached; value is still an upper bound)");
  if (!in_growth_band(f, A, sol.value)) {
    fmt::print(*s.log, "ASSERTION FAILED: g_A(T) outside the growth band\n");
    return kAssertionFailed;
  }
  return kOk;
}

// --- homogenize ----------------------------------------------------------------

using nlohmann::json;

json baseline_json(const RunConfig& cfg, const std::vector<HomogEstimate>& ests) {
  json j;
  j["config_hash"] = cfg.hash;
  j["tolerance"] = 0.01;
  j["entries"] = json::array();
  for (const auto& e : ests) {
    json entry;
    entry["A"] = std::vector<double>(e.A.data(), e.A.data() + e.A.size());
    entry["schedule"] = e.schedule;
    entry["values"] = e.values;
    entry["extrapolated"] = e.extrapolated;
    j["entries"].push_back(entry);
  }
  return j;
}

int compare_baseline(const RunConfig& cfg, const std::vector<HomogEstimate>& ests, const std::string& path,
                     std::ostream& log) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("--baseline: cannot read '{}'", path));
  json b;
  try {
    b = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("--baseline: '{}' is not valid JSON: {}", path, e.what()));
  }
  if (b.value("config_hash", std::string{}) != cfg.hash) {
    throw ConfigError(fmt::format("--baseline: '{}' was generated by config {}, this run is {}", path,
                                  b.value("config_hash", std::string{"?"}), cfg.hash));
  }
  const double tol = b.value("tolerance", 0.01);
  const auto& entries = b.at("entries");
  if (entries.size() != ests.size()) throw ConfigError("--baseline: entry count differs from the A list");
  bool ok = true;
  for (std::size_t i = 0; i < ests.size(); ++i) {
    const double ref = entries[i].at("extrapolated").get<double>();
    const double rel = std::abs(ests[i].extrapolated - ref) / std::max(std::abs(ref), 1e-300);
    fmt::print(log, "baseline A[{}]: {:.17g} vs recorded {:.17g} (relative {:.3g}, tolerance {})\n", i,
               ests[i].extrapolated, ref, rel, tol);
    ok = ok && rel <= tol;
  }
  return ok ? kOk : kAssertionFailed;
}

int cmd_homogenize(const RunConfig& cfg, Streams s, const Options& opt) {
  if (cfg.A_list.empty()) throw ConfigError("A: 'homogenize' needs 'A' or 'A_list'");
  if (cfg.schedule.empty()) throw ConfigError("schedule: required by 'homogenize'");
  const EnergyDensity f = cfg.film_density();
  auto cols = matrix_columns(cfg.dim_m(), cfg.dim_d());
  for (const char* c : {"T [length]", "g_A [energy/volume]", "extrapolated [energy/volume]", "spread [energy/volume]",
                        "converged [bool]"}) {
    cols.emplace_back(c);
  }
  Csv csv(*s.csv, "homogenize", cfg.hash, cols);
  std::vector<HomogEstimate> ests;
  bool band_ok = true;
  for (const Mat& A : cfg.A_list) {
    auto est = estimate_fhom(A, f, cfg.schedule, cfg.homog_options());
    for (std::size_t i = 0; i < est.schedule.size(); ++i) {
      auto row = matrix_cells(A);
      row.insert(row.end(), {num(est.schedule[i]), num(est.values[i]), num(est.extrapolated), num(est.spread),
                             est.converged[i] ? "1" : "0"});
      csv.row(row);
      if (est.errors[i].empty() && !in_growth_band(f, A, est.values[i])) band_ok = false;
      if (!est.errors[i].empty()) fmt::print(*s.log, "T = {} failed: {}\n", est.schedule[i], est.errors[i]);
    }
    if (!in_growth_band(f, A, est.extrapolated)) band_ok = false;
    fmt::print(*s.log, "A = [{}]: f_hom ~ {:.17g}, tail spread {:.3g}{}\n", fmt::join(matrix_cells(A), ", "),
               est.extrapolated, est.spread, est.cauchy ? "" : " (tail not yet Cauchy)");
    ests.push_back(std::move(est));
  }
  int code = kOk;
  if (!band_ok) {
    fmt::print(*s.log, "ASSERTION FAILED: some g_A(T) lies outside [alpha|A|^p, beta(1+|A|^p)]\n");
    code = kAssertionFailed;
  }
  if (opt.record_baseline) {
    std::ofstream bo(*opt.record_baseline);
    if (!bo) throw ConfigError(fmt::format("--record-baseline: cannot write '{}'", *opt.record_baseline));
    bo << baseline_json(cfg, ests).dump(2) << '\n';
  }
  if (opt.baseline && compare_baseline(cfg, ests, *opt.baseline, *s.log) != kOk) code = kAssertionFailed;
  return code;
}

// --- verify --------------------------------------------------------------------

struct CheckRow {
  std::string check;
  bool passed = true;
  std::size_t samples = 0;
  double margin = 0.0;
  std::string detail;
};

CheckRow from_report(const VerificationReport& r, std::string name = {}) {
  CheckRow row{name.empty() ? r.check : std::move(name), r.passed, r.samples, r.worst_margin, {}};
  if (r.witness) {
    const auto& w = *r.witness;
    row.detail = fmt::format("witness x=({}) lhs={} rhs={}", fmt::join(w.x.begin(), w.x.end(), " "), num(w.lhs),
                             num(w.rhs));
  }
  return row;
}

// Portable uniform doubles in [-1, 1) from a seeded 64-bit Mersenne twister.
Field random_field(const SlabGrid& grid, int m, std::mt19937_64& gen) {
  Field u(static_cast<Eigen::Index>(grid.node_count() * static_cast<std::size_t>(m)));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
  apply_constraints(grid, u, m);
  return u;
}

int cmd_verify(const RunConfig& cfg, Streams s) {
  const EnergyDensity base = cfg.base_density();
  const EnergyDensity f = cfg.film_density();
  const IsometryFrame frame = cfg.build_frame();
  const int d = cfg.dim_d(), m = cfg.dim_m();
  std::vector<CheckRow> rows;

  rows.push_back(from_report(verify_growth(base, cfg.samples, cfg.seed)));
  rows.push_back(from_report(verify_growth(f, cfg.samples, cfg.seed), "growth_film"));
  rows.push_back(from_report(verify_gradient(f, cfg.samples, 1e-5, 1e-6, cfg.seed)));
  rows.push_back(from_report(verify_midpoint_convexity(f, cfg.samples, cfg.seed)));
  if (base.periodic()) rows.push_back(from_report(verify_periodicity(base, cfg.samples, cfg.seed)));

  std::optional<AlmostPeriodSet> set;
  if (cfg.eta && cfg.radius) {
    set = almost_periods(frame, *cfg.eta, *cfg.radius);
    CheckRow ap{"almost_period", true, 0, std::numeric_limits<double>::infinity(), {}};
    std::size_t used = 0;
    for (const auto& p : set->periods) {
      if (p.tau.norm() == 0.0) continue;
      const auto rep = verify_almost_period(f, p, *cfg.eta, cfg.samples, cfg.seed);
      ap.passed = ap.passed && rep.passed;
      ap.samples += rep.samples;
      ap.margin = std::min(ap.margin, rep.worst_margin);
      if (++used == 5) break;
    }
    ap.detail = fmt::format("{} periods enumerated, {} checked", set->size(), used);
    if (used == 0) ap.margin = 0.0;
    rows.push_back(ap);
    if (cfg.region) {
      const auto inc = inclusion_length(*set, cube(d, cfg.region->first, cfg.region->second), cfg.inclusion_cells);
      rows.push_back({"inclusion_length", std::isfinite(inc.L_eta), inc.periods_in_region, inc.L_eta,
                      fmt::format("L_eta={}", num(inc.L_eta))});
    }
  }

  if (cfg.T && !cfg.A_list.empty()) {
    const Mat& A = cfg.A_list.front();
    const auto sol = minimize_cell(A, *cfg.T, f, cfg.grid, cfg.solver);
    const auto& g = f.growth();
    const double n = std::pow(A.norm(), g.p);
    rows.push_back({"cell_growth_band", in_growth_band(f, A, sol.value), 1,
                    std::min(sol.value - g.alpha * n, g.beta * (1.0 + n) - sol.value),
                    fmt::format("g_A={}", num(sol.value))});

    std::mt19937_64 gen(cfg.seed);
    const SlabGrid unit = unit_grid_like(sol.grid);
    CheckRow resc{"rescaling", true, 0, 0.0, {}};
    const std::size_t fields = std::min<std::size_t>(cfg.samples, 100);
    for (std::size_t i = 0; i <= fields; ++i) {
      const Field u = i == 0 ? sol.u_star : random_field(sol.grid, m, gen);
      const auto rep = rescaling_check(u, A, f, sol.grid, unit);
      resc.passed = resc.passed && rep.passed;
      resc.margin = std::max(resc.margin, rep.relative_difference);
      ++resc.samples;
    }
    resc.detail = "margin is the worst relative difference";
    rows.push_back(resc);

    if (cfg.S && cfg.delta && set) {
      const auto inc = inclusion_length(*set, cube(d, 0.0, *cfg.S), cfg.inclusion_cells);
      const auto pw = upper_bound_patchwork(sol, f, *cfg.S, *cfg.delta, *set, inc.L_eta, cfg.solver.workers);
      rows.push_back({"slice_bound", pw.slice_bound.passed, 2, pw.slice_bound.margin(),
                      fmt::format("y+={} y-={} bound={}", num(pw.slices.y_plus), num(pw.slices.y_minus),
                                  num(pw.slice_bound.bound))});
      rows.push_back({"patchwork_inequality", pw.inequality_holds(), pw.blocks, pw.rhs - pw.lhs,
                      fmt::format("lhs={} rhs={} L_eta={}", num(pw.lhs), num(pw.rhs), num(pw.L_eta))});
      rows.push_back({"remainder_measure", pw.measure_matches(), pw.blocks,
                      pw.boundary_layer - std::abs(pw.Q_S_measured - pw.Q_S_plan),
                      fmt::format("plan={} measured={} bound={}", num(pw.Q_S_plan), num(pw.Q_S_measured),
                                  num(pw.Q_S_bound))});
    }
  }

  if (cfg.probes > 0) {
    if (cfg.schedule.empty()) throw ConfigError("schedule: rank-one probes need a T schedule");
    CachedFhat fhat(f, cfg.schedule, cfg.homog_options());
    const auto rep = rank_one_scan([&](const Mat& A) { return fhat(A); }, m, d, cfg.probes, 1.0, cfg.seed);
    rows.push_back({"rank_one", rep.passed(), rep.probes.size(), rep.worst_margin,
                    fmt::format("{} violations", rep.violations)});
  }

  Csv csv(*s.csv, "verify", cfg.hash,
          {"check", "passed [bool]", "samples [1]", "worst_margin [check units]", "detail"});
  bool all = true;
  for (const auto& r : rows) {
    csv.row({r.check, r.passed ? "1" : "0", std::to_string(r.samples), num(r.margin), r.detail});
    all = all && r.passed;
    fmt::print(*s.log, "{:<22} {}\n", r.check, r.passed ? "ok" : "FAILED");
  }
  return all ? kOk : kAssertionFailed;
}

int dispatch(const std::string& command, const Options& opt, std::ostream& out, std::ostream& err) {
  ConfigOverrides ov;
  ov.T = opt.T;
  ov.eta = opt.eta;
  ov.out = opt.out;
  const RunConfig cfg = load_config(opt.config, ov);

  std::unique_ptr<std::ofstream> file;
  Streams s{&out, &err};
  if (cfg.output != "-") {
    file = std::make_unique<std::ofstream>(cfg.output, std::ios::binary);
    if (!*file) throw ConfigError(fmt::format("output: cannot open '{}'", cfg.output));
    s = Streams{file.get(), &out};
  }
  if (command == "frame") return cmd_frame(cfg, s);
  if (command == "almost-periods") return cmd_almost_periods(cfg, s);
  if (command == "cell") return cmd_cell(cfg, s);
  if (command == "homogenize") return cmd_homogenize(cfg, s, opt);
  return cmd_verify(cfg, s);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Homogenized thin-film energies for films cut along arbitrary planes", "thinfilm"};
  app.require_subcommand(1, 1);
  Options opt;
  std::string chosen;
  for (const char* name : {"frame", "almost-periods", "cell", "homogenize", "verify"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", opt.config, "JSON run configuration")->required();
    sub->add_option("--T", opt.T, "overrides the config key T");
    sub->add_option("--eta", opt.eta, "overrides the config key eta");
    sub->add_option("--out", opt.out, "overrides the config key output (CSV path, - for stdout)");
    if (std::string(name) == "homogenize") {
      sub->add_option("--baseline", opt.baseline, "compare with a recorded baseline JSON");
      sub->add_option("--record-baseline", opt.record_baseline, "write the estimates as a baseline JSON");
    }
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    return dispatch(chosen, opt, out, err);
  } catch (const InvalidArgument& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const NumericalError& e) {
    fmt::print(err, "numerical error: {}\n", e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kInternal;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"thinfilm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace thinfilm::cli
