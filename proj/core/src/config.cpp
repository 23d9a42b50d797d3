#include "thinfilm/config.hpp"

#include <json.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace thinfilm {
namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(fmt::format("{}: {}", path.empty() ? "<root>" : path, what));
}

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.contains(k)) fail(join_path(path, k), "unknown key");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

double positive(const json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!(x > 0.0)) fail(path, fmt::format("must be > 0, got {}", x));
  return x;
}

std::int64_t as_int(const json& v, const std::string& path, std::int64_t lo) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo) fail(path, fmt::format("must be >= {}, got {}", lo, x));
  return x;
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

Rational parse_rational(const json& v, const std::string& path) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  const auto s = v.get<std::string>();
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const auto n = std::stoll(s, &used);
      if (used != s.size()) fail(path, "malformed rational '" + s + "'");
      return Rational(n);
    }
    const auto num = std::stoll(s.substr(0, slash), &used);
    if (used != slash) fail(path, "malformed rational '" + s + "'");
    const std::string den_s = s.substr(slash + 1);
    const auto den = std::stoll(den_s, &used);
    if (used != den_s.size()) fail(path, "malformed rational '" + s + "'");
    if (den == 0) fail(path, "zero denominator in '" + s + "'");
    return Rational(num, den);
  } catch (const std::logic_error&) {
    fail(path, "malformed rational '" + s + "'");
  }
}

FrameSpec parse_frame(const json& j, const std::string& path) {
  only_keys(j, path, {"normal", "angle"});
  FrameSpec spec;
  if (j.contains("normal") == j.contains("angle")) fail(path, "give exactly one of 'normal' or 'angle'");
  if (j.contains("angle")) {
    spec.kind = FrameSpec::Kind::angle;
    spec.angle = as_number(j["angle"], join_path(path, "angle"));
    return spec;
  }
  const json& n = j["normal"];
  const std::string np = join_path(path, "normal");
  if (!n.is_array() || n.size() < 2 || n.size() > static_cast<std::size_t>(kMaxDim)) {
    fail(np, "expected an array of 2 or 3 entries");
  }
  bool exact = true;
  for (const auto& e : n) {
    if (!(e.is_number_integer() || e.is_string())) exact = false;
    if (!(e.is_number() || e.is_string())) fail(np, "entries must be numbers or \"p/q\" strings");
  }
  if (exact) {
    spec.kind = FrameSpec::Kind::rational;
    for (std::size_t i = 0; i < n.size(); ++i) spec.rational.push_back(parse_rational(n[i], fmt::format("{}[{}]", np, i)));
  } else {
    spec.kind = FrameSpec::Kind::floating;
    spec.normal.resize(static_cast<Eigen::Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i].is_string()) fail(np, "cannot mix \"p/q\" strings with floating entries");
      spec.normal[static_cast<Eigen::Index>(i)] = as_number(n[i], fmt::format("{}[{}]", np, i));
    }
  }
  return spec;
}

Coefficient parse_coefficient(const json& j, const std::string& path, int ambient) {
  if (j.is_number()) return Coefficient::constant(as_number(j, path));
  if (!j.is_object()) fail(path, "expected a number or an object");
  const std::string kind = j.contains("kind") ? j["kind"].get<std::string>() : "trig";
  if (kind == "checkerboard") {
    only_keys(j, path, {"kind", "mean", "amplitude", "sharpness"});
    for (const char* k : {"mean", "amplitude", "sharpness"}) {
      if (!j.contains(k)) fail(join_path(path, k), "missing");
    }
    return Coefficient::checkerboard(as_number(j["mean"], join_path(path, "mean")),
                                     as_number(j["amplitude"], join_path(path, "amplitude")),
                                     positive(j["sharpness"], join_path(path, "sharpness")));
  }
  if (kind != "trig") fail(join_path(path, "kind"), "must be 'trig' or 'checkerboard'");
  only_keys(j, path, {"kind", "mean", "modes"});
  if (!j.contains("mean")) fail(join_path(path, "mean"), "missing");
  std::vector<TrigMode> modes;
  if (j.contains("modes")) {
    const json& ms = j["modes"];
    if (!ms.is_array()) fail(join_path(path, "modes"), "expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string mp = fmt::format("{}.modes[{}]", path, i);
      only_keys(ms[i], mp, {"wave", "amplitude", "phase"});
      if (!ms[i].contains("wave") || !ms[i].contains("amplitude")) fail(mp, "needs 'wave' and 'amplitude'");
      TrigMode mode;
      const json& w = ms[i]["wave"];
      if (!w.is_array() || static_cast<int>(w.size()) != ambient) {
        fail(join_path(mp, "wave"), fmt::format("expected {} entries (d + 1)", ambient));
      }
      for (std::size_t c = 0; c < w.size(); ++c) mode.wave.push_back(as_number(w[c], fmt::format("{}.wave[{}]", mp, c)));
      mode.amplitude = as_number(ms[i]["amplitude"], join_path(mp, "amplitude"));
      if (ms[i].contains("phase")) mode.phase = as_number(ms[i]["phase"], join_path(mp, "phase"));
      modes.push_back(std::move(mode));
    }
  }
  return Coefficient::trig(as_number(j["mean"], join_path(path, "mean")), std::move(modes));
}

DensitySpec parse_density(const json& j, const std::string& path, bool& pull_back) {
  only_keys(j, path, {"family", "d", "m", "a", "b", "p", "growth", "pull_back"});
  DensitySpec spec;
  if (!j.contains("family") || !j["family"].is_string()) fail(join_path(path, "family"), "missing family name");
  spec.family = j["family"].get<std::string>();
  try {
    (void)family_from_string(spec.family);
  } catch (const InvalidArgument& e) {
    fail(join_path(path, "family"), e.what());
  }
  if (j.contains("d")) spec.d = static_cast<int>(as_int(j["d"], join_path(path, "d"), 1));
  if (spec.d > 2) fail(join_path(path, "d"), "only d = 1 and d = 2 are supported");
  if (j.contains("m")) spec.m = static_cast<int>(as_int(j["m"], join_path(path, "m"), 1));
  if (spec.m > kMaxDim) fail(join_path(path, "m"), fmt::format("must be <= {}", kMaxDim));
  const int ambient = spec.d + 1;
  if (j.contains("a")) spec.a = parse_coefficient(j["a"], join_path(path, "a"), ambient);
  if (j.contains("b")) spec.b = parse_coefficient(j["b"], join_path(path, "b"), ambient);
  if (j.contains("p")) {
    spec.p = as_number(j["p"], join_path(path, "p"));
    if (!(spec.p > 1.0)) fail(join_path(path, "p"), "must be > 1");
  }
  if (j.contains("growth")) {
    const std::string gp = join_path(path, "growth");
    only_keys(j["growth"], gp, {"alpha", "beta", "p"});
    GrowthParams g;
    for (const char* k : {"alpha", "beta", "p"}) {
      if (!j["growth"].contains(k)) fail(join_path(gp, k), "missing");
    }
    g.alpha = as_number(j["growth"]["alpha"], join_path(gp, "alpha"));
    g.beta = as_number(j["growth"]["beta"], join_path(gp, "beta"));
    g.p = as_number(j["growth"]["p"], join_path(gp, "p"));
    try {
      g.validate();
    } catch (const InvalidArgument& e) {
      fail(gp, e.what());
    }
    spec.growth = g;
  }
  if (j.contains("pull_back")) pull_back = as_bool(j["pull_back"], join_path(path, "pull_back"));
  return spec;
}

Mat parse_matrix(const json& j, const std::string& path, int m, int d) {
  Mat A(m, d);
  if (j.is_number()) {
    if (m != 1 || d != 1) fail(path, fmt::format("a scalar A needs m = d = 1, here A is {}x{}", m, d));
    A(0, 0) = as_number(j, path);
    return A;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != m) fail(path, fmt::format("expected {} rows (m x d = {}x{})", m, m, d));
  for (int r = 0; r < m; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != d) fail(fmt::format("{}[{}]", path, r), fmt::format("expected {} entries", d));
    for (int c = 0; c < d; ++c) A(r, c) = as_number(row[static_cast<std::size_t>(c)], fmt::format("{}[{}][{}]", path, r, c));
  }
  return A;
}

}  // namespace

int FrameSpec::ambient_dim() const {
  switch (kind) {
    case Kind::rational: return static_cast<int>(rational.size());
    case Kind::floating: return static_cast<int>(normal.size());
    case Kind::angle: return 2;
  }
  return 0;
}

IsometryFrame FrameSpec::build() const {
  switch (kind) {
    case Kind::rational: return build_frame(rational);
    case Kind::floating: return thinfilm::build_frame(normal);
    case Kind::angle: return frame_from_angle(angle);
  }
  throw InvalidArgument("unknown frame kind");
}

EnergyDensity RunConfig::base_density() const { return builtin_density(density); }

EnergyDensity RunConfig::film_density() const {
  const EnergyDensity base = base_density();
  return pull_back ? pull_back_density(base, build_frame()) : base;
}

HomogOptions RunConfig::homog_options() const {
  HomogOptions o;
  o.grid = grid;
  o.solver = solver;
  o.jobs = jobs;
  o.spread_tol = spread_tol;
  return o;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

RunConfig parse_config(const std::string& json_text, const ConfigOverrides& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("", "the config must be a JSON object");
  if (overrides.T) j["T"] = *overrides.T;
  if (overrides.eta) j["eta"] = *overrides.eta;
  if (overrides.out) j["output"] = *overrides.out;

  only_keys(j, "",
            {"frame", "density", "h", "A", "A_list", "T", "schedule", "resolution", "solver", "jobs", "workers",
             "spread_tol", "eta", "delta", "radius", "S", "denominator_bound", "region", "inclusion_cells", "samples",
             "probes", "output", "field_output", "seed"});

  RunConfig cfg;
  try {
    if (!j.contains("density")) fail("density", "missing");
    cfg.density = parse_density(j["density"], "density", cfg.pull_back);
    const int d = cfg.density.d, m = cfg.density.m;

    if (j.contains("frame")) {
      cfg.frame = parse_frame(j["frame"], "frame");
      if (cfg.frame.ambient_dim() != d + 1) {
        fail("frame", fmt::format("normal has {} entries but density.d = {} needs {}", cfg.frame.ambient_dim(), d, d + 1));
      }
    } else {
      cfg.frame.kind = FrameSpec::Kind::rational;
      cfg.frame.rational.assign(static_cast<std::size_t>(d + 1), Rational(0));
      cfg.frame.rational.back() = Rational(1);
    }
    try {
      (void)cfg.frame.build();
    } catch (const InvalidArgument& e) {
      fail("frame", e.what());
    }

    if (j.contains("h")) cfg.grid.h = positive(j["h"], "h");
    if (j.contains("A") && j.contains("A_list")) fail("A", "give either 'A' or 'A_list', not both");
    if (j.contains("A")) cfg.A_list.push_back(parse_matrix(j["A"], "A", m, d));
    if (j.contains("A_list")) {
      if (!j["A_list"].is_array() || j["A_list"].empty()) fail("A_list", "expected a non-empty array of matrices");
      for (std::size_t i = 0; i < j["A_list"].size(); ++i) {
        cfg.A_list.push_back(parse_matrix(j["A_list"][i], fmt::format("A_list[{}]", i), m, d));
      }
    }
    if (j.contains("T")) cfg.T = positive(j["T"], "T");
    if (j.contains("schedule")) {
      const json& s = j["schedule"];
      if (!s.is_array() || s.size() < 3) fail("schedule", "expected at least 3 T values");
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = positive(s[i], fmt::format("schedule[{}]", i));
        if (!cfg.schedule.empty() && !(t > cfg.schedule.back())) fail("schedule", "T values must be strictly increasing");
        cfg.schedule.push_back(t);
      }
    }
    if (j.contains("resolution")) {
      const json& r = j["resolution"];
      only_keys(r, "resolution", {"n_per_unit", "n_y", "lateral"});
      if (r.contains("n_per_unit")) cfg.grid.n_per_unit = static_cast<int>(as_int(r["n_per_unit"], "resolution.n_per_unit", 1));
      if (r.contains("n_y")) cfg.grid.n_y = static_cast<int>(as_int(r["n_y"], "resolution.n_y", 0));
      if (r.contains("lateral")) {
        const auto lat = r["lateral"].get<std::string>();
        if (lat == "clamped") cfg.grid.lateral = Lateral::clamped;
        else if (lat == "periodic") cfg.grid.lateral = Lateral::periodic;
        else fail("resolution.lateral", "must be 'clamped' or 'periodic'");
      }
    }
    if (j.contains("solver")) {
      const json& s = j["solver"];
      only_keys(s, "solver", {"cg_tol", "cg_max_iter", "grad_tol", "max_iter", "lbfgs_memory", "force_lbfgs"});
      if (s.contains("cg_tol")) cfg.solver.cg_tol = positive(s["cg_tol"], "solver.cg_tol");
      if (s.contains("cg_max_iter")) cfg.solver.cg_max_iter = static_cast<int>(as_int(s["cg_max_iter"], "solver.cg_max_iter", 1));
      if (s.contains("grad_tol")) cfg.solver.grad_tol = positive(s["grad_tol"], "solver.grad_tol");
      if (s.contains("max_iter")) cfg.solver.max_iter = static_cast<int>(as_int(s["max_iter"], "solver.max_iter", 1));
      if (s.contains("lbfgs_memory")) cfg.solver.lbfgs_memory = static_cast<int>(as_int(s["lbfgs_memory"], "solver.lbfgs_memory", 1));
      if (s.contains("force_lbfgs")) cfg.solver.force_lbfgs = as_bool(s["force_lbfgs"], "solver.force_lbfgs");
    }
    if (j.contains("workers")) cfg.solver.workers = static_cast<int>(as_int(j["workers"], "workers", 1));
    if (j.contains("jobs")) cfg.jobs = static_cast<int>(as_int(j["jobs"], "jobs", 1));
    if (j.contains("spread_tol")) cfg.spread_tol = positive(j["spread_tol"], "spread_tol");

    if (j.contains("eta")) cfg.eta = positive(j["eta"], "eta");
    if (j.contains("delta")) cfg.delta = positive(j["delta"], "delta");
    if (cfg.eta && cfg.delta && !(*cfg.delta > *cfg.eta)) {
      fail("eta", fmt::format("slicing requires δ>η>0 (delta > eta > 0), got eta = {} >= delta = {}", *cfg.eta, *cfg.delta));
    }
    if (cfg.delta && !(*cfg.delta <= cfg.grid.h)) fail("delta", fmt::format("must be <= h = {}", cfg.grid.h));
    if (j.contains("radius")) cfg.radius = positive(j["radius"], "radius");
    if (j.contains("S")) cfg.S = positive(j["S"], "S");
    if (cfg.S && cfg.T && !(*cfg.S > *cfg.T)) fail("S", "must exceed T");
    if (j.contains("denominator_bound")) cfg.denominator_bound = as_int(j["denominator_bound"], "denominator_bound", 1);
    if (j.contains("region")) {
      const json& r = j["region"];
      if (!r.is_array() || r.size() != 2) fail("region", "expected [lo, hi]");
      const double lo = as_number(r[0], "region[0]"), hi = as_number(r[1], "region[1]");
      if (!(hi > lo)) fail("region", "needs lo < hi");
      cfg.region = std::make_pair(lo, hi);
    }
    if (j.contains("inclusion_cells")) cfg.inclusion_cells = static_cast<int>(as_int(j["inclusion_cells"], "inclusion_cells", 1));
    if (j.contains("samples")) cfg.samples = static_cast<std::size_t>(as_int(j["samples"], "samples", 1));
    if (j.contains("probes")) cfg.probes = static_cast<std::size_t>(as_int(j["probes"], "probes", 0));
    if (j.contains("output")) {
      if (!j["output"].is_string()) fail("output", "expected a path or \"-\"");
      cfg.output = j["output"].get<std::string>();
    }
    if (j.contains("field_output")) {
      if (!j["field_output"].is_string()) fail("field_output", "expected a path");
      cfg.field_output = j["field_output"].get<std::string>();
    }
    if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(as_int(j["seed"], "seed", 0));

    // Build the density once so coefficient problems surface as config errors.
    try {
      (void)cfg.film_density();
    } catch (const InvalidArgument& e) {
      fail("density", e.what());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }

  // The output path does not change results, so it stays out of the hash.
  json hashed = j;
  hashed.erase("output");
  hashed.erase("field_output");
  cfg.canonical = hashed.dump();
  cfg.hash = fnv1a_hex(cfg.canonical);
  return cfg;
}

RunConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

}  // namespace thinfilm
