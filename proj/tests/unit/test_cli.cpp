#include "cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using thinfilm::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::current_path() / "cli_scratch";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kLaminate = std::string(THINFILM_SOURCE_DIR) + "/configs/laminate.json";

const std::string kGolden = R"({
  "density": {"family": "iso_quadratic", "d": 1, "m": 1,
              "a": {"mean": 2.0, "modes": [{"wave": [1, 0], "amplitude": 1.0}]}},
  "frame": {"normal": [1.0, -1.6180339887498949]},
  "eta": 0.03, "radius": 20, "region": [-20, 20]
})";

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(invoke({"--help"}).code == 0);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"homogenize"}).code == 2);  // --config is required
  CHECK(invoke({"bogus", "-c", kLaminate}).code == 2);
  CHECK(invoke({"cell", "-c", kLaminate, "--T", "abc"}).code == 2);
}

TEST_CASE("config errors exit with 2") {
  const auto missing = invoke({"frame", "-c", "/nonexistent.json"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("config error") != std::string::npos);

  const auto bad = write_config("bad_eta.json", R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0},
      "eta": 0.3, "delta": 0.2})");
  const auto r = invoke({"frame", "-c", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("δ>η>0") != std::string::npos);

  const auto unknown = write_config("unknown.json", R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0},
      "viscosity": 1})");
  CHECK(invoke({"frame", "-c", unknown}).code == 2);
  // Missing keys a command needs.
  CHECK(invoke({"almost-periods", "-c", kLaminate}).code == 2);
}

TEST_CASE("numerical errors exit with 3") {
  const auto big = write_config("big.json", R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0},
      "frame": {"normal": [1.0, -1.6180339887498949]}, "eta": 0.01, "radius": 100000})");
  const auto r = invoke({"almost-periods", "-c", big});
  CHECK(r.code == 3);
  CHECK(r.err.find("numerical error") != std::string::npos);
}

TEST_CASE("assertion failures exit with 4") {
  // A declared lower growth constant above the true one puts g_A below the band.
  const auto liar = write_config("liar.json", R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1,
      "a": {"mean": 2.0, "modes": [{"wave": [1, 0], "amplitude": 1.0}]},
      "growth": {"alpha": 2.5, "beta": 3.0, "p": 2}}, "A": 1.0, "schedule": [2, 3, 4]})");
  const auto r = invoke({"homogenize", "-c", liar});
  CHECK(r.code == 4);
  CHECK(r.err.find("ASSERTION FAILED") != std::string::npos);
}

TEST_CASE("almost-periods lists the (13, 8) period") {
  const auto cfg = write_config("golden.json", kGolden);
  const auto r = invoke({"almost-periods", "-c", cfg});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# thinfilm almost-periods; config_hash=", 0) == 0);
  CHECK(r.out.find("units:") != std::string::npos);
  CHECK(r.out.find(",13,8\n") != std::string::npos);
  CHECK(r.out.find(",-13,-8\n") != std::string::npos);
  CHECK(r.out.find("15.26430940552958") != std::string::npos);
  CHECK(r.err.find("3 almost periods") != std::string::npos);
  CHECK(r.err.find("L_eta = 15.26430940552958") != std::string::npos);
}

TEST_CASE("frame command") {
  const auto r = invoke({"frame", "-c", kLaminate});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("pi_1,1,0\n") != std::string::npos);
  CHECK(r.out.find("nu,0,1\n") != std::string::npos);
  CHECK(r.err.find("lattice rank 1") != std::string::npos);
}

TEST_CASE("homogenize: x-independent split density gives |A|^2 rows") {
  const auto cfg = write_config("split.json", R"({"density": {"family": "transverse_split", "d": 1, "m": 1,
      "a": 1.0, "b": 1.0}, "A": 1.5, "schedule": [1, 2, 3], "resolution": {"n_per_unit": 4}})");
  const auto r = invoke({"homogenize", "-c", cfg});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'A') continue;
    ++rows;
    // A, T, g_A, ...
    std::istringstream cells(line);
    std::string a, t, g;
    std::getline(cells, a, ',');
    std::getline(cells, t, ',');
    std::getline(cells, g, ',');
    CHECK(std::stod(g) == doctest::Approx(2.25).epsilon(1e-8));
  }
  CHECK(rows == 3);
}

TEST_CASE("output is byte-identical across runs and --out writes a file") {
  const auto a = invoke({"homogenize", "-c", kLaminate, "--T", "4"});
  const auto b = invoke({"homogenize", "-c", kLaminate, "--T", "4"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const std::string path = (scratch() / "laminate.csv").string();
  fs::remove(path);
  const auto c = invoke({"homogenize", "-c", kLaminate, "--T", "4", "--out", path});
  REQUIRE(c.code == 0);
  CHECK(read_file(path) == a.out);
  // The summary moves to stdout when the CSV goes to a file.
  CHECK(c.out.find("f_hom") != std::string::npos);
}

TEST_CASE("the header carries the config hash; overrides change it") {
  const auto a = invoke({"cell", "-c", kLaminate});
  const auto b = invoke({"cell", "-c", kLaminate, "--T", "3"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const auto hash = [](const std::string& s) { return s.substr(s.find("config_hash=") + 12, 16); };
  CHECK(hash(a.out).find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(hash(a.out) != hash(b.out));
  CHECK(b.out.find("\n1,3,") != std::string::npos);
}

TEST_CASE("baselines round-trip") {
  const std::string base = (scratch() / "baseline.json").string();
  const auto rec = invoke({"homogenize", "-c", kLaminate, "--record-baseline", base});
  REQUIRE(rec.code == 0);
  CHECK(invoke({"homogenize", "-c", kLaminate, "--baseline", base}).code == 0);
  // A different config hash is refused.
  CHECK(invoke({"homogenize", "-c", kLaminate, "--T", "5", "--baseline", base}).code == 2);

  // A tampered value is an assertion failure.
  std::string text = read_file(base);
  const auto pos = text.find("\"extrapolated\": ");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 16, "\"extrapolated\": 9.0, \"was\": ");
  std::ofstream(base) << text;
  CHECK(invoke({"homogenize", "-c", kLaminate, "--baseline", base}).code == 4);
}

TEST_CASE("verify runs the checks") {
  const auto cfg = write_config("verify.json", R"({
    "density": {"family": "iso_quadratic", "d": 1, "m": 1,
                "a": {"mean": 2.0, "modes": [{"wave": [1, 0], "amplitude": 1.0}]}},
    "frame": {"normal": [1.0, -1.6180339887498949]},
    "A": 1.0, "T": 8, "S": 40, "eta": 0.05, "delta": 0.2, "radius": 60, "region": [-40, 40],
    "samples": 200, "seed": 7
  })");
  const auto r = invoke({"verify", "-c", cfg});
  CHECK(r.code == 0);
  for (const char* check : {"growth,1", "growth_film,1", "gradient,1", "midpoint_convexity,1", "almost_period,1",
                            "inclusion_length,1", "cell_growth_band,1", "rescaling,1", "slice_bound,1",
                            "patchwork_inequality,1", "remainder_measure,1"}) {
    CHECK_MESSAGE(r.out.find(std::string("\n") + check + ",") != std::string::npos, check);
  }
  CHECK(invoke({"verify", "-c", cfg}).out == r.out);
}
