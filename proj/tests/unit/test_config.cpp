#include <thinfilm/config.hpp>

#include <doctest.h>

#include <string>

using namespace thinfilm;

namespace {

const std::string kBase = R"({
  "density": {"family": "iso_quadratic", "d": 1, "m": 1,
              "a": {"mean": 2.0, "modes": [{"wave": [1, 0], "amplitude": 1.0}]}},
  "A": 1.0,
  "schedule": [4, 8, 16]
})";

std::string with(const std::string& extra) {
  std::string s = kBase;
  s.insert(s.rfind('}'), "," + extra);
  return s;
}

std::string error_of(const std::string& text, const ConfigOverrides& ov = {}) {
  try {
    (void)parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("defaults") {
  const auto cfg = parse_config(kBase);
  CHECK(cfg.dim_d() == 1);
  CHECK(cfg.A_list.size() == 1);
  CHECK(cfg.schedule == std::vector<double>{4, 8, 16});
  CHECK(cfg.grid.h == 0.5);
  CHECK(cfg.grid.n_per_unit == 8);
  CHECK(cfg.output == "-");
  CHECK(cfg.hash.size() == 16);
  // Default frame is the axis-aligned plane.
  CHECK(cfg.build_frame().matrix_R.isApprox(SquareMat::Identity(2, 2)));
  CHECK(cfg.build_frame().exact());
  CHECK(cfg.film_density().growth().alpha == doctest::Approx(1.0));
  CHECK(cfg.homog_options().grid.n_per_unit == 8);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK(error_of(with(R"("temperature": 3)")).find("temperature: unknown key") != std::string::npos);
  CHECK(error_of(with(R"("solver": {"tolerance": 1e-8})")).find("solver.tolerance") != std::string::npos);
  const std::string nested = R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0, "colour": 1}})";
  CHECK(error_of(nested).find("density.colour") != std::string::npos);
}

TEST_CASE("slicing constraint") {
  const auto msg = error_of(with(R"("eta": 0.3, "delta": 0.2)"));
  CHECK(msg.find("δ>η>0") != std::string::npos);
  CHECK(error_of(with(R"("eta": 0.2, "delta": 0.2)")).find("δ>η>0") != std::string::npos);
  CHECK(error_of(with(R"("eta": 0.05, "delta": 0.2)")).empty());
  CHECK_FALSE(error_of(with(R"("eta": 0.05, "delta": 0.8)")).empty());  // delta > h
  // The override is applied before validation.
  ConfigOverrides ov;
  ov.eta = 0.5;
  CHECK(error_of(with(R"("eta": 0.05, "delta": 0.2)"), ov).find("δ>η>0") != std::string::npos);
}

TEST_CASE("validation of values and types") {
  CHECK_FALSE(error_of("[1, 2]").empty());
  CHECK_FALSE(error_of("{").empty());
  CHECK_FALSE(error_of(R"({"A": 1.0})").empty());  // missing density
  CHECK_FALSE(error_of(with(R"("T": -1)")).empty());
  CHECK_FALSE(error_of(with(R"("h": "thick")")).empty());
  CHECK_FALSE(error_of(with(R"("jobs": 0)")).empty());
  CHECK_FALSE(error_of(with(R"("frame": {"normal": [0, 0, 1]})")).empty());  // wrong dimension
  CHECK_FALSE(error_of(with(R"("frame": {"normal": [0, 0]})")).empty());
  CHECK_FALSE(error_of(with(R"("T": 5, "S": 4)")).empty());
  CHECK_FALSE(error_of(with(R"("region": [3, 1])")).empty());
  CHECK_FALSE(error_of(R"({"density": {"family": "neo_hookean", "d": 1, "m": 1}})").empty());
  // Coefficient dipping below zero violates the growth lower bound.
  CHECK_FALSE(error_of(R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1,
      "a": {"mean": 1.0, "modes": [{"wave": [1, 0], "amplitude": 1.5}]}}})").empty());
  std::string both = kBase;
  both.insert(both.rfind('}'), R"(, "A_list": [1.0])");
  CHECK_FALSE(error_of(both).empty());
}

TEST_CASE("schedule rules") {
  const std::string base = R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0}, )";
  CHECK_FALSE(error_of(base + R"("schedule": [4, 8]})").empty());
  CHECK_FALSE(error_of(base + R"("schedule": [4, 8, 8]})").empty());
  CHECK(error_of(base + R"("schedule": [1, 2.5, 8]})").empty());
}

TEST_CASE("overrides and hashing") {
  const auto a = parse_config(kBase);
  const auto b = parse_config(kBase);
  CHECK(a.hash == b.hash);

  ConfigOverrides ov;
  ov.T = 6.0;
  const auto c = parse_config(kBase, ov);
  REQUIRE(c.T);
  CHECK(*c.T == 6.0);
  CHECK(c.hash != a.hash);

  // The output path is not part of the hash.
  ConfigOverrides out;
  out.out = "/tmp/elsewhere.csv";
  const auto d = parse_config(kBase, out);
  CHECK(d.output == "/tmp/elsewhere.csv");
  CHECK(d.hash == a.hash);

  // Key order and whitespace do not matter.
  const std::string reordered = R"({"schedule":[4,8,16],"A":1.0,"density":{"m":1,"d":1,"family":"iso_quadratic",
      "a":{"modes":[{"amplitude":1.0,"wave":[1,0]}],"mean":2.0}}})";
  CHECK(parse_config(reordered).hash == a.hash);
}

TEST_CASE("frames, coefficients and matrices") {
  const std::string golden = R"({"density": {"family": "transverse_split", "d": 1, "m": 2, "a": 1.0,
      "b": {"kind": "checkerboard", "mean": 2.0, "amplitude": 0.5, "sharpness": 3.0}},
      "frame": {"normal": [1.0, -1.6180339887498949]}, "A": [[1.0], [0.5]], "schedule": [2, 4, 8]})";
  const auto cfg = parse_config(golden);
  CHECK_FALSE(cfg.build_frame().exact());
  CHECK(cfg.A_list[0].rows() == 2);
  CHECK(cfg.A_list[0].cols() == 1);
  CHECK(cfg.film_density().family() == Family::transverse_split);
  CHECK(cfg.base_density().coefficient_b().kind() == Coefficient::Kind::checkerboard);

  const std::string rational = R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0},
      "frame": {"normal": ["1/2", -1]}})";
  const auto r = parse_config(rational);
  REQUIRE(r.build_frame().exact());
  CHECK(*r.build_frame().integer_normal == IntVec{1, -2});

  const std::string angle = R"({"density": {"family": "iso_quadratic", "d": 1, "m": 1, "a": 1.0},
      "frame": {"angle": 0.0}})";
  CHECK(parse_config(angle).build_frame().matrix_R.isApprox(SquareMat::Identity(2, 2)));

  CHECK_FALSE(error_of(R"({"density": {"family": "iso_quadratic", "d": 1, "m": 2, "a": 1.0}, "A": 1.0})").empty());
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"laminate.json", "rational_trig.json", "golden_trig.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW((void)load_config(std::string(THINFILM_SOURCE_DIR) + "/configs/" + name));
  }
  CHECK_THROWS_AS((void)load_config("/nonexistent/config.json"), ConfigError);
}
