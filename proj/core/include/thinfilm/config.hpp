#pragma once

#include "thinfilm/cell_solver.hpp"
#include "thinfilm/energy.hpp"
#include "thinfilm/geometry.hpp"
#include "thinfilm/homogenizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace thinfilm {

/// Malformed or inconsistent run configuration. The message starts with the
/// offending key path.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct FrameSpec {
  enum class Kind { rational, floating, angle };
  Kind kind = Kind::floating;
  std::vector<Rational> rational;
  Vec normal;
  double angle = 0.0;

  [[nodiscard]] int ambient_dim() const;
  [[nodiscard]] IsometryFrame build() const;
};

/// Command-line values that replace config keys before validation and hashing.
struct ConfigOverrides {
  std::optional<double> T;
  std::optional<double> eta;
  std::optional<std::string> out;
};

struct RunConfig {
  FrameSpec frame;  ///< defaults to the axis-aligned plane nu = e_{d+1}
  DensitySpec density;
  bool pull_back = true;
  std::vector<Mat> A_list;
  std::optional<double> T;
  std::vector<double> schedule;
  GridOptions grid;
  SolverOptions solver;
  int jobs = 1;
  double spread_tol = 1e-2;

  std::optional<double> eta;
  std::optional<double> delta;
  std::optional<double> radius;
  std::optional<double> S;
  std::int64_t denominator_bound = 1000;
  std::optional<std::pair<double, double>> region;
  int inclusion_cells = 256;

  std::size_t samples = 1000;
  std::size_t probes = 0;

  std::string output = "-";
  std::optional<std::string> field_output;
  std::uint64_t seed = 0;

  /// Canonical (sorted-key, overrides applied) JSON and its 64-bit FNV-1a hash.
  std::string canonical;
  std::string hash;

  [[nodiscard]] int dim_d() const { return density.d; }
  [[nodiscard]] int dim_m() const { return density.m; }
  [[nodiscard]] IsometryFrame build_frame() const { return frame.build(); }
  /// The density seen by the cell problems: pulled back through the frame
  /// unless pull_back is false.
  [[nodiscard]] EnergyDensity film_density() const;
  [[nodiscard]] EnergyDensity base_density() const;
  [[nodiscard]] HomogOptions homog_options() const;
};

/// Parses and validates a JSON run configuration. Unknown keys are rejected.
RunConfig parse_config(const std::string& json_text, const ConfigOverrides& overrides = {});
RunConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});

/// 16 hex digits of the 64-bit FNV-1a hash.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace thinfilm
