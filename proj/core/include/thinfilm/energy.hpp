#pragma once

#include "thinfilm/geometry.hpp"
#include "thinfilm/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace thinfilm {

/// alpha |A|^p <= f(x, A) <= beta (1 + |A|^p), |.| the Frobenius norm.
struct GrowthParams {
  double alpha = 1.0;
  double beta = 1.0;
  double p = 2.0;

  /// Throws InvalidArgument unless 0 < alpha <= beta and p > 1.
  void validate() const;
};

/// One term amplitude * cos(2 pi <wave, x> + phase). Integer wave vectors give
/// 1-periodic modes.
struct TrigMode {
  std::vector<double> wave;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Scalar coefficient field on R^{d+1}.
class Coefficient {
 public:
  enum class Kind { trig, checkerboard };

  Coefficient() = default;
  static Coefficient constant(double value);
  static Coefficient trig(double mean, std::vector<TrigMode> modes);
  /// mean + amplitude * tanh(sharpness * prod_i sin(2 pi x_i)): a smoothed
  /// two-phase checkerboard.
  static Coefficient checkerboard(double mean, double amplitude, double sharpness);

  [[nodiscard]] double operator()(const Vec& x) const;
  [[nodiscard]] bool periodic() const;
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] const std::vector<TrigMode>& modes() const { return modes_; }
  [[nodiscard]] double amplitude() const { return amplitude_; }
  [[nodiscard]] double sharpness() const { return sharpness_; }

  /// Certified [lo, hi] enclosure of the range over R^D.
  [[nodiscard]] std::pair<double, double> bounds(int ambient_dim) const;

  /// Throws if a mode's wave vector does not have ambient_dim entries.
  void check_dims(int ambient_dim) const;

 private:
  Kind kind_ = Kind::trig;
  double mean_ = 1.0;
  std::vector<TrigMode> modes_;
  double amplitude_ = 0.0;
  double sharpness_ = 0.0;
};

enum class Family { iso_quadratic, p_power, transverse_split };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

/// Energy density f(x, A) on R^{d+1} x M^{m x (d+1)}, stored as a base density
/// composed with an optional orthogonal change of variables
/// f(x, A) = base(X x, A M).
class EnergyDensity {
 public:
  /// Coefficient values at one point; lets assembly loops cache the
  /// x-dependence and reuse it across solver iterations.
  struct Local {
    double a = 0.0;
    double b = 0.0;
  };

  static EnergyDensity iso_quadratic(int d, int m, Coefficient a);
  static EnergyDensity p_power(int d, int m, Coefficient c, double p);
  static EnergyDensity transverse_split(int d, int m, Coefficient a, Coefficient b);

  [[nodiscard]] int dim_d() const { return d_; }
  [[nodiscard]] int dim_m() const { return m_; }
  [[nodiscard]] int ambient_dim() const { return d_ + 1; }
  [[nodiscard]] Family family() const { return family_; }
  [[nodiscard]] const GrowthParams& growth() const { return growth_; }
  [[nodiscard]] double exponent() const { return growth_.p; }
  [[nodiscard]] bool quadratic() const { return family_ != Family::p_power || growth_.p == 2.0; }
  /// Claims 1-periodicity in its own coordinate directions.
  [[nodiscard]] bool periodic() const;
  /// The underlying (un-pulled-back) density is Z^{d+1}-periodic.
  [[nodiscard]] bool base_periodic() const;
  [[nodiscard]] bool x_independent() const;
  [[nodiscard]] const Coefficient& coefficient_a() const { return a_; }
  [[nodiscard]] const Coefficient& coefficient_b() const { return b_; }
  [[nodiscard]] const SquareMat& point_map() const { return x_map_; }
  [[nodiscard]] const SquareMat& matrix_map() const { return a_map_; }

  /// Replaces the derived growth constants by a declared triple (validated
  /// for 0 < alpha <= beta, p matching the family, but not against the data).
  [[nodiscard]] EnergyDensity with_growth(GrowthParams g) const;

  [[nodiscard]] Local local(const Vec& x) const;
  [[nodiscard]] double eval(const Local& c, const Mat& A) const;
  /// d f / d A at A, same shape as A.
  [[nodiscard]] Mat grad(const Local& c, const Mat& A) const;

  [[nodiscard]] double eval(const Vec& x, const Mat& A) const { return eval(local(x), A); }
  [[nodiscard]] Mat grad(const Vec& x, const Mat& A) const { return grad(local(x), A); }

  /// f(x, A) = this(R x, A R).
  [[nodiscard]] EnergyDensity pulled_back(const SquareMat& R) const;

 private:
  EnergyDensity(Family family, int d, int m, Coefficient a, Coefficient b, double p);
  void check_matrix(const Mat& A) const;

  Family family_ = Family::iso_quadratic;
  int d_ = 1;
  int m_ = 1;
  Coefficient a_;
  Coefficient b_;
  GrowthParams growth_;
  SquareMat x_map_;
  SquareMat a_map_;
};

/// Parameters of a built-in family. `b` is only used by transverse_split,
/// `p` only by p_power.
struct DensitySpec {
  std::string family = "iso_quadratic";
  int d = 1;
  int m = 1;
  Coefficient a = Coefficient::constant(1.0);
  Coefficient b = Coefficient::constant(1.0);
  double p = 2.0;
  std::optional<GrowthParams> growth;
};

/// Builds one of iso_quadratic a(x)|A|^2, p_power c(x)|A|^p,
/// transverse_split a(x)|A'|^2 + b(x)|xi|^2 with certified growth constants.
EnergyDensity builtin_density(const DensitySpec& spec);

/// f(x, A) = ftilde(R x, A R) for the frame's R.
EnergyDensity pull_back_density(const EnergyDensity& ftilde, const IsometryFrame& frame);

struct Witness {
  Vec x;
  Mat A;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct VerificationReport {
  std::string check;
  bool passed = true;
  std::size_t samples = 0;
  /// Smallest normalized slack (negative means violated).
  double worst_margin = 0.0;
  std::optional<Witness> witness;
};

inline constexpr double kSampleXRange = 5.0;
inline constexpr double kSampleMaxNorm = 10.0;

VerificationReport verify_growth(const EnergyDensity& f, std::size_t samples, std::uint64_t seed = 0);

/// |f(x + e_i, A) - f(x, A)| <= 1e-12 (1 + |A|^p) for every coordinate i.
VerificationReport verify_periodicity(const EnergyDensity& f, std::size_t samples,
                                      std::uint64_t seed = 0);

struct AlmostPeriod;

/// Checks |f(x + (tau, z_tau), A) - f(x, A)| against round-off when the base
/// density is periodic, against eta (1 + |A|^p) otherwise.
VerificationReport verify_almost_period(const EnergyDensity& f, const AlmostPeriod& ap, double eta,
                                        std::size_t samples, std::uint64_t seed = 0);

/// Central finite differences of eval against grad; worst relative error.
VerificationReport verify_gradient(const EnergyDensity& f, std::size_t samples, double step = 1e-5,
                                   double tolerance = 1e-6, std::uint64_t seed = 0);

/// f(x, (A+B)/2) <= (f(x, A) + f(x, B)) / 2 at sampled points.
VerificationReport verify_midpoint_convexity(const EnergyDensity& f, std::size_t samples,
                                             std::uint64_t seed = 0);

}  // namespace thinfilm
