#include "thinfilm/energy.hpp"

#include "thinfilm/lattice.hpp"
#include "thinfilm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace thinfilm {

void GrowthParams::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("growth: alpha must be > 0");
  if (!(beta >= alpha)) throw InvalidArgument("growth: beta must be >= alpha");
  if (!(p > 1.0)) throw InvalidArgument("growth: p must be > 1");
}

// --- Coefficient -----------------------------------------------------------

Coefficient Coefficient::constant(double value) { return trig(value, {}); }

Coefficient Coefficient::trig(double mean, std::vector<TrigMode> modes) {
  Coefficient c;
  c.kind_ = Kind::trig;
  c.mean_ = mean;
  c.modes_ = std::move(modes);
  return c;
}

Coefficient Coefficient::checkerboard(double mean, double amplitude, double sharpness) {
  if (!(sharpness > 0.0)) throw InvalidArgument("checkerboard: sharpness must be > 0");
  Coefficient c;
  c.kind_ = Kind::checkerboard;
  c.mean_ = mean;
  c.amplitude_ = amplitude;
  c.sharpness_ = sharpness;
  return c;
}

double Coefficient::operator()(const Vec& x) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (kind_ == Kind::checkerboard) {
    double prod = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) prod *= std::sin(two_pi * x[i]);
    return mean_ + amplitude_ * std::tanh(sharpness_ * prod);
  }
  double v = mean_;
  for (const auto& mode : modes_) {
    double phase = mode.phase;
    for (std::size_t i = 0; i < mode.wave.size(); ++i) phase += two_pi * mode.wave[i] * x[static_cast<Eigen::Index>(i)];
    v += mode.amplitude * std::cos(phase);
  }
  return v;
}

bool Coefficient::periodic() const {
  if (kind_ == Kind::checkerboard) return true;
  for (const auto& mode : modes_) {
    for (double k : mode.wave) {
      if (k != std::round(k)) return false;
    }
  }
  return true;
}

void Coefficient::check_dims(int ambient_dim) const {
  for (const auto& mode : modes_) {
    if (static_cast<int>(mode.wave.size()) != ambient_dim) {
      throw InvalidArgument("coefficient mode wave vector has " + std::to_string(mode.wave.size()) +
                            " entries, expected " + std::to_string(ambient_dim));
    }
  }
}

std::pair<double, double> Coefficient::bounds(int ambient_dim) const {
  if (kind_ == Kind::checkerboard) {
    const double r = std::abs(amplitude_) * std::tanh(sharpness_);
    return {mean_ - r, mean_ + r};
  }
  double total = 0.0;
  for (const auto& mode : modes_) total += std::abs(mode.amplitude);
  double lo = mean_ - total, hi = mean_ + total;
  if (modes_.size() < 2 || !periodic()) return {lo, hi};

  // Several interfering modes: sample the unit cell on a grid and widen by a
  // Lipschitz bound, which is tighter than the triangle inequality.
  double lip = 0.0;
  for (const auto& mode : modes_) {
    double k2 = 0;
    for (double k : mode.wave) k2 += k * k;
    lip += 2.0 * std::numbers::pi * std::abs(mode.amplitude) * std::sqrt(k2);
  }
  const int n = ambient_dim == 2 ? 256 : 48;
  const double slack = lip * std::sqrt(static_cast<double>(ambient_dim)) / (2.0 * n);
  double smin = mean_ + total, smax = mean_ - total;
  Vec x(ambient_dim);
  std::vector<int> idx(static_cast<std::size_t>(ambient_dim), 0);
  while (true) {
    for (int i = 0; i < ambient_dim; ++i) x[i] = static_cast<double>(idx[static_cast<std::size_t>(i)]) / n;
    const double v = (*this)(x);
    smin = std::min(smin, v);
    smax = std::max(smax, v);
    int k = 0;
    while (k < ambient_dim && idx[static_cast<std::size_t>(k)] == n - 1) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == ambient_dim) break;
    ++idx[static_cast<std::size_t>(k)];
  }
  return {std::max(lo, smin - slack), std::min(hi, smax + slack)};
}

// --- Family names ------------------------------------------------------------

std::string to_string(Family f) {
  switch (f) {
    case Family::iso_quadratic: return "iso_quadratic";
    case Family::p_power: return "p_power";
    case Family::transverse_split: return "transverse_split";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "iso_quadratic") return Family::iso_quadratic;
  if (name == "p_power") return Family::p_power;
  if (name == "transverse_split") return Family::transverse_split;
  throw InvalidArgument("unknown density family '" + name +
                        "' (expected iso_quadratic, p_power or transverse_split)");
}

// --- EnergyDensity -----------------------------------------------------------

EnergyDensity::EnergyDensity(Family family, int d, int m, Coefficient a, Coefficient b, double p)
    : family_(family), d_(d), m_(m), a_(std::move(a)), b_(std::move(b)) {
  if (d < 1 || d + 1 > kMaxDim) throw InvalidArgument("density: d must be 1 or 2");
  if (m < 1 || m > kMaxDim) throw InvalidArgument("density: m must be in [1, 3]");
  const int D = d + 1;
  a_.check_dims(D);
  b_.check_dims(D);
  x_map_ = SquareMat::Identity(D, D);
  a_map_ = SquareMat::Identity(D, D);

  const auto [a_lo, a_hi] = a_.bounds(D);
  const auto name = to_string(family);
  if (!(a_lo > 0.0)) {
    throw InvalidArgument(name + ": coefficient lower bound " + std::to_string(a_lo) +
                          " is not positive (growth condition needs alpha > 0)");
  }
  growth_.p = p;
  growth_.alpha = a_lo;
  growth_.beta = a_hi;
  if (family == Family::transverse_split) {
    const auto [b_lo, b_hi] = b_.bounds(D);
    if (!(b_lo > 0.0)) {
      throw InvalidArgument(name + ": transverse coefficient lower bound " + std::to_string(b_lo) +
                            " is not positive");
    }
    growth_.alpha = std::min(a_lo, b_lo);
    growth_.beta = std::max(a_hi, b_hi);
  }
  growth_.validate();
}

EnergyDensity EnergyDensity::iso_quadratic(int d, int m, Coefficient a) {
  return EnergyDensity(Family::iso_quadratic, d, m, std::move(a), Coefficient::constant(1.0), 2.0);
}

EnergyDensity EnergyDensity::p_power(int d, int m, Coefficient c, double p) {
  if (!(p > 1.0)) throw InvalidArgument("p_power: p must be > 1");
  return EnergyDensity(Family::p_power, d, m, std::move(c), Coefficient::constant(1.0), p);
}

EnergyDensity EnergyDensity::transverse_split(int d, int m, Coefficient a, Coefficient b) {
  return EnergyDensity(Family::transverse_split, d, m, std::move(a), std::move(b), 2.0);
}

bool EnergyDensity::base_periodic() const {
  return a_.periodic() && (family_ != Family::transverse_split || b_.periodic());
}

bool EnergyDensity::periodic() const {
  if (!base_periodic()) return false;
  // Signed permutations map Z^{d+1} onto itself.
  for (Eigen::Index i = 0; i < x_map_.rows(); ++i) {
    for (Eigen::Index j = 0; j < x_map_.cols(); ++j) {
      const double v = std::abs(x_map_(i, j));
      if (v != 0.0 && v != 1.0) return false;
    }
  }
  return true;
}

bool EnergyDensity::x_independent() const {
  const auto flat = [](const Coefficient& c) {
    return c.kind() == Coefficient::Kind::trig &&
           std::all_of(c.modes().begin(), c.modes().end(), [](const TrigMode& m) { return m.amplitude == 0.0; });
  };
  return flat(a_) && (family_ != Family::transverse_split || flat(b_));
}

EnergyDensity EnergyDensity::with_growth(GrowthParams g) const {
  g.validate();
  if (family_ != Family::p_power && g.p != 2.0) {
    throw InvalidArgument(to_string(family_) + ": declared growth exponent must be 2");
  }
  if (family_ == Family::p_power && g.p != growth_.p) {
    throw InvalidArgument("p_power: declared growth exponent differs from the density exponent");
  }
  EnergyDensity out = *this;
  out.growth_ = g;
  return out;
}

EnergyDensity::Local EnergyDensity::local(const Vec& x) const {
  const Vec y = x_map_ * x;
  Local c;
  c.a = a_(y);
  if (family_ == Family::transverse_split) c.b = b_(y);
  return c;
}

void EnergyDensity::check_matrix(const Mat& A) const {
  if (A.rows() != m_ || A.cols() != d_ + 1) {
    throw InvalidArgument("density expects a " + std::to_string(m_) + "x" + std::to_string(d_ + 1) +
                          " matrix, got " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
}

double EnergyDensity::eval(const Local& c, const Mat& A) const {
  const Mat B = A * a_map_;
  switch (family_) {
    case Family::iso_quadratic:
      return c.a * B.squaredNorm();
    case Family::p_power: {
      const double n2 = B.squaredNorm();
      return growth_.p == 2.0 ? c.a * n2 : c.a * std::pow(n2, 0.5 * growth_.p);
    }
    case Family::transverse_split:
      return c.a * B.leftCols(d_).squaredNorm() + c.b * B.col(d_).squaredNorm();
  }
  return 0.0;
}

Mat EnergyDensity::grad(const Local& c, const Mat& A) const {
  const Mat B = A * a_map_;
  Mat G(B.rows(), B.cols());
  switch (family_) {
    case Family::iso_quadratic:
      G = 2.0 * c.a * B;
      break;
    case Family::p_power: {
      const double n2 = B.squaredNorm();
      if (n2 == 0.0) {
        G.setZero();
      } else {
        G = (growth_.p * c.a * std::pow(n2, 0.5 * growth_.p - 1.0)) * B;
      }
      break;
    }
    case Family::transverse_split:
      G.leftCols(d_) = 2.0 * c.a * B.leftCols(d_);
      G.col(d_) = 2.0 * c.b * B.col(d_);
      break;
  }
  return G * a_map_.transpose();
}

EnergyDensity EnergyDensity::pulled_back(const SquareMat& R) const {
  if (R.rows() != d_ + 1 || R.cols() != d_ + 1) {
    throw InvalidArgument("pull back: frame dimension " + std::to_string(R.rows()) +
                          " does not match density ambient dimension " + std::to_string(d_ + 1));
  }
  EnergyDensity out = *this;
  out.x_map_ = x_map_ * R;
  out.a_map_ = R * a_map_;
  return out;
}

EnergyDensity builtin_density(const DensitySpec& spec) {
  EnergyDensity f = [&] {
    switch (family_from_string(spec.family)) {
      case Family::iso_quadratic: return EnergyDensity::iso_quadratic(spec.d, spec.m, spec.a);
      case Family::p_power: return EnergyDensity::p_power(spec.d, spec.m, spec.a, spec.p);
      case Family::transverse_split: return EnergyDensity::transverse_split(spec.d, spec.m, spec.a, spec.b);
    }
    throw InvalidArgument("unknown family");
  }();
  if (spec.growth) f = f.with_growth(*spec.growth);
  return f;
}

EnergyDensity pull_back_density(const EnergyDensity& ftilde, const IsometryFrame& frame) {
  if (frame.ambient_dim() != ftilde.ambient_dim()) {
    throw InvalidArgument("pull_back_density: frame lives in R^" + std::to_string(frame.ambient_dim()) +
                          " but the density in R^" + std::to_string(ftilde.ambient_dim()));
  }
  return ftilde.pulled_back(frame.matrix_R);
}

// --- Verifiers ---------------------------------------------------------------

namespace {

double growth_scale(const EnergyDensity& f, const Mat& A) {
  return 1.0 + std::pow(A.norm(), f.exponent());
}

void record(VerificationReport& r, double margin, const Vec& x, const Mat& A, double lhs, double rhs,
            double fail_below) {
  ++r.samples;
  if (r.samples == 1 || margin < r.worst_margin) {
    r.worst_margin = margin;
    if (margin < fail_below) r.witness = Witness{x, A, lhs, rhs};
  }
  if (margin < fail_below) r.passed = false;
}

}  // namespace

VerificationReport verify_growth(const EnergyDensity& f, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("verify_growth: samples must be >= 1");
  VerificationReport r;
  r.check = "growth";
  PointMatrixSampler sampler(f.ambient_dim(), f.dim_m(), kSampleXRange, kSampleMaxNorm, seed);
  const auto& g = f.growth();
  Vec x;
  Mat A;
  for (std::size_t s = 0; s < samples; ++s) {
    sampler.next(x, A);
    const double v = f.eval(x, A);
    const double np = std::pow(A.norm(), g.p);
    const double scale = 1.0 + np;
    const double lower = (v - g.alpha * np) / scale;
    const double upper = (g.beta * (1.0 + np) - v) / scale;
    if (lower <= upper) {
      record(r, lower, x, A, g.alpha * np, v, -1e-12);
    } else {
      record(r, upper, x, A, v, g.beta * (1.0 + np), -1e-12);
    }
  }
  return r;
}

VerificationReport verify_periodicity(const EnergyDensity& f, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("verify_periodicity: samples must be >= 1");
  VerificationReport r;
  r.check = "periodicity";
  PointMatrixSampler sampler(f.ambient_dim(), f.dim_m(), kSampleXRange, kSampleMaxNorm, seed);
  Vec x;
  Mat A;
  for (std::size_t s = 0; s < samples; ++s) {
    sampler.next(x, A);
    const double base = f.eval(x, A);
    const double scale = growth_scale(f, A);
    for (int i = 0; i < f.ambient_dim(); ++i) {
      Vec shifted = x;
      shifted[i] += 1.0;
      const double v = f.eval(shifted, A);
      const double margin = 1e-12 - std::abs(v - base) / scale;
      record(r, margin, shifted, A, v, base, 0.0);
    }
  }
  return r;
}

VerificationReport verify_almost_period(const EnergyDensity& f, const AlmostPeriod& ap, double eta,
                                        std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("verify_almost_period: samples must be >= 1");
  if (!(eta > 0.0)) throw InvalidArgument("verify_almost_period: eta must be > 0");
  if (ap.tau.size() != f.dim_d()) throw InvalidArgument("verify_almost_period: tau dimension mismatch");
  VerificationReport r;
  r.check = "almost_period";
  const double tol = f.base_periodic() ? 1e-12 : eta;
  Vec shift(f.ambient_dim());
  shift.head(f.dim_d()) = ap.tau;
  shift[f.dim_d()] = ap.z_tau;

  PointMatrixSampler sampler(f.ambient_dim(), f.dim_m(), kSampleXRange, kSampleMaxNorm, seed);
  Vec x;
  Mat A;
  for (std::size_t s = 0; s < samples; ++s) {
    sampler.next(x, A);
    const double base = f.eval(x, A);
    const double v = f.eval(Vec(x + shift), A);
    const double margin = tol - std::abs(v - base) / growth_scale(f, A);
    record(r, margin, x, A, v, base, 0.0);
  }
  if (!(ap.defect < eta)) {
    r.passed = false;
    r.worst_margin = std::min(r.worst_margin, eta - ap.defect);
  }
  return r;
}

VerificationReport verify_gradient(const EnergyDensity& f, std::size_t samples, double step,
                                   double tolerance, std::uint64_t seed) {
  VerificationReport r;
  r.check = "gradient";
  PointMatrixSampler sampler(f.ambient_dim(), f.dim_m(), kSampleXRange, 3.0, seed);
  Vec x;
  Mat A;
  for (std::size_t s = 0; s < samples; ++s) {
    sampler.next(x, A);
    const auto c = f.local(x);
    const Mat g = f.grad(c, A);
    Mat fd(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < A.cols(); ++j) {
        Mat Ap = A, Am = A;
        Ap(i, j) += step;
        Am(i, j) -= step;
        fd(i, j) = (f.eval(c, Ap) - f.eval(c, Am)) / (2.0 * step);
      }
    }
    const double err = (g - fd).norm() / std::max(g.norm(), 1e-8);
    record(r, tolerance - err, x, A, err, tolerance, 0.0);
  }
  return r;
}

VerificationReport verify_midpoint_convexity(const EnergyDensity& f, std::size_t samples,
                                             std::uint64_t seed) {
  VerificationReport r;
  r.check = "midpoint_convexity";
  PointMatrixSampler sa(f.ambient_dim(), f.dim_m(), kSampleXRange, kSampleMaxNorm, seed);
  PointMatrixSampler sb(f.ambient_dim(), f.dim_m(), kSampleXRange, kSampleMaxNorm, seed + 7919);
  Vec x, xb;
  Mat A, B;
  for (std::size_t s = 0; s < samples; ++s) {
    sa.next(x, A);
    sb.next(xb, B);
    const auto c = f.local(x);
    const double mid = f.eval(c, Mat(0.5 * (A + B)));
    const double avg = 0.5 * (f.eval(c, A) + f.eval(c, B));
    const double margin = (avg - mid) / (1.0 + avg);
    record(r, margin, x, A, mid, avg, -1e-12);
  }
  return r;
}

}  // namespace thinfilm
