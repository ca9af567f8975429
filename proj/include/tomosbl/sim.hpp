#ifndef TOMOSBL_SIM_HPP
#define TOMOSBL_SIM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tomosbl/baselines.hpp"
#include "tomosbl/model.hpp"

namespace tomosbl {

struct Scatterer {
  double elevation = 0.0;  // meters
  double amplitude = 0.0;  // >= 0
  double phase = 0.0;      // radians, [0, 2 pi)
};

struct Scene {
  std::vector<Scatterer> scatterers;
  bool snap_to_grid = true;
};

struct NoiseSpec {
  std::optional<double> snr_db;  // nullopt = noiseless

  static NoiseSpec noiseless() { return {}; }
  static NoiseSpec at_db(double db) { return {db}; }
};

/// How a dB SNR maps to the noise variance:
/// total_power: sigma2 = sum(a_p^2) / snr; per_scatterer: sigma2 = a_1^2 / snr.
enum class SnrConvention { total_power, per_scatterer };

struct RngSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t sample_index = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based per-sample random stream: (base_seed, sample_index)
/// fully determines every draw, independently of other samples.
class SampleRng {
 public:
  explicit SampleRng(RngSeed seed)
      : state_(detail::splitmix64(seed.base_seed ^
                                  detail::splitmix64(seed.sample_index + 0x51ed2701ULL))) {}

  std::uint64_t next_u64() {
    state_ = detail::splitmix64(state_ + 0x2545f4914f6cdd1dULL);
    return state_;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, no caching, so
  /// the draw sequence stays position-independent).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Circular complex Gaussian CN(0, variance).
  Complex circular_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return {s * normal(), s * normal()};
  }

 private:
  std::uint64_t state_;
};

inline double noise_variance(const Scene& scene, const NoiseSpec& noise,
                             SnrConvention convention) {
  if (!noise.snr_db) return 0.0;
  const double snr_linear = std::pow(10.0, *noise.snr_db / 10.0);
  double power = 0.0;
  if (convention == SnrConvention::total_power) {
    for (const auto& s : scene.scatterers) power += s.amplitude * s.amplitude;
  } else {
    if (scene.scatterers.empty()) return 0.0;
    power = scene.scatterers.front().amplitude * scene.scatterers.front().amplitude;
  }
  return power / snr_linear;
}

/// g = sum_p a_p e^{j phi_p} r(s_p) + eps, eps ~ CN(0, sigma2 I).
inline Snapshot generate_snapshot(const Scene& scene, const SteeringMatrix& steering,
                                  const NoiseSpec& noise, RngSeed seed,
                                  SnrConvention convention = SnrConvention::total_power) {
  const int n = steering.rows();
  Snapshot g = Snapshot::Zero(n);
  for (const auto& sc : scene.scatterers) {
    double s = sc.elevation;
    if (scene.snap_to_grid) {
      const double snapped = steering.grid.snap(s);
      if (std::abs(snapped - s) > 1e-9)
        throw std::invalid_argument("scene elevation off grid with snap_to_grid set");
      s = snapped;
    }
    if (!steering.grid.contains(s))
      throw std::invalid_argument("scene elevation outside the grid range");
    g += sc.amplitude * std::polar(1.0, sc.phase) * steering_vector(steering.geometry, s);
  }
  const double sigma2 = noise_variance(scene, noise, convention);
  if (sigma2 > 0.0) {
    SampleRng rng(seed);
    for (int i = 0; i < n; ++i) g[i] += rng.circular_gaussian(sigma2);
  }
  return g;
}

/// K looks of the same scene with per-look i.i.d. uniform scatterer
/// phases (amplitudes fixed). Decorrelates distinct scatterers so the
/// sample covariance approaches sum_p a_p^2 r_p r_p^H.
inline LookStack generate_look_stack(const Scene& scene, const SteeringMatrix& steering,
                                     int num_looks, RngSeed seed,
                                     const NoiseSpec& noise = NoiseSpec::noiseless(),
                                     SnrConvention convention = SnrConvention::total_power) {
  if (num_looks < 2) throw std::invalid_argument("need at least 2 looks");
  SampleRng rng(seed);
  const double sigma2 = noise_variance(scene, noise, convention);
  LookStack stack{Eigen::MatrixXcd(steering.rows(), num_looks)};
  for (int k = 0; k < num_looks; ++k) {
    Snapshot g = Snapshot::Zero(steering.rows());
    for (const auto& sc : scene.scatterers) {
      const double s = scene.snap_to_grid ? steering.grid.snap(sc.elevation) : sc.elevation;
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      g += sc.amplitude * std::polar(1.0, phase) * steering_vector(steering.geometry, s);
    }
    if (sigma2 > 0.0)
      for (int i = 0; i < g.size(); ++i) g[i] += rng.circular_gaussian(sigma2);
    stack.looks.col(k) = g;
  }
  return stack;
}

inline std::vector<double> even_baselines(double lo, double hi, int count) {
  std::vector<double> b(count);
  for (int i = 0; i < count; ++i)
    b[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return b;
}

/// Geometry with standard X-band wavelength and the slant range chosen to
/// hit a target Rayleigh resolution for the given baseline span.
inline AcquisitionGeometry geometry_for_resolution(double rho, double baseline_lo,
                                                   double baseline_hi, int count,
                                                   double wavelength = 0.031) {
  const double span = baseline_hi - baseline_lo;
  AcquisitionGeometry geom;
  geom.wavelength = wavelength;
  geom.slant_range = 2.0 * span * rho / wavelength;
  geom.baselines = even_baselines(baseline_lo, baseline_hi, count);
  return geom;
}

struct AngularBiasSample {
  Scene scene;  // scatterers ordered by ascending amplitude (slot 0 = weaker)
  Snapshot snapshot;
  LookStack stack;
};

/// Two-scatterer layover study: 13 baselines +-200 m, 30 m Rayleigh
/// resolution, noiseless, amplitudes 1:2, elevations uniform on [0, 300] m
/// snapped to the 1 m grid.
struct AngularBiasPreset {
  int samples = 1000;
  int looks = 4;
  double amplitude_weak = 1.0;
  double amplitude_strong = 2.0;

  AcquisitionGeometry geometry() const {
    return geometry_for_resolution(30.0, -200.0, 200.0, 13);
  }
  ElevationGrid grid() const { return ElevationGrid::from_range(0.0, 300.0, 1.0); }

  AngularBiasSample sample(const SteeringMatrix& steering, std::uint64_t base_seed,
                           std::uint64_t index) const {
    SampleRng rng({base_seed, index});
    Scene scene;
    scene.snap_to_grid = true;
    const double two_pi = 2.0 * std::numbers::pi;
    for (int p = 0; p < 2; ++p) {
      Scatterer sc;
      sc.elevation = steering.grid.snap(rng.uniform(0.0, 300.0));
      sc.amplitude = p == 0 ? amplitude_weak : amplitude_strong;
      sc.phase = rng.uniform(0.0, two_pi);
      scene.scatterers.push_back(sc);
    }
    // dedicated sub-streams so snapshot noise (none here) and look phases
    // do not depend on each other
    Snapshot snap = generate_snapshot(scene, steering, NoiseSpec::noiseless(),
                                      {base_seed, index});
    LookStack stack = generate_look_stack(
        scene, steering, looks,
        {detail::splitmix64(base_seed ^ 0xa5a5a5a5ULL), index});
    return {std::move(scene), std::move(snap), std::move(stack)};
  }
};

struct SuperresSample {
  Scene scene;
  Snapshot snapshot;
};

/// Super-resolution study: 25 baselines +-135 m, 42 m Rayleigh resolution,
/// SNR 6 dB, equal amplitudes and phases, separation kappa * rho.
struct SuperresPreset {
  double kappa = 0.0;  // normalized distance, (0, 1.25]
  int samples = 1000;
  double snr_db = 6.0;
  SnrConvention snr_convention = SnrConvention::per_scatterer;

  AcquisitionGeometry geometry() const {
    return geometry_for_resolution(42.0, -135.0, 135.0, 25);
  }
  ElevationGrid grid() const { return ElevationGrid::from_range(0.0, 300.0, 1.0); }

  static std::vector<double> default_kappa_grid() {
    std::vector<double> ks;
    // (2i+1) * 0.05 lands on 1.25 exactly; 0.05 + 0.1*i overshoots in the
    // last binary digit and would fail the kappa <= 1.25 precondition
    for (int i = 0; i < 13; ++i) ks.push_back((2 * i + 1) * 0.05);
    return ks;
  }

  SuperresSample sample(const SteeringMatrix& steering, std::uint64_t base_seed,
                        std::uint64_t index) const {
    if (kappa <= 0.0 || kappa > 1.25)
      throw std::invalid_argument("kappa must be in (0, 1.25]");
    SampleRng rng({base_seed, index});
    const double rho = rayleigh_resolution(steering.geometry);
    const double s1 = steering.grid.snap(rng.uniform(0.0, 200.0));
    const double s2 = steering.grid.snap(s1 + kappa * rho);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Scene scene;
    scene.snap_to_grid = true;
    scene.scatterers.push_back({s1, 1.0, phase});
    scene.scatterers.push_back({s2, 1.0, phase});
    Snapshot snap = generate_snapshot(scene, steering, NoiseSpec::at_db(snr_db),
                                      {detail::splitmix64(base_seed ^ 0xc3c3c3c3ULL), index},
                                      snr_convention);
    return {std::move(scene), std::move(snap)};
  }
};

}  // namespace tomosbl

#endif
