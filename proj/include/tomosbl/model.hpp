#ifndef TOMOSBL_MODEL_HPP
#define TOMOSBL_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tomosbl {

using Complex = std::complex<double>;
using Snapshot = Eigen::VectorXcd;
using ReflectivityVector = Eigen::VectorXcd;

/// Multi-baseline acquisition geometry. Baselines are perpendicular
/// baselines in meters relative to the reference orbit.
struct AcquisitionGeometry {
  double wavelength = 0.0;   // meters
  double slant_range = 0.0;  // meters
  std::vector<double> baselines;

  int num_acquisitions() const { return static_cast<int>(baselines.size()); }

  double baseline_span() const {
    const auto [lo, hi] = std::minmax_element(baselines.begin(), baselines.end());
    return *hi - *lo;
  }

  /// Population standard deviation of the baseline set.
  double baseline_std() const {
    const double n = static_cast<double>(baselines.size());
    double mean = 0.0;
    for (double b : baselines) mean += b;
    mean /= n;
    double var = 0.0;
    for (double b : baselines) var += (b - mean) * (b - mean);
    return std::sqrt(var / n);
  }

  void validate() const {
    if (wavelength <= 0.0) throw std::invalid_argument("wavelength must be > 0");
    if (slant_range <= 0.0) throw std::invalid_argument("slant_range must be > 0");
    if (baselines.size() < 2) throw std::invalid_argument("need at least 2 baselines");
    if (baseline_span() <= 0.0) throw std::invalid_argument("baseline span must be > 0");
  }
};

/// Spatial frequency of acquisition n (0-based): xi_n = 2 b_n / (lambda r).
inline double spatial_frequency(const AcquisitionGeometry& geometry, int n) {
  if (n < 0 || n >= geometry.num_acquisitions())
    throw std::out_of_range("acquisition index out of range");
  return 2.0 * geometry.baselines[static_cast<std::size_t>(n)] /
         (geometry.wavelength * geometry.slant_range);
}

/// Classical elevation resolution rho = lambda r / (2 delta_b).
inline double rayleigh_resolution(const AcquisitionGeometry& geometry) {
  const double span = geometry.baseline_span();
  if (span <= 0.0) throw std::invalid_argument("baseline span must be > 0");
  return geometry.wavelength * geometry.slant_range / (2.0 * span);
}

/// Uniform elevation grid s_min, s_min + spacing, ... (L positions).
struct ElevationGrid {
  double s_min = 0.0;
  double spacing = 1.0;  // meters
  int size = 0;          // L

  static ElevationGrid from_range(double s_min, double s_max, double spacing) {
    if (spacing <= 0.0) throw std::invalid_argument("grid spacing must be > 0");
    const int size = static_cast<int>(std::floor((s_max - s_min) / spacing)) + 1;
    if (size < 2) throw std::invalid_argument("elevation grid needs at least 2 positions");
    return ElevationGrid{s_min, spacing, size};
  }

  double position(int l) const { return s_min + spacing * l; }
  double s_max() const { return position(size - 1); }

  bool contains(double s) const {
    return s >= s_min - 0.5 * spacing && s <= s_max() + 0.5 * spacing;
  }

  /// Nearest grid index to elevation s.
  int snap_index(double s) const {
    int i = static_cast<int>(std::lround((s - s_min) / spacing));
    return std::clamp(i, 0, size - 1);
  }

  double snap(double s) const { return position(snap_index(s)); }

  Eigen::VectorXd positions() const {
    Eigen::VectorXd p(size);
    for (int l = 0; l < size; ++l) p[l] = position(l);
    return p;
  }
};

/// Steering vector r(s): entries exp(+j 2 pi xi_n s), unit modulus.
inline Eigen::VectorXcd steering_vector(const AcquisitionGeometry& geometry, double s) {
  const int n = geometry.num_acquisitions();
  Eigen::VectorXcd r(n);
  for (int i = 0; i < n; ++i) {
    const double phase = 2.0 * std::numbers::pi * spatial_frequency(geometry, i) * s;
    r[i] = std::polar(1.0, phase);
  }
  return r;
}

/// N x L dictionary of steering vectors over an elevation grid.
struct SteeringMatrix {
  Eigen::MatrixXcd entries;  // N x L
  AcquisitionGeometry geometry;
  ElevationGrid grid;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
};

inline SteeringMatrix build_steering_matrix(const AcquisitionGeometry& geometry,
                                            const ElevationGrid& grid,
                                            std::size_t entry_cap = 100'000'000) {
  geometry.validate();
  const int n = geometry.num_acquisitions();
  const int l = grid.size;
  if (static_cast<std::size_t>(n) * static_cast<std::size_t>(l) > entry_cap)
    throw std::invalid_argument("steering matrix exceeds configured entry cap (" +
                                std::to_string(entry_cap) + " entries)");
  SteeringMatrix sm{Eigen::MatrixXcd(n, l), geometry, grid};
  for (int c = 0; c < l; ++c) sm.entries.col(c) = steering_vector(geometry, grid.position(c));
  return sm;
}

/// Noise-free forward model g = R gamma.
inline Snapshot forward(const SteeringMatrix& steering, const ReflectivityVector& gamma) {
  if (gamma.size() != steering.entries.cols())
    throw std::invalid_argument("reflectivity length does not match grid size");
  return steering.entries * gamma;
}

}  // namespace tomosbl

#endif
