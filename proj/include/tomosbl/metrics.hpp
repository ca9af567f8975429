#ifndef TOMOSBL_METRICS_HPP
#define TOMOSBL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tomosbl/model.hpp"
#include "tomosbl/sbl.hpp"
#include "tomosbl/sim.hpp"

namespace tomosbl {

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// b = arccos(|est^H truth| / (||est|| ||truth||)), in [0, pi/2].
/// Invariant to scaling and global phase of either argument.
inline double angular_bias(const Eigen::VectorXcd& est, const Eigen::VectorXcd& truth) {
  if (est.size() != truth.size()) throw std::invalid_argument("angular_bias: length mismatch");
  const double ne = est.norm();
  const double nt = truth.norm();
  if (ne == 0.0 || nt == 0.0) throw std::invalid_argument("angular_bias: zero vector");
  const double c = std::clamp(std::abs(est.dot(truth)) / (ne * nt), 0.0, 1.0);
  return std::acos(c);
}

/// Single-scatterer elevation CRLB (meters):
/// sigma_s = lambda r / (4 pi sigma_b sqrt(2 N snr)), snr = a^2 / sigma^2.
inline double crlb_elevation(const AcquisitionGeometry& geometry, double snr_linear) {
  if (snr_linear <= 0.0) throw std::invalid_argument("snr_linear must be > 0");
  const double sigma_b = geometry.baseline_std();
  if (sigma_b <= 0.0) throw std::invalid_argument("baseline spread must be > 0");
  const double n = static_cast<double>(geometry.num_acquisitions());
  return geometry.wavelength * geometry.slant_range /
         (4.0 * std::numbers::pi * sigma_b * std::sqrt(2.0 * n * snr_linear));
}

/// Success iff exactly two scatterers were found and, pairing by
/// elevation order, both positions are within 4 * crlb of the truth.
inline bool classify_detection(const Scene& truth, const SblResult& result, double crlb_m) {
  if (truth.scatterers.size() != 2)
    throw std::invalid_argument("classify_detection: truth must have exactly 2 scatterers");
  if (result.scatterers.size() != 2) return false;
  std::vector<double> t{truth.scatterers[0].elevation, truth.scatterers[1].elevation};
  std::vector<double> e{result.scatterers[0].elevation, result.scatterers[1].elevation};
  std::sort(t.begin(), t.end());
  std::sort(e.begin(), e.end());
  return std::abs(e[0] - t[0]) <= 4.0 * crlb_m && std::abs(e[1] - t[1]) <= 4.0 * crlb_m;
}

struct ScattererSlot {
  double true_elevation = 0.0;
  std::optional<double> est_elevation;
  std::optional<double> bias_rad;
};

struct MetricsRecord {
  std::uint64_t sample_index = 0;
  std::vector<ScattererSlot> slots;
  std::optional<bool> detection_success;
};

struct SlotStats {
  double mean_deg = 0.0;
  double std_deg = 0.0;  // population std
  double pct_le1 = 0.0;
  double pct_le3 = 0.0;
  double pct_le6 = 0.0;
  double pct_gt6 = 0.0;
  int count = 0;
};

struct AggregateStats {
  std::vector<SlotStats> slots;
  std::optional<double> detection_rate;
};

inline AggregateStats aggregate(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::size_t num_slots = 0;
  for (const auto& r : records) num_slots = std::max(num_slots, r.slots.size());

  AggregateStats stats;
  for (std::size_t s = 0; s < num_slots; ++s) {
    std::vector<double> deg;
    for (const auto& r : records)
      if (s < r.slots.size() && r.slots[s].bias_rad)
        deg.push_back(rad_to_deg(*r.slots[s].bias_rad));
    SlotStats ss;
    ss.count = static_cast<int>(deg.size());
    if (!deg.empty()) {
      double mean = 0.0;
      for (double d : deg) mean += d;
      mean /= deg.size();
      double var = 0.0;
      for (double d : deg) var += (d - mean) * (d - mean);
      ss.mean_deg = mean;
      ss.std_deg = std::sqrt(var / deg.size());
      const double n = static_cast<double>(deg.size());
      ss.pct_le1 = 100.0 * std::count_if(deg.begin(), deg.end(), [](double d) { return d <= 1.0; }) / n;
      ss.pct_le3 = 100.0 * std::count_if(deg.begin(), deg.end(), [](double d) { return d <= 3.0; }) / n;
      ss.pct_le6 = 100.0 * std::count_if(deg.begin(), deg.end(), [](double d) { return d <= 6.0; }) / n;
      ss.pct_gt6 = 100.0 - ss.pct_le6;
    }
    stats.slots.push_back(ss);
  }

  int n_detect = 0;
  int n_success = 0;
  for (const auto& r : records) {
    if (r.detection_success) {
      ++n_detect;
      if (*r.detection_success) ++n_success;
    }
  }
  if (n_detect > 0)
    stats.detection_rate = static_cast<double>(n_success) / n_detect;
  return stats;
}

/// Assign two estimated steering vectors to the two truth slots so the
/// total angular bias is minimized. Slot order follows the truth order
/// (slot 0 = weaker scatterer in the presets). A single estimate goes to
/// its best-matching slot; the other slot stays absent.
inline std::vector<ScattererSlot> match_steering_estimates(
    const std::vector<Eigen::VectorXcd>& estimates,
    const std::vector<Eigen::VectorXcd>& truths,
    const std::vector<double>& true_elevations,
    const std::vector<double>& est_elevations = {}) {
  if (truths.size() != true_elevations.size())
    throw std::invalid_argument("match_steering_estimates: truth size mismatch");
  std::vector<ScattererSlot> slots(truths.size());
  for (std::size_t s = 0; s < truths.size(); ++s)
    slots[s].true_elevation = true_elevations[s];

  auto elev = [&](std::size_t e) -> std::optional<double> {
    return e < est_elevations.size() ? std::optional<double>(est_elevations[e]) : std::nullopt;
  };

  if (estimates.empty()) return slots;
  if (truths.size() == 1) {
    slots[0].bias_rad = angular_bias(estimates[0], truths[0]);
    slots[0].est_elevation = elev(0);
    return slots;
  }
  if (estimates.size() == 1) {
    const double b0 = angular_bias(estimates[0], truths[0]);
    const double b1 = angular_bias(estimates[0], truths[1]);
    const std::size_t s = b0 <= b1 ? 0 : 1;
    slots[s].bias_rad = s == 0 ? b0 : b1;
    slots[s].est_elevation = elev(0);
    return slots;
  }
  const double b00 = angular_bias(estimates[0], truths[0]);
  const double b01 = angular_bias(estimates[0], truths[1]);
  const double b10 = angular_bias(estimates[1], truths[0]);
  const double b11 = angular_bias(estimates[1], truths[1]);
  if (b00 + b11 <= b01 + b10) {
    slots[0].bias_rad = b00;
    slots[0].est_elevation = elev(0);
    slots[1].bias_rad = b11;
    slots[1].est_elevation = elev(1);
  } else {
    slots[0].bias_rad = b01;
    slots[0].est_elevation = elev(1);
    slots[1].bias_rad = b10;
    slots[1].est_elevation = elev(0);
  }
  return slots;
}

}  // namespace tomosbl

#endif
