#ifndef TOMOSBL_EXPERIMENTS_HPP
#define TOMOSBL_EXPERIMENTS_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tomosbl/baselines.hpp"
#include "tomosbl/metrics.hpp"
#include "tomosbl/model.hpp"
#include "tomosbl/sbl.hpp"
#include "tomosbl/sim.hpp"

namespace tomosbl {

inline constexpr const char* kCodeVersion = "tomosbl 0.1.0";

/// Fixed numeric formatting for all CSV output: 9 significant digits.
inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct ExperimentConfig {
  std::string experiment;  // angular-bias | superres | trace-prior | invert
  int samples = 1000;
  std::uint64_t base_seed = 12345;
  int workers = 1;
  std::string out_dir = "results";

  // grid
  double grid_min = 0.0;
  double grid_max = 300.0;
  double grid_spacing = 1.0;

  // solver
  SblOptions solver;
  int max_scatterers = 2;

  // angular-bias preset
  int looks = 4;

  // superres preset
  std::vector<double> kappas = SuperresPreset::default_kappa_grid();
  double snr_db = 6.0;
  SnrConvention snr_convention = SnrConvention::per_scatterer;

  // trace-prior preset
  double trace_kappa = 0.6;
  double trace_elevation = 100.0;

  // invert
  std::string input_file;
  std::vector<double> baselines;
  double wavelength = 0.031;
  double slant_range = 774193.548387097;  // matches 30 m Rayleigh resolution

  ElevationGrid grid() const {
    return ElevationGrid::from_range(grid_min, grid_max, grid_spacing);
  }
};

namespace cfg {

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

inline std::string join_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt9(v[i]);
  }
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace cfg

/// Config diagnostics carry the key, line, and offending value.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Apply one "key value" pair to the config. Unknown keys are an error so
/// config typos fail loudly.
inline void apply_config_key(ExperimentConfig& c, const std::string& key,
                             const std::string& value, int line = -1) {
  auto fail = [&](const std::string& why) {
    std::string at = line >= 0 ? " (line " + std::to_string(line) + ")" : "";
    throw ConfigError("config key '" + key + "'" + at + ": " + why);
  };
  try {
    if (key == "experiment") c.experiment = value;
    else if (key == "samples") c.samples = std::stoi(value);
    else if (key == "base_seed") c.base_seed = std::stoull(value);
    else if (key == "workers") c.workers = std::stoi(value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "grid_min") c.grid_min = std::stod(value);
    else if (key == "grid_max") c.grid_max = std::stod(value);
    else if (key == "grid_spacing") c.grid_spacing = std::stod(value);
    else if (key == "max_iterations") c.solver.max_iterations = std::stoi(value);
    else if (key == "tolerance") c.solver.tolerance = std::stod(value);
    else if (key == "prune_threshold") c.solver.prune_threshold = std::stod(value);
    else if (key == "noise_floor") c.solver.noise_floor = std::stod(value);
    else if (key == "fixed_noise") {
      if (value == "none") c.solver.fixed_noise.reset();
      else c.solver.fixed_noise = std::stod(value);
    } else if (key == "noise_denominator") {
      if (value == "mackay") c.solver.noise_denominator = NoiseDenominator::mackay;
      else if (value == "literal") c.solver.noise_denominator = NoiseDenominator::literal;
      else fail("expected mackay or literal");
    } else if (key == "max_scatterers") c.max_scatterers = std::stoi(value);
    else if (key == "looks") c.looks = std::stoi(value);
    else if (key == "kappas") c.kappas = cfg::parse_double_list(value);
    else if (key == "snr_db") c.snr_db = std::stod(value);
    else if (key == "snr_convention") {
      if (value == "per_scatterer") c.snr_convention = SnrConvention::per_scatterer;
      else if (value == "total_power") c.snr_convention = SnrConvention::total_power;
      else fail("expected per_scatterer or total_power");
    } else if (key == "trace_kappa") c.trace_kappa = std::stod(value);
    else if (key == "trace_elevation") c.trace_elevation = std::stod(value);
    else if (key == "input_file") c.input_file = value;
    else if (key == "baselines") c.baselines = cfg::parse_double_list(value);
    else if (key == "wavelength") c.wavelength = std::stod(value);
    else if (key == "slant_range") c.slant_range = std::stod(value);
    else fail("unknown key");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("bad value '") + value + "': " + e.what());
  }
}

/// Flat key-value config file: one `key value` (or `key = value`) per
/// line, `#` starts a comment, all keys optional.
inline void load_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = cfg::trim(line);
    if (line.empty()) continue;
    std::string key, value;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      key = cfg::trim(line.substr(0, eq));
      value = cfg::trim(line.substr(eq + 1));
    } else {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected 'key value'");
      key = cfg::trim(line.substr(0, sp));
      value = cfg::trim(line.substr(sp + 1));
    }
    apply_config_key(c, key, value, lineno);
  }
}

inline void write_manifest(const ExperimentConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  const auto now = std::chrono::system_clock::now();
  out << "# run manifest; reusable as a config file\n";
  out << "# code_version " << kCodeVersion << "\n";
  out << "# timestamp_unix "
      << std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()
      << "\n";
  out << "experiment = " << c.experiment << "\n";
  out << "samples = " << c.samples << "\n";
  out << "base_seed = " << c.base_seed << "\n";
  out << "workers = " << c.workers << "\n";
  out << "grid_min = " << fmt9(c.grid_min) << "\n";
  out << "grid_max = " << fmt9(c.grid_max) << "\n";
  out << "grid_spacing = " << fmt9(c.grid_spacing) << "\n";
  out << "max_iterations = " << c.solver.max_iterations << "\n";
  out << "tolerance = " << fmt9(c.solver.tolerance) << "\n";
  out << "prune_threshold = " << fmt9(c.solver.prune_threshold) << "\n";
  out << "noise_floor = " << fmt9(c.solver.noise_floor) << "\n";
  out << "fixed_noise = "
      << (c.solver.fixed_noise ? fmt9(*c.solver.fixed_noise) : std::string("none")) << "\n";
  out << "noise_denominator = "
      << (c.solver.noise_denominator == NoiseDenominator::mackay ? "mackay" : "literal")
      << "\n";
  out << "max_scatterers = " << c.max_scatterers << "\n";
  out << "looks = " << c.looks << "\n";
  out << "kappas = " << cfg::join_double_list(c.kappas) << "\n";
  out << "snr_db = " << fmt9(c.snr_db) << "\n";
  out << "snr_convention = "
      << (c.snr_convention == SnrConvention::per_scatterer ? "per_scatterer" : "total_power")
      << "\n";
  out << "trace_kappa = " << fmt9(c.trace_kappa) << "\n";
  out << "trace_elevation = " << fmt9(c.trace_elevation) << "\n";
  if (!c.input_file.empty()) out << "input_file = " << c.input_file << "\n";
  if (!c.baselines.empty()) out << "baselines = " << cfg::join_double_list(c.baselines) << "\n";
  out << "wavelength = " << fmt9(c.wavelength) << "\n";
  out << "slant_range = " << fmt9(c.slant_range) << "\n";
}

/// Run fn(i) for i in [0, count) on `workers` threads. Results land in a
/// per-index slot, so output is independent of scheduling.
template <typename T>
std::vector<T> parallel_map(int count, int workers, const std::function<T(int)>& fn) {
  std::vector<T> out(static_cast<std::size_t>(count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (int i = t; i < count; i += workers) out[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// angular-bias experiment (Table 1 / Table 2 style outputs)
// ---------------------------------------------------------------------------

struct AngularBiasRow {
  std::uint64_t sample_index;
  std::string method;  // sbl | pca | kpca
  int slot;            // 0 = first (weaker), 1 = second (stronger)
  std::optional<double> bias_deg;
  std::optional<double> est_elevation;
  double true_elevation;
};

struct AngularBiasOutcome {
  std::vector<AngularBiasRow> rows;
  std::map<std::string, AggregateStats> aggregates;  // per method
  std::filesystem::path out_dir;
};

namespace detail {

struct AngularBiasSampleResult {
  std::vector<ScattererSlot> sbl, pca, kpca;
};

inline std::vector<ScattererSlot> slots_for_method(
    const std::vector<Eigen::VectorXcd>& estimates, const Scene& scene,
    const AcquisitionGeometry& geom, const std::vector<double>& est_elevations = {}) {
  std::vector<Eigen::VectorXcd> truths;
  std::vector<double> true_elev;
  for (const auto& sc : scene.scatterers) {
    truths.push_back(steering_vector(geom, sc.elevation));
    true_elev.push_back(sc.elevation);
  }
  return match_steering_estimates(estimates, truths, true_elev, est_elevations);
}

}  // namespace detail

inline AngularBiasOutcome run_angular_bias(const ExperimentConfig& config) {
  AngularBiasPreset preset;
  preset.samples = config.samples;
  preset.looks = config.looks;
  const AcquisitionGeometry geom = preset.geometry();
  const SteeringMatrix steering = build_steering_matrix(geom, config.grid());

  const auto results = parallel_map<detail::AngularBiasSampleResult>(
      config.samples, config.workers, [&](int i) {
        const AngularBiasSample s =
            preset.sample(steering, config.base_seed, static_cast<std::uint64_t>(i));
        detail::AngularBiasSampleResult r;

        const SblResult sbl =
            sbl_solve(s.snapshot, steering, config.solver, config.max_scatterers);
        std::vector<Eigen::VectorXcd> sbl_vecs;
        std::vector<double> sbl_elev;
        for (const auto& sc : sbl.scatterers) {
          sbl_vecs.push_back(steering_vector(geom, sc.elevation));
          sbl_elev.push_back(sc.elevation);
        }
        r.sbl = detail::slots_for_method(sbl_vecs, s.scene, geom, sbl_elev);

        const auto pca = pca_estimate(sample_covariance(s.stack), 2);
        r.pca = detail::slots_for_method(pca, s.scene, geom);

        const auto kpca = kpca_estimate(s.stack, KernelSpec{}, 2);
        r.kpca = detail::slots_for_method(kpca.vectors, s.scene, geom);
        return r;
      });

  AngularBiasOutcome outcome;
  std::map<std::string, std::vector<MetricsRecord>> records;
  for (int i = 0; i < config.samples; ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    for (const auto& [method, slots] :
         {std::pair<std::string, const std::vector<ScattererSlot>*>{"sbl", &r.sbl},
          {"pca", &r.pca},
          {"kpca", &r.kpca}}) {
      MetricsRecord rec;
      rec.sample_index = static_cast<std::uint64_t>(i);
      rec.slots = *slots;
      records[method].push_back(rec);
      for (int slot = 0; slot < static_cast<int>(slots->size()); ++slot) {
        const auto& ss = (*slots)[static_cast<std::size_t>(slot)];
        outcome.rows.push_back({rec.sample_index, method, slot,
                                ss.bias_rad ? std::optional<double>(rad_to_deg(*ss.bias_rad))
                                            : std::nullopt,
                                ss.est_elevation, ss.true_elevation});
      }
    }
  }
  for (const auto& [method, recs] : records) outcome.aggregates[method] = aggregate(recs);

  if (!config.out_dir.empty()) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    outcome.out_dir = dir;
    write_manifest(config, dir / "manifest.txt");

    std::ofstream per(dir / "per_sample.csv", std::ios::binary);
    per << "sample_index,method,slot,bias_deg,est_elevation,true_elevation\n";
    for (const auto& row : outcome.rows) {
      per << row.sample_index << ',' << row.method << ',' << row.slot << ','
          << (row.bias_deg ? fmt9(*row.bias_deg) : "") << ','
          << (row.est_elevation ? fmt9(*row.est_elevation) : "") << ','
          << fmt9(row.true_elevation) << "\n";
    }

    std::ofstream agg(dir / "aggregate.csv", std::ios::binary);
    agg << "method,slot,count,mean_deg,std_deg,pct_le1,pct_le3,pct_le6,pct_gt6\n";
    for (const auto& [method, stats] : outcome.aggregates) {
      for (std::size_t s = 0; s < stats.slots.size(); ++s) {
        const auto& ss = stats.slots[s];
        agg << method << ',' << s << ',' << ss.count << ',' << fmt9(ss.mean_deg) << ','
            << fmt9(ss.std_deg) << ',' << fmt9(ss.pct_le1) << ',' << fmt9(ss.pct_le3) << ','
            << fmt9(ss.pct_le6) << ',' << fmt9(ss.pct_gt6) << "\n";
      }
    }

    std::ofstream sum(dir / "summary.txt", std::ios::binary);
    sum << "angular bias, " << config.samples << " samples\n";
    for (const auto& [method, stats] : outcome.aggregates) {
      for (std::size_t s = 0; s < stats.slots.size(); ++s) {
        const auto& ss = stats.slots[s];
        sum << method << " slot " << (s == 0 ? "first(weak)" : "second(strong)")
            << ": mean " << fmt9(ss.mean_deg) << " deg, std " << fmt9(ss.std_deg)
            << " deg; <=1deg " << fmt9(ss.pct_le1) << "%, <=3deg " << fmt9(ss.pct_le3)
            << "%, <=6deg " << fmt9(ss.pct_le6) << "%, >6deg " << fmt9(ss.pct_gt6)
            << "% (" << ss.count << " present)\n";
      }
    }
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// superres experiment (Figure 2 style detection-rate curve)
// ---------------------------------------------------------------------------

struct SuperresPoint {
  double kappa;
  double detection_rate;
  int n_samples;
  double wilson_lo;
  double wilson_hi;
};

struct SuperresSampleRow {
  double kappa;
  std::uint64_t sample_index;
  int n_detected;
  std::optional<double> est1, est2;
  double true1, true2;
  bool success;
};

struct SuperresOutcome {
  std::vector<SuperresPoint> curve;
  std::vector<SuperresSampleRow> rows;
  std::filesystem::path out_dir;
};

inline std::pair<double, double> wilson_interval(int successes, int n, double z = 1.959963985) {
  const double p = static_cast<double>(successes) / n;
  // degenerate endpoints are exact (rounding otherwise lands just inside)
  if (successes == 0) {
    const double z2 = z * z;
    return {0.0, z2 / (n + z2)};
  }
  if (successes == n) {
    const double z2 = z * z;
    return {static_cast<double>(n) / (n + z2), 1.0};
  }
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline SuperresOutcome run_superres(const ExperimentConfig& config) {
  SuperresOutcome outcome;
  for (double kappa : config.kappas) {
    SuperresPreset preset;
    preset.kappa = kappa;
    preset.samples = config.samples;
    preset.snr_db = config.snr_db;
    preset.snr_convention = config.snr_convention;
    const SteeringMatrix steering = build_steering_matrix(preset.geometry(), config.grid());

    const auto rows = parallel_map<SuperresSampleRow>(
        config.samples, config.workers, [&](int i) {
          const SuperresSample s =
              preset.sample(steering, config.base_seed, static_cast<std::uint64_t>(i));
          const SblResult sbl =
              sbl_solve(s.snapshot, steering, config.solver, config.max_scatterers);
          const double sigma2 =
              noise_variance(s.scene, NoiseSpec::at_db(preset.snr_db), preset.snr_convention);
          const double a1 = s.scene.scatterers.front().amplitude;
          const double crlb = crlb_elevation(steering.geometry, a1 * a1 / sigma2);
          SuperresSampleRow row;
          row.kappa = kappa;
          row.sample_index = static_cast<std::uint64_t>(i);
          row.n_detected = static_cast<int>(sbl.scatterers.size());
          if (row.n_detected >= 1) row.est1 = sbl.scatterers[0].elevation;
          if (row.n_detected >= 2) row.est2 = sbl.scatterers[1].elevation;
          std::vector<double> t{s.scene.scatterers[0].elevation,
                                s.scene.scatterers[1].elevation};
          std::sort(t.begin(), t.end());
          row.true1 = t[0];
          row.true2 = t[1];
          row.success = classify_detection(s.scene, sbl, crlb);
          return row;
        });

    int successes = 0;
    for (const auto& r : rows) successes += r.success ? 1 : 0;
    const auto [lo, hi] = wilson_interval(successes, config.samples);
    outcome.curve.push_back({kappa, static_cast<double>(successes) / config.samples,
                             config.samples, lo, hi});
    outcome.rows.insert(outcome.rows.end(), rows.begin(), rows.end());
  }

  if (!config.out_dir.empty()) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    outcome.out_dir = dir;
    write_manifest(config, dir / "manifest.txt");

    std::ofstream curve(dir / "curve.csv", std::ios::binary);
    curve << "kappa,detection_rate,n_samples,wilson_ci_low,wilson_ci_high\n";
    for (const auto& p : outcome.curve)
      curve << fmt9(p.kappa) << ',' << fmt9(p.detection_rate) << ',' << p.n_samples << ','
            << fmt9(p.wilson_lo) << ',' << fmt9(p.wilson_hi) << "\n";

    std::ofstream per(dir / "per_sample.csv", std::ios::binary);
    per << "kappa,sample_index,n_detected,est1,est2,true1,true2,success\n";
    for (const auto& r : outcome.rows)
      per << fmt9(r.kappa) << ',' << r.sample_index << ',' << r.n_detected << ','
          << (r.est1 ? fmt9(*r.est1) : "") << ',' << (r.est2 ? fmt9(*r.est2) : "") << ','
          << fmt9(r.true1) << ',' << fmt9(r.true2) << ',' << (r.success ? 1 : 0) << "\n";

    std::ofstream sum(dir / "summary.txt", std::ios::binary);
    sum << "detection rate vs normalized distance, " << config.samples
        << " samples per point\n";
    for (const auto& p : outcome.curve)
      sum << "kappa " << fmt9(p.kappa) << ": " << fmt9(100.0 * p.detection_rate) << "%\n";
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// trace-prior experiment (Figure 1 style hyperparameter trace)
// ---------------------------------------------------------------------------

struct TraceOutcome {
  SblResult result;
  int true_index1 = 0;
  int true_index2 = 0;
  std::filesystem::path out_dir;
};

inline TraceOutcome run_trace_prior(const ExperimentConfig& config) {
  AngularBiasPreset base;  // same geometry family as the angular-bias study
  const AcquisitionGeometry geom = base.geometry();
  const SteeringMatrix steering = build_steering_matrix(geom, config.grid());
  const double rho = rayleigh_resolution(geom);

  Scene scene;
  scene.snap_to_grid = true;
  const double s1 = steering.grid.snap(config.trace_elevation);
  const double s2 = steering.grid.snap(s1 + config.trace_kappa * rho);
  scene.scatterers.push_back({s1, 1.0, 0.0});
  scene.scatterers.push_back({s2, 1.0, 0.0});

  const Snapshot g = generate_snapshot(scene, steering, NoiseSpec::noiseless(),
                                       {config.base_seed, 0});
  SblOptions options = config.solver;
  options.trace = true;
  TraceOutcome outcome;
  outcome.result = sbl_solve(g, steering, options, config.max_scatterers);
  outcome.true_index1 = steering.grid.snap_index(s1);
  outcome.true_index2 = steering.grid.snap_index(s2);

  if (!config.out_dir.empty()) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    outcome.out_dir = dir;
    write_manifest(config, dir / "manifest.txt");

    std::ofstream trace(dir / "trace.csv", std::ios::binary);
    trace << "iteration,grid_index,elevation_m,w\n";
    for (std::size_t it = 0; it < outcome.result.trace.size(); ++it) {
      const auto& w = outcome.result.trace[it];
      for (int l = 0; l < w.size(); ++l)
        trace << it << ',' << l << ',' << fmt9(steering.grid.position(l)) << ','
              << fmt9(w[l]) << "\n";
    }

    std::ofstream sum(dir / "summary.txt", std::ios::binary);
    sum << "prior learning trace: separation " << fmt9(config.trace_kappa)
        << " Rayleigh units (" << fmt9(s2 - s1) << " m)\n";
    sum << "true grid indices: " << outcome.true_index1 << ", " << outcome.true_index2 << "\n";
    sum << "converged: " << (outcome.result.converged ? "yes" : "no") << " after "
        << outcome.result.state.iteration << " iterations\n";
    sum << "recovered elevations:";
    for (const auto& sc : outcome.result.scatterers) sum << ' ' << fmt9(sc.elevation);
    sum << "\n";
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// invert: SBL on externally supplied measurement vectors
// ---------------------------------------------------------------------------

struct InvertRow {
  std::string pixel_id;
  std::vector<ScattererEstimate> scatterers;
  int n_iterations;
  bool converged;
};

struct InvertOutcome {
  std::vector<InvertRow> rows;
  std::filesystem::path out_dir;
};

inline InvertOutcome run_invert(const ExperimentConfig& config, const std::string& input_file) {
  if (config.baselines.size() < 2)
    throw std::invalid_argument("invert requires a baseline list in the config");
  AcquisitionGeometry geom;
  geom.wavelength = config.wavelength;
  geom.slant_range = config.slant_range;
  geom.baselines = config.baselines;
  geom.validate();
  const int n = geom.num_acquisitions();
  const SteeringMatrix steering = build_steering_matrix(geom, config.grid());

  std::ifstream in(input_file);
  if (!in) throw std::invalid_argument("cannot open input file: " + input_file);
  std::string header;
  if (!std::getline(in, header)) throw std::invalid_argument("input file is empty");
  {
    int cols = 1;
    for (char ch : header)
      if (ch == ',') ++cols;
    const int file_n = (cols - 1) / 2;
    if (cols != 1 + 2 * n)
      throw std::invalid_argument("input file has " + std::to_string(file_n) +
                                  " complex entries per pixel but the config names " +
                                  std::to_string(n) + " baselines");
  }

  struct Pixel {
    std::string id;
    Snapshot g;
  };
  std::vector<Pixel> pixels;
  std::string line;
  int record = 0;
  while (std::getline(in, line)) {
    ++record;
    line = cfg::trim(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (static_cast<int>(fields.size()) != 1 + 2 * n)
      throw std::invalid_argument("input record " + std::to_string(record) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(1 + 2 * n));
    Pixel p;
    p.id = fields[0];
    p.g = Snapshot(n);
    try {
      for (int i = 0; i < n; ++i)
        p.g[i] = Complex{std::stod(fields[static_cast<std::size_t>(1 + 2 * i)]),
                         std::stod(fields[static_cast<std::size_t>(2 + 2 * i)])};
    } catch (const std::exception&) {
      throw std::invalid_argument("input record " + std::to_string(record) +
                                  ": malformed numeric field");
    }
    pixels.push_back(std::move(p));
  }

  const auto rows = parallel_map<InvertRow>(
      static_cast<int>(pixels.size()), config.workers, [&](int i) {
        const auto& p = pixels[static_cast<std::size_t>(i)];
        const SblResult r = sbl_solve(p.g, steering, config.solver, config.max_scatterers);
        return InvertRow{p.id, r.scatterers, r.state.iteration, r.converged};
      });

  InvertOutcome outcome;
  outcome.rows = rows;
  if (!config.out_dir.empty()) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    outcome.out_dir = dir;
    ExperimentConfig echo = config;
    echo.input_file = input_file;
    write_manifest(echo, dir / "manifest.txt");

    std::ofstream out(dir / "scatterers.csv", std::ios::binary);
    out << "pixel_id,elevation_m,amplitude_abs,amplitude_phase,n_iterations,converged\n";
    for (const auto& row : rows)
      for (const auto& sc : row.scatterers)
        out << row.pixel_id << ',' << fmt9(sc.elevation) << ',' << fmt9(std::abs(sc.amplitude))
            << ',' << fmt9(std::arg(sc.amplitude)) << ',' << row.n_iterations << ','
            << (row.converged ? 1 : 0) << "\n";
  }
  return outcome;
}

}  // namespace tomosbl

#endif
