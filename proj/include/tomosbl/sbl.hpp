#ifndef TOMOSBL_SBL_HPP
#define TOMOSBL_SBL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tomosbl/model.hpp"

namespace tomosbl {

enum class NoiseDenominator { mackay, literal };

struct SblOptions {
  int max_iterations = 200;
  double tolerance = 1e-4;        // relative change of w
  double prune_threshold = 1e-3;  // relative to max w
  double noise_floor = 1e-12;
  std::optional<double> fixed_noise;  // skip the noise update when set
  bool trace = false;                 // record w per iteration
  NoiseDenominator noise_denominator = NoiseDenominator::mackay;

  void validate() const {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (tolerance <= 0.0) throw std::invalid_argument("tolerance must be > 0");
    if (prune_threshold <= 0.0 || prune_threshold >= 1.0)
      throw std::invalid_argument("prune_threshold must be in (0, 1)");
  }
};

/// Solver iterate. Hyperparameters w are the per-grid-position prior
/// variances; indices with w == 0 are pruned. mu and post_var are the
/// posterior mean and the diagonal of the posterior covariance.
struct SblState {
  Eigen::VectorXd w;
  double sigma2 = 0.0;
  Eigen::VectorXcd mu;
  Eigen::VectorXd post_var;
  std::vector<int> active;
  int iteration = 0;
  double cost = std::numeric_limits<double>::quiet_NaN();
};

struct ScattererEstimate {
  double elevation = 0.0;
  Complex amplitude{0.0, 0.0};
};

struct SblResult {
  std::vector<ScattererEstimate> scatterers;
  SblState state;
  bool converged = false;
  std::vector<Eigen::VectorXd> trace;  // w snapshots, [0] = initialization
};

namespace detail {

constexpr double kQMin = 1e-10;
constexpr double kDenomMin = 1e-6;

inline std::vector<int> active_indices(const Eigen::VectorXd& w) {
  std::vector<int> idx;
  for (int i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) idx.push_back(i);
  return idx;
}

/// Cholesky of C_gg = sigma2 I + R_a diag(w_a) R_a^H over the active columns.
inline Eigen::LLT<Eigen::MatrixXcd> measurement_cov_llt(const Eigen::MatrixXcd& steering,
                                                        const Eigen::VectorXd& w,
                                                        double sigma2,
                                                        const std::vector<int>& act) {
  const int n = static_cast<int>(steering.rows());
  Eigen::MatrixXcd cgg = sigma2 * Eigen::MatrixXcd::Identity(n, n);
  for (int i : act) {
    cgg.noalias() += w[i] * steering.col(i) * steering.col(i).adjoint();
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(cgg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("measurement covariance numerically singular; increase noise_floor");
  return llt;
}

}  // namespace detail

/// Tikhonov MAP inner step: posterior mean and variance of gamma given
/// prior variances w and noise variance sigma2. Pruned entries (w == 0)
/// return zero.
inline std::pair<Eigen::VectorXcd, Eigen::VectorXd> posterior_moments(
    const Snapshot& g, const Eigen::MatrixXcd& steering, const Eigen::VectorXd& w,
    double sigma2) {
  if (sigma2 <= 0.0) throw std::invalid_argument("sigma2 must be > 0");
  if (g.size() != steering.rows() || w.size() != steering.cols())
    throw std::invalid_argument("posterior_moments: dimension mismatch");
  const int l = static_cast<int>(steering.cols());
  Eigen::VectorXcd mu = Eigen::VectorXcd::Zero(l);
  Eigen::VectorXd post_var = Eigen::VectorXd::Zero(l);
  const std::vector<int> act = detail::active_indices(w);
  if (act.empty()) return {mu, post_var};

  const auto llt = detail::measurement_cov_llt(steering, w, sigma2, act);
  const Eigen::VectorXcd y = llt.solve(g);
  for (int i : act) {
    // mu_i = w_i r_i^H C^-1 g;  Sigma_ii = w_i - w_i^2 r_i^H C^-1 r_i
    mu[i] = w[i] * steering.col(i).dot(y);
    const double u = std::real(steering.col(i).dot(llt.solve(steering.col(i))));
    post_var[i] = std::clamp(w[i] - w[i] * w[i] * u, 0.0, w[i]);
  }
  if (!mu.allFinite() || !post_var.allFinite())
    throw std::runtime_error("posterior moments not finite; increase noise_floor");
  return {mu, post_var};
}

/// Negative log evidence: ln(pi^N det C_gg) + g^H C_gg^-1 g.
inline double evidence_cost(const Snapshot& g, const Eigen::MatrixXcd& steering,
                            const Eigen::VectorXd& w, double sigma2) {
  if (sigma2 <= 0.0) throw std::invalid_argument("sigma2 must be > 0");
  const int n = static_cast<int>(g.size());
  const std::vector<int> act = detail::active_indices(w);
  const auto llt = detail::measurement_cov_llt(steering, w, sigma2, act);
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(std::real(llt.matrixLLT()(i, i)));
  const double quad = std::real(g.dot(llt.solve(g)));
  const double cost = n * std::log(std::numbers::pi) + logdet + quad;
  if (!std::isfinite(cost))
    throw std::runtime_error("evidence cost not finite; increase noise_floor");
  return cost;
}

/// MacKay fixed-point hyperparameter update:
/// w_i' = |mu_i|^2 / q_i,  q_i = 1 - post_var_i / w_i  (clamped).
inline Eigen::VectorXd mackay_update_w(const Eigen::VectorXcd& mu,
                                       const Eigen::VectorXd& post_var,
                                       const Eigen::VectorXd& w) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double q = std::clamp(1.0 - post_var[i] / w[i], detail::kQMin, 1.0);
    out[i] = std::norm(mu[i]) / q;
  }
  return out;
}

/// Noise variance update sigma2 = ||g - R mu||^2 / (N - sum q_i).
inline double update_noise(const Snapshot& g, const Eigen::MatrixXcd& steering,
                           const Eigen::VectorXcd& mu, const Eigen::VectorXd& post_var,
                           const Eigen::VectorXd& w, const SblOptions& options = {}) {
  if (options.fixed_noise) return *options.fixed_noise;
  const double n = static_cast<double>(g.size());
  double qsum = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double ratio = post_var[i] / w[i];
    qsum += options.noise_denominator == NoiseDenominator::mackay ? 1.0 - ratio : ratio;
  }
  const double denom = std::max(n - qsum, detail::kDenomMin);
  const double rss = (g - steering * mu).squaredNorm();
  return std::max(options.noise_floor, rss / denom);
}

/// Deactivate indices with w below prune_threshold * max(w). The argmax
/// is never pruned. Pruned indices get w = mu = post_var = 0.
inline void prune(SblState& state, const SblOptions& options) {
  const int l = static_cast<int>(state.w.size());
  int argmax = 0;
  const double wmax = state.w.maxCoeff(&argmax);
  if (wmax <= 0.0) {
    state.active = detail::active_indices(state.w);
    return;
  }
  const double cut = options.prune_threshold * wmax;
  for (int i = 0; i < l; ++i) {
    if (i != argmax && state.w[i] < cut) {
      state.w[i] = 0.0;
      state.mu[i] = Complex{0.0, 0.0};
      state.post_var[i] = 0.0;
    }
  }
  state.active = detail::active_indices(state.w);
}

/// Peak picking over w: local maxima, a plateau counts once (lowest
/// elevation), the max_scatterers largest kept. Amplitudes re-estimated
/// by unregularized least squares on the selected columns.
inline std::vector<ScattererEstimate> extract_scatterers(const SblState& state,
                                                         const ElevationGrid& grid,
                                                         const Eigen::MatrixXcd& steering,
                                                         const Snapshot& g,
                                                         int max_scatterers) {
  const Eigen::VectorXd& w = state.w;
  const int l = static_cast<int>(w.size());
  std::vector<int> peaks;
  int i = 0;
  while (i < l) {
    int j = i;
    while (j + 1 < l && w[j + 1] == w[i]) ++j;  // plateau run [i, j]
    const double left = i > 0 ? w[i - 1] : -1.0;
    const double right = j + 1 < l ? w[j + 1] : -1.0;
    if (w[i] > 0.0 && w[i] >= left && w[i] >= right) peaks.push_back(i);
    i = j + 1;
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](int a, int b) { return w[a] > w[b]; });
  if (static_cast<int>(peaks.size()) > max_scatterers) peaks.resize(max_scatterers);
  std::sort(peaks.begin(), peaks.end());

  while (!peaks.empty()) {
    Eigen::MatrixXcd cols(steering.rows(), peaks.size());
    for (std::size_t k = 0; k < peaks.size(); ++k) cols.col(k) = steering.col(peaks[k]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(cols);
    if (qr.rank() == static_cast<Eigen::Index>(peaks.size())) {
      const Eigen::VectorXcd amps = qr.solve(g);
      std::vector<ScattererEstimate> out;
      for (std::size_t k = 0; k < peaks.size(); ++k)
        out.push_back({grid.position(peaks[k]), amps[static_cast<Eigen::Index>(k)]});
      return out;
    }
    // rank deficient: drop the weakest peak and retry
    auto weakest = std::min_element(peaks.begin(), peaks.end(),
                                    [&](int a, int b) { return w[a] < w[b]; });
    peaks.erase(weakest);
  }
  return {};
}

/// Full evidence-maximization loop: Tikhonov MAP inner step, MacKay
/// hyperparameter and noise updates, pruning, until the relative change
/// of w drops below tolerance.
inline SblResult sbl_solve(const Snapshot& g, const SteeringMatrix& steering,
                           const SblOptions& options = {}, int max_scatterers = 2) {
  options.validate();
  const Eigen::MatrixXcd& r = steering.entries;
  if (g.size() != r.rows()) throw std::invalid_argument("sbl_solve: dimension mismatch");
  const int n = static_cast<int>(r.rows());
  const int l = static_cast<int>(r.cols());

  SblResult result;
  SblState& state = result.state;
  const double mean_power = g.squaredNorm() / n;
  state.w = Eigen::VectorXd::Constant(l, mean_power / l);
  state.sigma2 = options.fixed_noise
                     ? *options.fixed_noise
                     : std::max(0.01 * mean_power, options.noise_floor);
  state.mu = Eigen::VectorXcd::Zero(l);
  state.post_var = Eigen::VectorXd::Zero(l);
  state.active = detail::active_indices(state.w);
  if (options.trace) result.trace.push_back(state.w);

  if (mean_power == 0.0) {  // zero snapshot: nothing to recover
    result.converged = true;
    return result;
  }

  double prev_cost = std::numeric_limits<double>::infinity();
  for (state.iteration = 1; state.iteration <= options.max_iterations; ++state.iteration) {
    const Eigen::VectorXd w_old = state.w;
    const std::vector<int> active_old = state.active;

    std::tie(state.mu, state.post_var) = posterior_moments(g, r, state.w, state.sigma2);
    state.w = mackay_update_w(state.mu, state.post_var, w_old);
    state.sigma2 = update_noise(g, r, state.mu, state.post_var, w_old, options);
    prune(state, options);
    state.cost = evidence_cost(g, r, state.w, state.sigma2);
    if (options.trace) result.trace.push_back(state.w);

    double max_rel = 0.0;
    for (int i : state.active)
      if (w_old[i] > 0.0)
        max_rel = std::max(max_rel, std::abs(state.w[i] - w_old[i]) / w_old[i]);
    const bool same_support = state.active == active_old;
    if (max_rel < options.tolerance ||
        (same_support && std::abs(state.cost - prev_cost) < 1e-8)) {
      result.converged = true;
      break;
    }
    prev_cost = state.cost;
  }

  result.scatterers = extract_scatterers(state, steering.grid, r, g, max_scatterers);
  // drop zero-amplitude picks from degenerate inputs
  std::erase_if(result.scatterers,
                [](const ScattererEstimate& s) { return std::abs(s.amplitude) == 0.0; });
  return result;
}

}  // namespace tomosbl

#endif
