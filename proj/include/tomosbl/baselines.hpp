#ifndef TOMOSBL_BASELINES_HPP
#define TOMOSBL_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tomosbl/model.hpp"

namespace tomosbl {

/// K independent realizations of the same pixel, one look per column.
struct LookStack {
  Eigen::MatrixXcd looks;  // N x K

  int num_looks() const { return static_cast<int>(looks.cols()); }

  void validate() const {
    if (looks.cols() < 2) throw std::invalid_argument("look stack needs K >= 2");
  }
};

/// Gaussian kernel; bandwidth either numeric or the median heuristic.
struct KernelSpec {
  double bandwidth = 0.0;  // ignored when use_median
  bool use_median = true;

  void validate() const {
    if (!use_median && bandwidth <= 0.0)
      throw std::invalid_argument("kernel bandwidth must be > 0");
  }
};

/// C = (1/K) sum_k g_k g_k^H.
inline Eigen::MatrixXcd sample_covariance(const LookStack& stack) {
  stack.validate();
  const double k = static_cast<double>(stack.num_looks());
  return (stack.looks * stack.looks.adjoint()) / k;
}

namespace detail {

/// Entrywise unit-modulus projection, then global phase fixed so the
/// first entry is real positive.
inline Eigen::VectorXcd unit_modulus(const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    out[i] = a < 1e-12 ? Complex{1.0, 0.0} : v[i] / a;
  }
  const Complex first = out[0];
  out *= std::conj(first) / std::abs(first);
  return out;
}

/// Squared global-phase-invariant distance between complex vectors:
/// min_phi || a - e^{j phi} b ||^2 = ||a||^2 + ||b||^2 - 2 |a^H b|.
inline double phase_invariant_dist2(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::max(0.0, a.squaredNorm() + b.squaredNorm() - 2.0 * std::abs(a.dot(b)));
}

inline Eigen::MatrixXd pairwise_dist2(const Eigen::MatrixXcd& looks) {
  const int k = static_cast<int>(looks.cols());
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      d2(a, b) = d2(b, a) = phase_invariant_dist2(looks.col(a), looks.col(b));
  return d2;
}

inline double median_bandwidth(const Eigen::MatrixXd& d2) {
  std::vector<double> d;
  for (int a = 0; a < d2.rows(); ++a)
    for (int b = a + 1; b < d2.cols(); ++b) d.push_back(std::sqrt(d2(a, b)));
  if (d.empty()) return 0.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

}  // namespace detail

/// Eq-2/3 estimator: dominant eigenvectors of the sample covariance,
/// projected entrywise to unit modulus.
inline std::vector<Eigen::VectorXcd> pca_estimate(const Eigen::MatrixXcd& cov, int num) {
  if (num < 0 || num > cov.rows()) throw std::invalid_argument("pca_estimate: bad num");
  if (num == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pca_estimate: eigensolver failed");
  std::vector<Eigen::VectorXcd> out;
  const int n = static_cast<int>(cov.rows());
  for (int i = 0; i < num; ++i)  // eigenvalues ascending; take from the top
    out.push_back(detail::unit_modulus(eig.eigenvectors().col(n - 1 - i)));
  return out;
}

struct KpcaResult {
  std::vector<Eigen::VectorXcd> vectors;
  std::vector<bool> preimage_converged;  // per component
};

/// Kernel-PCA steering estimator. Builds the Gaussian Gram matrix on the
/// global-phase-invariant look distances, double-centers it, and maps each
/// dominant kernel component back to input space with a fixed-point
/// phase-aligned weighted-mean pre-image. Between components the looks are
/// phase-aligned to the previous pre-image and mean-centered, which removes
/// the already-explained coherent part without an orthogonality constraint.
inline KpcaResult kpca_estimate(const LookStack& stack, const KernelSpec& kernel, int num) {
  stack.validate();
  kernel.validate();
  if (num < 0) throw std::invalid_argument("kpca_estimate: bad num");
  KpcaResult result;
  if (num == 0) return result;
  if (stack.num_looks() < num + 1)
    throw std::invalid_argument("kpca_estimate: need K >= num + 1 looks");

  const int k = stack.num_looks();
  Eigen::MatrixXcd work = stack.looks;

  for (int comp = 0; comp < num; ++comp) {
    const Eigen::MatrixXd d2 = detail::pairwise_dist2(work);
    const double h = kernel.use_median ? detail::median_bandwidth(d2) : kernel.bandwidth;
    if (h < 1e-10) {
      // all looks coincide up to phase: the data point is its own pre-image
      result.vectors.push_back(detail::unit_modulus(work.col(0)));
      result.preimage_converged.push_back(true);
      continue;
    }
    const double two_h2 = 2.0 * h * h;
    const Eigen::MatrixXd gram = (-d2 / two_h2).array().exp();
    const Eigen::MatrixXd centering =
        Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / k);
    const Eigen::MatrixXd centered = centering * gram * centering;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered);
    if (eig.info() != Eigen::Success) throw std::runtime_error("kpca_estimate: eigensolver failed");
    const Eigen::VectorXd loading = eig.eigenvectors().col(k - 1).cwiseAbs();

    int init = 0;
    loading.maxCoeff(&init);
    Eigen::VectorXcd z = work.col(init);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXcd znew = Eigen::VectorXcd::Zero(z.size());
      double wsum = 0.0;
      for (int c = 0; c < k; ++c) {
        const double kz =
            std::exp(-detail::phase_invariant_dist2(z, work.col(c)) / two_h2);
        const double wgt = loading[c] * kz;
        const Complex cross = z.dot(work.col(c));  // z^H g_c
        const Complex rot = std::abs(cross) < 1e-300
                                ? Complex{1.0, 0.0}
                                : std::conj(cross) / std::abs(cross);
        znew.noalias() += wgt * rot * work.col(c);
        wsum += wgt;
      }
      if (wsum <= 1e-300) {
        // degenerate weights: fall back to the loading-weighted mean of looks
        z = Eigen::VectorXcd::Zero(z.size());
        for (int c = 0; c < k; ++c) z += loading[c] * work.col(c);
        break;
      }
      znew /= wsum;
      const double step = (znew - z).norm();
      z = znew;
      if (step < 1e-8 * std::max(1.0, z.norm())) {
        converged = true;
        break;
      }
    }
    result.vectors.push_back(detail::unit_modulus(z));
    result.preimage_converged.push_back(converged);

    // next component: align looks to this pre-image, remove the coherent mean
    Eigen::MatrixXcd aligned(work.rows(), k);
    for (int c = 0; c < k; ++c) {
      const Complex cross = z.dot(work.col(c));
      const Complex rot = std::abs(cross) < 1e-300 ? Complex{1.0, 0.0}
                                                   : std::conj(cross) / std::abs(cross);
      aligned.col(c) = rot * work.col(c);
    }
    const Eigen::VectorXcd mean = aligned.rowwise().mean();
    work = aligned.colwise() - mean;
  }
  return result;
}

}  // namespace tomosbl

#endif
