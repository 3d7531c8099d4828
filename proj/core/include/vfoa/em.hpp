#pragma once

// Maximum-likelihood estimation of (alpha, beta, gamma_L, sigma_H) from
// VFOA-annotated recordings. With the labels known the model of every person is
// a time-varying linear-Gaussian system, so the E-step is a Kalman/RTS smoother
// and the M-step has closed forms (covariances) or 2x2 linear solves (alpha, beta).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <vfoa/dynamics.hpp>
#include <vfoa/scene.hpp>

namespace vfoa {

/// Everything the E- and M-steps need from one (recording, person) pair. Angles
/// are unwrapped: consecutive head pans differ by at most 180 degrees and each
/// target pan lies within 180 degrees of the head pan of the same frame.
struct EmSequence {
  std::vector<Vec2> head;
  std::vector<int> vfoa;
  /// Direction to the annotated target; empty when vfoa is 0.
  std::vector<std::optional<Vec2>> target;
  double dt = 1.0;

  int n_frames() const { return static_cast<int>(head.size()); }
};

/// Requires the person to be annotated and positioned in every frame.
EmSequence make_sequence(const Recording& rec, int person);
/// One sequence per (recording, tracked person).
std::vector<EmSequence> make_sequences(const RecordingSet& data);

struct SmootherInternals {
  std::vector<Vec8> pred_mean;  // m_{t,t-1}
  std::vector<Mat8> pred_cov;   // P_{t,t-1}
  std::vector<Eigen::Matrix<double, 8, 2>> gain;
  std::vector<Vec8> filt_mean;
  std::vector<Mat8> filt_cov;
  std::vector<Mat8> smoother_gain;  // J_t, t < T
  std::vector<Vec8> smooth_mean;
  std::vector<Mat8> smooth_cov;
};

struct SmoothedMoments {
  std::vector<Vec8> mean;    // E[L_t]
  std::vector<Mat8> second;  // E[L_t L_t']
  std::vector<Mat8> cross;   // E[L_t L_{t-1}'], entry 0 unused
  /// Observed-data log-likelihood from the forward pass.
  double log_likelihood = 0.0;
};

/// Prior on the first latent state: mean [H_1; 0; H_1; 0], covariance kPriorVar I.
inline constexpr double kPriorVar = 100.0;

/// Exact smoothing under the label-determined linear-Gaussian model (no gaze
/// constraint). Throws NumericalError on a singular predicted covariance.
SmoothedMoments kalman_smoother(const EmSequence& seq, const ModelParams& params,
                                SmootherInternals* internals = nullptr);
SmoothedMoments kalman_smoother(const Recording& rec, int person, const ModelParams& params);

/// sigma_H maximizing the expected complete-data log-likelihood for fixed alpha.
Mat2 m_step_sigma_h(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments, const Vec2& alpha);
/// Block-diagonal gamma_L for fixed beta.
Mat8 m_step_gamma_l(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments, const Vec2& beta);

struct CovarianceUpdate {
  Mat8 gamma_L;
  Mat2 sigma_H;
};
CovarianceUpdate m_step_covariances(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments,
                                    const ModelParams& old);

struct MixingUpdate {
  Vec2 alpha;
  Vec2 beta;
  bool alpha_singular = false;  // previous alpha kept
  bool beta_singular = false;   // previous beta kept
};
inline constexpr double kMixingMin = 1e-3;
inline constexpr double kMixingMax = 1.0 - 1e-3;

/// Solves the two 2x2 stationarity systems for diag(alpha) and diag(beta) given
/// the new covariances. `old` supplies the fallback on singular systems.
MixingUpdate m_step_mixing(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments,
                           const Mat8& gamma_L, const Mat2& sigma_H, const ModelParams& old);

struct EmOptions {
  int max_iters = 50;
  double tol = 1e-6;
  int threads = 1;
};

struct EmResult {
  ModelParams params;
  /// Log-likelihood of the parameters entering each E-step.
  std::vector<double> loglik;
  int iterations = 0;  // M-steps performed
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Alternates smoothing over all sequences with the M-steps. Stops when the
/// relative log-likelihood improvement drops below opts.tol or after
/// opts.max_iters M-steps; the returned params are the last ones evaluated.
EmResult em_fit(std::span<const EmSequence> seqs, const ModelParams& init, const EmOptions& opts = {});
EmResult em_fit(const RecordingSet& data, const ModelParams& init, const EmOptions& opts = {});

}  // namespace vfoa
