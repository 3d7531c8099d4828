#pragma once

// Linear-Gaussian pieces of the gaze model. Per person the latent state is
// L = [G; Gdot; R; Rdot] (gaze, gaze velocity, head reference, reference
// velocity; degrees and degrees/frame). The observed head orientation is
// H = alpha G + (I - alpha) R + noise.

#include <optional>

#include <vfoa/geometry.hpp>
#include <vfoa/scene.hpp>

namespace vfoa {

/// Eigenvalue floor applied to every covariance that is re-estimated or collapsed.
inline constexpr double kCovFloor = 1e-9;

struct ModelParams {
  Vec2 alpha{0.5, 0.5};  // diagonal of the gaze/reference mixing matrix
  Vec2 beta{0.5, 0.5};   // diagonal of the gaze-to-target pull
  Mat2 gamma_G = 5.0 * Mat2::Identity();
  Mat2 gamma_Gdot = 5.0 * Mat2::Identity();
  Mat2 gamma_R = 0.5 * Mat2::Identity();
  Mat2 gamma_Rdot = 0.5 * Mat2::Identity();
  Mat2 sigma_H = 15.0 * Mat2::Identity();

  /// The default EM starting point: alpha = beta = diag(0.5, 0.5), sigma_H = 15 I,
  /// gamma_G = gamma_Gdot = 5 I, gamma_R = gamma_Rdot = 0.5 I.
  static ModelParams standard_init() { return {}; }

  /// Block-diagonal 8x8 process noise.
  Mat8 gamma_L() const;

  /// Throws InvalidArgument when a covariance is not SPD or a mixing entry is outside (0, 1).
  void validate() const;
  /// Gaze should vary much more than the head reference: Tr(gamma_G) > Tr(gamma_R).
  bool gaze_dominates_reference() const { return gamma_G.trace() > gamma_R.trace(); }
};

/// 2x8 emission matrix: H = C L.
Mat28 emission_matrix(const Vec2& alpha);

struct TransitionSystem {
  Mat8 A;
  Vec8 b;
};

/// Dynamics for person i when looking at label j. `target_dir` is the (pan, tilt)
/// direction from i to j; it must be set iff j != 0.
TransitionSystem transition_system(int j, const Vec2& beta, const std::optional<Vec2>& target_dir, double dt = 1.0);

/// Same, with the person-to-target direction computed from `positions` (indexed by
/// target id). The target pan is unwrapped to lie within 180 degrees of
/// `reference_pan` so that the pull never crosses the +-180 seam.
TransitionSystem transition_system(const Scene& scene, int i, int j, const Vec2& beta,
                                   const std::vector<std::optional<Position3D>>& positions, double dt = 1.0,
                                   double reference_pan = 0.0);

/// Block-diagonal assembly of the four 2x2 blocks; each block must be SPD.
Mat8 process_noise(const Mat2& gamma_G, const Mat2& gamma_Gdot, const Mat2& gamma_R, const Mat2& gamma_Rdot);

/// Bivariate normal log-density of the wrapped residual x - mean. Throws
/// NumericalError when cov is not SPD or its condition number exceeds 1e12.
double gaussian_logpdf(const Vec2& x, const Vec2& mean, const Mat2& cov);

/// log N(H; C(A mu + b), C (A P A' + Gamma_L) C' + Sigma_H): the observation
/// likelihood with the previous and current latent states integrated out.
double predictive_obs_log_likelihood(const Vec8& mu_prev, const Mat8& cov_prev, const Mat8& A, const Vec8& b,
                                     const Mat28& C, const Mat8& gamma_L, const Mat2& sigma_H, const Vec2& H);

/// (M + M') / 2.
template <typename M>
M symmetrized(const M& m) {
  return (0.5 * (m + m.transpose())).eval();
}

/// Symmetrizes and raises every eigenvalue to at least `floor`. The matrix is
/// returned unchanged (after symmetrization) when it already satisfies the floor.
Mat2 floor_eigenvalues(const Mat2& m, double floor = kCovFloor);
Mat8 floor_eigenvalues(const Mat8& m, double floor = kCovFloor);

}  // namespace vfoa
