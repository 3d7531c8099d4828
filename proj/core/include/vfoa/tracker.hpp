#pragma once

// Online joint VFOA and gaze tracking with a switching Kalman filter.
//
// Each tracked person i carries one Gaussian per eligible label j together with
// its weight c^{ij} = P(V_t^i = j | observations). A frame update runs one
// constrained Kalman step per (j, k) pair of current and previous labels,
// weighs the pairs by predictive likelihood, previous weight and transition
// prior, and collapses every j back to a single Gaussian by moment matching.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <vfoa/dynamics.hpp>
#include <vfoa/scene.hpp>
#include <vfoa/transitions.hpp>

namespace vfoa {

/// Maximum angular distance between gaze and head (eyeball range), degrees.
inline constexpr double kGazeHeadBound = 35.0;
/// Default acceptance radius when deriving a VFOA from a known gaze, degrees.
inline constexpr double kGeometricThreshold = 15.0;

struct TrackOptions {
  double gaze_head_bound = kGazeHeadBound;
  double geometric_threshold = kGeometricThreshold;
  double init_tol = 1e-6;
  int init_max_iter = 100;
};

struct KfStep {
  Vec8 mean;
  Mat8 cov;
  /// Predictive log-likelihood of the observation (before the update).
  double log_likelihood = 0.0;
  bool projected = false;
};

/// Moves `gaze` toward `head` so that their angular distance is at most `bound`.
/// The result is expressed on the same 360-degree branch as `head`.
Vec2 project_gaze(const Vec2& gaze, const Vec2& head, double bound = kGazeHeadBound);

/// Kalman predict (A, b, gamma_L) and update (C, sigma_H, wrapped innovation),
/// followed by projection of the gaze mean onto the disc of radius `bound`
/// around H. The covariance is not affected by the projection.
KfStep constrained_kf_step(const Vec8& mu_prev, const Mat8& cov_prev, const Mat8& A, const Vec8& b, const Mat28& C,
                           const Mat8& gamma_L, const Mat2& sigma_H, const Vec2& H, double bound = kGazeHeadBound);

struct GaussianMoments {
  Vec8 mean;
  Mat8 cov;
};

/// Single Gaussian with the mean and covariance of the weighted mixture.
GaussianMoments moment_match(std::span<const double> weights, std::span<const Vec8> means, std::span<const Mat8> covs);

struct PersonBelief {
  int person = 0;
  std::vector<int> labels;  // eligible labels, ascending
  std::vector<double> weight;
  std::vector<Vec8> mean;
  std::vector<Mat8> cov;
  /// Last head observation, pan unwrapped against the previous one.
  Vec2 last_head = Vec2::Zero();

  /// Weights scattered over all labels 0..N+M (zero at the person itself).
  std::vector<double> distribution(int n_labels) const;
};

struct TrackerState {
  Scene scene;
  std::vector<PersonBelief> beliefs;  // one per tracked person, in scene.tracked() order
  /// Previous-frame label distributions of untracked active targets, indexed by id.
  std::vector<std::vector<double>> known_prev;
  int frame = 0;
  /// Set when every (j, k) pair of some person had zero probability; the
  /// previous weights were kept.
  bool degenerate = false;
  int init_iterations = 0;
  bool init_converged = false;

  const PersonBelief& belief(int person) const;
};

/// One filtering step with a new frame.
TrackerState update(const TrackerState& state, const FrameObservation& obs, const ModelParams& params,
                    const TransitionTable& table, const TrackOptions& opts = {});

/// Seeds every belief with mean [H; 0; H; 0], identity covariance and uniform
/// weights, then repeats update() on the first frame until the weights move by
/// less than opts.init_tol (or opts.init_max_iter is reached).
TrackerState initialize(const Scene& scene, const FrameObservation& first, const ModelParams& params,
                        const TransitionTable& table, const TrackOptions& opts = {});

/// MAP label per tracked person; ties go to the smaller label.
std::vector<int> map_vfoa(const TrackerState& state);
int map_vfoa(const PersonBelief& belief);

/// Gaze block of the MAP hypothesis per tracked person.
std::vector<Direction> gaze_estimate(const TrackerState& state);
Direction gaze_estimate(const PersonBelief& belief);

/// Target whose direction from `person` is angularly closest to `gaze`, if within
/// `threshold_deg`; otherwise 0.
int vfoa_from_gaze_geometric(const Direction& gaze, const std::vector<std::optional<Position3D>>& positions, int person,
                             double threshold_deg = kGeometricThreshold);

/// The annotated label of active target k at this frame; for untracked targets
/// without one, the label derived from their known gaze.
std::optional<int> known_vfoa(const Scene& scene, const FrameObservation& obs, int k,
                              double threshold_deg = kGeometricThreshold);

struct PersonTrack {
  int person = 0;
  std::vector<int> labels;  // eligible labels, columns of `weights`
  std::vector<int> vfoa;
  std::vector<Direction> gaze;
  std::vector<std::vector<double>> weights;
};

struct TrackResult {
  std::vector<PersonTrack> persons;
  std::vector<int> degenerate_frames;
  int init_iterations = 0;
  bool init_converged = false;
};

using TrackObserver = std::function<void(const TrackerState&)>;

/// Initializes on frame 1 and updates through the last frame. The observer, if
/// any, sees the state after initialization and after every update.
TrackResult track(const Recording& rec, const ModelParams& params, const TransitionTable& table,
                  const TrackOptions& opts = {}, const TrackObserver& observer = {});

}  // namespace vfoa
