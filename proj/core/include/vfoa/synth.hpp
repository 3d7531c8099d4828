#pragma once

// Generative sampler for the full model: VFOA chains from the transition table,
// latent gaze/reference states from the linear-Gaussian dynamics and head
// observations from the emission model. Deterministic given the seed.

#include <cstdint>
#include <string>
#include <vector>

#include <vfoa/dynamics.hpp>
#include <vfoa/scene.hpp>
#include <vfoa/transitions.hpp>

namespace vfoa {

/// position(f) = start + velocity (f - 1) + amplitude sin(2 pi (f - 1) / period).
struct TargetMotion {
  Position3D start;
  Position3D velocity{0.0, 0.0, 0.0};
  Position3D amplitude{0.0, 0.0, 0.0};
  double period = 0.0;  // frames; 0 disables the oscillation

  Position3D at(int frame) const;
};

struct SynthConfig {
  Scene scene;
  ModelParams params;
  TransitionTable table;
  int T = 1000;
  std::uint64_t seed = 0;
  /// Indexed by target id; entry 0 unused.
  std::vector<TargetMotion> motion;
  /// Untracked active targets cycle through their eligible non-zero labels,
  /// looking at each for this many frames.
  int scripted_dwell = 40;
  double dt = 0.04;  // seconds per frame, recorded in the output
  std::string name = "synthetic";

  /// Throws InvalidArgument on T < 1, wrong motion size, or invalid params.
  void validate() const;
};

struct PersonTruth {
  int person = 0;
  std::vector<Vec8> latent;  // unwrapped L_t
  std::vector<int> vfoa;
};

struct SynthResult {
  Recording recording;  // fully annotated
  std::vector<PersonTruth> truth;  // one per tracked person, scene.tracked() order
};

SynthResult sample_recording(const SynthConfig& cfg);

/// Labels only: frames x (N+M+1) matrix of V_t^k (column 0 and passive columns
/// zero). Tracked persons follow the table; untracked active targets the script.
std::vector<std::vector<int>> sample_vfoa_chains(const Scene& scene, const TransitionTable& table, int T,
                                                 std::uint64_t seed, int scripted_dwell = 40);

/// Label of an untracked active target at a frame under the round-robin script.
int scripted_vfoa(const Scene& scene, int target, int frame, int dwell);

/// Two persons and a robot (untracked, active) facing three wall paintings.
/// Every pair of targets is at least 40 degrees apart as seen by either person.
SynthConfig easy_scene_preset();

/// Generative parameters used by the preset. They keep the initialization's
/// alpha, beta, sigma_H and gamma_G, but use small velocity and reference noise
/// so that long sequences stay bounded.
ModelParams easy_preset_params();
TransitionTable easy_preset_table();

}  // namespace vfoa
