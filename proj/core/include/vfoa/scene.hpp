#pragma once

#include <optional>
#include <string>
#include <vector>

#include <vfoa/geometry.hpp>

namespace vfoa {

enum class TargetKind { Active, Passive };

struct Target {
  int id = 0;
  TargetKind kind = TargetKind::Passive;
  /// Only persons whose gaze and VFOA are inferred. Untracked active targets
  /// (a robot, for instance) supply their VFOA or gaze directly.
  bool tracked = false;
  std::string name;

  bool active() const { return kind == TargetKind::Active; }
};

/// Targets 1..N are active, N+1..N+M passive; label 0 means "no target".
class Scene {
 public:
  Scene() = default;
  /// Validates the target list (ids exactly 1..N+M, actives first, at least one
  /// tracked person, tracked implies active). Targets may be given in any order.
  explicit Scene(std::vector<Target> targets);

  int n_active() const { return n_active_; }
  int m_passive() const { return m_passive_; }
  int n_targets() const { return n_active_ + m_passive_; }
  /// Number of VFOA labels including 0.
  int n_labels() const { return n_targets() + 1; }

  const std::vector<Target>& targets() const { return targets_; }
  const Target& target(int id) const;
  bool is_active(int id) const { return id >= 1 && id <= n_active_; }
  bool is_passive(int id) const { return id > n_active_ && id <= n_targets(); }
  bool is_tracked(int id) const;

  /// Ids of tracked persons, ascending.
  const std::vector<int>& tracked() const { return tracked_; }
  /// Ids of active targets that are not tracked, ascending.
  const std::vector<int>& untracked_active() const { return untracked_active_; }

  bool operator==(const Scene& other) const;

 private:
  std::vector<Target> targets_;  // sorted by id
  std::vector<int> tracked_;
  std::vector<int> untracked_active_;
  int n_active_ = 0;
  int m_passive_ = 0;
};

/// One frame of observations. Per-target vectors are indexed by target id
/// (size N+M+1, entry 0 unused).
struct FrameObservation {
  int frame = 0;
  std::vector<std::optional<Position3D>> position;
  /// Head orientation for tracked persons; known gaze for untracked active targets.
  std::vector<std::optional<Direction>> head;
  /// VFOA annotation for tracked persons; known VFOA stream for untracked active targets.
  std::vector<std::optional<int>> vfoa;

  static FrameObservation empty(const Scene& scene, int frame);
};

struct Recording {
  Scene scene;
  std::vector<FrameObservation> frames;
  /// Seconds per frame. Metadata only: dynamics run in frame units.
  double dt = 0.04;
  std::string name;

  int n_frames() const { return static_cast<int>(frames.size()); }
};

using RecordingSet = std::vector<Recording>;

/// {0, 1, ..., N+M} without `person`, ascending. `person` must be active.
std::vector<int> eligible_vfoa_labels(const Scene& scene, int person);

/// Index of `label` inside eligible_vfoa_labels(scene, person).
inline int label_index(int person, int label) { return label < person ? label : label - 1; }
inline int index_label(int person, int index) { return index < person ? index : index + 1; }

struct Diagnostic {
  std::string code;  // e.g. "missing-position", "self-VFOA"
  int frame = 0;     // 0 when not frame-specific
  int target = 0;    // 0 when not target-specific
  std::string message;
};

/// Every violation found in the recording; empty iff valid.
std::vector<Diagnostic> validate_recording(const Recording& rec);

/// True when every tracked person carries a VFOA annotation at every frame.
bool fully_annotated(const Recording& rec);

/// Throws InvalidArgument listing the diagnostics when the recording is invalid.
void require_valid(const Recording& rec);

}  // namespace vfoa
