#pragma once

// File formats. A recording is a scene JSON file plus a CSV with one row per
// (frame, target). Numbers are written in shortest round-trip form, so
// load(save(x)) reproduces every double exactly. Lines starting with '#' in any
// CSV are comments.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include <vfoa/dynamics.hpp>
#include <vfoa/scene.hpp>
#include <vfoa/synth.hpp>
#include <vfoa/tracker.hpp>
#include <vfoa/transitions.hpp>

namespace vfoa {

inline constexpr std::string_view kSceneFormat = "vfoa-skf/1";
inline constexpr std::string_view kRecordingHeader = "frame,target_id,x,y,z,pan,tilt,vfoa";

struct CameraModel {
  double focal = 0.0;  // pixels
  Vec2 principal = Vec2::Zero();
  double face_width = 0.18;  // meters

  void validate() const;
  bool operator==(const CameraModel&) const = default;
};

/// world = rotation * camera + translation.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Position3D to_world(const Position3D& camera_point) const;
  bool operator==(const CameraPose&) const = default;
};

struct SceneFile {
  Scene scene;
  double dt = 0.04;
  std::optional<CameraModel> camera;
  CameraPose camera_to_world;

  bool operator==(const SceneFile&) const = default;
};

std::string scene_to_json(const SceneFile& sf);
/// Throws DataError naming the offending field.
SceneFile scene_from_json(std::string_view text);
SceneFile load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const SceneFile& sf);

/// CSV body for `rec`; `comment` (if non-empty) becomes a leading '#' line.
std::string recording_to_csv(const Recording& rec, std::string_view comment = {});
/// Parses and validates; every problem found is reported with its line number.
Recording recording_from_csv(std::string_view text, const SceneFile& sf, std::string name = {});
Recording load_recording(const std::filesystem::path& scene_path, const std::filesystem::path& csv_path);
void save_recording(const std::filesystem::path& scene_path, const std::filesystem::path& csv_path,
                    const Recording& rec, std::string_view comment = {});

std::string params_to_json(const ModelParams& p);
ModelParams params_from_json(std::string_view text);
ModelParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const ModelParams& p);

std::string table_to_json(const TransitionTable& t);
TransitionTable table_from_json(std::string_view text);
TransitionTable load_table(const std::filesystem::path& path);
void save_table(const std::filesystem::path& path, const TransitionTable& t);

/// frame,person_id,vfoa_label,gaze_pan,gaze_tilt,w0..wK (one weight column per
/// label; empty at the person's own id).
std::string track_to_csv(const TrackResult& res, const Scene& scene, std::string_view comment = {});

struct TrackTable {
  std::vector<int> persons;
  std::vector<std::vector<int>> vfoa;        // [person][frame]
  std::vector<std::vector<Direction>> gaze;  // [person][frame]
  std::vector<std::vector<std::vector<double>>> weights;  // [person][frame][label], 0 at own id
};
TrackTable track_from_csv(std::string_view text);

/// frame,person_id,vfoa_true,gaze_pan_true,gaze_tilt_true,ref_pan_true,ref_tilt_true
/// (pans wrapped to (-180, 180]).
std::string ground_truth_to_csv(const std::vector<PersonTruth>& truth, std::string_view comment = {});
std::vector<PersonTruth> ground_truth_from_csv(std::string_view text);

/// Head direction assigned to the five coarse orientation classes.
Direction coarse_orientation_to_direction(std::string_view label);

struct BoundingBox {
  double u = 0.0;  // left, pixels
  double v = 0.0;  // top, pixels
  double width = 0.0;
  double height = 0.0;
};

/// Pinhole back-projection of the box center at depth focal * face_width / width.
Position3D bbox_to_position(const BoundingBox& box, const CameraModel& cam);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace vfoa
