#include <vfoa/dataio.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace vfoa {

using nlohmann::json;

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

// ---- text helpers ----------------------------------------------------------

struct Line {
  int number;
  std::string_view text;
};

// Non-empty, non-comment lines with 1-based line numbers; '\r' stripped.
std::vector<Line> data_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.push_back({number, line});
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string comment_line(std::string_view comment) {
  if (comment.empty()) return {};
  return "# " + std::string(comment) + "\n";
}

[[noreturn]] void fail(const std::vector<std::string>& errors, std::string_view what) {
  std::string msg = std::string(what) + ": " + std::to_string(errors.size()) + " problem(s)";
  for (const auto& e : errors) msg += "\n  " + e;
  throw DataError(msg);
}

// ---- JSON helpers ----------------------------------------------------------

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

const json& field(const json& obj, const char* key, std::string_view ctx) {
  if (!obj.is_object()) throw DataError(std::string(ctx) + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string(ctx) + ": missing field \"" + key + "\"");
  return *it;
}

double number(const json& v, std::string_view ctx) {
  if (!v.is_number()) throw DataError(std::string(ctx) + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DataError(std::string(ctx) + ": not finite");
  return d;
}

Vec2 vec2_from(const json& v, std::string_view ctx) {
  if (!v.is_array() || v.size() != 2) throw DataError(std::string(ctx) + ": expected an array of 2 numbers");
  return {number(v[0], ctx), number(v[1], ctx)};
}

Mat2 mat2_from(const json& v, std::string_view ctx) {
  if (!v.is_array() || v.size() != 2) throw DataError(std::string(ctx) + ": expected a 2x2 array");
  Mat2 m;
  m.row(0) = vec2_from(v[0], ctx).transpose();
  m.row(1) = vec2_from(v[1], ctx).transpose();
  return m;
}

json to_json(const Vec2& v) { return json::array({v[0], v[1]}); }
json to_json(const Mat2& m) { return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})}); }

}  // namespace

// ---- camera ----------------------------------------------------------------

void CameraModel::validate() const {
  if (!(focal > 0.0) || !std::isfinite(focal)) throw InvalidArgument("CameraModel: focal must be positive");
  if (!(face_width > 0.0) || !std::isfinite(face_width)) {
    throw InvalidArgument("CameraModel: face width must be positive");
  }
  if (!principal.allFinite()) throw InvalidArgument("CameraModel: principal point must be finite");
}

Position3D CameraPose::to_world(const Position3D& p) const {
  const Eigen::Vector3d w = rotation * Eigen::Vector3d(p.x, p.y, p.z) + translation;
  return {w.x(), w.y(), w.z()};
}

Position3D bbox_to_position(const BoundingBox& box, const CameraModel& cam) {
  cam.validate();
  if (!(box.width > 0.0) || !(box.height >= 0.0) || !std::isfinite(box.width) || !std::isfinite(box.u) ||
      !std::isfinite(box.v) || !std::isfinite(box.height)) {
    throw InvalidArgument("bbox_to_position: degenerate bounding box");
  }
  const double z = cam.focal * cam.face_width / box.width;
  const double uc = box.u + 0.5 * box.width;
  const double vc = box.v + 0.5 * box.height;
  return {(uc - cam.principal[0]) * z / cam.focal, (vc - cam.principal[1]) * z / cam.focal, z};
}

Direction coarse_orientation_to_direction(std::string_view label) {
  if (label == "frontal-left") return Direction(-20.0, 0.0);
  if (label == "frontal-right") return Direction(20.0, 0.0);
  if (label == "profile-left") return Direction(-80.0, 0.0);
  if (label == "profile-right") return Direction(80.0, 0.0);
  if (label == "backwards") return Direction(180.0, 0.0);
  throw InvalidArgument("unknown coarse orientation label \"" + std::string(label) + "\"");
}

// ---- files -----------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw InvalidArgument("format_double: conversion failed");
  return std::string(buf, ptr);
}

// ---- scene -----------------------------------------------------------------

std::string scene_to_json(const SceneFile& sf) {
  json j;
  j["format"] = kSceneFormat;
  j["dt"] = sf.dt;
  json targets = json::array();
  for (const auto& t : sf.scene.targets()) {
    targets.push_back({{"id", t.id},
                       {"kind", t.active() ? "active" : "passive"},
                       {"tracked", t.tracked},
                       {"name", t.name}});
  }
  j["targets"] = targets;
  if (sf.camera) {
    j["camera"] = {{"focal", sf.camera->focal},
                   {"principal", to_json(sf.camera->principal)},
                   {"face_width", sf.camera->face_width}};
  }
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back(json::array({sf.camera_to_world.rotation(r, 0), sf.camera_to_world.rotation(r, 1),
                               sf.camera_to_world.rotation(r, 2)}));
  }
  const auto& t = sf.camera_to_world.translation;
  j["camera_to_world"] = {{"rotation", rot}, {"translation", json::array({t.x(), t.y(), t.z()})}};
  return j.dump(2) + "\n";
}

SceneFile scene_from_json(std::string_view text) {
  const json j = parse_json(text, "scene");
  const json& fmt = field(j, "format", "scene");
  if (!fmt.is_string() || fmt.get<std::string>() != kSceneFormat) {
    throw DataError("scene: field \"format\" must be \"" + std::string(kSceneFormat) + "\"");
  }
  SceneFile sf;
  sf.dt = number(field(j, "dt", "scene"), "scene.dt");
  if (!(sf.dt > 0.0)) throw DataError("scene.dt: must be positive");

  const json& targets = field(j, "targets", "scene");
  if (!targets.is_array()) throw DataError("scene.targets: expected an array");
  std::vector<Target> ts;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const std::string ctx = "scene.targets[" + std::to_string(n) + "]";
    const json& tj = targets[n];
    Target t;
    const json& id = field(tj, "id", ctx);
    if (!id.is_number_integer()) throw DataError(ctx + ".id: expected an integer");
    t.id = id.get<int>();
    const json& kind = field(tj, "kind", ctx);
    if (kind == "active") {
      t.kind = TargetKind::Active;
    } else if (kind == "passive") {
      t.kind = TargetKind::Passive;
    } else {
      throw DataError(ctx + ".kind: expected \"active\" or \"passive\"");
    }
    if (const auto it = tj.find("tracked"); it != tj.end()) {
      if (!it->is_boolean()) throw DataError(ctx + ".tracked: expected a boolean");
      t.tracked = it->get<bool>();
    }
    if (const auto it = tj.find("name"); it != tj.end()) {
      if (!it->is_string()) throw DataError(ctx + ".name: expected a string");
      t.name = it->get<std::string>();
    }
    ts.push_back(std::move(t));
  }
  try {
    sf.scene = Scene(std::move(ts));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("scene.targets: ") + e.what());
  }

  if (const auto it = j.find("camera"); it != j.end()) {
    CameraModel cam;
    cam.focal = number(field(*it, "focal", "scene.camera"), "scene.camera.focal");
    cam.principal = vec2_from(field(*it, "principal", "scene.camera"), "scene.camera.principal");
    if (const auto fw = it->find("face_width"); fw != it->end()) cam.face_width = number(*fw, "scene.camera.face_width");
    try {
      cam.validate();
    } catch (const InvalidArgument& e) {
      throw DataError(std::string("scene.camera: ") + e.what());
    }
    sf.camera = cam;
  }
  if (const auto it = j.find("camera_to_world"); it != j.end()) {
    if (const auto r = it->find("rotation"); r != it->end()) {
      if (!r->is_array() || r->size() != 3) throw DataError("scene.camera_to_world.rotation: expected 3x3 array");
      for (int row = 0; row < 3; ++row) {
        const json& rj = (*r)[idx(row)];
        if (!rj.is_array() || rj.size() != 3) throw DataError("scene.camera_to_world.rotation: expected 3x3 array");
        for (int c = 0; c < 3; ++c) {
          sf.camera_to_world.rotation(row, c) = number(rj[idx(c)], "scene.camera_to_world.rotation");
        }
      }
    }
    if (const auto t = it->find("translation"); t != it->end()) {
      if (!t->is_array() || t->size() != 3) throw DataError("scene.camera_to_world.translation: expected 3 numbers");
      for (int c = 0; c < 3; ++c) {
        sf.camera_to_world.translation[c] = number((*t)[idx(c)], "scene.camera_to_world.translation");
      }
    }
  }
  return sf;
}

SceneFile load_scene(const std::filesystem::path& path) {
  try {
    return scene_from_json(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_scene(const std::filesystem::path& path, const SceneFile& sf) { write_text_file(path, scene_to_json(sf)); }

// ---- recording -------------------------------------------------------------

std::string recording_to_csv(const Recording& rec, std::string_view comment) {
  std::string out = comment_line(comment);
  out += kRecordingHeader;
  out += '\n';
  for (const auto& obs : rec.frames) {
    for (int id = 1; id <= rec.scene.n_targets(); ++id) {
      out += std::to_string(obs.frame) + ',' + std::to_string(id) + ',';
      if (const auto& p = obs.position[idx(id)]) {
        out += format_double(p->x) + ',' + format_double(p->y) + ',' + format_double(p->z) + ',';
      } else {
        out += ",,,";
      }
      if (const auto& h = obs.head[idx(id)]) {
        out += format_double(h->pan()) + ',' + format_double(h->tilt()) + ',';
      } else {
        out += ",,";
      }
      if (const auto& v = obs.vfoa[idx(id)]) out += std::to_string(*v);
      out += '\n';
    }
  }
  return out;
}

Recording recording_from_csv(std::string_view text, const SceneFile& sf, std::string name) {
  const Scene& scene = sf.scene;
  const std::vector<Line> lines = data_lines(text);
  std::vector<std::string> errors;
  if (lines.empty() || lines.front().text != kRecordingHeader) {
    throw DataError("recording: line " + std::to_string(lines.empty() ? 1 : lines.front().number) +
                    ": expected header \"" + std::string(kRecordingHeader) + "\"");
  }

  std::map<int, FrameObservation> frames;
  std::map<std::pair<int, int>, int> row_line;  // (frame, target) -> line
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const Line& ln = lines[n];
    const std::string at = "line " + std::to_string(ln.number) + ": ";
    const auto cols = split_csv(ln.text);
    if (cols.size() != 8) {
      errors.push_back(at + "expected 8 fields, found " + std::to_string(cols.size()));
      continue;
    }
    const auto frame = parse_int(cols[0]);
    const auto id = parse_int(cols[1]);
    if (!frame || *frame < 1) {
      errors.push_back(at + "invalid frame index \"" + std::string(cols[0]) + "\"");
      continue;
    }
    if (!id || *id < 1 || *id > scene.n_targets()) {
      errors.push_back(at + "unknown target \"" + std::string(cols[1]) + "\"");
      continue;
    }
    if (!row_line.emplace(std::make_pair(*frame, *id), ln.number).second) {
      errors.push_back(at + "duplicate row for frame " + std::to_string(*frame) + ", target " + std::to_string(*id));
      continue;
    }
    auto [it, inserted] = frames.try_emplace(*frame, FrameObservation::empty(scene, *frame));
    FrameObservation& obs = it->second;

    const bool pos_empty = cols[2].empty() && cols[3].empty() && cols[4].empty();
    if (!pos_empty) {
      const auto x = parse_double(cols[2]);
      const auto y = parse_double(cols[3]);
      const auto z = parse_double(cols[4]);
      if (x && y && z) {
        obs.position[idx(*id)] = Position3D{*x, *y, *z};
      } else {
        errors.push_back(at + "invalid position");
      }
    }
    const bool dir_empty = cols[5].empty() && cols[6].empty();
    if (!dir_empty) {
      const auto pan = parse_double(cols[5]);
      const auto tilt = parse_double(cols[6]);
      if (pan && tilt && *tilt >= -90.0 && *tilt <= 90.0) {
        obs.head[idx(*id)] = Direction(*pan, *tilt);
      } else {
        errors.push_back(at + "invalid pan/tilt");
      }
    }
    if (!cols[7].empty()) {
      if (const auto v = parse_int(cols[7])) {
        obs.vfoa[idx(*id)] = *v;
      } else {
        errors.push_back(at + "invalid vfoa \"" + std::string(cols[7]) + "\"");
      }
    }
  }
  if (!errors.empty()) fail(errors, "recording");

  Recording rec;
  rec.scene = scene;
  rec.dt = sf.dt;
  rec.name = std::move(name);
  for (auto& [f, obs] : frames) rec.frames.push_back(std::move(obs));

  for (const auto& d : validate_recording(rec)) {
    std::string where;
    if (const auto it = row_line.find({d.frame, d.target}); it != row_line.end()) {
      where = "line " + std::to_string(it->second) + ": ";
    } else if (d.frame > 0) {
      where = "frame " + std::to_string(d.frame) + ": ";
    }
    errors.push_back(where + d.code + ": " + d.message);
  }
  if (!errors.empty()) fail(errors, "recording");
  return rec;
}

Recording load_recording(const std::filesystem::path& scene_path, const std::filesystem::path& csv_path) {
  const SceneFile sf = load_scene(scene_path);
  try {
    return recording_from_csv(read_text_file(csv_path), sf, csv_path.stem().string());
  } catch (const DataError& e) {
    throw DataError(csv_path.string() + ": " + e.what());
  }
}

void save_recording(const std::filesystem::path& scene_path, const std::filesystem::path& csv_path,
                    const Recording& rec, std::string_view comment) {
  SceneFile sf;
  sf.scene = rec.scene;
  sf.dt = rec.dt;
  save_scene(scene_path, sf);
  write_text_file(csv_path, recording_to_csv(rec, comment));
}

// ---- parameters ------------------------------------------------------------

std::string params_to_json(const ModelParams& p) {
  json j;
  j["alpha"] = to_json(p.alpha);
  j["beta"] = to_json(p.beta);
  j["gamma_G"] = to_json(p.gamma_G);
  j["gamma_Gdot"] = to_json(p.gamma_Gdot);
  j["gamma_R"] = to_json(p.gamma_R);
  j["gamma_Rdot"] = to_json(p.gamma_Rdot);
  j["sigma_H"] = to_json(p.sigma_H);
  return j.dump(2) + "\n";
}

ModelParams params_from_json(std::string_view text) {
  const json j = parse_json(text, "params");
  ModelParams p;
  p.alpha = vec2_from(field(j, "alpha", "params"), "params.alpha");
  p.beta = vec2_from(field(j, "beta", "params"), "params.beta");
  p.gamma_G = mat2_from(field(j, "gamma_G", "params"), "params.gamma_G");
  p.gamma_Gdot = mat2_from(field(j, "gamma_Gdot", "params"), "params.gamma_Gdot");
  p.gamma_R = mat2_from(field(j, "gamma_R", "params"), "params.gamma_R");
  p.gamma_Rdot = mat2_from(field(j, "gamma_Rdot", "params"), "params.gamma_Rdot");
  p.sigma_H = mat2_from(field(j, "sigma_H", "params"), "params.sigma_H");
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("params: ") + e.what());
  }
  return p;
}

ModelParams load_params(const std::filesystem::path& path) {
  try {
    return params_from_json(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_params(const std::filesystem::path& path, const ModelParams& p) { write_text_file(path, params_to_json(p)); }

std::string table_to_json(const TransitionTable& t) {
  json j = json::object();
  for (int n = 1; n <= TransitionTable::kSize; ++n) j["p" + std::to_string(n)] = t.p(n);
  return j.dump(2) + "\n";
}

TransitionTable table_from_json(std::string_view text) {
  const json j = parse_json(text, "table");
  std::array<double, TransitionTable::kSize> p{};
  for (int n = 1; n <= TransitionTable::kSize; ++n) {
    const std::string key = "p" + std::to_string(n);
    p[idx(n - 1)] = number(field(j, key.c_str(), "table"), "table." + key);
  }
  try {
    return TransitionTable(p);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("table: ") + e.what());
  }
}

TransitionTable load_table(const std::filesystem::path& path) {
  try {
    return table_from_json(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_table(const std::filesystem::path& path, const TransitionTable& t) { write_text_file(path, table_to_json(t)); }

// ---- tracks and ground truth -----------------------------------------------

std::string track_to_csv(const TrackResult& res, const Scene& scene, std::string_view comment) {
  std::string out = comment_line(comment);
  out += "frame,person_id,vfoa_label,gaze_pan,gaze_tilt";
  for (int l = 0; l < scene.n_labels(); ++l) out += ",w" + std::to_string(l);
  out += '\n';
  const std::size_t T = res.persons.empty() ? 0 : res.persons.front().vfoa.size();
  for (std::size_t t = 0; t < T; ++t) {
    for (const auto& pt : res.persons) {
      out += std::to_string(t + 1) + ',' + std::to_string(pt.person) + ',' + std::to_string(pt.vfoa[t]) + ',' +
             format_double(pt.gaze[t].pan()) + ',' + format_double(pt.gaze[t].tilt());
      std::vector<std::optional<double>> w(idx(scene.n_labels()));
      for (std::size_t a = 0; a < pt.labels.size(); ++a) w[idx(pt.labels[a])] = pt.weights[t][a];
      for (const auto& x : w) {
        out += ',';
        if (x) out += format_double(*x);
      }
      out += '\n';
    }
  }
  return out;
}

TrackTable track_from_csv(std::string_view text) {
  const std::vector<Line> lines = data_lines(text);
  if (lines.empty()) throw DataError("track: empty file");
  const auto header = split_csv(lines.front().text);
  static constexpr std::string_view kFixed[] = {"frame", "person_id", "vfoa_label", "gaze_pan", "gaze_tilt"};
  if (header.size() < 6 || !std::equal(std::begin(kFixed), std::end(kFixed), header.begin())) {
    throw DataError("track: line " + std::to_string(lines.front().number) + ": unexpected header");
  }
  const std::size_t n_labels = header.size() - 5;
  TrackTable tt;
  std::map<int, std::size_t> slot;
  std::vector<std::string> errors;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::string at = "line " + std::to_string(lines[n].number) + ": ";
    const auto cols = split_csv(lines[n].text);
    if (cols.size() != header.size()) {
      errors.push_back(at + "wrong number of fields");
      continue;
    }
    const auto person = parse_int(cols[1]);
    const auto label = parse_int(cols[2]);
    const auto pan = parse_double(cols[3]);
    const auto tilt = parse_double(cols[4]);
    if (!person || !label || !pan || !tilt || *tilt < -90.0 || *tilt > 90.0) {
      errors.push_back(at + "invalid person, label or gaze");
      continue;
    }
    auto [it, inserted] = slot.try_emplace(*person, tt.persons.size());
    if (inserted) {
      tt.persons.push_back(*person);
      tt.vfoa.emplace_back();
      tt.gaze.emplace_back();
      tt.weights.emplace_back();
    }
    const std::size_t p = it->second;
    tt.vfoa[p].push_back(*label);
    tt.gaze[p].emplace_back(*pan, *tilt);
    std::vector<double> w(n_labels, 0.0);
    for (std::size_t l = 0; l < n_labels; ++l) {
      if (cols[5 + l].empty()) continue;
      if (const auto x = parse_double(cols[5 + l])) {
        w[l] = *x;
      } else {
        errors.push_back(at + "invalid weight");
      }
    }
    tt.weights[p].push_back(std::move(w));
  }
  if (!errors.empty()) fail(errors, "track");
  return tt;
}

std::string ground_truth_to_csv(const std::vector<PersonTruth>& truth, std::string_view comment) {
  std::string out = comment_line(comment);
  out += "frame,person_id,vfoa_true,gaze_pan_true,gaze_tilt_true,ref_pan_true,ref_tilt_true\n";
  const std::size_t T = truth.empty() ? 0 : truth.front().latent.size();
  for (std::size_t t = 0; t < T; ++t) {
    for (const auto& pt : truth) {
      const Vec8& L = pt.latent[t];
      out += std::to_string(t + 1) + ',' + std::to_string(pt.person) + ',' + std::to_string(pt.vfoa[t]) + ',' +
             format_double(wrap_angle(L[kGaze])) + ',' + format_double(L[kGaze + 1]) + ',' +
             format_double(wrap_angle(L[kRef])) + ',' + format_double(L[kRef + 1]) + '\n';
    }
  }
  return out;
}

std::vector<PersonTruth> ground_truth_from_csv(std::string_view text) {
  const std::vector<Line> lines = data_lines(text);
  if (lines.empty() ||
      lines.front().text != "frame,person_id,vfoa_true,gaze_pan_true,gaze_tilt_true,ref_pan_true,ref_tilt_true") {
    throw DataError("ground truth: unexpected or missing header");
  }
  std::vector<PersonTruth> out;
  std::map<int, std::size_t> slot;
  std::vector<std::string> errors;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const auto cols = split_csv(lines[n].text);
    const std::string at = "line " + std::to_string(lines[n].number) + ": ";
    if (cols.size() != 7) {
      errors.push_back(at + "expected 7 fields");
      continue;
    }
    const auto person = parse_int(cols[1]);
    const auto label = parse_int(cols[2]);
    std::array<std::optional<double>, 4> v{parse_double(cols[3]), parse_double(cols[4]), parse_double(cols[5]),
                                           parse_double(cols[6])};
    if (!person || !label || !v[0] || !v[1] || !v[2] || !v[3]) {
      errors.push_back(at + "invalid field");
      continue;
    }
    auto [it, inserted] = slot.try_emplace(*person, out.size());
    if (inserted) {
      out.emplace_back();
      out.back().person = *person;
    }
    Vec8 L = Vec8::Zero();
    L[kGaze] = *v[0];
    L[kGaze + 1] = *v[1];
    L[kRef] = *v[2];
    L[kRef + 1] = *v[3];
    out[it->second].latent.push_back(L);
    out[it->second].vfoa.push_back(*label);
  }
  if (!errors.empty()) fail(errors, "ground truth");
  return out;
}

}  // namespace vfoa
