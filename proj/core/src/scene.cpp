#include <vfoa/scene.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vfoa {

Scene::Scene(std::vector<Target> targets) : targets_(std::move(targets)) {
  std::sort(targets_.begin(), targets_.end(),
            [](const Target& a, const Target& b) { return a.id < b.id; });
  for (std::size_t n = 0; n < targets_.size(); ++n) {
    if (targets_[n].id != static_cast<int>(n) + 1) {
      throw InvalidArgument("scene: target ids must be exactly 1..N+M without duplicates");
    }
  }
  bool passive_seen = false;
  for (const auto& t : targets_) {
    if (t.active()) {
      if (passive_seen) {
        throw InvalidArgument("scene: active target " + std::to_string(t.id) +
                              " follows a passive target; actives must take ids 1..N");
      }
      ++n_active_;
      (t.tracked ? tracked_ : untracked_active_).push_back(t.id);
    } else {
      passive_seen = true;
      ++m_passive_;
      if (t.tracked) {
        throw InvalidArgument("scene: passive target " + std::to_string(t.id) + " cannot be tracked");
      }
    }
  }
  if (tracked_.empty()) throw InvalidArgument("scene: at least one tracked person is required");
}

const Target& Scene::target(int id) const {
  if (id < 1 || id > n_targets()) throw InvalidArgument("scene: unknown target id " + std::to_string(id));
  return targets_[static_cast<std::size_t>(id - 1)];
}

bool Scene::is_tracked(int id) const { return is_active(id) && target(id).tracked; }

bool Scene::operator==(const Scene& other) const {
  if (targets_.size() != other.targets_.size()) return false;
  for (std::size_t n = 0; n < targets_.size(); ++n) {
    const auto& a = targets_[n];
    const auto& b = other.targets_[n];
    if (a.id != b.id || a.kind != b.kind || a.tracked != b.tracked || a.name != b.name) return false;
  }
  return true;
}

FrameObservation FrameObservation::empty(const Scene& scene, int frame) {
  FrameObservation obs;
  obs.frame = frame;
  const auto n = static_cast<std::size_t>(scene.n_labels());
  obs.position.resize(n);
  obs.head.resize(n);
  obs.vfoa.resize(n);
  return obs;
}

std::vector<int> eligible_vfoa_labels(const Scene& scene, int person) {
  if (!scene.is_active(person)) {
    throw InvalidArgument("eligible_vfoa_labels: " + std::to_string(person) + " is not an active target");
  }
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(scene.n_targets()));
  for (int j = 0; j <= scene.n_targets(); ++j) {
    if (j != person) labels.push_back(j);
  }
  return labels;
}

namespace {

std::string where(int frame, int target) {
  std::ostringstream os;
  os << "frame " << frame;
  if (target > 0) os << ", target " << target;
  return os.str();
}

}  // namespace

std::vector<Diagnostic> validate_recording(const Recording& rec) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string code, int frame, int target, std::string msg) {
    out.push_back({std::move(code), frame, target, where(frame, target) + ": " + std::move(msg)});
  };

  if (!(rec.dt > 0.0) || !std::isfinite(rec.dt)) {
    out.push_back({"dt", 0, 0, "dt must be positive and finite"});
  }
  if (rec.frames.empty()) {
    out.push_back({"empty", 0, 0, "recording has no frames"});
    return out;
  }

  const Scene& scene = rec.scene;
  const auto n_labels = static_cast<std::size_t>(scene.n_labels());
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    const auto& obs = rec.frames[f];
    const int t = static_cast<int>(f) + 1;
    if (obs.frame != t) {
      add("frame-index", t, 0, "expected frame index " + std::to_string(t) + ", found " + std::to_string(obs.frame));
    }
    if (obs.position.size() != n_labels || obs.head.size() != n_labels || obs.vfoa.size() != n_labels) {
      add("shape", t, 0, "per-target vectors do not match the scene size");
      continue;
    }
    for (int id = 1; id <= scene.n_targets(); ++id) {
      const auto k = static_cast<std::size_t>(id);
      if (!obs.position[k]) {
        add("missing-position", t, id, "missing target position");
      } else if (!obs.position[k]->finite()) {
        add("non-finite", t, id, "non-finite position");
      }
      if (scene.is_passive(id)) {
        if (obs.head[k] || obs.vfoa[k]) add("unexpected-field", t, id, "passive target carries orientation or VFOA");
        continue;
      }
      if (scene.is_tracked(id) && !obs.head[k]) {
        add("missing-head", t, id, "missing head orientation");
      }
      if (!scene.is_tracked(id) && !obs.head[k] && !obs.vfoa[k]) {
        add("missing-known-state", t, id, "untracked active target needs a known gaze or VFOA");
      }
      if (obs.vfoa[k]) {
        const int v = *obs.vfoa[k];
        if (v == id) {
          add("self-VFOA", t, id, "VFOA label equals the person itself");
        } else if (v < 0 || v > scene.n_targets()) {
          add("label-out-of-range", t, id, "VFOA label " + std::to_string(v) + " outside the eligible set");
        }
      }
    }
  }
  return out;
}

bool fully_annotated(const Recording& rec) {
  for (const auto& obs : rec.frames) {
    for (int id : rec.scene.tracked()) {
      if (static_cast<std::size_t>(id) >= obs.vfoa.size() || !obs.vfoa[static_cast<std::size_t>(id)]) return false;
    }
  }
  return true;
}

void require_valid(const Recording& rec) {
  const auto diags = validate_recording(rec);
  if (diags.empty()) return;
  std::ostringstream os;
  os << "invalid recording";
  if (!rec.name.empty()) os << " '" << rec.name << "'";
  os << ":";
  constexpr std::size_t kShown = 20;
  for (std::size_t n = 0; n < std::min(diags.size(), kShown); ++n) os << "\n  " << diags[n].message;
  if (diags.size() > kShown) os << "\n  ... (" << diags.size() - kShown << " more)";
  throw InvalidArgument(os.str());
}

}  // namespace vfoa
