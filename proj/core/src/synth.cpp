#include <vfoa/synth.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace vfoa {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

template <int D>
Eigen::Matrix<double, D, D> sqrt_psd(const Eigen::Matrix<double, D, D>& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> eig(symmetrized(cov));
  const Eigen::Matrix<double, D, 1> s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal();
}

template <int D>
Eigen::Matrix<double, D, 1> standard_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::Matrix<double, D, 1> z;
  for (int d = 0; d < D; ++d) z[d] = n01(rng);
  return z;
}

int sample_label(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::discrete_distribution<int> dist(probs.begin(), probs.end());
  return dist(rng);
}

std::vector<int> initial_labels(const Scene& scene, int dwell, std::mt19937_64& rng) {
  std::vector<int> v(idx(scene.n_labels()), 0);
  for (int i : scene.tracked()) {
    const std::vector<int> eligible = eligible_vfoa_labels(scene, i);
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    v[idx(i)] = eligible[pick(rng)];
  }
  for (int a : scene.untracked_active()) v[idx(a)] = scripted_vfoa(scene, a, 1, dwell);
  return v;
}

std::vector<int> next_labels(const Scene& scene, const TransitionTable& table, const std::vector<int>& prev, int frame,
                             int dwell, std::mt19937_64& rng) {
  std::vector<int> v(prev.size(), 0);
  for (int i : scene.tracked()) {
    const int k = prev[idx(i)];
    const std::optional<int> l = scene.is_active(k) ? std::optional<int>(prev[idx(k)]) : std::nullopt;
    v[idx(i)] = sample_label(transition_row(table, scene, i, k, l), rng);
  }
  for (int a : scene.untracked_active()) v[idx(a)] = scripted_vfoa(scene, a, frame, dwell);
  return v;
}

// Direction from i to the centroid of the other targets.
Vec2 scene_center_direction(const std::vector<std::optional<Position3D>>& pos, int i) {
  Position3D c{0.0, 0.0, 0.0};
  int n = 0;
  for (std::size_t id = 1; id < pos.size(); ++id) {
    if (static_cast<int>(id) == i || !pos[id]) continue;
    c.x += pos[id]->x;
    c.y += pos[id]->y;
    c.z += pos[id]->z;
    ++n;
  }
  if (n == 0) return Vec2::Zero();
  c = {c.x / n, c.y / n, c.z / n};
  try {
    return direction_from_points(*pos[idx(i)], c).vec();
  } catch (const GeometryError&) {
    return Vec2::Zero();
  }
}

Direction emit(const Vec2& v) { return Direction(v[0], std::clamp(v[1], -90.0, 90.0)); }

}  // namespace

Position3D TargetMotion::at(int frame) const {
  const double s = frame - 1.0;
  const double osc = period > 0.0 ? std::sin(2.0 * std::numbers::pi * s / period) : 0.0;
  return {start.x + velocity.x * s + amplitude.x * osc, start.y + velocity.y * s + amplitude.y * osc,
          start.z + velocity.z * s + amplitude.z * osc};
}

void SynthConfig::validate() const {
  if (T < 1) throw InvalidArgument("SynthConfig: T must be at least 1");
  if (motion.size() != idx(scene.n_labels())) {
    throw InvalidArgument("SynthConfig: motion must have one entry per target id (plus unused entry 0)");
  }
  if (scripted_dwell < 1) throw InvalidArgument("SynthConfig: scripted_dwell must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("SynthConfig: dt must be positive");
  for (int id = 1; id < scene.n_labels(); ++id) {
    if (!motion[idx(id)].start.finite() || !motion[idx(id)].velocity.finite() ||
        !motion[idx(id)].amplitude.finite() || !std::isfinite(motion[idx(id)].period)) {
      throw InvalidArgument("SynthConfig: non-finite motion for target " + std::to_string(id));
    }
  }
  (void)process_noise(params.gamma_G, params.gamma_Gdot, params.gamma_R, params.gamma_Rdot);
}

int scripted_vfoa(const Scene& scene, int target, int frame, int dwell) {
  std::vector<int> labels = eligible_vfoa_labels(scene, target);
  labels.erase(labels.begin());  // drop 0
  if (labels.empty()) return 0;
  const int slot = std::max(frame - 1, 0) / std::max(dwell, 1);
  return labels[idx(slot % static_cast<int>(labels.size()))];
}

std::vector<std::vector<int>> sample_vfoa_chains(const Scene& scene, const TransitionTable& table, int T,
                                                 std::uint64_t seed, int scripted_dwell) {
  if (T < 1) throw InvalidArgument("sample_vfoa_chains: T must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> out;
  out.reserve(idx(T));
  out.push_back(initial_labels(scene, scripted_dwell, rng));
  for (int f = 2; f <= T; ++f) out.push_back(next_labels(scene, table, out.back(), f, scripted_dwell, rng));
  return out;
}

SynthResult sample_recording(const SynthConfig& cfg) {
  cfg.validate();
  const Scene& scene = cfg.scene;
  const ModelParams& p = cfg.params;
  std::mt19937_64 rng(cfg.seed);

  const Mat28 C = emission_matrix(p.alpha);
  const Mat8 noise_L = sqrt_psd<8>(p.gamma_L());
  const Mat2 noise_H = sqrt_psd<2>(p.sigma_H);

  SynthResult res;
  res.recording.scene = scene;
  res.recording.dt = cfg.dt;
  res.recording.name = cfg.name;
  res.recording.frames.reserve(idx(cfg.T));
  for (int i : scene.tracked()) {
    PersonTruth pt;
    pt.person = i;
    pt.latent.reserve(idx(cfg.T));
    pt.vfoa.reserve(idx(cfg.T));
    res.truth.push_back(std::move(pt));
  }

  std::vector<int> labels;
  for (int f = 1; f <= cfg.T; ++f) {
    FrameObservation obs = FrameObservation::empty(scene, f);
    for (int id = 1; id < scene.n_labels(); ++id) obs.position[idx(id)] = cfg.motion[idx(id)].at(f);

    labels = f == 1 ? initial_labels(scene, cfg.scripted_dwell, rng)
                    : next_labels(scene, cfg.table, labels, f, cfg.scripted_dwell, rng);

    for (std::size_t p_idx = 0; p_idx < res.truth.size(); ++p_idx) {
      PersonTruth& pt = res.truth[p_idx];
      const int i = pt.person;
      const int j = labels[idx(i)];
      Vec8 L;
      if (f == 1) {
        const Vec2 g = j == 0 ? scene_center_direction(obs.position, i)
                              : direction_from_points(*obs.position[idx(i)], *obs.position[idx(j)]).vec();
        L << g, Vec2::Zero(), g, Vec2::Zero();
      } else {
        const Vec8& prev = pt.latent.back();
        // Target pans are taken on the branch nearest the head, as the tracker does.
        const double head_pan = (C * prev)[0];
        const TransitionSystem sys = transition_system(scene, i, j, p.beta, obs.position, 1.0, head_pan);
        L = sys.A * prev + sys.b + noise_L * standard_normal<8>(rng);
      }
      const Vec2 H = C * L + noise_H * standard_normal<2>(rng);
      pt.latent.push_back(L);
      pt.vfoa.push_back(j);
      obs.head[idx(i)] = emit(H);
      obs.vfoa[idx(i)] = j;
    }
    for (int a : scene.untracked_active()) {
      const int j = labels[idx(a)];
      obs.vfoa[idx(a)] = j;
      obs.head[idx(a)] = j == 0 ? Direction(0.0, 0.0) : direction_from_points(*obs.position[idx(a)], *obs.position[idx(j)]);
    }
    res.recording.frames.push_back(std::move(obs));
  }
  return res;
}

ModelParams easy_preset_params() {
  ModelParams p = ModelParams::standard_init();
  p.gamma_Gdot = 1e-4 * Mat2::Identity();
  p.gamma_R = 1e-2 * Mat2::Identity();
  p.gamma_Rdot = 1e-8 * Mat2::Identity();
  return p;
}

TransitionTable easy_preset_table() {
  return TransitionTable({0.50, 0.50,                   // k = 0
                          0.005, 0.97, 0.025,           // k passive
                          0.005, 0.97, 0.025,           // k active, l = 0
                          0.005, 0.97, 0.025,           // k active, l = i
                          0.005, 0.97, 0.0125, 0.0125});  // k active, l other
}

SynthConfig easy_scene_preset() {
  SynthConfig cfg;
  cfg.scene = Scene({
      {1, TargetKind::Active, false, "robot"},
      {2, TargetKind::Active, true, "person-left"},
      {3, TargetKind::Active, true, "person-right"},
      {4, TargetKind::Passive, false, "painting-1"},
      {5, TargetKind::Passive, false, "painting-2"},
      {6, TargetKind::Passive, false, "painting-3"},
  });
  cfg.params = easy_preset_params();
  cfg.table = easy_preset_table();
  cfg.T = 2000;
  cfg.seed = 42;
  cfg.motion = {
      TargetMotion{},
      TargetMotion{{1.1, 0.2, 0.5}},
      TargetMotion{{0.0, 0.7, 1.7}},
      TargetMotion{{0.2, -0.8, 1.7}},
      TargetMotion{{3.0, 1.7, 1.7}},
      TargetMotion{{3.0, -0.2, 3.4}},
      TargetMotion{{3.0, -1.9, 1.2}},
  };
  cfg.name = "easy-preset";
  return cfg;
}

}  // namespace vfoa
