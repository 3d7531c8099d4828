#include <vfoa/tracker.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vfoa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

std::vector<double> point_mass(int n_labels, int label) {
  std::vector<double> d(idx(n_labels), 0.0);
  d.at(idx(label)) = 1.0;
  return d;
}

Vec2 unwrap_head(const Direction& h, const Vec2& last) {
  return {last[0] + wrap_delta(h.pan(), last[0]), h.tilt()};
}

Direction to_direction(const Vec2& v) { return Direction(v[0], std::clamp(v[1], -90.0, 90.0)); }

void refresh_known(TrackerState& st, const FrameObservation& obs, double threshold) {
  st.known_prev.assign(idx(st.scene.n_labels()), {});
  for (int a : st.scene.untracked_active()) {
    const auto label = known_vfoa(st.scene, obs, a, threshold);
    if (!label) {
      throw InvalidArgument("frame " + std::to_string(obs.frame) + ": no known VFOA for untracked target " +
                            std::to_string(a));
    }
    st.known_prev[idx(a)] = point_mass(st.scene.n_labels(), *label);
  }
}

// Previous-frame label distribution of active target k.
const std::vector<double>& previous_distribution(const TrackerState& st, int k,
                                                 const std::vector<std::vector<double>>& tracked_dists) {
  if (st.scene.is_tracked(k)) return tracked_dists[idx(k)];
  return st.known_prev[idx(k)];
}

}  // namespace

Vec2 project_gaze(const Vec2& gaze, const Vec2& head, double bound) {
  const Vec2 d = wrap_delta(gaze, head);
  const double dist = d.norm();
  // results live on the head's unwrapped branch so that mixtures stay inside the disc
  if (dist <= bound) return gaze - head == d ? gaze : Vec2(head + d);
  return head + d * (bound / dist);
}

KfStep constrained_kf_step(const Vec8& mu_prev, const Mat8& cov_prev, const Mat8& A, const Vec8& b, const Mat28& C,
                           const Mat8& gamma_L, const Mat2& sigma_H, const Vec2& H, double bound) {
  const Vec8 m = A * mu_prev + b;
  const Mat8 P = symmetrized(Mat8(A * cov_prev * A.transpose() + gamma_L));
  const Eigen::Matrix<double, 8, 2> PCt = P * C.transpose();
  const Mat2 S = symmetrized(Mat2(C * PCt + sigma_H));
  const Vec2 pred = C * m;

  KfStep out;
  out.log_likelihood = gaussian_logpdf(H, pred, S);
  const Eigen::Matrix<double, 8, 2> K = PCt * S.inverse();
  out.mean = m + K * wrap_delta(H, pred);
  out.cov = symmetrized(Mat8(P - K * PCt.transpose()));

  const Vec2 g = out.mean.segment<2>(kGaze);
  const Vec2 gp = project_gaze(g, H, bound);
  if (gp != g) {
    out.mean.segment<2>(kGaze) = gp;
    out.projected = true;
  }
  return out;
}

GaussianMoments moment_match(std::span<const double> weights, std::span<const Vec8> means, std::span<const Mat8> covs) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != covs.size()) {
    throw InvalidArgument("moment_match: mismatched or empty inputs");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("moment_match: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("moment_match: weights sum to zero");

  GaussianMoments out{Vec8::Zero(), Mat8::Zero()};
  for (std::size_t k = 0; k < weights.size(); ++k) out.mean += (weights[k] / total) * means[k];
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const Vec8 d = means[k] - out.mean;
    out.cov += (weights[k] / total) * (covs[k] + d * d.transpose());
  }
  out.cov = symmetrized(out.cov);
  return out;
}

std::vector<double> PersonBelief::distribution(int n_labels) const {
  std::vector<double> d(idx(n_labels), 0.0);
  for (std::size_t a = 0; a < labels.size(); ++a) d.at(idx(labels[a])) = weight[a];
  return d;
}

const PersonBelief& TrackerState::belief(int person) const {
  for (const auto& b : beliefs) {
    if (b.person == person) return b;
  }
  throw InvalidArgument("TrackerState: person " + std::to_string(person) + " is not tracked");
}

TrackerState update(const TrackerState& state, const FrameObservation& obs, const ModelParams& params,
                    const TransitionTable& table, const TrackOptions& opts) {
  const Scene& scene = state.scene;
  const int n_labels = scene.n_labels();
  const Mat28 C = emission_matrix(params.alpha);
  const Mat8 gamma = params.gamma_L();

  std::vector<std::vector<double>> tracked_dists(idx(n_labels));
  for (const auto& b : state.beliefs) tracked_dists[idx(b.person)] = b.distribution(n_labels);

  TrackerState next;
  next.scene = scene;
  next.frame = obs.frame;
  next.init_iterations = state.init_iterations;
  next.init_converged = state.init_converged;
  next.beliefs.reserve(state.beliefs.size());

  for (const auto& prev : state.beliefs) {
    const int i = prev.person;
    const auto& head = obs.head.at(idx(i));
    if (!head) throw InvalidArgument("update: missing head observation for person " + std::to_string(i));
    const Vec2 H = unwrap_head(*head, prev.last_head);
    const std::size_t n = prev.labels.size();

    // Prior rows P(j | k) for every previous label k, dense over labels.
    std::vector<std::vector<double>> rows(n);
    for (std::size_t kk = 0; kk < n; ++kk) {
      const int k = prev.labels[kk];
      if (scene.is_active(k)) {
        rows[kk] = marginal_transition_row(table, scene, i, k, previous_distribution(state, k, tracked_dists));
      } else {
        rows[kk] = marginal_transition_row(table, scene, i, k, {});
      }
    }

    std::vector<KfStep> steps(n * n);
    std::vector<double> log_c(n * n);
    std::vector<double> log_prior(n * n);
    for (std::size_t jj = 0; jj < n; ++jj) {
      const int j = prev.labels[jj];
      const TransitionSystem sys = transition_system(scene, i, j, params.beta, obs.position, 1.0, H[0]);
      for (std::size_t kk = 0; kk < n; ++kk) {
        KfStep& s = steps[jj * n + kk];
        s = constrained_kf_step(prev.mean[kk], prev.cov[kk], sys.A, sys.b, C, gamma, params.sigma_H, H,
                                opts.gaze_head_bound);
        log_prior[jj * n + kk] = std::log(prev.weight[kk]) + std::log(rows[kk][idx(j)]);
        log_c[jj * n + kk] = s.log_likelihood + log_prior[jj * n + kk];
      }
    }

    PersonBelief cur;
    cur.person = i;
    cur.labels = prev.labels;
    cur.last_head = H;
    cur.weight.resize(n);
    cur.mean.resize(n);
    cur.cov.resize(n);

    const double log_z = log_sum_exp(log_c);
    const bool degenerate = !std::isfinite(log_z);
    if (degenerate) {
      // Nothing explains the observation; fall back on the prior for the mixing
      // weights and keep the previous label distribution.
      next.degenerate = true;
      log_c = log_prior;
    }

    std::vector<double> w(n);
    std::vector<Vec8> means(n);
    std::vector<Mat8> covs(n);
    for (std::size_t jj = 0; jj < n; ++jj) {
      const std::span<const double> row(log_c.data() + jj * n, n);
      const double log_cj = log_sum_exp(row);
      if (std::isfinite(log_cj)) {
        for (std::size_t kk = 0; kk < n; ++kk) w[kk] = std::exp(row[kk] - log_cj);
      } else {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
      }
      for (std::size_t kk = 0; kk < n; ++kk) {
        means[kk] = steps[jj * n + kk].mean;
        covs[kk] = steps[jj * n + kk].cov;
      }
      const GaussianMoments mm = moment_match(w, means, covs);
      cur.mean[jj] = mm.mean;
      cur.cov[jj] = floor_eigenvalues(mm.cov);
      cur.weight[jj] = degenerate ? prev.weight[jj] : std::exp(log_cj - log_z);
    }
    next.beliefs.push_back(std::move(cur));
  }

  refresh_known(next, obs, opts.geometric_threshold);
  return next;
}

TrackerState initialize(const Scene& scene, const FrameObservation& first, const ModelParams& params,
                        const TransitionTable& table, const TrackOptions& opts) {
  params.validate();
  TrackerState st;
  st.scene = scene;
  st.frame = first.frame;
  const double uniform = 1.0 / static_cast<double>(scene.n_targets());
  for (int i : scene.tracked()) {
    const auto& head = first.head.at(idx(i));
    if (!head) throw InvalidArgument("initialize: missing head observation for person " + std::to_string(i));
    PersonBelief b;
    b.person = i;
    b.labels = eligible_vfoa_labels(scene, i);
    b.last_head = head->vec();
    Vec8 mu = Vec8::Zero();
    mu.segment<2>(kGaze) = b.last_head;
    mu.segment<2>(kRef) = b.last_head;
    b.weight.assign(b.labels.size(), uniform);
    b.mean.assign(b.labels.size(), mu);
    b.cov.assign(b.labels.size(), Mat8::Identity());
    st.beliefs.push_back(std::move(b));
  }
  refresh_known(st, first, opts.geometric_threshold);

  for (int it = 1; it <= opts.init_max_iter; ++it) {
    TrackerState nx = update(st, first, params, table, opts);
    double delta = 0.0;
    for (std::size_t p = 0; p < nx.beliefs.size(); ++p) {
      for (std::size_t a = 0; a < nx.beliefs[p].weight.size(); ++a) {
        delta = std::max(delta, std::abs(nx.beliefs[p].weight[a] - st.beliefs[p].weight[a]));
      }
    }
    st = std::move(nx);
    st.init_iterations = it;
    if (delta < opts.init_tol) {
      st.init_converged = true;
      break;
    }
  }
  return st;
}

int map_vfoa(const PersonBelief& belief) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < belief.weight.size(); ++a) {
    if (belief.weight[a] > belief.weight[best]) best = a;
  }
  return belief.labels.at(best);
}

std::vector<int> map_vfoa(const TrackerState& state) {
  std::vector<int> out;
  out.reserve(state.beliefs.size());
  for (const auto& b : state.beliefs) out.push_back(map_vfoa(b));
  return out;
}

Direction gaze_estimate(const PersonBelief& belief) {
  const int label = map_vfoa(belief);
  const auto it = std::find(belief.labels.begin(), belief.labels.end(), label);
  const Vec8& mu = belief.mean[static_cast<std::size_t>(it - belief.labels.begin())];
  return to_direction(mu.segment<2>(kGaze));
}

std::vector<Direction> gaze_estimate(const TrackerState& state) {
  std::vector<Direction> out;
  out.reserve(state.beliefs.size());
  for (const auto& b : state.beliefs) out.push_back(gaze_estimate(b));
  return out;
}

int vfoa_from_gaze_geometric(const Direction& gaze, const std::vector<std::optional<Position3D>>& positions, int person,
                             double threshold_deg) {
  const auto& src = positions.at(idx(person));
  if (!src) throw InvalidArgument("vfoa_from_gaze_geometric: missing position of target " + std::to_string(person));
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t id = 1; id < positions.size(); ++id) {
    if (static_cast<int>(id) == person || !positions[id]) continue;
    Direction d;
    try {
      d = direction_from_points(*src, *positions[id]);
    } catch (const GeometryError&) {
      continue;
    }
    const double dist = angular_distance(gaze, d);
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(id);
    }
  }
  return best_dist <= threshold_deg ? best : 0;
}

std::optional<int> known_vfoa(const Scene& scene, const FrameObservation& obs, int k, double threshold_deg) {
  if (obs.vfoa.at(idx(k))) return obs.vfoa[idx(k)];
  if (scene.is_active(k) && !scene.is_tracked(k) && obs.head.at(idx(k))) {
    return vfoa_from_gaze_geometric(*obs.head[idx(k)], obs.position, k, threshold_deg);
  }
  return std::nullopt;
}

TrackResult track(const Recording& rec, const ModelParams& params, const TransitionTable& table,
                  const TrackOptions& opts, const TrackObserver& observer) {
  require_valid(rec);
  TrackResult out;
  for (int i : rec.scene.tracked()) {
    PersonTrack pt;
    pt.person = i;
    pt.labels = eligible_vfoa_labels(rec.scene, i);
    out.persons.push_back(std::move(pt));
  }

  auto record = [&](const TrackerState& st) {
    if (observer) observer(st);
    if (st.degenerate) out.degenerate_frames.push_back(st.frame);
    for (std::size_t p = 0; p < st.beliefs.size(); ++p) {
      out.persons[p].vfoa.push_back(map_vfoa(st.beliefs[p]));
      out.persons[p].gaze.push_back(gaze_estimate(st.beliefs[p]));
      out.persons[p].weights.push_back(st.beliefs[p].weight);
    }
  };

  TrackerState st = initialize(rec.scene, rec.frames.front(), params, table, opts);
  out.init_iterations = st.init_iterations;
  out.init_converged = st.init_converged;
  record(st);
  for (std::size_t f = 1; f < rec.frames.size(); ++f) {
    st = update(st, rec.frames[f], params, table, opts);
    record(st);
  }
  return out;
}

}  // namespace vfoa
