#include <vfoa/em.hpp>

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <string>

#include <vfoa/parallel.hpp>

namespace vfoa {

namespace {

using Mat16 = Eigen::Matrix<double, 16, 16>;
using Vec16 = Eigen::Matrix<double, 16, 1>;
using Mat2x16 = Eigen::Matrix<double, 2, 16>;
using Mat8x16 = Eigen::Matrix<double, 8, 16>;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

TransitionSystem system_at(const EmSequence& seq, int t, const Vec2& beta) {
  const int j = seq.vfoa[idx(t)];
  return transition_system(j == 0 ? 0 : 1, beta, seq.target[idx(t)], seq.dt);
}

// Joint moments of Z = [L_t; L_{t-1}].
void pair_moments(const SmoothedMoments& m, int t, Vec16& ez, Mat16& ezz) {
  ez << m.mean[idx(t)], m.mean[idx(t - 1)];
  ezz.block<8, 8>(0, 0) = m.second[idx(t)];
  ezz.block<8, 8>(0, 8) = m.cross[idx(t)];
  ezz.block<8, 8>(8, 0) = m.cross[idx(t)].transpose();
  ezz.block<8, 8>(8, 8) = m.second[idx(t - 1)];
}

// E[(P z - p)(Q z - q)'] for a random z with the given first two moments.
template <int R1, int R2, int D>
Eigen::Matrix<double, R1, R2> expect_outer(const Eigen::Matrix<double, R1, D>& P, const Eigen::Matrix<double, R1, 1>& p,
                                           const Eigen::Matrix<double, R2, D>& Q, const Eigen::Matrix<double, R2, 1>& q,
                                           const Eigen::Matrix<double, D, 1>& ez,
                                           const Eigen::Matrix<double, D, D>& ezz) {
  return P * ezz * Q.transpose() - P * ez * q.transpose() - p * (Q * ez).transpose() + p * q.transpose();
}

Mat28 selector(int block) {
  Mat28 s = Mat28::Zero();
  s.block<2, 2>(0, block) = Mat2::Identity();
  return s;
}

void check_pair(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments) {
  if (seqs.size() != moments.size()) throw InvalidArgument("M-step: sequences and moments differ in number");
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    if (moments[s].mean.size() != seqs[s].head.size()) throw InvalidArgument("M-step: moments do not match sequence");
  }
}

// Solves M x = r; nullopt when M is (numerically) singular.
std::optional<Vec2> solve2(const Mat2& M, const Vec2& r) {
  const double det = M.determinant();
  const double scale = std::abs(M(0, 0) * M(1, 1)) + std::abs(M(0, 1) * M(1, 0));
  if (!(std::abs(det) > 1e-12 * scale) || !std::isfinite(det)) return std::nullopt;
  const Vec2 x = M.inverse() * r;
  if (!x.allFinite()) return std::nullopt;
  return x;
}

Vec2 clamp_mixing(const Vec2& x) { return x.cwiseMax(kMixingMin).cwiseMin(kMixingMax); }

}  // namespace

EmSequence make_sequence(const Recording& rec, int person) {
  if (!rec.scene.is_tracked(person)) throw InvalidArgument("make_sequence: target is not a tracked person");
  EmSequence seq;
  seq.head.reserve(rec.frames.size());
  Vec2 last = Vec2::Zero();
  for (const auto& obs : rec.frames) {
    const auto& h = obs.head.at(idx(person));
    const auto& v = obs.vfoa.at(idx(person));
    if (!h || !v) {
      throw InvalidArgument("make_sequence: person " + std::to_string(person) + " lacks head or VFOA at frame " +
                            std::to_string(obs.frame));
    }
    const Vec2 head{seq.head.empty() ? h->pan() : last[0] + wrap_delta(h->pan(), last[0]), h->tilt()};
    last = head;
    seq.head.push_back(head);
    seq.vfoa.push_back(*v);
    if (*v == 0) {
      seq.target.emplace_back();
      continue;
    }
    const auto& src = obs.position.at(idx(person));
    const auto& dst = obs.position.at(idx(*v));
    if (!src || !dst) {
      throw InvalidArgument("make_sequence: missing position at frame " + std::to_string(obs.frame));
    }
    const Direction d = direction_from_points(*src, *dst);
    seq.target.emplace_back(Vec2{unwrap_near(d.pan(), head[0]), d.tilt()});
  }
  return seq;
}

std::vector<EmSequence> make_sequences(const RecordingSet& data) {
  std::vector<EmSequence> out;
  for (const auto& rec : data) {
    require_valid(rec);
    for (int i : rec.scene.tracked()) out.push_back(make_sequence(rec, i));
  }
  return out;
}

SmoothedMoments kalman_smoother(const EmSequence& seq, const ModelParams& params, SmootherInternals* internals) {
  const int T = seq.n_frames();
  if (T < 1) throw InvalidArgument("kalman_smoother: empty sequence");
  if (seq.vfoa.size() != seq.head.size() || seq.target.size() != seq.head.size()) {
    throw InvalidArgument("kalman_smoother: inconsistent sequence lengths");
  }
  const Mat28 C = emission_matrix(params.alpha);
  const Mat8 gamma = params.gamma_L();

  SmootherInternals local;
  SmootherInternals& in = internals ? *internals : local;
  in = SmootherInternals{};
  in.pred_mean.resize(idx(T));
  in.pred_cov.resize(idx(T));
  in.gain.resize(idx(T));
  in.filt_mean.resize(idx(T));
  in.filt_cov.resize(idx(T));
  in.smoother_gain.assign(idx(T), Mat8::Zero());
  in.smooth_mean.resize(idx(T));
  in.smooth_cov.resize(idx(T));

  std::vector<Mat8> A(idx(T), Mat8::Identity());
  SmoothedMoments out;
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    Vec8 m;
    Mat8 P;
    if (t == 0) {
      m << seq.head[0], Vec2::Zero(), seq.head[0], Vec2::Zero();
      P = kPriorVar * Mat8::Identity();
    } else {
      const TransitionSystem sys = system_at(seq, t, params.beta);
      A[idx(t)] = sys.A;
      m = sys.A * in.filt_mean[idx(t - 1)] + sys.b;
      P = symmetrized(Mat8(sys.A * in.filt_cov[idx(t - 1)] * sys.A.transpose() + gamma));
    }
    in.pred_mean[idx(t)] = m;
    in.pred_cov[idx(t)] = P;

    const Eigen::Matrix<double, 8, 2> PCt = P * C.transpose();
    const Mat2 S = symmetrized(Mat2(C * PCt + params.sigma_H));
    const Eigen::LLT<Mat2> llt(S);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("kalman_smoother: innovation covariance not SPD at frame " + std::to_string(t + 1));
    }
    const Vec2 e = seq.head[idx(t)] - C * m;
    const Mat2 L = llt.matrixL();
    const double logdet = 2.0 * (std::log(L(0, 0)) + std::log(L(1, 1)));
    ll += -std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * e.dot(llt.solve(e));

    const Eigen::Matrix<double, 8, 2> K = llt.solve(PCt.transpose()).transpose();
    in.gain[idx(t)] = K;
    in.filt_mean[idx(t)] = m + K * e;
    in.filt_cov[idx(t)] = symmetrized(Mat8(P - K * PCt.transpose()));
  }

  in.smooth_mean[idx(T - 1)] = in.filt_mean[idx(T - 1)];
  in.smooth_cov[idx(T - 1)] = in.filt_cov[idx(T - 1)];
  for (int t = T - 2; t >= 0; --t) {
    const Eigen::LLT<Mat8> llt(in.pred_cov[idx(t + 1)]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("kalman_smoother: singular predicted covariance at frame " + std::to_string(t + 2));
    }
    // J = P_t A' Pp^{-1} = (Pp^{-1} A P_t)'
    const Mat8 J = llt.solve(Mat8(A[idx(t + 1)] * in.filt_cov[idx(t)])).transpose();
    in.smoother_gain[idx(t)] = J;
    in.smooth_mean[idx(t)] = in.filt_mean[idx(t)] + J * (in.smooth_mean[idx(t + 1)] - in.pred_mean[idx(t + 1)]);
    in.smooth_cov[idx(t)] =
        symmetrized(Mat8(in.filt_cov[idx(t)] + J * (in.smooth_cov[idx(t + 1)] - in.pred_cov[idx(t + 1)]) * J.transpose()));
  }

  out.mean = in.smooth_mean;
  out.second.resize(idx(T));
  out.cross.assign(idx(T), Mat8::Zero());
  for (int t = 0; t < T; ++t) {
    const Vec8& mu = in.smooth_mean[idx(t)];
    out.second[idx(t)] = in.smooth_cov[idx(t)] + mu * mu.transpose();
    if (t > 0) {
      out.cross[idx(t)] =
          in.smooth_cov[idx(t)] * in.smoother_gain[idx(t - 1)].transpose() + mu * in.smooth_mean[idx(t - 1)].transpose();
    }
  }
  out.log_likelihood = ll;
  return out;
}

SmoothedMoments kalman_smoother(const Recording& rec, int person, const ModelParams& params) {
  require_valid(rec);
  return kalman_smoother(make_sequence(rec, person), params);
}

Mat2 m_step_sigma_h(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments, const Vec2& alpha) {
  check_pair(seqs, moments);
  const Mat28 C = emission_matrix(alpha);
  Mat2 sum = Mat2::Zero();
  long long count = 0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    for (int t = 0; t < seqs[s].n_frames(); ++t) {
      // residual H - C L = -(C L - H)
      sum += expect_outer<2, 2, 8>(C, seqs[s].head[idx(t)], C, seqs[s].head[idx(t)], moments[s].mean[idx(t)],
                                   moments[s].second[idx(t)]);
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("m_step_sigma_h: no frames");
  return floor_eigenvalues(Mat2(sum / static_cast<double>(count)));
}

Mat8 m_step_gamma_l(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments, const Vec2& beta) {
  check_pair(seqs, moments);
  Mat8 sum = Mat8::Zero();
  long long count = 0;
  Vec16 ez;
  Mat16 ezz;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    for (int t = 1; t < seqs[s].n_frames(); ++t) {
      const TransitionSystem sys = system_at(seqs[s], t, beta);
      Mat8x16 D;
      D << Mat8::Identity(), -sys.A;
      pair_moments(moments[s], t, ez, ezz);
      sum += expect_outer<8, 8, 16>(D, sys.b, D, sys.b, ez, ezz);
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("m_step_gamma_l: no frame transitions");
  Mat8 g = Mat8::Zero();
  for (int blk = 0; blk < 8; blk += 2) g.block<2, 2>(blk, blk) = sum.block<2, 2>(blk, blk);
  return floor_eigenvalues(Mat8(g / static_cast<double>(count)));
}

CovarianceUpdate m_step_covariances(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments,
                                    const ModelParams& old) {
  return {m_step_gamma_l(seqs, moments, old.beta), m_step_sigma_h(seqs, moments, old.alpha)};
}

MixingUpdate m_step_mixing(std::span<const EmSequence> seqs, std::span<const SmoothedMoments> moments,
                           const Mat8& gamma_L, const Mat2& sigma_H, const ModelParams& old) {
  check_pair(seqs, moments);
  const Mat28 SG = selector(kGaze);
  const Mat28 SGd = selector(kGazeVel);
  const Mat28 SR = selector(kRef);

  // beta: G_t - X - dt Gdot_{t-1} = beta (G_{t-1} - X) + noise on frames with a target.
  Mat2 b_uv = Mat2::Zero();  // sum E[v u']
  Mat2 b_vv = Mat2::Zero();  // sum E[v v']
  // alpha: H - R = alpha (G - R) + noise on every frame.
  Mat2 a_uv = Mat2::Zero();
  Mat2 a_vv = Mat2::Zero();
  const Mat28 Va = SG - SR;
  Vec16 ez;
  Mat16 ezz;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const EmSequence& seq = seqs[s];
    for (int t = 0; t < seq.n_frames(); ++t) {
      const Vec8& el = moments[s].mean[idx(t)];
      const Mat8& ell = moments[s].second[idx(t)];
      const Vec2& h = seq.head[idx(t)];
      // u = H - S_R L = -(S_R L - H), v = Va L
      a_uv += -expect_outer<2, 2, 8>(Va, Vec2::Zero(), SR, h, el, ell);
      a_vv += expect_outer<2, 2, 8>(Va, Vec2::Zero(), Va, Vec2::Zero(), el, ell);

      if (t == 0 || seq.vfoa[idx(t)] == 0) continue;
      const Vec2& x = *seq.target[idx(t)];
      Mat2x16 U;
      U << SG, -seq.dt * SGd;
      Mat2x16 V;
      V << Mat28::Zero(), SG;
      pair_moments(moments[s], t, ez, ezz);
      b_uv += expect_outer<2, 2, 16>(V, x, U, x, ez, ezz);
      b_vv += expect_outer<2, 2, 16>(V, x, V, x, ez, ezz);
    }
  }

  auto solve_mixing = [](const Mat2& W, const Mat2& uv, const Mat2& vv) -> std::optional<Vec2> {
    const Mat2 M = W.cwiseProduct(vv);
    const Vec2 r = W.cwiseProduct(uv).rowwise().sum();
    return solve2(M, r);
  };

  MixingUpdate out{old.alpha, old.beta};
  const Mat2 Wg = symmetrized(Mat2(gamma_L.block<2, 2>(kGaze, kGaze).inverse()));
  const Mat2 Wh = symmetrized(Mat2(sigma_H.inverse()));
  if (const auto b = solve_mixing(Wg, b_uv, b_vv)) {
    out.beta = clamp_mixing(*b);
  } else {
    out.beta_singular = true;
  }
  if (const auto a = solve_mixing(Wh, a_uv, a_vv)) {
    out.alpha = clamp_mixing(*a);
  } else {
    out.alpha_singular = true;
  }
  return out;
}

EmResult em_fit(std::span<const EmSequence> seqs, const ModelParams& init, const EmOptions& opts) {
  if (seqs.empty()) throw InvalidArgument("em_fit: no sequences");
  if (opts.max_iters < 0) throw InvalidArgument("em_fit: max_iters must be non-negative");
  init.validate();

  EmResult res;
  res.params = init;
  std::vector<SmoothedMoments> moments(seqs.size());
  bool warned_dominance = false;
  for (int it = 0;; ++it) {
    try {
      parallel_for(seqs.size(), opts.threads,
                           [&](std::size_t s) { moments[s] = kalman_smoother(seqs[s], res.params); });
    } catch (const Error& e) {
      throw NumericalError("em_fit: E-step failed at iteration " + std::to_string(it) + ": " + e.what());
    }
    double ll = 0.0;
    for (const auto& m : moments) ll += m.log_likelihood;
    res.loglik.push_back(ll);

    if (it > 0) {
      const double prev = res.loglik[res.loglik.size() - 2];
      if (ll < prev - 1e-4) {
        res.warnings.push_back("log-likelihood decreased at iteration " + std::to_string(it) + " by " +
                               std::to_string(prev - ll));
      }
      if ((ll - prev) / std::max(std::abs(prev), 1e-300) < opts.tol) {
        res.converged = true;
        break;
      }
    }
    if (it == opts.max_iters) break;

    const CovarianceUpdate cov = m_step_covariances(seqs, moments, res.params);
    const MixingUpdate mix = m_step_mixing(seqs, moments, cov.gamma_L, cov.sigma_H, res.params);
    if (mix.alpha_singular) res.warnings.push_back("singular alpha system at iteration " + std::to_string(it));
    if (mix.beta_singular) res.warnings.push_back("singular beta system at iteration " + std::to_string(it));
    ModelParams next;
    next.alpha = mix.alpha;
    next.beta = mix.beta;
    next.gamma_G = cov.gamma_L.block<2, 2>(kGaze, kGaze);
    next.gamma_Gdot = cov.gamma_L.block<2, 2>(kGazeVel, kGazeVel);
    next.gamma_R = cov.gamma_L.block<2, 2>(kRef, kRef);
    next.gamma_Rdot = cov.gamma_L.block<2, 2>(kRefVel, kRefVel);
    next.sigma_H = cov.sigma_H;
    res.params = next;
    ++res.iterations;
    if (!warned_dominance && !next.gaze_dominates_reference()) {
      res.warnings.push_back("Tr(gamma_G) <= Tr(gamma_R) after iteration " + std::to_string(it));
      warned_dominance = true;
    }
  }
  return res;
}

EmResult em_fit(const RecordingSet& data, const ModelParams& init, const EmOptions& opts) {
  const std::vector<EmSequence> seqs = make_sequences(data);
  return em_fit(std::span<const EmSequence>(seqs), init, opts);
}

}  // namespace vfoa
