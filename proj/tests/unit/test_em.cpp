#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include <vfoa/em.hpp>
#include <vfoa/synth.hpp>

#include "oracles.hpp"

using namespace vfoa;
using vfoa::testing::dense_smoother;
using vfoa::testing::random_params;
using vfoa::testing::random_sequence;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Point-mass moments at the given latent trajectory.
SmoothedMoments point_mass(const std::vector<Vec8>& path) {
  SmoothedMoments m;
  m.mean = path;
  for (std::size_t t = 0; t < path.size(); ++t) {
    m.second.push_back(path[t] * path[t].transpose());
    m.cross.push_back(t == 0 ? Mat8::Zero() : Mat8(path[t] * path[t - 1].transpose()));
  }
  return m;
}

EmSequence swap_axes(const EmSequence& s) {
  EmSequence out = s;
  for (auto& h : out.head) std::swap(h[0], h[1]);
  for (auto& x : out.target) {
    if (x) std::swap((*x)[0], (*x)[1]);
  }
  return out;
}

Mat2 swap2(const Mat2& m) {
  Mat2 out;
  out << m(1, 1), m(1, 0), m(0, 1), m(0, 0);
  return out;
}

ModelParams swap_params(const ModelParams& p) {
  ModelParams q = p;
  q.alpha = {p.alpha[1], p.alpha[0]};
  q.beta = {p.beta[1], p.beta[0]};
  q.gamma_G = swap2(p.gamma_G);
  q.gamma_Gdot = swap2(p.gamma_Gdot);
  q.gamma_R = swap2(p.gamma_R);
  q.gamma_Rdot = swap2(p.gamma_Rdot);
  q.sigma_H = swap2(p.sigma_H);
  return q;
}

// The easy scene with every person tracked and the given mixing parameters.
SynthConfig learning_config(int T, std::uint64_t seed) {
  SynthConfig cfg = easy_scene_preset();
  std::vector<Target> ts = cfg.scene.targets();
  for (auto& t : ts) t.tracked = t.active();
  cfg.scene = Scene(ts);
  cfg.params.alpha = {0.6, 0.6};
  cfg.params.beta = {0.4, 0.4};
  cfg.T = T;
  cfg.seed = seed;
  return cfg;
}

// |a - b| relative to the scale of the entry; off-diagonal entries are scaled by
// the geometric mean of their diagonal.
double relative_error(const Mat2& est, const Mat2& truth, int r, int c) {
  const double scale = r == c ? std::abs(truth(r, c)) : std::sqrt(truth(r, r) * truth(c, c));
  return std::abs(est(r, c) - truth(r, c)) / scale;
}

}  // namespace

TEST(KalmanSmoother, SingleFrameSmoothedEqualsFiltered) {
  std::mt19937_64 rng(1);
  const EmSequence seq = random_sequence(1, rng);
  SmootherInternals in;
  const SmoothedMoments m = kalman_smoother(seq, random_params(rng), &in);
  EXPECT_EQ(in.smooth_mean[0], in.filt_mean[0]);
  EXPECT_EQ(in.smooth_cov[0], in.filt_cov[0]);
  EXPECT_EQ(m.mean[0], in.filt_mean[0]);
}

TEST(KalmanSmoother, AgreesWithDenseJointGaussian) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const int T = 1 + rep % 4;
    const ModelParams p = random_params(rng);
    const EmSequence seq = random_sequence(T, rng);
    SmootherInternals in;
    const SmoothedMoments m = kalman_smoother(seq, p, &in);
    const auto dense = dense_smoother(seq, p);
    EXPECT_NEAR(m.log_likelihood, dense.loglik, 1e-8 * std::max(1.0, std::abs(dense.loglik)));
    for (int t = 0; t < T; ++t) {
      EXPECT_LT(max_abs(m.mean[t] - dense.mean_at(t)), 1e-8) << "rep " << rep << " t " << t;
      EXPECT_LT(max_abs(in.smooth_cov[t] - dense.cov_at(t, t)), 1e-6) << "rep " << rep << " t " << t;
      const Mat8 spread = m.second[t] - m.mean[t] * m.mean[t].transpose();
      Eigen::SelfAdjointEigenSolver<Mat8> e(symmetrized(spread));
      EXPECT_GT(e.eigenvalues().minCoeff(), 0.0);
      if (t > 0) {
        const Mat8 cross_cov = m.cross[t] - m.mean[t] * m.mean[t - 1].transpose();
        EXPECT_LT(max_abs(cross_cov - dense.cov_at(t, t - 1)), 1e-6) << "rep " << rep << " t " << t;
      }
    }
  }
}

TEST(KalmanSmoother, UninformativeObservationsFollowThePrior) {
  std::mt19937_64 rng(3);
  ModelParams p = random_params(rng);
  p.sigma_H = 1e12 * Mat2::Identity();
  const EmSequence seq = random_sequence(30, rng);
  const SmoothedMoments m = kalman_smoother(seq, p);
  Vec8 prior;
  prior << seq.head[0], 0, 0, seq.head[0], 0, 0;
  for (int t = 0; t < seq.n_frames(); ++t) {
    if (t > 0) {
      const auto sys = transition_system(seq.vfoa[t] == 0 ? 0 : 1, p.beta, seq.target[t]);
      prior = sys.A * prior + sys.b;
    }
    EXPECT_LT(max_abs(m.mean[t] - prior), 1e-4) << "t " << t;
  }
}

TEST(KalmanSmoother, RejectsBadInput) {
  EmSequence empty;
  EXPECT_THROW(kalman_smoother(empty, ModelParams{}), InvalidArgument);
  std::mt19937_64 rng(4);
  EmSequence s = random_sequence(3, rng);
  s.vfoa.pop_back();
  EXPECT_THROW(kalman_smoother(s, ModelParams{}), InvalidArgument);
}

TEST(MakeSequence, UnwrapsAndRequiresAnnotations) {
  const Scene scene({{1, TargetKind::Active, true, ""}, {2, TargetKind::Passive, false, ""}});
  Recording rec;
  rec.scene = scene;
  for (int f = 1; f <= 3; ++f) {
    FrameObservation obs = FrameObservation::empty(scene, f);
    obs.position = {std::nullopt, Position3D{0, 0, 0}, Position3D{-1, -0.01, 0}};
    obs.head[1] = Direction(f == 2 ? -178.0 : 178.0, 0.0);
    obs.vfoa[1] = 2;
    rec.frames.push_back(obs);
  }
  const EmSequence s = make_sequence(rec, 1);
  EXPECT_DOUBLE_EQ(s.head[1][0], 182.0);
  EXPECT_DOUBLE_EQ(s.head[2][0], 178.0);
  ASSERT_TRUE(s.target[1].has_value());
  EXPECT_LT(std::abs((*s.target[1])[0] - s.head[1][0]), 180.0);
  rec.frames[1].vfoa[1].reset();
  EXPECT_THROW(make_sequence(rec, 1), InvalidArgument);
  EXPECT_THROW(make_sequence(rec, 2), InvalidArgument);
}

TEST(MStepSigmaH, SingleFrameOuterProduct) {
  EmSequence seq;
  seq.head = {Vec2(13.0, -4.0)};
  seq.vfoa = {0};
  seq.target = {std::nullopt};
  Vec8 L;
  L << 10, 2, 0, 0, 4, -6, 0, 0;
  const Vec2 alpha(0.5, 0.25);
  const Vec2 r = seq.head[0] - emission_matrix(alpha) * L;
  const std::vector<EmSequence> seqs{seq};
  const std::vector<SmoothedMoments> ms{point_mass({L})};
  const Mat2 got = m_step_sigma_h(seqs, ms, alpha);
  const Mat2 rr = r * r.transpose();
  EXPECT_LT((got - floor_eigenvalues(rr)).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat2> e(got);
  EXPECT_NEAR(e.eigenvalues()[0], kCovFloor, 1e-12);
  EXPECT_NEAR(e.eigenvalues()[1], r.squaredNorm(), 1e-9);
}

TEST(MStepSigmaH, DoublingResidualsQuadruples) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 5);
  const Vec2 alpha(0.4, 0.7);
  const Mat28 C = emission_matrix(alpha);
  EmSequence a, b;
  std::vector<Vec8> path;
  for (int t = 0; t < 20; ++t) {
    Vec8 L;
    for (int k = 0; k < 8; ++k) L[k] = n(rng);
    const Vec2 r(n(rng), n(rng));
    path.push_back(L);
    a.head.push_back(C * L + r);
    b.head.push_back(C * L + 2.0 * r);
    a.vfoa.push_back(0);
    a.target.emplace_back();
  }
  b.vfoa = a.vfoa;
  b.target = a.target;
  const std::vector<SmoothedMoments> ms{point_mass(path)};
  const Mat2 sa = m_step_sigma_h(std::vector<EmSequence>{a}, ms, alpha);
  const Mat2 sb = m_step_sigma_h(std::vector<EmSequence>{b}, ms, alpha);
  EXPECT_LT((sb - 4.0 * sa).cwiseAbs().maxCoeff(), 1e-9 * sa.cwiseAbs().maxCoeff());
}

TEST(MStepGammaL, BlockDiagonalAndMatchesHandSum) {
  std::mt19937_64 rng(6);
  const EmSequence seq = random_sequence(6, rng);
  std::normal_distribution<double> n(0, 3);
  std::vector<Vec8> path;
  for (int t = 0; t < 6; ++t) {
    Vec8 L;
    for (int k = 0; k < 8; ++k) L[k] = n(rng);
    path.push_back(L);
  }
  const Vec2 beta(0.3, 0.8);
  const std::vector<EmSequence> seqs{seq};
  const std::vector<SmoothedMoments> ms{point_mass(path)};
  const Mat8 got = m_step_gamma_l(seqs, ms, beta);

  Mat8 sum = Mat8::Zero();
  for (int t = 1; t < 6; ++t) {
    Mat8 A = Mat8::Identity();
    A.block<2, 2>(0, 2) = Mat2::Identity();
    A.block<2, 2>(4, 6) = Mat2::Identity();
    Vec8 b = Vec8::Zero();
    if (seq.vfoa[t] != 0) {
      A.block<2, 2>(0, 0) = beta.asDiagonal();
      b.head<2>() = (Vec2::Ones() - beta).cwiseProduct(*seq.target[t]);
    }
    const Vec8 w = path[t] - A * path[t - 1] - b;
    sum += w * w.transpose();
  }
  sum /= 5.0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      if (r / 2 != c / 2) {
        EXPECT_EQ(got(r, c), 0.0);
      }
    }
  for (int blk = 0; blk < 8; blk += 2) {
    const Mat2 expect = floor_eigenvalues(Mat2(sum.block<2, 2>(blk, blk)));
    EXPECT_LT((got.block<2, 2>(blk, blk) - expect).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(MStepMixing, ReferenceFreeAlphaIsWeightedLeastSquares) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 10);
  EmSequence seq;
  std::vector<Vec8> path;
  for (int t = 0; t < 40; ++t) {
    Vec8 L = Vec8::Zero();
    L.head<2>() = Vec2(n(rng), n(rng));
    path.push_back(L);
    seq.head.emplace_back(0.6 * L[0] + 0.1 * n(rng), 0.3 * L[1] + 0.1 * n(rng));
    seq.vfoa.push_back(0);
    seq.target.emplace_back();
  }
  const std::vector<EmSequence> seqs{seq};
  const std::vector<SmoothedMoments> ms{point_mass(path)};

  // diagonal weight: ordinary per-axis regression of H on G
  const auto d = m_step_mixing(seqs, ms, Mat8::Identity(), Mat2::Identity(), ModelParams{});
  for (int a = 0; a < 2; ++a) {
    double gh = 0.0, gg = 0.0;
    for (int t = 0; t < 40; ++t) {
      gh += path[t][a] * seq.head[t][a];
      gg += path[t][a] * path[t][a];
    }
    EXPECT_NEAR(d.alpha[a], gh / gg, 1e-12);
  }
  EXPECT_FALSE(d.alpha_singular);

  // correlated weight: generalized least squares on the stacked system
  Mat2 sigma;
  sigma << 2.0, 0.8, 0.8, 1.0;
  const Mat2 W = sigma.inverse();
  const Mat2 Wh = Eigen::SelfAdjointEigenSolver<Mat2>(W).operatorSqrt();
  Eigen::MatrixXd X(80, 2);
  Eigen::VectorXd y(80);
  for (int t = 0; t < 40; ++t) {
    X.block<2, 2>(2 * t, 0) = Wh * Vec2(path[t].head<2>()).asDiagonal();
    y.segment<2>(2 * t) = Wh * seq.head[t];
  }
  const Vec2 gls = X.colPivHouseholderQr().solve(y);
  const auto g = m_step_mixing(seqs, ms, Mat8::Identity(), sigma, ModelParams{});
  EXPECT_NEAR(g.alpha[0], gls[0], 1e-10);
  EXPECT_NEAR(g.alpha[1], gls[1], 1e-10);
}

TEST(MStepMixing, DiagonalNoiseDecouplesPanAndTilt) {
  std::mt19937_64 rng(8);
  ModelParams p = random_params(rng);
  p.gamma_G = Vec2(2.0, 3.0).asDiagonal();
  p.gamma_Gdot = Vec2(0.5, 0.4).asDiagonal();
  p.gamma_R = Vec2(0.3, 0.2).asDiagonal();
  p.gamma_Rdot = Vec2(0.1, 0.2).asDiagonal();
  p.sigma_H = Vec2(4.0, 6.0).asDiagonal();
  const EmSequence seq = random_sequence(50, rng);
  EmSequence other = seq;
  std::normal_distribution<double> n(0, 5);
  for (auto& h : other.head) h[1] += n(rng);
  for (auto& x : other.target) {
    if (x) (*x)[1] += n(rng);
  }
  auto fit = [&](const EmSequence& s) {
    const std::vector<EmSequence> seqs{s};
    const std::vector<SmoothedMoments> ms{kalman_smoother(s, p)};
    const auto cov = m_step_covariances(seqs, ms, p);
    Mat8 g = cov.gamma_L;
    Mat2 sh = cov.sigma_H;
    // diagonal covariances isolate the axes
    for (int blk = 0; blk < 8; blk += 2) g(blk, blk + 1) = g(blk + 1, blk) = 0.0;
    sh(0, 1) = sh(1, 0) = 0.0;
    return m_step_mixing(seqs, ms, g, sh, p);
  };
  const auto a = fit(seq);
  const auto b = fit(other);
  EXPECT_NEAR(a.alpha[0], b.alpha[0], 1e-9);
  EXPECT_NEAR(a.beta[0], b.beta[0], 1e-9);
  EXPECT_GT(std::abs(a.alpha[1] - b.alpha[1]) + std::abs(a.beta[1] - b.beta[1]), 1e-6);
}

TEST(MStepMixing, SingularSystemKeepsThePreviousValue) {
  // no target frames: the beta system is all zeros
  EmSequence seq;
  std::vector<Vec8> path;
  for (int t = 0; t < 5; ++t) {
    Vec8 L = Vec8::Zero();
    L.head<2>() = Vec2(t + 1.0, 2.0 * t - 1.0);
    path.push_back(L);
    seq.head.push_back(0.5 * L.head<2>());
    seq.vfoa.push_back(0);
    seq.target.emplace_back();
  }
  ModelParams old;
  old.beta = {0.3, 0.7};
  const auto m = m_step_mixing(std::vector<EmSequence>{seq}, std::vector<SmoothedMoments>{point_mass(path)},
                               Mat8::Identity(), Mat2::Identity(), old);
  EXPECT_TRUE(m.beta_singular);
  EXPECT_EQ(m.beta, old.beta);
  EXPECT_FALSE(m.alpha_singular);
  EXPECT_NEAR(m.alpha[0], 0.5, 1e-12);
}

TEST(MStepMixing, ResultsAreClamped) {
  EmSequence seq;
  std::vector<Vec8> path;
  for (int t = 0; t < 5; ++t) {
    Vec8 L = Vec8::Zero();
    L.head<2>() = Vec2(t + 1.0, t + 2.0);
    path.push_back(L);
    seq.head.push_back(3.0 * L.head<2>());
    seq.vfoa.push_back(0);
    seq.target.emplace_back();
  }
  const auto m = m_step_mixing(std::vector<EmSequence>{seq}, std::vector<SmoothedMoments>{point_mass(path)},
                               Mat8::Identity(), Mat2::Identity(), ModelParams{});
  EXPECT_EQ(m.alpha, Vec2(kMixingMax, kMixingMax));
}

TEST(EmFit, DefaultsAndStopRule) {
  const EmOptions opts;
  EXPECT_EQ(opts.max_iters, 50);
  EXPECT_DOUBLE_EQ(opts.tol, 1e-6);

  std::mt19937_64 rng(9);
  const std::vector<EmSequence> seqs{random_sequence(20, rng)};
  EmOptions none;
  none.max_iters = 0;
  const EmResult r = em_fit(seqs, ModelParams{}, none);
  EXPECT_EQ(r.iterations, 0);
  ASSERT_EQ(r.loglik.size(), 1u);
  EXPECT_EQ(r.params.sigma_H, ModelParams{}.sigma_H);
  EXPECT_NEAR(r.loglik[0], kalman_smoother(seqs[0], ModelParams{}).log_likelihood, 1e-9);
  EXPECT_THROW(em_fit(std::vector<EmSequence>{}, ModelParams{}), InvalidArgument);
}

TEST(EmFit, LogLikelihoodIsMonotone) {
  SynthConfig cfg = learning_config(800, 11);
  const SynthResult data = sample_recording(cfg);
  EmOptions opts;
  opts.max_iters = 15;
  opts.tol = 0.0;
  const EmResult r = em_fit(RecordingSet{data.recording}, ModelParams::standard_init(), opts);
  ASSERT_GE(r.loglik.size(), 2u);
  for (std::size_t k = 1; k < r.loglik.size(); ++k) {
    EXPECT_GE(r.loglik[k], r.loglik[k - 1] - 1e-6) << "iteration " << k;
  }
  for (const auto& w : r.warnings) EXPECT_EQ(w.find("decreased"), std::string::npos) << w;
}

TEST(EmFit, RandomSequencesAreMonotoneToo) {
  std::mt19937_64 rng(10);
  std::vector<EmSequence> seqs;
  for (int k = 0; k < 3; ++k) seqs.push_back(random_sequence(60, rng));
  EmOptions opts;
  opts.max_iters = 25;
  opts.tol = 0.0;
  const EmResult r = em_fit(seqs, ModelParams::standard_init(), opts);
  for (std::size_t k = 1; k < r.loglik.size(); ++k) EXPECT_GE(r.loglik[k], r.loglik[k - 1] - 1e-6);
}

TEST(EmFit, SwappingAxesSwapsTheEstimates) {
  std::mt19937_64 rng(12);
  std::vector<EmSequence> seqs;
  std::vector<EmSequence> swapped;
  for (int k = 0; k < 2; ++k) {
    seqs.push_back(random_sequence(40, rng));
    swapped.push_back(swap_axes(seqs.back()));
  }
  ModelParams init = random_params(rng);
  EmOptions opts;
  opts.max_iters = 4;
  opts.tol = 0.0;
  const EmResult a = em_fit(seqs, init, opts);
  const EmResult b = em_fit(swapped, swap_params(init), opts);
  EXPECT_NEAR(a.params.alpha[0], b.params.alpha[1], 1e-8);
  EXPECT_NEAR(a.params.alpha[1], b.params.alpha[0], 1e-8);
  EXPECT_NEAR(a.params.beta[0], b.params.beta[1], 1e-8);
  EXPECT_NEAR(a.params.beta[1], b.params.beta[0], 1e-8);
  EXPECT_LT((a.params.sigma_H - swap2(b.params.sigma_H)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EmFit, ThreadCountDoesNotChangeTheResult) {
  std::mt19937_64 rng(13);
  std::vector<EmSequence> seqs;
  for (int k = 0; k < 5; ++k) seqs.push_back(random_sequence(30, rng));
  EmOptions one;
  one.max_iters = 5;
  one.tol = 0.0;
  EmOptions many = one;
  many.threads = 3;
  const EmResult a = em_fit(seqs, ModelParams{}, one);
  const EmResult b = em_fit(seqs, ModelParams{}, many);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_EQ(a.params.gamma_G, b.params.gamma_G);
  EXPECT_EQ(a.params.alpha, b.params.alpha);
}

TEST(EmFit, StaysAtTheGeneratingParameters) {
  // Started from the truth, a few EM iterations must not drift away from it.
  const SynthConfig cfg = learning_config(3000, 7);
  const SynthResult data = sample_recording(cfg);
  EmOptions opts;
  opts.max_iters = 5;
  opts.tol = 0.0;
  const EmResult r = em_fit(RecordingSet{data.recording}, cfg.params, opts);
  const ModelParams& t = cfg.params;
  const ModelParams& e = r.params;
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(e.alpha[a], t.alpha[a], 0.05);
    EXPECT_NEAR(e.beta[a], t.beta[a], 0.05);
  }
  const std::pair<const Mat2*, const Mat2*> covs[] = {{&e.sigma_H, &t.sigma_H},
                                                       {&e.gamma_G, &t.gamma_G},
                                                       {&e.gamma_Gdot, &t.gamma_Gdot},
                                                       {&e.gamma_R, &t.gamma_R},
                                                       {&e.gamma_Rdot, &t.gamma_Rdot}};
  for (const auto& [est, truth] : covs) {
    for (int r0 = 0; r0 < 2; ++r0)
      for (int c0 = 0; c0 < 2; ++c0) EXPECT_LE(relative_error(*est, *truth, r0, c0), 0.15) << *est;
  }
}
