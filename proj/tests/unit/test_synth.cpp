#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <vfoa/dataio.hpp>
#include <vfoa/synth.hpp>

using namespace vfoa;

namespace {

std::vector<double> unwrap_series(const std::vector<double>& pans) {
  std::vector<double> out;
  for (double p : pans) out.push_back(out.empty() ? p : out.back() + wrap_delta(p, out.back()));
  return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k] / n;
    mb += b[k] / n;
  }
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(TargetMotion, StaticLinearAndOscillating) {
  TargetMotion m{{1, 2, 3}};
  EXPECT_EQ(m.at(1), (Position3D{1, 2, 3}));
  EXPECT_EQ(m.at(500), (Position3D{1, 2, 3}));
  m.velocity = {0.5, 0, 0};
  EXPECT_DOUBLE_EQ(m.at(3).x, 2.0);
  m.velocity = {};
  m.amplitude = {0, 1, 0};
  m.period = 8;
  EXPECT_NEAR(m.at(3).y, 3.0, 1e-12);
  EXPECT_NEAR(m.at(9).y, 2.0, 1e-12);
}

TEST(SynthConfig, ValidateRejectsBadConfigs) {
  SynthConfig cfg = easy_scene_preset();
  EXPECT_NO_THROW(cfg.validate());
  cfg.T = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = easy_scene_preset();
  cfg.motion.pop_back();
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = easy_scene_preset();
  cfg.motion[2].start.x = std::nan("");
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(EasyPreset, LayoutAndParameters) {
  const SynthConfig cfg = easy_scene_preset();
  EXPECT_EQ(cfg.scene.n_active(), 3);
  EXPECT_EQ(cfg.scene.m_passive(), 3);
  EXPECT_EQ(cfg.scene.tracked(), (std::vector<int>{2, 3}));
  EXPECT_EQ(cfg.scene.untracked_active(), std::vector<int>{1});
  EXPECT_EQ(cfg.seed, 42u);
  const ModelParams init = ModelParams::standard_init();
  EXPECT_EQ(cfg.params.alpha, init.alpha);
  EXPECT_EQ(cfg.params.beta, init.beta);
  EXPECT_EQ(cfg.params.sigma_H, init.sigma_H);
  EXPECT_EQ(cfg.params.gamma_G, init.gamma_G);
  EXPECT_TRUE(cfg.params.gaze_dominates_reference());
}

TEST(EasyPreset, TargetsAreWellSeparated) {
  const SynthConfig cfg = easy_scene_preset();
  for (int i : cfg.scene.tracked()) {
    const Position3D src = cfg.motion[i].at(1);
    for (int a = 1; a <= cfg.scene.n_targets(); ++a) {
      for (int b = a + 1; b <= cfg.scene.n_targets(); ++b) {
        if (a == i || b == i) continue;
        const Direction da = direction_from_points(src, cfg.motion[a].at(1));
        const Direction db = direction_from_points(src, cfg.motion[b].at(1));
        EXPECT_GE(angular_distance(da, db), 40.0) << "person " << i << " targets " << a << ", " << b;
      }
    }
  }
}

TEST(SampleRecording, SameSeedSameBytes) {
  SynthConfig cfg = easy_scene_preset();
  cfg.T = 300;
  const SynthResult a = sample_recording(cfg);
  const SynthResult b = sample_recording(cfg);
  EXPECT_EQ(recording_to_csv(a.recording), recording_to_csv(b.recording));
  EXPECT_EQ(ground_truth_to_csv(a.truth), ground_truth_to_csv(b.truth));
  cfg.seed = 43;
  EXPECT_NE(recording_to_csv(sample_recording(cfg).recording), recording_to_csv(a.recording));
}

TEST(SampleRecording, ValidFullyAnnotatedAndEligible) {
  SynthConfig cfg = easy_scene_preset();
  cfg.T = 1000;
  const SynthResult res = sample_recording(cfg);
  EXPECT_TRUE(validate_recording(res.recording).empty());
  EXPECT_TRUE(fully_annotated(res.recording));
  ASSERT_EQ(res.truth.size(), 2u);
  for (const auto& f : res.recording.frames) {
    for (int k = 1; k <= cfg.scene.n_active(); ++k) {
      ASSERT_TRUE(f.vfoa[k].has_value());
      const auto eligible = eligible_vfoa_labels(cfg.scene, k);
      EXPECT_TRUE(std::find(eligible.begin(), eligible.end(), *f.vfoa[k]) != eligible.end());
    }
  }
  for (const auto& pt : res.truth) {
    EXPECT_EQ(pt.latent.size(), 1000u);
    EXPECT_EQ(pt.vfoa.front(), *res.recording.frames.front().vfoa[pt.person]);
    // the first latent state looks straight at the first target
    const Vec8& L = pt.latent.front();
    EXPECT_EQ(Vec2(L.segment<2>(kGaze)), Vec2(L.segment<2>(kRef)));
    EXPECT_EQ(Vec2(L.segment<2>(kGazeVel)), Vec2::Zero());
    if (pt.vfoa.front() != 0) {
      const Direction d = direction_from_points(cfg.motion[pt.person].at(1), cfg.motion[pt.vfoa.front()].at(1));
      EXPECT_NEAR(angular_distance(Vec2(L.segment<2>(kGaze)), d.vec()), 0.0, 1e-12);
    }
  }
}

TEST(SampleRecording, UntrackedTargetFollowsTheScript) {
  SynthConfig cfg = easy_scene_preset();
  cfg.T = 250;
  const SynthResult res = sample_recording(cfg);
  // the robot cycles through 2..6, 40 frames each
  EXPECT_EQ(scripted_vfoa(cfg.scene, 1, 1, 40), 2);
  EXPECT_EQ(scripted_vfoa(cfg.scene, 1, 40, 40), 2);
  EXPECT_EQ(scripted_vfoa(cfg.scene, 1, 41, 40), 3);
  EXPECT_EQ(scripted_vfoa(cfg.scene, 1, 201, 40), 2);
  for (const auto& f : res.recording.frames) {
    const int j = scripted_vfoa(cfg.scene, 1, f.frame, 40);
    EXPECT_EQ(*f.vfoa[1], j);
    const Direction d = direction_from_points(*f.position[1], *f.position[j]);
    EXPECT_NEAR(angular_distance(*f.head[1], d), 0.0, 1e-9);
  }
}

TEST(SampleRecording, NoiselessEmission) {
  SynthConfig cfg = easy_scene_preset();
  cfg.T = 400;
  cfg.params.sigma_H = kCovFloor * Mat2::Identity();
  cfg.params.gamma_G = cfg.params.gamma_Gdot = cfg.params.gamma_R = cfg.params.gamma_Rdot =
      kCovFloor * Mat2::Identity();
  cfg.params.alpha = {0.3, 0.8};
  const SynthResult res = sample_recording(cfg);
  const Mat28 C = emission_matrix(cfg.params.alpha);
  for (const auto& pt : res.truth) {
    for (std::size_t t = 0; t < pt.latent.size(); ++t) {
      const Direction& h = *res.recording.frames[t].head[pt.person];
      EXPECT_LT(angular_distance(h.vec(), Vec2(C * pt.latent[t])), 1e-3);
    }
  }
}

TEST(SampleRecording, HeadFollowsGaze) {
  SynthConfig cfg = easy_scene_preset();
  cfg.params = ModelParams::standard_init();
  const SynthResult res = sample_recording(cfg);
  for (const auto& pt : res.truth) {
    std::vector<double> h, g;
    for (std::size_t t = 0; t < pt.latent.size(); ++t) {
      h.push_back(res.recording.frames[t].head[pt.person]->pan());
      g.push_back(pt.latent[t][kGaze]);
    }
    EXPECT_GT(correlation(unwrap_series(h), g), 0.5) << "person " << pt.person;
  }
}

TEST(SampleRecording, HeadResidualCovarianceMatchesSigmaH) {
  // 100,000 frames as 50 recordings: the reference is a random walk, so a single
  // very long recording eventually drives tilt into the +-90 clamp.
  SynthConfig cfg = easy_scene_preset();
  cfg.T = 2000;
  cfg.params.sigma_H << 12.0, 3.0, 3.0, 6.0;
  const Mat28 C = emission_matrix(cfg.params.alpha);
  std::vector<Vec2> r;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    cfg.seed = seed;
    const SynthResult res = sample_recording(cfg);
    for (const auto& pt : res.truth) {
      for (std::size_t t = 0; t < pt.latent.size(); ++t) {
        const Direction& h = *res.recording.frames[t].head[pt.person];
        r.push_back(wrap_delta(h.vec(), Vec2(C * pt.latent[t])));
      }
    }
  }
  Vec2 mean = Vec2::Zero();
  for (const auto& x : r) mean += x;
  mean /= static_cast<double>(r.size());
  Mat2 sum = Mat2::Zero();
  for (const auto& x : r) sum += (x - mean) * (x - mean).transpose();
  const Mat2 cov = sum / static_cast<double>(r.size() - 1);
  const Mat2& S = cfg.params.sigma_H;
  EXPECT_NEAR(cov(0, 0), S(0, 0), 0.10 * S(0, 0));
  EXPECT_NEAR(cov(1, 1), S(1, 1), 0.10 * S(1, 1));
  EXPECT_NEAR(cov(0, 1), S(0, 1), 0.10 * std::sqrt(S(0, 0) * S(1, 1)));
}

TEST(SampleVfoaChains, TransitionFrequenciesMatchTheTable) {
  const SynthConfig cfg = easy_scene_preset();
  const TransitionTable table({0.6, 0.4, 0.2, 0.5, 0.3, 0.1, 0.6, 0.3, 0.25, 0.35, 0.4, 0.15, 0.45, 0.2, 0.2});
  const auto chains = sample_vfoa_chains(cfg.scene, table, 100000, 5);
  const Scene& s = cfg.scene;

  // hand classification of every tracked transition into its category
  std::array<double, 15> hits{};
  std::array<double, 5> events{};
  for (std::size_t t = 1; t < chains.size(); ++t) {
    for (int i : s.tracked()) {
      const int k = chains[t - 1][i];
      const int j = chains[t][i];
      int group = 0;
      int n = 0;
      if (k == 0) {
        group = 0;
        n = j == 0 ? 1 : 2;
      } else if (s.is_passive(k)) {
        group = 1;
        n = j == 0 ? 3 : (j == k ? 4 : 5);
      } else {
        const int l = chains[t - 1][k];
        if (l == 0) {
          group = 2;
          n = j == 0 ? 6 : (j == k ? 7 : 8);
        } else if (l == i) {
          group = 3;
          n = j == 0 ? 9 : (j == k ? 10 : 11);
        } else {
          group = 4;
          n = j == 0 ? 12 : (j == k ? 13 : (j == l ? 14 : 15));
        }
      }
      events[group] += 1.0;
      hits[n - 1] += 1.0;
    }
  }
  for (int n = 1; n <= 15; ++n) {
    const double N = events[TransitionTable::group_of(n)];
    ASSERT_GT(N, 100.0) << "p" << n;
    const double p = table.p(n);
    const double se = std::sqrt(p * (1.0 - p) / N);
    EXPECT_LE(std::abs(hits[n - 1] / N - p), 3.0 * se) << "p" << n;
  }
}
