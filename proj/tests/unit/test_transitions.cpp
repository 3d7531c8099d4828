#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include <vfoa/transitions.hpp>

using namespace vfoa;

namespace {

Scene make_scene(int n_active, int m_passive, std::vector<int> untracked = {}) {
  std::vector<Target> ts;
  for (int id = 1; id <= n_active; ++id) {
    const bool tracked = std::find(untracked.begin(), untracked.end(), id) == untracked.end();
    ts.push_back({id, TargetKind::Active, tracked, ""});
  }
  for (int id = n_active + 1; id <= n_active + m_passive; ++id) ts.push_back({id, TargetKind::Passive, false, ""});
  return Scene(ts);
}

TransitionTable table_with(std::initializer_list<std::pair<int, double>> entries) {
  std::array<double, 15> p = TransitionTable().values();
  for (auto [n, v] : entries) p[n - 1] = v;
  return TransitionTable(p);
}

// Recording of label sequences only; positions are irrelevant for counting.
Recording label_recording(const Scene& scene, const std::vector<std::vector<int>>& labels_per_frame) {
  Recording rec;
  rec.scene = scene;
  int f = 1;
  for (const auto& labels : labels_per_frame) {
    FrameObservation obs = FrameObservation::empty(scene, f++);
    for (int id = 1; id <= scene.n_targets(); ++id) obs.position[id] = Position3D{double(id), 0.0, 0.0};
    for (int a = 1; a <= scene.n_active(); ++a) {
      obs.vfoa[a] = labels[a];
      if (scene.is_tracked(a)) obs.head[a] = Direction(0.0, 0.0);
    }
    rec.frames.push_back(obs);
  }
  return rec;
}

std::array<double, 15> random_table_values(std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::array<double, 15> p{};
  for (int grp = 0; grp < 5; ++grp) {
    const auto [lo, hi] = TransitionTable::group_range(grp);
    double s = 0.0;
    for (int n = lo; n < hi; ++n) s += (p[n - 1] = g(rng));
    for (int n = lo; n < hi; ++n) p[n - 1] /= s;
  }
  return p;
}

}  // namespace

TEST(TransitionTable, DefaultIsUniformPerGroup) {
  const TransitionTable t;
  EXPECT_DOUBLE_EQ(t.p(1), 0.5);
  EXPECT_DOUBLE_EQ(t.p(4), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.p(15), 0.25);
}

TEST(TransitionTable, RejectsInvalidEntries) {
  auto p = TransitionTable().values();
  p[0] = 0.6;
  EXPECT_THROW(TransitionTable{p}, InvalidArgument);
  p = TransitionTable().values();
  p[2] = -0.1;
  p[3] += 0.1;
  EXPECT_THROW(TransitionTable{p}, InvalidArgument);
  EXPECT_THROW(TransitionTable().p(16), InvalidArgument);
}

TEST(TransitionTable, Groups) {
  EXPECT_EQ(TransitionTable::group_of(2), 0);
  EXPECT_EQ(TransitionTable::group_of(5), 1);
  EXPECT_EQ(TransitionTable::group_of(8), 2);
  EXPECT_EQ(TransitionTable::group_of(11), 3);
  EXPECT_EQ(TransitionTable::group_of(12), 4);
  EXPECT_EQ(TransitionTable::group_range(4), (std::pair<int, int>{12, 16}));
}

TEST(TransitionProb, PassivePreviousTarget) {
  const Scene s = make_scene(2, 2);
  const TransitionTable t = table_with({{3, 0.2}, {4, 0.7}, {5, 0.1}});
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 2, 3, 3), 0.7);
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 2, 4, 3), 0.05);
  double sum = 0.0;
  for (int j : {0, 1, 3, 4}) sum += transition_prob(t, s, 2, j, 3);
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_THROW(transition_prob(t, s, 2, 2, 3), InvalidArgument);
}

TEST(TransitionProb, ActivePreviousTargetCases) {
  const Scene s = make_scene(3, 1);
  std::mt19937_64 rng(17);
  const TransitionTable t(random_table_values(rng));
  // i = 1 looked at k = 2, who looked at l.
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 0, 2, 0), t.p(6));
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 2, 2, 0), t.p(7));
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 3, 2, 0), t.p(8) / 2.0);
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 2, 2, 1), t.p(10));
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 4, 2, 1), t.p(11) / 2.0);
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 0, 2, 3), t.p(12));
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 2, 2, 3), t.p(13));
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 3, 2, 3), t.p(14));
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 4, 2, 3), t.p(15));
  EXPECT_THROW(transition_prob(t, s, 1, 0, 2), InvalidArgument);
  EXPECT_THROW(transition_prob(t, s, 1, 0, 2, 2), InvalidArgument);
}

TEST(TransitionProb, EmptyResidualRedistributesProportionally) {
  // N=1, M=1: person 1 with eligible {0, 2}. From the passive target the
  // residual set {labels other than 0 and 2} is empty.
  const Scene s = make_scene(1, 1);
  const TransitionTable t = table_with({{3, 0.2}, {4, 0.6}, {5, 0.2}});
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 0, 2), 0.25);
  EXPECT_DOUBLE_EQ(transition_prob(t, s, 1, 2, 2), 0.75);
  const TransitionTable z = table_with({{3, 0.0}, {4, 0.0}, {5, 1.0}});
  EXPECT_DOUBLE_EQ(transition_prob(z, s, 1, 0, 2), 0.5);
  EXPECT_DOUBLE_EQ(transition_prob(z, s, 1, 2, 2), 0.5);
}

TEST(TransitionProb, RowsSumToOneOnRandomScenes) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int m = static_cast<int>(rng() % 5);
    const Scene s = make_scene(n, m);
    const TransitionTable t(random_table_values(rng));
    for (int i : s.tracked()) {
      for (int k : eligible_vfoa_labels(s, i)) {
        std::vector<std::optional<int>> ls{std::nullopt};
        if (s.is_active(k)) {
          ls.clear();
          for (int l : eligible_vfoa_labels(s, k)) ls.push_back(l);
        }
        for (const auto& l : ls) {
          double sum = 0.0;
          for (int j : eligible_vfoa_labels(s, i)) sum += transition_prob(t, s, i, j, k, l);
          EXPECT_NEAR(sum, 1.0, 1e-12);
          EXPECT_DOUBLE_EQ(transition_row(t, s, i, k, l)[i], 0.0);
        }
      }
    }
  }
}

TEST(MarginalPrior, PassiveEqualsDirect) {
  const Scene s = make_scene(2, 2);
  std::mt19937_64 rng(1);
  const TransitionTable t(random_table_values(rng));
  for (int j : {0, 1, 3, 4}) {
    EXPECT_DOUBLE_EQ(marginal_transition_prior(t, s, 2, j, 3, {}), transition_prob(t, s, 2, j, 3));
  }
}

TEST(MarginalPrior, PointMassAndMixture) {
  const Scene s = make_scene(3, 2);
  std::mt19937_64 rng(2);
  const TransitionTable t(random_table_values(rng));
  std::vector<double> point(6, 0.0);
  point[4] = 1.0;
  for (int j : {0, 2, 3, 4, 5}) {
    EXPECT_DOUBLE_EQ(marginal_transition_prior(t, s, 1, j, 2, point), transition_prob(t, s, 1, j, 2, 4));
  }
  std::vector<double> half(6, 0.0);
  half[0] = 0.5;
  half[1] = 0.5;  // l = i
  EXPECT_NEAR(marginal_transition_prior(t, s, 1, 2, 2, half), 0.5 * t.p(7) + 0.5 * t.p(10), 1e-15);
  std::vector<double> bad(6, 0.0);
  bad[0] = 0.9;
  EXPECT_THROW(marginal_transition_prior(t, s, 1, 2, 2, bad), InvalidArgument);
}

TEST(LearnTable, CountsFromNoTarget) {
  const Scene s = make_scene(1, 3);
  RecordingSet data{label_recording(s, {{0, 0}, {0, 0}, {0, 0}, {0, 3}, {0, 3}})};
  const TransitionTable t = learn_table(data);
  EXPECT_DOUBLE_EQ(t.p(1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.p(2), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.p(4), 1.0);
  EXPECT_DOUBLE_EQ(t.p(3), 0.0);
  EXPECT_DOUBLE_EQ(t.p(5), 0.0);
}

TEST(LearnTable, SingleTransitionAndFallback) {
  const Scene s = make_scene(1, 3);
  const TransitionTable t = learn_table({label_recording(s, {{0, 3}, {0, 3}})});
  EXPECT_DOUBLE_EQ(t.p(4), 1.0);
  EXPECT_DOUBLE_EQ(t.p(3), 0.0);
  EXPECT_DOUBLE_EQ(t.p(5), 0.0);
  EXPECT_DOUBLE_EQ(t.p(1), 0.5);
  EXPECT_DOUBLE_EQ(t.p(2), 0.5);
  EXPECT_DOUBLE_EQ(t.p(12), 0.25);
  const TransitionTable smooth = learn_table({label_recording(s, {{0, 3}, {0, 3}})}, {.add_one = true});
  EXPECT_DOUBLE_EQ(smooth.p(4), 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(smooth.p(3), 1.0 / 4.0);
}

TEST(LearnTable, ActiveCategoriesUseOtherPersonsPreviousLabel) {
  // Robot 1 untracked, persons 2 and 3 tracked, passive 4.
  const Scene s = make_scene(3, 1, {1});
  // frame labels: [unused, robot, p2, p3, unused]
  const std::vector<std::vector<int>> labels = {
      {0, 2, 1, 2, 0},  // p2 -> robot (robot looks at p2), p3 -> p2 (p2 looks at robot)
      {0, 2, 1, 2, 0},  // p2: k=1, l=2=i -> stays: p10. p3: k=2, l=1 other -> stays: p13
      {0, 0, 0, 1, 0},  // p2: k=1, l=2=i -> 0: p9. p3: k=2, l=1 -> j=1=l: p14
      {0, 0, 3, 4, 0},  // p2: k=0 -> 3: p2. p3: k=1, l=0 -> 4 other: p8
  };
  const TransitionCounts c = count_transitions(label_recording(s, labels));
  EXPECT_EQ(c.numer[10 - 1], 1);
  EXPECT_EQ(c.numer[13 - 1], 1);
  EXPECT_EQ(c.numer[9 - 1], 1);
  EXPECT_EQ(c.numer[14 - 1], 1);
  EXPECT_EQ(c.numer[2 - 1], 1);
  EXPECT_EQ(c.numer[8 - 1], 1);
  EXPECT_EQ(c.denom, (std::array<long long, 5>{1, 0, 1, 2, 2}));
}

TEST(LearnTable, RejectsUnannotatedFrames) {
  const Scene s = make_scene(1, 1);
  Recording rec = label_recording(s, {{0, 0}, {0, 2}, {0, 2}});
  rec.frames[1].vfoa[1].reset();
  EXPECT_THROW(learn_table({rec}), InvalidArgument);
}

TEST(LearnTable, GroupSumsExactAndOrderInvariant) {
  std::mt19937_64 rng(4);
  const Scene s = make_scene(3, 2, {1});
  std::vector<Recording> recs;
  for (int r = 0; r < 5; ++r) {
    std::vector<std::vector<int>> labels;
    for (int f = 0; f < 200; ++f) {
      std::vector<int> l(6, 0);
      for (int a = 1; a <= 3; ++a) {
        do {
          l[a] = static_cast<int>(rng() % 6);
        } while (l[a] == a);
      }
      labels.push_back(l);
    }
    recs.push_back(label_recording(s, labels));
  }
  const TransitionCounts c = count_transitions(recs);
  for (int g = 0; g < 5; ++g) {
    const auto [lo, hi] = TransitionTable::group_range(g);
    long long sum = 0;
    for (int n = lo; n < hi; ++n) sum += c.numer[n - 1];
    EXPECT_EQ(sum, c.denom[g]);
  }
  const TransitionTable t = table_from_counts(c);
  for (int g = 0; g < 5; ++g) {
    const auto [lo, hi] = TransitionTable::group_range(g);
    double sum = 0.0;
    for (int n = lo; n < hi; ++n) sum += t.p(n);
    EXPECT_NEAR(sum, 1.0, 4e-16);
  }
  std::vector<Recording> reversed(recs.rbegin(), recs.rend());
  EXPECT_EQ(learn_table(reversed), learn_table(recs));
}
