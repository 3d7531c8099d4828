#pragma once

// The 15-entry VFOA transition model.
//
// Given the previous label k of person i (and, when k is an active target, that
// target's own previous label l), the next label j of person i falls into one of
// a few categories. Each group below sums to one:
//
//   k = 0                 p1: j = 0      p2: j != 0
//   k passive             p3: j = 0      p4: j = k      p5: j other
//   k active, l = 0       p6: j = 0      p7: j = k      p8: j other
//   k active, l = i       p9: j = 0      p10: j = k     p11: j other
//   k active, l other     p12: j = 0     p13: j = k     p14: j = l     p15: j other
//
// The "other" masses (p2, p5, p8, p11, p15) are split uniformly over the
// eligible labels of their residual category.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <vfoa/scene.hpp>

namespace vfoa {

class TransitionTable {
 public:
  static constexpr int kSize = 15;
  static constexpr int kGroups = 5;
  /// Tolerance on group sums accepted by the constructor.
  static constexpr double kGroupTolerance = 1e-9;

  /// Uniform within every group.
  TransitionTable();
  /// Throws InvalidArgument unless each entry is in [0, 1] and groups sum to 1.
  explicit TransitionTable(const std::array<double, kSize>& p);

  /// 1-based accessor, p(1) .. p(15).
  double p(int n) const;
  const std::array<double, kSize>& values() const { return p_; }

  /// Group index (0..4) of entry n (1-based).
  static int group_of(int n);
  /// First and one-past-last entry (1-based) of group g.
  static std::pair<int, int> group_range(int g);

  bool operator==(const TransitionTable&) const = default;

 private:
  std::array<double, kSize> p_{};
};

/// Dense distribution over labels 0..N+M of person i's next VFOA, conditioned on
/// V_{t-1}^i = k and, for active k, V_{t-1}^k = l. Entry i is zero.
std::vector<double> transition_row(const TransitionTable& table, const Scene& scene, int i, int k,
                                   std::optional<int> l = std::nullopt);

/// P(V_t^i = j | V_{t-1}^i = k [, V_{t-1}^k = l]). `l` is required iff k is active.
double transition_prob(const TransitionTable& table, const Scene& scene, int i, int j, int k,
                       std::optional<int> l = std::nullopt);

/// Prior row for person i given V_{t-1}^i = k, marginalizing k's previous label
/// over `c_prev_k` (dense over labels, ignored unless k is active).
std::vector<double> marginal_transition_row(const TransitionTable& table, const Scene& scene, int i, int k,
                                            std::span<const double> c_prev_k);

double marginal_transition_prior(const TransitionTable& table, const Scene& scene, int i, int j, int k,
                                 std::span<const double> c_prev_k);

/// Kronecker-delta counts behind the 15 estimators. numer[n-1] counts transitions
/// of type n; denom[g] counts the conditioning events of group g.
struct TransitionCounts {
  std::array<long long, TransitionTable::kSize> numer{};
  std::array<long long, TransitionTable::kGroups> denom{};

  TransitionCounts& operator+=(const TransitionCounts& other);
};

/// Counts over every tracked person and frame pair (t-1, t) of every recording.
/// Throws InvalidArgument when a tracked person lacks an annotation or an
/// untracked active target has neither a VFOA nor a gaze.
TransitionCounts count_transitions(const RecordingSet& data);
TransitionCounts count_transitions(const Recording& rec);

struct LearnTableOptions {
  /// Add one pseudo-count to every category.
  bool add_one = false;
};

/// Ratios of counts. Groups with a zero denominator fall back to uniform.
TransitionTable table_from_counts(const TransitionCounts& counts, const LearnTableOptions& opts = {});

TransitionTable learn_table(const RecordingSet& data, const LearnTableOptions& opts = {});

}  // namespace vfoa
