#pragma once

// Frame- and shot-level evaluation metrics.

#include <optional>
#include <span>
#include <vector>

namespace vfoa {

using LabelSeq = std::vector<int>;
using AnnotatedSeq = std::vector<std::optional<int>>;

/// Frame recognition rate in percent over annotated frames (gaps in gt skipped).
double frr(std::span<const int> pred, std::span<const std::optional<int>> gt);
double frr(std::span<const int> pred, std::span<const int> gt);

struct ConfusionMatrix {
  std::vector<int> labels;
  /// counts[r][c]: frames with ground truth labels[r] predicted as labels[c].
  std::vector<std::vector<long long>> counts;

  /// Row-normalized view; empty rows stay zero. The diagonal holds per-label recall.
  std::vector<std::vector<double>> normalized() const;
  long long total() const;
};

/// Pairs whose gt or prediction falls outside `labels` are ignored.
ConfusionMatrix confusion(std::span<const int> pred, std::span<const std::optional<int>> gt,
                          const std::vector<int>& labels);

/// tracks[p] is the label sequence of the person with id ids[p]. Returns the
/// longest run of frames in which two persons look at each other, divided by T.
double mutual_gaze_score(const std::vector<LabelSeq>& tracks, const std::vector<int>& ids);

inline constexpr double kDefaultSrrThreshold = 0.25;

/// Fraction of shots where (score >= threshold) agrees with the binary label.
double srr(std::span<const double> scores, std::span<const int> labels, double threshold = kDefaultSrrThreshold);

/// Mean precision at the rank of each positive, scores sorted descending with
/// ties kept in input order.
double average_precision(std::span<const double> scores, std::span<const int> labels);

}  // namespace vfoa
