#include <vfoa/metrics.hpp>

#include <algorithm>
#include <numeric>
#include <string>

#include <vfoa/types.hpp>

namespace vfoa {

double frr(std::span<const int> pred, std::span<const std::optional<int>> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("frr: length mismatch");
  long long hit = 0;
  long long total = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    if (!gt[t]) continue;
    ++total;
    if (pred[t] == *gt[t]) ++hit;
  }
  if (total == 0) throw InvalidArgument("frr: no annotated frames");
  return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

double frr(std::span<const int> pred, std::span<const int> gt) {
  const AnnotatedSeq a(gt.begin(), gt.end());
  return frr(pred, std::span<const std::optional<int>>(a));
}

std::vector<std::vector<double>> ConfusionMatrix::normalized() const {
  std::vector<std::vector<double>> out(counts.size(), std::vector<double>(labels.size(), 0.0));
  for (std::size_t r = 0; r < counts.size(); ++r) {
    const long long row = std::accumulate(counts[r].begin(), counts[r].end(), 0LL);
    if (row == 0) continue;
    for (std::size_t c = 0; c < counts[r].size(); ++c) {
      out[r][c] = static_cast<double>(counts[r][c]) / static_cast<double>(row);
    }
  }
  return out;
}

long long ConfusionMatrix::total() const {
  long long s = 0;
  for (const auto& row : counts) s = std::accumulate(row.begin(), row.end(), s);
  return s;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const std::optional<int>> gt,
                          const std::vector<int>& labels) {
  if (pred.size() != gt.size()) throw InvalidArgument("confusion: length mismatch");
  ConfusionMatrix m;
  m.labels = labels;
  m.counts.assign(labels.size(), std::vector<long long>(labels.size(), 0));
  auto pos = [&](int l) -> std::optional<std::size_t> {
    const auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels.begin());
  };
  for (std::size_t t = 0; t < gt.size(); ++t) {
    if (!gt[t]) continue;
    const auto r = pos(*gt[t]);
    const auto c = pos(pred[t]);
    if (r && c) ++m.counts[*r][*c];
  }
  return m;
}

double mutual_gaze_score(const std::vector<LabelSeq>& tracks, const std::vector<int>& ids) {
  if (tracks.size() != ids.size()) throw InvalidArgument("mutual_gaze_score: tracks and ids differ in length");
  if (tracks.size() < 2) throw InvalidArgument("mutual_gaze_score: at least two persons required");
  const std::size_t T = tracks.front().size();
  for (const auto& tr : tracks) {
    if (tr.size() != T) throw InvalidArgument("mutual_gaze_score: tracks differ in length");
  }
  if (T == 0) throw InvalidArgument("mutual_gaze_score: empty tracks");
  std::size_t best = 0;
  for (std::size_t a = 0; a < tracks.size(); ++a) {
    for (std::size_t b = a + 1; b < tracks.size(); ++b) {
      std::size_t run = 0;
      for (std::size_t t = 0; t < T; ++t) {
        const bool mutual = tracks[a][t] == ids[b] && tracks[b][t] == ids[a];
        run = mutual ? run + 1 : 0;
        best = std::max(best, run);
      }
    }
  }
  return static_cast<double>(best) / static_cast<double>(T);
}

double srr(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw InvalidArgument("srr: length mismatch");
  if (scores.empty()) throw InvalidArgument("srr: no shots");
  std::size_t ok = 0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    if ((scores[s] >= threshold) == (labels[s] != 0)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(scores.size());
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 0) continue;
    ++positives;
    sum += static_cast<double>(positives) / static_cast<double>(r + 1);
  }
  if (positives == 0) throw InvalidArgument("average_precision: no positive labels");
  return sum / static_cast<double>(positives);
}

}  // namespace vfoa
