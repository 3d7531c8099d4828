#include <vfoa/transitions.hpp>

#include <cmath>
#include <numeric>
#include <string>

#include <vfoa/tracker.hpp>

namespace vfoa {

namespace {

constexpr std::array<int, TransitionTable::kGroups + 1> kGroupStart = {1, 3, 6, 9, 12, 16};

struct Category {
  double mass;
  std::vector<int> members;
};

void check_label(const Scene& scene, int label, const char* what) {
  if (label < 0 || label > scene.n_targets()) {
    throw InvalidArgument(std::string("transition: ") + what + " label " + std::to_string(label) + " out of range");
  }
}

}  // namespace

TransitionTable::TransitionTable() {
  for (int g = 0; g < kGroups; ++g) {
    const auto [lo, hi] = group_range(g);
    for (int n = lo; n < hi; ++n) p_[static_cast<std::size_t>(n - 1)] = 1.0 / (hi - lo);
  }
}

TransitionTable::TransitionTable(const std::array<double, kSize>& p) : p_(p) {
  for (int n = 1; n <= kSize; ++n) {
    const double v = p_[static_cast<std::size_t>(n - 1)];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("transition table: p" + std::to_string(n) + " = " + std::to_string(v) + " outside [0, 1]");
    }
  }
  for (int g = 0; g < kGroups; ++g) {
    const auto [lo, hi] = group_range(g);
    double sum = 0.0;
    for (int n = lo; n < hi; ++n) sum += p_[static_cast<std::size_t>(n - 1)];
    if (std::abs(sum - 1.0) > kGroupTolerance) {
      throw InvalidArgument("transition table: group p" + std::to_string(lo) + "..p" + std::to_string(hi - 1) +
                            " sums to " + std::to_string(sum));
    }
  }
}

double TransitionTable::p(int n) const {
  if (n < 1 || n > kSize) throw InvalidArgument("transition table: no entry p" + std::to_string(n));
  return p_[static_cast<std::size_t>(n - 1)];
}

int TransitionTable::group_of(int n) {
  for (int g = 0; g < kGroups; ++g) {
    if (n < kGroupStart[static_cast<std::size_t>(g + 1)]) return g;
  }
  throw InvalidArgument("transition table: no entry p" + std::to_string(n));
}

std::pair<int, int> TransitionTable::group_range(int g) {
  return {kGroupStart[static_cast<std::size_t>(g)], kGroupStart[static_cast<std::size_t>(g + 1)]};
}

std::vector<double> transition_row(const TransitionTable& table, const Scene& scene, int i, int k,
                                   std::optional<int> l) {
  if (!scene.is_active(i)) throw InvalidArgument("transition: person " + std::to_string(i) + " is not active");
  check_label(scene, k, "previous");
  if (k == i) throw InvalidArgument("transition: previous label equals the person itself");

  const int n_labels = scene.n_labels();
  auto rest = [&](std::initializer_list<int> excluded) {
    std::vector<int> members;
    for (int j = 0; j < n_labels; ++j) {
      if (j == i) continue;
      bool skip = false;
      for (int e : excluded) skip = skip || (j == e);
      if (!skip) members.push_back(j);
    }
    return members;
  };

  std::vector<Category> cats;
  if (k == 0) {
    cats = {{table.p(1), {0}}, {table.p(2), rest({0})}};
  } else if (scene.is_passive(k)) {
    cats = {{table.p(3), {0}}, {table.p(4), {k}}, {table.p(5), rest({0, k})}};
  } else {
    if (!l) throw InvalidArgument("transition: previous label of active target " + std::to_string(k) + " required");
    check_label(scene, *l, "conditioning");
    if (*l == k) throw InvalidArgument("transition: active target cannot look at itself");
    if (*l == 0) {
      cats = {{table.p(6), {0}}, {table.p(7), {k}}, {table.p(8), rest({0, k})}};
    } else if (*l == i) {
      cats = {{table.p(9), {0}}, {table.p(10), {k}}, {table.p(11), rest({0, k})}};
    } else {
      cats = {{table.p(12), {0}}, {table.p(13), {k}}, {table.p(14), {*l}}, {table.p(15), rest({0, k, *l})}};
    }
  }

  // Categories without eligible labels hand their mass to the others, in proportion.
  const std::size_t n_before = cats.size();
  std::erase_if(cats, [](const Category& c) { return c.members.empty(); });
  if (cats.size() != n_before) {
    double total = 0.0;
    for (const auto& c : cats) total += c.mass;
    for (auto& c : cats) c.mass = total > 0.0 ? c.mass / total : 1.0 / static_cast<double>(cats.size());
  }

  std::vector<double> row(static_cast<std::size_t>(n_labels), 0.0);
  for (const auto& c : cats) {
    const double share = c.mass / static_cast<double>(c.members.size());
    for (int j : c.members) row[static_cast<std::size_t>(j)] = share;
  }
  return row;
}

double transition_prob(const TransitionTable& table, const Scene& scene, int i, int j, int k, std::optional<int> l) {
  check_label(scene, j, "next");
  if (j == i) throw InvalidArgument("transition: next label equals the person itself");
  return transition_row(table, scene, i, k, l)[static_cast<std::size_t>(j)];
}

std::vector<double> marginal_transition_row(const TransitionTable& table, const Scene& scene, int i, int k,
                                            std::span<const double> c_prev_k) {
  if (!scene.is_active(k)) return transition_row(table, scene, i, k);

  if (c_prev_k.size() != static_cast<std::size_t>(scene.n_labels())) {
    throw InvalidArgument("marginal_transition_row: distribution size does not match the scene");
  }
  const double sum = std::accumulate(c_prev_k.begin(), c_prev_k.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidArgument("marginal_transition_row: distribution of target " + std::to_string(k) + " sums to " +
                          std::to_string(sum));
  }
  std::vector<double> row(static_cast<std::size_t>(scene.n_labels()), 0.0);
  for (int l = 0; l < scene.n_labels(); ++l) {
    const double w = c_prev_k[static_cast<std::size_t>(l)];
    if (w == 0.0) continue;
    if (l == k) throw InvalidArgument("marginal_transition_row: target distribution puts mass on itself");
    const auto r = transition_row(table, scene, i, k, l);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += w * r[j];
  }
  return row;
}

double marginal_transition_prior(const TransitionTable& table, const Scene& scene, int i, int j, int k,
                                 std::span<const double> c_prev_k) {
  check_label(scene, j, "next");
  if (j == i) throw InvalidArgument("transition: next label equals the person itself");
  return marginal_transition_row(table, scene, i, k, c_prev_k)[static_cast<std::size_t>(j)];
}

TransitionCounts& TransitionCounts::operator+=(const TransitionCounts& other) {
  for (std::size_t n = 0; n < numer.size(); ++n) numer[n] += other.numer[n];
  for (std::size_t g = 0; g < denom.size(); ++g) denom[g] += other.denom[g];
  return *this;
}

TransitionCounts count_transitions(const Recording& rec) {
  const Scene& scene = rec.scene;
  TransitionCounts c;
  if (rec.frames.size() < 2) return c;

  // Previous-frame labels of every active target, resolved once per frame.
  auto labels_at = [&](std::size_t f) {
    std::vector<int> labels(static_cast<std::size_t>(scene.n_active() + 1), 0);
    for (int a = 1; a <= scene.n_active(); ++a) {
      const auto v = known_vfoa(scene, rec.frames[f], a);
      if (!v) {
        throw InvalidArgument("learn_table: target " + std::to_string(a) + " has no VFOA at frame " +
                              std::to_string(rec.frames[f].frame) +
                              (rec.name.empty() ? std::string() : " of '" + rec.name + "'"));
      }
      labels[static_cast<std::size_t>(a)] = *v;
    }
    return labels;
  };

  auto prev = labels_at(0);
  for (std::size_t f = 1; f < rec.frames.size(); ++f) {
    auto cur = labels_at(f);
    for (int i : scene.tracked()) {
      const int k = prev[static_cast<std::size_t>(i)];
      const int j = cur[static_cast<std::size_t>(i)];
      auto hit = [&](int n) { ++c.numer[static_cast<std::size_t>(n - 1)]; };
      if (k == 0) {
        ++c.denom[0];
        hit(j == 0 ? 1 : 2);
      } else if (scene.is_passive(k)) {
        ++c.denom[1];
        hit(j == 0 ? 3 : j == k ? 4 : 5);
      } else {
        const int l = prev[static_cast<std::size_t>(k)];
        if (l == 0) {
          ++c.denom[2];
          hit(j == 0 ? 6 : j == k ? 7 : 8);
        } else if (l == i) {
          ++c.denom[3];
          hit(j == 0 ? 9 : j == k ? 10 : 11);
        } else {
          ++c.denom[4];
          hit(j == 0 ? 12 : j == k ? 13 : j == l ? 14 : 15);
        }
      }
    }
    prev = std::move(cur);
  }
  return c;
}

TransitionCounts count_transitions(const RecordingSet& data) {
  TransitionCounts total;
  for (const auto& rec : data) total += count_transitions(rec);
  return total;
}

TransitionTable table_from_counts(const TransitionCounts& counts, const LearnTableOptions& opts) {
  std::array<double, TransitionTable::kSize> p{};
  for (int g = 0; g < TransitionTable::kGroups; ++g) {
    const auto [lo, hi] = TransitionTable::group_range(g);
    const double pseudo = opts.add_one ? 1.0 : 0.0;
    const double denom = static_cast<double>(counts.denom[static_cast<std::size_t>(g)]) + pseudo * (hi - lo);
    for (int n = lo; n < hi; ++n) {
      const double numer = static_cast<double>(counts.numer[static_cast<std::size_t>(n - 1)]) + pseudo;
      p[static_cast<std::size_t>(n - 1)] = denom > 0.0 ? numer / denom : 1.0 / (hi - lo);
    }
  }
  return TransitionTable(p);
}

TransitionTable learn_table(const RecordingSet& data, const LearnTableOptions& opts) {
  return table_from_counts(count_transitions(data), opts);
}

}  // namespace vfoa
