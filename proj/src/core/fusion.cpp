#include "ensrec/fusion.hpp"

#include <algorithm>
#include <limits>

#include "ensrec/error.hpp"

namespace ensrec::fusion {

Normalization parse_normalization(std::string_view name) {
  if (name == "global-minmax") return Normalization::kGlobalMinMax;
  if (name == "per-user-minmax") return Normalization::kPerUserMinMax;
  throw invalid_argument("unknown normalization mode '" + std::string(name) +
                         "' (expected global-minmax or per-user-minmax)");
}

const char* normalization_name(Normalization mode) {
  return mode == Normalization::kGlobalMinMax ? "global-minmax" : "per-user-minmax";
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(const RankedList& list) {
    for (const auto& s : list) {
      lo = std::min(lo, s.score);
      hi = std::max(hi, s.score);
    }
  }

  double map(double score) const {
    if (!(hi > lo)) return 1.0;
    return std::clamp((score - lo) / (hi - lo), 0.0, 1.0);
  }
};

RankedList rescale(const RankedList& list, const Range& range) {
  RankedList out;
  out.reserve(list.size());
  for (const auto& s : list) out.push_back({s.item, range.map(s.score)});
  // Distinct raw scores can collapse onto one normalized value.
  std::stable_sort(out.begin(), out.end(), ranks_before);
  return out;
}

}  // namespace

PredictionMatrix normalize_scores(const PredictionMatrix& matrix, Normalization mode) {
  PredictionMatrix out(matrix.users(), matrix.items(), matrix.models(), matrix.n_folds());
  const auto n_users = static_cast<UserIndex>(matrix.users().size());
  for (int f = 0; f < matrix.n_folds(); ++f) {
    for (std::size_t m = 0; m < matrix.models().size(); ++m) {
      Range global;
      if (mode == Normalization::kGlobalMinMax)
        for (UserIndex u = 0; u < n_users; ++u) global.add(matrix.list(f, m, u));
      for (UserIndex u = 0; u < n_users; ++u) {
        const auto& list = matrix.list(f, m, u);
        if (list.empty()) continue;
        Range range = global;
        if (mode == Normalization::kPerUserMinMax) {
          range = Range{};
          range.add(list);
        }
        out.set_list(f, m, u, rescale(list, range));
      }
    }
  }
  return out;
}

RankedList fuse_user(std::span<const WeightedList> members, int k, int n) {
  if (members.empty()) throw invalid_argument("no models");
  if (n < 1) throw invalid_argument("N must be >= 1");
  if (k < n) throw invalid_argument("k must be ≥ N");
  for (const auto& m : members)
    if (!(m.weight >= 0.0 && m.weight <= 1.0)) throw invalid_argument("weight outside [0, 1]");

  thread_local std::vector<ScoredItem> pool;
  pool.clear();
  for (const auto& m : members) {
    if (m.list == nullptr) continue;
    const std::size_t depth = std::min<std::size_t>(m.list->size(), k);
    for (std::size_t i = 0; i < depth; ++i)
      pool.push_back({(*m.list)[i].item, m.weight * (*m.list)[i].score});
  }
  // Stable sort keeps member order within an item, so sums accumulate in
  // member order.
  std::stable_sort(pool.begin(), pool.end(),
                   [](const ScoredItem& a, const ScoredItem& b) { return a.item < b.item; });
  RankedList fused;
  for (const auto& entry : pool) {
    if (!fused.empty() && fused.back().item == entry.item)
      fused.back().score += entry.score;
    else
      fused.push_back(entry);
  }
  const std::size_t keep = std::min<std::size_t>(fused.size(), n);
  std::partial_sort(fused.begin(), fused.begin() + static_cast<std::ptrdiff_t>(keep), fused.end(),
                    ranks_before);
  fused.resize(keep);
  return fused;
}

std::vector<RankedList> fuse_all(const PredictionMatrix& matrix, const ModelWeights& weights,
                                 const std::vector<std::string>& members, int fold, int k,
                                 int n) {
  if (members.empty()) throw invalid_argument("no models");
  if (n < 1) throw invalid_argument("N must be >= 1");
  if (k < n) throw invalid_argument("k must be ≥ N");
  std::vector<std::size_t> indices;
  std::vector<double> member_weights;
  for (const auto& id : members) {
    indices.push_back(matrix.require_model(id));
    member_weights.push_back(weights.at(fold, id));
  }
  const auto n_users = static_cast<UserIndex>(matrix.users().size());
  std::vector<RankedList> out(n_users);
  std::vector<WeightedList> lists;
  for (UserIndex u = 0; u < n_users; ++u) {
    lists.clear();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto& list = matrix.list(fold, indices[i], u);
      if (!list.empty()) lists.push_back({&list, member_weights[i]});
    }
    if (lists.empty()) continue;
    out[u] = fuse_user(lists, k, n);
  }
  return out;
}

}  // namespace ensrec::fusion
