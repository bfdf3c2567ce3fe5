#include "ensrec/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ensrec/error.hpp"

namespace ensrec::metrics {

namespace {

inline double discount(std::size_t position) {
  return 1.0 / std::log2(static_cast<double>(position) + 2.0);
}

bool contains(std::span<const ItemIndex> sorted, ItemIndex item) {
  return std::binary_search(sorted.begin(), sorted.end(), item);
}

}  // namespace

double dcg(std::span<const int> rel) {
  if (rel.empty()) throw invalid_argument("empty list");
  double total = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (rel[i] != 0 && rel[i] != 1) throw invalid_argument("relevance must be 0 or 1");
    if (rel[i]) total += discount(i);
  }
  return total;
}

double idcg(int n) {
  if (n <= 0) throw invalid_argument("invalid length");
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += discount(i);
  return total;
}

double ndcg_user(std::span<const ItemIndex> ranked_items, std::span<const ItemIndex> holdout,
                 int n) {
  const double ideal = idcg(n);
  const std::size_t depth = std::min<std::size_t>(ranked_items.size(), n);
  double gain = 0.0;
  for (std::size_t i = 0; i < depth; ++i)
    if (contains(holdout, ranked_items[i])) gain += discount(i);
  return gain / ideal;
}

double ndcg_user(const RankedList& ranked, std::span<const ItemIndex> holdout, int n) {
  const double ideal = idcg(n);
  const std::size_t depth = std::min<std::size_t>(ranked.size(), n);
  double gain = 0.0;
  for (std::size_t i = 0; i < depth; ++i)
    if (contains(holdout, ranked[i].item)) gain += discount(i);
  return gain / ideal;
}

double ndcg_model(const std::vector<RankedList>& lists,
                  const std::vector<std::vector<ItemIndex>>& holdouts, int n,
                  PopulationPolicy policy) {
  if (n <= 0) throw invalid_argument("invalid length");
  static const RankedList kEmptyList;
  static const std::vector<ItemIndex> kEmptyHoldout;
  const std::size_t users = std::max(lists.size(), holdouts.size());
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t u = 0; u < users; ++u) {
    const auto& list = u < lists.size() ? lists[u] : kEmptyList;
    const auto& holdout = u < holdouts.size() ? holdouts[u] : kEmptyHoldout;
    if (holdout.empty()) {
      if (!policy.include_empty_holdout_users || list.empty()) continue;
      ++counted;
      continue;
    }
    total += ndcg_user(list, holdout, n);
    ++counted;
  }
  if (counted == 0) throw Error(ErrorKind::kRuntime, "empty evaluation population");
  return total / static_cast<double>(counted);
}

}  // namespace ensrec::metrics
