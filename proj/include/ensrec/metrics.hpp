#pragma once

#include <span>
#include <vector>

#include "ensrec/types.hpp"

namespace ensrec::metrics {

// Binary relevance of a ranked list: rel[i] is 1 when the (i+1)-th item is in
// the holdout set.
using RelevanceVector = std::vector<int>;

// Sum of rel_i / log2(i + 1) over 1-based positions.
double dcg(std::span<const int> rel);

// DCG of an all-relevant list of length n. This is the denominator for every
// user regardless of holdout size, so NDCG stays below 1 when the holdout has
// fewer than n items.
double idcg(int n);

// Only the first n items count; shorter lists are padded with misses.
// `holdout` must be sorted.
double ndcg_user(std::span<const ItemIndex> ranked_items, std::span<const ItemIndex> holdout,
                 int n);
double ndcg_user(const RankedList& ranked, std::span<const ItemIndex> holdout, int n);

struct PopulationPolicy {
  // When false, users with an empty holdout are left out of the average.
  // When true, every user with a list or a holdout counts (empty holdout = 0).
  bool include_empty_holdout_users = false;
};

// Mean NDCG@n over the evaluated users, summed in ascending user order. Both
// vectors are indexed by user; `lists` may be shorter than `holdouts` or
// vice versa, missing entries read as empty.
double ndcg_model(const std::vector<RankedList>& lists,
                  const std::vector<std::vector<ItemIndex>>& holdouts, int n,
                  PopulationPolicy policy = {});

}  // namespace ensrec::metrics
