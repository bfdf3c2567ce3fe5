#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensrec/types.hpp"

namespace ensrec::fusion {

enum class Normalization {
  kGlobalMinMax,   // per (fold, model) over all of that model's scores
  kPerUserMinMax,  // per (fold, model, user) list
};

Normalization parse_normalization(std::string_view name);
const char* normalization_name(Normalization mode);

// Maps every score into [0, 1] with an affine min-max transform. A constant
// group maps to 1.0. Orders are preserved.
PredictionMatrix normalize_scores(const PredictionMatrix& matrix, Normalization mode);

struct WeightedList {
  const RankedList* list = nullptr;
  double weight = 0.0;
};

// Weighted-sum fusion for one user: every item in the first k entries of any
// member list scores sum(weight * score) over the lists it appears in. Returns
// the top n by fused score, ties by ascending item. Lists must be normalized.
RankedList fuse_user(std::span<const WeightedList> members, int k, int n);

// fuse_user for every user of `fold`, indexed by user. Users without a list in
// any member model get an empty list.
std::vector<RankedList> fuse_all(const PredictionMatrix& matrix, const ModelWeights& weights,
                                 const std::vector<std::string>& members, int fold, int k,
                                 int n);

}  // namespace ensrec::fusion
