#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ensrec/types.hpp"

namespace ensrec::baselines {

enum class Kind {
  kPopularity,
  kUserKnn,
  kItemKnn,
  kItemItemCosine,
  kItemItemTfidf,
  kItemItemBm25,
};

Kind parse_kind(std::string_view name);
const char* kind_name(Kind kind);

struct ModelParams {
  int nn = 20;       // neighborhood size for the kNN kinds
  double k1 = 1.2;   // BM25 saturation
  double b = 0.75;   // BM25 length normalization
};

struct ModelSpec {
  std::string id;
  Kind kind = Kind::kPopularity;
  ModelParams params;
};

// The six built-in models under their customary ids.
std::vector<ModelSpec> default_roster();

// Sparse row: (column, value) sorted by column.
using SparseRow = std::vector<std::pair<std::int32_t, double>>;

struct Recommendation;

class FittedModel {
 public:
  const std::string& id() const { return spec_.id; }
  Kind kind() const { return spec_.kind; }
  const ModelParams& params() const { return spec_.params; }
  std::size_t n_users() const { return train_.size(); }
  std::size_t n_items() const { return popularity_.size(); }

  // Train interaction count per item.
  const std::vector<int>& popularity() const { return popularity_; }
  // Item-item kinds: full similarity rows. Item-kNN: each item's top-nn
  // neighbors. User-kNN: each user's top-nn neighbors. Empty for popularity.
  const std::vector<SparseRow>& neighbors() const { return neighbors_; }
  // 0 when the pair never co-occurs or the model keeps no item similarities.
  double item_similarity(ItemIndex a, ItemIndex b) const;
  const std::vector<ItemIndex>& train_items(UserIndex user) const { return train_[user]; }

 private:
  friend FittedModel fit(const ModelSpec&, const std::vector<std::vector<ItemIndex>>&,
                         std::size_t);
  friend Recommendation recommend(const FittedModel&, UserIndex, int);

  ModelSpec spec_;
  std::vector<std::vector<ItemIndex>> train_;
  std::vector<int> popularity_;
  std::vector<SparseRow> neighbors_;
  // Item-kNN only: for item j, the items i that keep j as a neighbor.
  std::vector<SparseRow> reverse_neighbors_;
};

// `train_by_user[u]` holds user u's sorted train items; items are dense
// indices below n_items.
FittedModel fit(const ModelSpec& spec, const std::vector<std::vector<ItemIndex>>& train_by_user,
                std::size_t n_items);

struct Recommendation {
  RankedList items;
  // The user had no train data and got the popularity ranking.
  bool cold_start = false;
};

// Top-k items the user has not interacted with in train, drawn from the
// items seen in train. Scores descend, ties by ascending item.
Recommendation recommend(const FittedModel& model, UserIndex user, int k);

// Fits every model on every fold's train subset and stores each user's top
// k_max list. Users without train data get no entry.
PredictionMatrix generate_matrix(const std::vector<ModelSpec>& models, const FoldSet& folds,
                                 int k_max, int threads = 1);

}  // namespace ensrec::baselines
