#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "ensrec/types.hpp"

namespace ensrec::data {

// Column references are header names, or 0-based indices written as digits.
struct ColumnMap {
  std::string user = "0";
  std::string item = "1";
  std::optional<std::string> rating;
  std::optional<std::string> timestamp;
};

struct LoadOptions {
  // "csv", "tsv", or any other literal delimiter such as "::".
  std::string format = "csv";
  bool header = true;
  ColumnMap columns;
};

std::string delimiter_for(const std::string& format);

// Rows with too few fields, empty ids or unparsable numbers are skipped and
// counted in malformed_rows.
InteractionDataset load_interactions(const std::string& path, const LoadOptions& options);

struct SplitSpec {
  int n_folds = 5;
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
  // Users with fewer interactions keep everything in train.
  int min_interactions = 5;

  void validate() const;
};

// Independent per-user random re-splits, one per fold. Users are visited in
// ascending id order and only users with at least min_interactions items draw
// from the fold's generator. Each such user's items, sorted by id, are
// shuffled; the first n_train go to train, the next n_val to validation and
// the rest to test, where n_val = floor(validation * n),
// n_test = floor(test * n) and train takes the remainder.
FoldSet split_folds(const InteractionDataset& dataset, const SplitSpec& spec);

// Audit format: `fold,user,item,subset`, sorted by fold, user, item.
void write_splits(const FoldSet& folds, const std::string& path);
FoldSet read_splits(const std::string& path);

// `fold,model,user,item,score`; rows grouped by (fold, model, user), scores
// descending within a group with 17 significant digits.
void write_matrix(const PredictionMatrix& matrix, const std::string& path);
// Rejects non-finite scores, duplicates, out-of-order rows and split groups,
// citing the line number.
PredictionMatrix read_matrix(const std::string& path);

// `fold,model,n,weight`.
void write_weights(const ModelWeights& weights, const std::string& path);
ModelWeights read_weights(const std::string& path);

// Reindexes both onto the union of their id sets.
std::pair<PredictionMatrix, FoldSet> align(const PredictionMatrix& matrix, const FoldSet& folds);

// Number of nonempty lists shorter than `depth`.
std::size_t count_short_lists(const PredictionMatrix& matrix, std::size_t depth);

}  // namespace ensrec::data
