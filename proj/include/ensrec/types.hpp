#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ensrec {

using UserIndex = std::int32_t;
using ItemIndex = std::int32_t;

// Sorted, duplicate-free set of external string ids. The dense index of an id
// is its rank, so ascending index order is ascending id order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> ids);

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(std::int32_t index) const { return names_[index]; }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::int32_t> find(std::string_view id) const;
  // Throws kInvalidArgument when the id is unknown.
  std::int32_t at(std::string_view id) const;

  static Vocabulary unite(const Vocabulary& a, const Vocabulary& b);

  bool operator==(const Vocabulary& other) const = default;

 private:
  std::vector<std::string> names_;
};

struct InteractionRecord {
  std::string user;
  std::string item;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;

  bool operator==(const InteractionRecord&) const = default;
};

// Raw interactions after loading: records sorted by (user, item), one record
// per pair.
struct InteractionDataset {
  std::vector<InteractionRecord> records;
  std::size_t malformed_rows = 0;

  // Users and items of the records that count as interactions (rating absent
  // or > 0).
  Vocabulary users() const;
  Vocabulary items() const;
};

// Validates and collapses duplicate (user, item) pairs, keeping the latest
// timestamp when present and the last occurrence otherwise.
InteractionDataset make_dataset(std::vector<InteractionRecord> records,
                                std::size_t malformed_rows = 0);

enum class Subset { kTrain, kValidation, kTest };

const char* subset_name(Subset subset);
std::optional<Subset> parse_subset(std::string_view name);

// One train/validation/test partition. Each vector is indexed by user and
// holds sorted item indices.
struct FoldSplit {
  int fold_index = 0;
  std::vector<std::vector<ItemIndex>> train;
  std::vector<std::vector<ItemIndex>> validation;
  std::vector<std::vector<ItemIndex>> test;

  const std::vector<std::vector<ItemIndex>>& subset(Subset s) const;
  std::vector<std::vector<ItemIndex>>& subset(Subset s);

  bool operator==(const FoldSplit&) const = default;
};

// All folds of one dataset over a shared id space.
struct FoldSet {
  Vocabulary users;
  Vocabulary items;
  std::vector<FoldSplit> folds;

  std::size_t n_folds() const { return folds.size(); }
  FoldSet reindexed(const Vocabulary& new_users, const Vocabulary& new_items) const;
  // Throws unless the three subsets are pairwise disjoint for every user.
  void validate() const;

  bool operator==(const FoldSet&) const = default;
};

struct ScoredItem {
  ItemIndex item = 0;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

using RankedList = std::vector<ScoredItem>;

// Descending score, then ascending item index.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

// Throws kFormat naming `context` if the list has a non-finite score, a
// duplicate item or is out of order.
void validate_ranked_list(const RankedList& list, const std::string& context);

// (fold, model, user) -> ranked list. Absent entries read as empty lists.
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  PredictionMatrix(Vocabulary users, Vocabulary items,
                   std::vector<std::string> models, int n_folds);

  const Vocabulary& users() const { return users_; }
  const Vocabulary& items() const { return items_; }
  const std::vector<std::string>& models() const { return models_; }
  int n_folds() const { return n_folds_; }

  std::optional<std::size_t> model_index(std::string_view model) const;
  std::size_t require_model(std::string_view model) const;

  // True when at least one user has a list for this (fold, model).
  bool has(int fold, std::size_t model) const;
  const RankedList& list(int fold, std::size_t model, UserIndex user) const;
  // All lists of one (fold, model), indexed by user.
  const std::vector<RankedList>& user_lists(int fold, std::size_t model) const;
  // Validates and stores; an empty list clears the entry.
  void set_list(int fold, std::size_t model, UserIndex user, RankedList list);

  std::size_t min_nonempty_length(int fold, std::size_t model) const;

  PredictionMatrix reindexed(const Vocabulary& new_users,
                             const Vocabulary& new_items) const;
  // Appends the models of `other`; both must share vocabularies and folds.
  void absorb(const PredictionMatrix& other);

  bool operator==(const PredictionMatrix& other) const;

 private:
  void check_slot(int fold, std::size_t model) const;

  Vocabulary users_;
  Vocabulary items_;
  std::vector<std::string> models_;
  int n_folds_ = 0;
  // [fold][model][user]
  std::vector<std::vector<std::vector<RankedList>>> lists_;
  std::vector<std::vector<std::size_t>> nonempty_;
};

struct ModelWeights {
  int cutoff_n = 0;
  std::map<std::pair<int, std::string>, double> values;

  double at(int fold, const std::string& model) const;
  bool operator==(const ModelWeights&) const = default;
};

struct EnsembleResult {
  std::vector<std::string> members;
  std::vector<double> per_fold_ndcg;
  double mean_ndcg = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int k = 0;
  int cutoff_n = 0;
};

std::string join_members(const std::vector<std::string>& members);
std::vector<std::string> split_members(std::string_view joined);

}  // namespace ensrec
