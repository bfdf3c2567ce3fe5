#include "ensrec/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ensrec/error.hpp"

namespace ensrec {

Vocabulary::Vocabulary(std::vector<std::string> ids) : names_(std::move(ids)) {
  std::sort(names_.begin(), names_.end());
  names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
}

std::optional<std::int32_t> Vocabulary::find(std::string_view id) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), id,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == names_.end() || *it != id) return std::nullopt;
  return static_cast<std::int32_t>(it - names_.begin());
}

std::int32_t Vocabulary::at(std::string_view id) const {
  auto index = find(id);
  if (!index) throw invalid_argument("unknown id '" + std::string(id) + "'");
  return *index;
}

Vocabulary Vocabulary::unite(const Vocabulary& a, const Vocabulary& b) {
  std::vector<std::string> all;
  all.reserve(a.size() + b.size());
  std::set_union(a.names_.begin(), a.names_.end(), b.names_.begin(), b.names_.end(),
                 std::back_inserter(all));
  Vocabulary out;
  out.names_ = std::move(all);
  return out;
}

namespace {

bool is_interaction(const InteractionRecord& r) { return !r.rating || *r.rating > 0.0; }

}  // namespace

Vocabulary InteractionDataset::users() const {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (is_interaction(r)) ids.push_back(r.user);
  return Vocabulary(std::move(ids));
}

Vocabulary InteractionDataset::items() const {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (is_interaction(r)) ids.push_back(r.item);
  return Vocabulary(std::move(ids));
}

InteractionDataset make_dataset(std::vector<InteractionRecord> records,
                                std::size_t malformed_rows) {
  for (const auto& r : records) {
    if (r.user.empty() || r.item.empty())
      throw invalid_argument("interaction with empty user or item id");
  }
  // Stable so that "last occurrence" survives among equal timestamps.
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.user != b.user) return a.user < b.user;
    return a.item < b.item;
  });
  InteractionDataset out;
  out.malformed_rows = malformed_rows;
  for (auto& r : records) {
    if (!out.records.empty() && out.records.back().user == r.user &&
        out.records.back().item == r.item) {
      auto& kept = out.records.back();
      const bool newer = !kept.timestamp || !r.timestamp || *r.timestamp >= *kept.timestamp;
      if (newer) kept = std::move(r);
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

const char* subset_name(Subset subset) {
  switch (subset) {
    case Subset::kTrain: return "train";
    case Subset::kValidation: return "validation";
    case Subset::kTest: return "test";
  }
  return "?";
}

std::optional<Subset> parse_subset(std::string_view name) {
  if (name == "train") return Subset::kTrain;
  if (name == "validation") return Subset::kValidation;
  if (name == "test") return Subset::kTest;
  return std::nullopt;
}

const std::vector<std::vector<ItemIndex>>& FoldSplit::subset(Subset s) const {
  switch (s) {
    case Subset::kTrain: return train;
    case Subset::kValidation: return validation;
    case Subset::kTest: return test;
  }
  return train;
}

std::vector<std::vector<ItemIndex>>& FoldSplit::subset(Subset s) {
  return const_cast<std::vector<std::vector<ItemIndex>>&>(std::as_const(*this).subset(s));
}

FoldSet FoldSet::reindexed(const Vocabulary& new_users, const Vocabulary& new_items) const {
  std::vector<ItemIndex> item_map(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) item_map[i] = new_items.at(items.name(i));
  FoldSet out{new_users, new_items, {}};
  for (const auto& fold : folds) {
    FoldSplit f;
    f.fold_index = fold.fold_index;
    for (Subset s : {Subset::kTrain, Subset::kValidation, Subset::kTest}) {
      auto& dst = f.subset(s);
      dst.assign(new_users.size(), {});
      const auto& src = fold.subset(s);
      for (std::size_t u = 0; u < src.size(); ++u) {
        if (src[u].empty()) continue;
        auto& row = dst[new_users.at(users.name(u))];
        for (ItemIndex i : src[u]) row.push_back(item_map[i]);
        std::sort(row.begin(), row.end());
      }
    }
    out.folds.push_back(std::move(f));
  }
  return out;
}

void FoldSet::validate() const {
  for (const auto& fold : folds) {
    for (Subset s : {Subset::kTrain, Subset::kValidation, Subset::kTest}) {
      if (fold.subset(s).size() != users.size())
        throw format_error("fold " + std::to_string(fold.fold_index) + ": subset size mismatch");
    }
    for (std::size_t u = 0; u < users.size(); ++u) {
      std::vector<ItemIndex> all;
      for (Subset s : {Subset::kTrain, Subset::kValidation, Subset::kTest}) {
        const auto& row = fold.subset(s)[u];
        if (!std::is_sorted(row.begin(), row.end()))
          throw format_error("fold " + std::to_string(fold.fold_index) + ": unsorted items");
        all.insert(all.end(), row.begin(), row.end());
      }
      std::sort(all.begin(), all.end());
      if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw format_error("fold " + std::to_string(fold.fold_index) + ", user '" +
                           users.name(u) + "': subsets overlap");
    }
  }
}

void validate_ranked_list(const RankedList& list, const std::string& context) {
  std::unordered_set<ItemIndex> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!std::isfinite(list[i].score))
      throw format_error(context + ": non-finite score at position " + std::to_string(i + 1));
    if (!seen.insert(list[i].item).second)
      throw format_error(context + ": duplicate item at position " + std::to_string(i + 1));
    if (i > 0 && !ranks_before(list[i - 1], list[i]))
      throw format_error(context + ": list not sorted at position " + std::to_string(i + 1));
  }
}

PredictionMatrix::PredictionMatrix(Vocabulary users, Vocabulary items,
                                   std::vector<std::string> models, int n_folds)
    : users_(std::move(users)),
      items_(std::move(items)),
      models_(std::move(models)),
      n_folds_(n_folds) {
  if (n_folds < 1) throw invalid_argument("matrix needs at least one fold");
  for (std::size_t m = 0; m < models_.size(); ++m) {
    if (models_[m].empty()) throw invalid_argument("empty model id");
    for (std::size_t o = 0; o < m; ++o)
      if (models_[o] == models_[m]) throw invalid_argument("duplicate model id '" + models_[m] + "'");
  }
  lists_.assign(n_folds_, std::vector<std::vector<RankedList>>(
                              models_.size(), std::vector<RankedList>(users_.size())));
  nonempty_.assign(n_folds_, std::vector<std::size_t>(models_.size(), 0));
}

std::optional<std::size_t> PredictionMatrix::model_index(std::string_view model) const {
  for (std::size_t m = 0; m < models_.size(); ++m)
    if (models_[m] == model) return m;
  return std::nullopt;
}

std::size_t PredictionMatrix::require_model(std::string_view model) const {
  auto m = model_index(model);
  if (!m) throw invalid_argument("model '" + std::string(model) + "' not in prediction matrix");
  return *m;
}

void PredictionMatrix::check_slot(int fold, std::size_t model) const {
  if (fold < 0 || fold >= n_folds_)
    throw invalid_argument("fold " + std::to_string(fold) + " out of range");
  if (model >= models_.size()) throw invalid_argument("model index out of range");
}

bool PredictionMatrix::has(int fold, std::size_t model) const {
  check_slot(fold, model);
  return nonempty_[fold][model] > 0;
}

const RankedList& PredictionMatrix::list(int fold, std::size_t model, UserIndex user) const {
  return lists_[fold][model][user];
}

const std::vector<RankedList>& PredictionMatrix::user_lists(int fold, std::size_t model) const {
  check_slot(fold, model);
  return lists_[fold][model];
}

void PredictionMatrix::set_list(int fold, std::size_t model, UserIndex user, RankedList list) {
  check_slot(fold, model);
  if (user < 0 || static_cast<std::size_t>(user) >= users_.size())
    throw invalid_argument("user index out of range");
  validate_ranked_list(list, "fold " + std::to_string(fold) + ", model '" + models_[model] +
                                 "', user '" + users_.name(user) + "'");
  for (const auto& s : list)
    if (s.item < 0 || static_cast<std::size_t>(s.item) >= items_.size())
      throw invalid_argument("item index out of range");
  auto& slot = lists_[fold][model][user];
  if (!slot.empty()) --nonempty_[fold][model];
  if (!list.empty()) ++nonempty_[fold][model];
  slot = std::move(list);
}

std::size_t PredictionMatrix::min_nonempty_length(int fold, std::size_t model) const {
  check_slot(fold, model);
  std::size_t best = 0;
  bool any = false;
  for (const auto& l : lists_[fold][model]) {
    if (l.empty()) continue;
    best = any ? std::min(best, l.size()) : l.size();
    any = true;
  }
  return best;
}

PredictionMatrix PredictionMatrix::reindexed(const Vocabulary& new_users,
                                             const Vocabulary& new_items) const {
  PredictionMatrix out(new_users, new_items, models_, n_folds_);
  std::vector<ItemIndex> item_map(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) item_map[i] = new_items.at(items_.name(i));
  for (int f = 0; f < n_folds_; ++f) {
    for (std::size_t m = 0; m < models_.size(); ++m) {
      for (std::size_t u = 0; u < users_.size(); ++u) {
        const auto& src = lists_[f][m][u];
        if (src.empty()) continue;
        RankedList mapped;
        mapped.reserve(src.size());
        for (const auto& s : src) mapped.push_back({item_map[s.item], s.score});
        // Ties may reorder when item ranks change under the new vocabulary.
        std::stable_sort(mapped.begin(), mapped.end(), ranks_before);
        out.set_list(f, m, new_users.at(users_.name(u)), std::move(mapped));
      }
    }
  }
  return out;
}

void PredictionMatrix::absorb(const PredictionMatrix& other) {
  if (!(other.users_ == users_) || !(other.items_ == items_) || other.n_folds_ != n_folds_)
    throw invalid_argument("cannot merge matrices over different ids or folds");
  for (const auto& model : other.models_)
    if (model_index(model)) throw invalid_argument("duplicate model id '" + model + "'");
  models_.insert(models_.end(), other.models_.begin(), other.models_.end());
  for (int f = 0; f < n_folds_; ++f) {
    for (std::size_t m = 0; m < other.models_.size(); ++m) {
      lists_[f].push_back(other.lists_[f][m]);
      nonempty_[f].push_back(other.nonempty_[f][m]);
    }
  }
}

bool PredictionMatrix::operator==(const PredictionMatrix& other) const {
  return users_ == other.users_ && items_ == other.items_ && models_ == other.models_ &&
         n_folds_ == other.n_folds_ && lists_ == other.lists_;
}

double ModelWeights::at(int fold, const std::string& model) const {
  auto it = values.find({fold, model});
  if (it == values.end())
    throw invalid_argument("no weight for fold " + std::to_string(fold) + ", model '" + model + "'");
  return it->second;
}

std::string join_members(const std::vector<std::string>& members) {
  std::string out;
  for (const auto& m : members) {
    if (!out.empty()) out += '+';
    out += m;
  }
  return out;
}

std::vector<std::string> split_members(std::string_view joined) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= joined.size()) {
    auto end = joined.find('+', start);
    if (end == std::string_view::npos) end = joined.size();
    if (end > start) out.emplace_back(joined.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace ensrec
