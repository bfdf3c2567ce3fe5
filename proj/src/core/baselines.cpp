#include "ensrec/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "ensrec/error.hpp"
#include "ensrec/parallel.hpp"

namespace ensrec::baselines {

Kind parse_kind(std::string_view name) {
  if (name == "popularity") return Kind::kPopularity;
  if (name == "user-knn") return Kind::kUserKnn;
  if (name == "item-knn") return Kind::kItemKnn;
  if (name == "item-item-cosine") return Kind::kItemItemCosine;
  if (name == "item-item-tfidf") return Kind::kItemItemTfidf;
  if (name == "item-item-bm25") return Kind::kItemItemBm25;
  throw invalid_argument("unknown model kind '" + std::string(name) + "'");
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::kPopularity: return "popularity";
    case Kind::kUserKnn: return "user-knn";
    case Kind::kItemKnn: return "item-knn";
    case Kind::kItemItemCosine: return "item-item-cosine";
    case Kind::kItemItemTfidf: return "item-item-tfidf";
    case Kind::kItemItemBm25: return "item-item-bm25";
  }
  return "?";
}

std::vector<ModelSpec> default_roster() {
  return {
      {"PPL", Kind::kPopularity, {}},
      {"U-KNN", Kind::kUserKnn, {}},
      {"I-KNN", Kind::kItemKnn, {}},
      {"I-I-COSINE", Kind::kItemItemCosine, {}},
      {"I-I-TFIDF", Kind::kItemItemTfidf, {}},
      {"I-I-BM25", Kind::kItemItemBm25, {}},
  };
}

namespace {

bool item_based(Kind kind) {
  return kind == Kind::kItemKnn || kind == Kind::kItemItemCosine ||
         kind == Kind::kItemItemTfidf || kind == Kind::kItemItemBm25;
}

// Per-(user, item) entry weight before the cosine.
std::vector<std::vector<double>> entry_weights(const ModelSpec& spec,
                                               const std::vector<std::vector<ItemIndex>>& train,
                                               const std::vector<int>& df) {
  std::size_t active_users = 0;
  double total_length = 0.0;
  for (const auto& row : train) {
    if (row.empty()) continue;
    ++active_users;
    total_length += static_cast<double>(row.size());
  }
  const double avg_length = active_users ? total_length / active_users : 0.0;
  const double users = static_cast<double>(active_users);

  std::vector<std::vector<double>> weights(train.size());
  for (std::size_t u = 0; u < train.size(); ++u) {
    const auto& row = train[u];
    auto& w = weights[u];
    w.reserve(row.size());
    const double length = static_cast<double>(row.size());
    for (ItemIndex i : row) {
      const double idf = std::log(users / static_cast<double>(df[i]));
      switch (spec.kind) {
        case Kind::kItemItemTfidf:
          w.push_back(idf / length);
          break;
        case Kind::kItemItemBm25: {
          const double k1 = spec.params.k1;
          const double b = spec.params.b;
          w.push_back(idf * (k1 + 1.0) / (1.0 + k1 * (1.0 - b + b * length / avg_length)));
          break;
        }
        default:
          w.push_back(1.0);
      }
    }
  }
  return weights;
}

// Cosine similarity between rows of the transposed incidence matrix. `rows`
// lists, per entity, the (other-side index, weight) pairs; `cols` is the same
// data indexed from the other side.
std::vector<SparseRow> cosine_rows(const std::vector<SparseRow>& rows,
                                   const std::vector<SparseRow>& cols) {
  std::vector<double> norm(rows.size(), 0.0);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    double sq = 0.0;
    for (const auto& [c, w] : rows[a]) sq += w * w;
    norm[a] = std::sqrt(sq);
  }
  std::vector<SparseRow> out(rows.size());
  std::vector<double> acc(rows.size(), 0.0);
  std::vector<std::int32_t> touched;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (norm[a] == 0.0) continue;
    touched.clear();
    // Ascending over the shared side so sim(a, b) and sim(b, a) sum in the
    // same order.
    for (const auto& [c, wa] : rows[a]) {
      for (const auto& [b, wb] : cols[c]) {
        if (acc[b] == 0.0) touched.push_back(b);
        acc[b] += wa * wb;
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& row = out[a];
    for (auto b : touched) {
      const double dot = acc[b];
      acc[b] = 0.0;
      if (norm[b] == 0.0 || dot == 0.0) continue;
      row.emplace_back(b, dot / (norm[a] * norm[b]));
    }
  }
  return out;
}

SparseRow top_neighbors(const SparseRow& row, std::int32_t self, int nn) {
  SparseRow kept;
  for (const auto& entry : row)
    if (entry.first != self && entry.second > 0.0) kept.push_back(entry);
  auto better = [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  };
  if (kept.size() > static_cast<std::size_t>(nn)) {
    std::partial_sort(kept.begin(), kept.begin() + nn, kept.end(), better);
    kept.resize(nn);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

FittedModel fit(const ModelSpec& spec, const std::vector<std::vector<ItemIndex>>& train_by_user,
                std::size_t n_items) {
  if (spec.id.empty()) throw invalid_argument("model id must be nonempty");
  if (spec.params.nn < 1) throw invalid_argument("nn must be >= 1");
  if (!(spec.params.k1 >= 0.0)) throw invalid_argument("k1 must be >= 0");
  if (!(spec.params.b >= 0.0 && spec.params.b <= 1.0)) throw invalid_argument("b must be in [0, 1]");

  FittedModel model;
  model.spec_ = spec;
  model.train_ = train_by_user;
  model.popularity_.assign(n_items, 0);
  std::size_t total = 0;
  for (auto& row : model.train_) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (ItemIndex i : row) {
      if (i < 0 || static_cast<std::size_t>(i) >= n_items)
        throw invalid_argument("train item index out of range");
      ++model.popularity_[i];
    }
    total += row.size();
  }
  if (total == 0) throw invalid_argument("empty train");

  if (spec.kind == Kind::kPopularity) return model;

  const auto weights = entry_weights(spec, model.train_, model.popularity_);
  std::vector<SparseRow> by_user(model.train_.size());
  std::vector<SparseRow> by_item(n_items);
  for (std::size_t u = 0; u < model.train_.size(); ++u) {
    for (std::size_t j = 0; j < model.train_[u].size(); ++j) {
      const ItemIndex i = model.train_[u][j];
      by_user[u].emplace_back(i, weights[u][j]);
      by_item[i].emplace_back(static_cast<std::int32_t>(u), weights[u][j]);
    }
  }

  if (spec.kind == Kind::kUserKnn) {
    const auto sims = cosine_rows(by_user, by_item);
    model.neighbors_.resize(sims.size());
    for (std::size_t u = 0; u < sims.size(); ++u)
      model.neighbors_[u] = top_neighbors(sims[u], static_cast<std::int32_t>(u), spec.params.nn);
    return model;
  }

  auto sims = cosine_rows(by_item, by_user);
  if (spec.kind == Kind::kItemKnn) {
    model.neighbors_.resize(n_items);
    model.reverse_neighbors_.resize(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
      model.neighbors_[i] = top_neighbors(sims[i], static_cast<std::int32_t>(i), spec.params.nn);
      for (const auto& [j, s] : model.neighbors_[i])
        model.reverse_neighbors_[j].emplace_back(static_cast<std::int32_t>(i), s);
    }
  } else {
    model.neighbors_ = std::move(sims);
  }
  return model;
}

double FittedModel::item_similarity(ItemIndex a, ItemIndex b) const {
  if (!item_based(spec_.kind)) return 0.0;
  const auto& row = neighbors_[a];
  auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(b, -1e300));
  if (it == row.end() || it->first != b) return 0.0;
  return it->second;
}

namespace {

RankedList top_k(const std::vector<double>& scores, const std::vector<int>& popularity,
                 const std::vector<ItemIndex>& exclude, int k) {
  RankedList candidates;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (popularity[i] == 0) continue;  // never seen in train
    if (std::binary_search(exclude.begin(), exclude.end(), static_cast<ItemIndex>(i))) continue;
    candidates.push_back({static_cast<ItemIndex>(i), scores[i]});
  }
  const auto keep = std::min<std::size_t>(candidates.size(), k);
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), ranks_before);
  candidates.resize(keep);
  return candidates;
}

std::vector<double> popularity_scores(const FittedModel& model) {
  std::vector<double> scores(model.n_items());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = model.popularity()[i];
  return scores;
}

}  // namespace

Recommendation recommend(const FittedModel& model, UserIndex user, int k) {
  if (k < 1) throw invalid_argument("k must be >= 1");
  static const std::vector<ItemIndex> kNone;
  const bool known = user >= 0 && static_cast<std::size_t>(user) < model.n_users() &&
                     !model.train_[user].empty();
  if (!known) return {top_k(popularity_scores(model), model.popularity_, kNone, k), true};

  const auto& profile = model.train_[user];
  std::vector<double> scores(model.n_items(), 0.0);
  switch (model.kind()) {
    case Kind::kPopularity:
      scores = popularity_scores(model);
      break;
    case Kind::kUserKnn:
      for (const auto& [v, s] : model.neighbors_[user])
        for (ItemIndex i : model.train_[v]) scores[i] += s;
      break;
    case Kind::kItemKnn:
      for (ItemIndex j : profile)
        for (const auto& [i, s] : model.reverse_neighbors_[j]) scores[i] += s;
      break;
    default:
      for (ItemIndex j : profile)
        for (const auto& [i, s] : model.neighbors_[j]) scores[i] += s;
  }
  return {top_k(scores, model.popularity_, profile, k), false};
}

PredictionMatrix generate_matrix(const std::vector<ModelSpec>& models, const FoldSet& folds,
                                 int k_max, int threads) {
  if (k_max < 1) throw invalid_argument("k_max must be >= 1");
  std::vector<std::string> ids;
  for (const auto& m : models) ids.push_back(m.id);
  PredictionMatrix matrix(folds.users, folds.items, ids, static_cast<int>(folds.n_folds()));

  const std::size_t tasks = folds.n_folds() * models.size();
  std::vector<std::vector<RankedList>> lists(tasks);
  parallel_for(tasks, threads, [&](std::size_t t) {
    const std::size_t f = t / models.size();
    const std::size_t m = t % models.size();
    const auto& train = folds.folds[f].train;
    const auto model = fit(models[m], train, folds.items.size());
    auto& out = lists[t];
    out.resize(train.size());
    for (std::size_t u = 0; u < train.size(); ++u) {
      if (train[u].empty()) continue;
      out[u] = recommend(model, static_cast<UserIndex>(u), k_max).items;
    }
  });
  for (std::size_t t = 0; t < tasks; ++t) {
    const int f = static_cast<int>(t / models.size());
    const std::size_t m = t % models.size();
    for (std::size_t u = 0; u < lists[t].size(); ++u)
      if (!lists[t][u].empty())
        matrix.set_list(f, m, static_cast<UserIndex>(u), std::move(lists[t][u]));
  }
  return matrix;
}

}  // namespace ensrec::baselines
