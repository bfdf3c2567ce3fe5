#include "ensrec/selection.hpp"

#include <algorithm>

#include "ensrec/error.hpp"
#include "ensrec/fusion.hpp"
#include "ensrec/parallel.hpp"

namespace ensrec::selection {

Mode parse_mode(std::string_view name) {
  if (name == "greedy") return Mode::kGreedy;
  if (name == "exhaustive") return Mode::kExhaustive;
  throw invalid_argument("unknown selection mode '" + std::string(name) +
                         "' (expected greedy or exhaustive)");
}

const char* mode_name(Mode mode) { return mode == Mode::kGreedy ? "greedy" : "exhaustive"; }

bool candidate_less(const Candidate& a, const Candidate& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

void prepare_models(std::vector<std::string>& models) {
  if (models.empty()) throw invalid_argument("no models");
  std::sort(models.begin(), models.end());
  if (std::adjacent_find(models.begin(), models.end()) != models.end())
    throw invalid_argument("duplicate model id in selection");
}

std::vector<double> evaluate_batch(const std::vector<Candidate>& batch, const EvalFn& eval,
                                   int threads) {
  std::vector<double> scores(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) { scores[i] = eval(batch[i]); });
  return scores;
}

// Index of the best score; on equal scores the smaller candidate wins.
std::size_t argmax(const std::vector<Candidate>& batch, const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < batch.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && candidate_less(batch[i], batch[best])))
      best = i;
  }
  return best;
}

}  // namespace

SelectionTrace greedy_select(std::vector<std::string> models, const EvalFn& eval, int threads) {
  prepare_models(models);
  SelectionTrace trace;
  trace.mode = Mode::kGreedy;

  std::vector<Candidate> batch;
  for (const auto& m : models) batch.push_back({m});
  auto scores = evaluate_batch(batch, eval, threads);
  for (std::size_t i = 0; i < batch.size(); ++i) trace.evaluated.push_back({batch[i], scores[i]});
  std::size_t best = argmax(batch, scores);
  TraceStep current{batch[best], scores[best]};
  trace.accepted.push_back(current);

  while (current.members.size() < models.size()) {
    batch.clear();
    for (const auto& m : models) {
      if (std::binary_search(current.members.begin(), current.members.end(), m)) continue;
      Candidate next = current.members;
      next.insert(std::upper_bound(next.begin(), next.end(), m), m);
      batch.push_back(std::move(next));
    }
    scores = evaluate_batch(batch, eval, threads);
    for (std::size_t i = 0; i < batch.size(); ++i)
      trace.evaluated.push_back({batch[i], scores[i]});
    best = argmax(batch, scores);
    if (!(scores[best] > current.score + kImprovementTolerance)) break;
    current = {batch[best], scores[best]};
    trace.accepted.push_back(current);
  }
  trace.chosen = current;
  return trace;
}

SelectionTrace exhaustive_select(std::vector<std::string> models, const EvalFn& eval,
                                 int threads) {
  prepare_models(models);
  if (models.size() > kExhaustiveLimit) throw invalid_argument("exhaustive limit exceeded");
  const std::size_t m = models.size();

  std::vector<Candidate> batch;
  batch.reserve((std::size_t{1} << m) - 1);
  for (std::size_t size = 1; size <= m; ++size) {
    // Combinations of `size` indices in lexicographic order.
    std::vector<std::size_t> pick(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    for (;;) {
      Candidate c;
      c.reserve(size);
      for (auto i : pick) c.push_back(models[i]);
      batch.push_back(std::move(c));
      std::size_t pos = size;
      while (pos > 0 && pick[pos - 1] == m - size + pos - 1) --pos;
      if (pos == 0) break;
      ++pick[pos - 1];
      for (std::size_t j = pos; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }

  const auto scores = evaluate_batch(batch, eval, threads);
  SelectionTrace trace;
  trace.mode = Mode::kExhaustive;
  trace.evaluated.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) trace.evaluated.push_back({batch[i], scores[i]});
  const std::size_t best = argmax(batch, scores);
  trace.chosen = {batch[best], scores[best]};
  trace.accepted.push_back(trace.chosen);
  return trace;
}

SelectionTrace run_selection(Mode mode, std::vector<std::string> models, const EvalFn& eval,
                             int threads) {
  return mode == Mode::kGreedy ? greedy_select(std::move(models), eval, threads)
                               : exhaustive_select(std::move(models), eval, threads);
}

namespace {

void require_aligned(const PredictionMatrix& matrix, const FoldSet& folds) {
  if (!(matrix.users() == folds.users) || !(matrix.items() == folds.items))
    throw invalid_argument("prediction matrix and folds use different id sets");
  if (static_cast<std::size_t>(matrix.n_folds()) != folds.n_folds())
    throw invalid_argument("prediction matrix has " + std::to_string(matrix.n_folds()) +
                           " folds but the split has " + std::to_string(folds.n_folds()));
}

}  // namespace

ModelWeights compute_weights(const PredictionMatrix& matrix, const FoldSet& folds, int n,
                             metrics::PopulationPolicy policy) {
  require_aligned(matrix, folds);
  if (n < 1) throw invalid_argument("N must be >= 1");
  ModelWeights weights;
  weights.cutoff_n = n;
  for (int f = 0; f < matrix.n_folds(); ++f) {
    for (std::size_t m = 0; m < matrix.models().size(); ++m) {
      if (!matrix.has(f, m))
        throw invalid_argument("missing lists for fold " + std::to_string(f) + ", model '" +
                               matrix.models()[m] + "'");
      weights.values[{f, matrix.models()[m]}] = metrics::ndcg_model(
          matrix.user_lists(f, m), folds.folds[f].validation, n, policy);
    }
  }
  return weights;
}

double evaluate_ensemble(const Candidate& members, const PredictionMatrix& matrix,
                         const ModelWeights& weights, const FoldSet& folds, int fold, int k,
                         int n, Subset holdout, metrics::PopulationPolicy policy) {
  require_aligned(matrix, folds);
  if (weights.cutoff_n != n)
    throw invalid_argument("weights were computed for N=" + std::to_string(weights.cutoff_n) +
                           " but evaluation uses N=" + std::to_string(n));
  if (holdout == Subset::kTrain) throw invalid_argument("cannot evaluate against train");
  const auto fused = fusion::fuse_all(matrix, weights, members, fold, k, n);
  return metrics::ndcg_model(fused, folds.folds[fold].subset(holdout), n, policy);
}

EnsembleEvaluator::EnsembleEvaluator(const PredictionMatrix& normalized,
                                     const ModelWeights& weights, const FoldSet& folds,
                                     metrics::PopulationPolicy policy)
    : matrix_(normalized), weights_(weights), folds_(folds), policy_(policy) {
  require_aligned(matrix_, folds_);
}

double EnsembleEvaluator::operator()(const Candidate& members, int fold, int k, int n,
                                     Subset holdout) {
  Candidate sorted = members;
  std::sort(sorted.begin(), sorted.end());
  Key key{join_members(sorted), fold, k, n, static_cast<int>(holdout)};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double score =
      evaluate_ensemble(sorted, matrix_, weights_, folds_, fold, k, n, holdout, policy_);
  std::lock_guard lock(mutex_);
  cache_.emplace(std::move(key), score);
  return score;
}

std::size_t EnsembleEvaluator::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace ensrec::selection
