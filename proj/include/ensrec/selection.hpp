#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ensrec/metrics.hpp"
#include "ensrec/types.hpp"

namespace ensrec::selection {

enum class Mode { kGreedy, kExhaustive };

Mode parse_mode(std::string_view name);
const char* mode_name(Mode mode);

// Model ids in ascending order.
using Candidate = std::vector<std::string>;
using EvalFn = std::function<double(const Candidate&)>;

// Greedy acceptance needs an improvement larger than this.
inline constexpr double kImprovementTolerance = 1e-12;
inline constexpr std::size_t kExhaustiveLimit = 20;

struct TraceStep {
  Candidate members;
  double score = 0.0;
};

struct SelectionTrace {
  Mode mode = Mode::kGreedy;
  // Every evaluated candidate in enumeration order.
  std::vector<TraceStep> evaluated;
  // Greedy: the path of accepted candidates. Exhaustive: the maximizer only.
  std::vector<TraceStep> accepted;
  TraceStep chosen;
};

// Orders candidates by their sorted member lists, lexicographically.
bool candidate_less(const Candidate& a, const Candidate& b);

// Forward greedy selection. Starts from the best singleton and adds the unused
// model with the best score while it improves on the current score by more
// than kImprovementTolerance. Ties go to the lexicographically smallest
// candidate. `eval` may be called concurrently when threads > 1.
SelectionTrace greedy_select(std::vector<std::string> models, const EvalFn& eval,
                             int threads = 1);

// Scores all 2^M - 1 nonempty subsets, enumerated by size and then
// lexicographically; returns the maximizer (ties to the smallest candidate).
SelectionTrace exhaustive_select(std::vector<std::string> models, const EvalFn& eval,
                                 int threads = 1);

SelectionTrace run_selection(Mode mode, std::vector<std::string> models, const EvalFn& eval,
                             int threads = 1);

// Weight of (fold, model) = NDCG@n of the model's lists against the fold's
// validation subset. Matrix and folds must share vocabularies.
ModelWeights compute_weights(const PredictionMatrix& matrix, const FoldSet& folds, int n,
                             metrics::PopulationPolicy policy = {});

// NDCG@n of the fused ensemble against one holdout subset. `matrix` is
// expected to be normalized.
double evaluate_ensemble(const Candidate& members, const PredictionMatrix& matrix,
                         const ModelWeights& weights, const FoldSet& folds, int fold, int k,
                         int n, Subset holdout, metrics::PopulationPolicy policy = {});

// Memoizing wrapper around evaluate_ensemble; safe for concurrent use.
class EnsembleEvaluator {
 public:
  EnsembleEvaluator(const PredictionMatrix& normalized, const ModelWeights& weights,
                    const FoldSet& folds, metrics::PopulationPolicy policy = {});

  double operator()(const Candidate& members, int fold, int k, int n, Subset holdout);
  std::size_t cache_size() const;

 private:
  using Key = std::tuple<std::string, int, int, int, int>;

  const PredictionMatrix& matrix_;
  const ModelWeights& weights_;
  const FoldSet& folds_;
  metrics::PopulationPolicy policy_;
  mutable std::mutex mutex_;
  std::map<Key, double> cache_;
};

}  // namespace ensrec::selection
