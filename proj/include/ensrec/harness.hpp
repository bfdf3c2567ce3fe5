#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ensrec/baselines.hpp"
#include "ensrec/data.hpp"
#include "ensrec/fusion.hpp"
#include "ensrec/selection.hpp"
#include "ensrec/types.hpp"

namespace ensrec::harness {

enum class SelectionSplit {
  kValidation,     // select on validation, report on test
  kPaperFaithful,  // select and report on test
};

enum class SelectionScope {
  kPerFold,      // one selection per fold, chosen test scores averaged
  kFixedSubset,  // one subset maximizing the fold-mean selection score
};

SelectionSplit parse_selection_split(std::string_view name);
const char* selection_split_name(SelectionSplit split);
SelectionScope parse_selection_scope(std::string_view name);
const char* selection_scope_name(SelectionScope scope);

struct DatasetConfig {
  std::string name;
  std::string path;
  data::LoadOptions load;
  // Prediction-matrix CSVs whose models join the built-in roster.
  std::vector<std::string> matrices;
};

struct SelectionConfig {
  selection::Mode mode = selection::Mode::kGreedy;
  SelectionSplit split = SelectionSplit::kValidation;
  SelectionScope scope = SelectionScope::kPerFold;
  // k of the ensemble row in the tables; when unset, the k whose chosen
  // ensembles have the best mean selection score.
  std::optional<int> table_k;
};

struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<baselines::ModelSpec> models = baselines::default_roster();
  std::vector<int> n_values = {5, 10, 20};
  std::vector<int> k_values = {5, 10, 15, 25, 50, 75, 100, 125, 150};
  data::SplitSpec split;
  SelectionConfig selection;
  fusion::Normalization normalization = fusion::Normalization::kGlobalMinMax;
  bool include_empty_holdout_users = false;
  // Reference row for the relative column; empty means the first popularity
  // model of the roster.
  std::string baseline_model;
  std::string output_dir = "out";
  bool export_splits = false;
  bool export_matrix = false;
  // Raw config bytes, hashed into the manifest.
  std::string source;

  void validate() const;
  int k_max() const;
  std::string reference_model() const;
};

// Parses the JSON config. Unknown keys are rejected; relative paths resolve
// against base_dir.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::string& path);
// The `models` array of a config on its own.
std::vector<baselines::ModelSpec> parse_models(const std::string& json_text);

// Two-sided Student-t interval around the mean. Only level 0.95 is supported.
std::pair<double, double> confidence_interval(const std::vector<double>& values,
                                              double level = 0.95);

// round((mean / ppl_mean - 1) * 100), half away from zero; nullopt when
// ppl_mean <= 0.
std::optional<long> pct_vs_ppl(double mean, double ppl_mean);

// FNV-1a 64-bit, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

struct PreparedDataset {
  std::string name;
  FoldSet folds;
  PredictionMatrix raw;
  PredictionMatrix normalized;
  std::size_t malformed_rows = 0;
};

PreparedDataset prepare_dataset(const ExperimentConfig& config, const DatasetConfig& dataset,
                                int threads);

struct ModelRow {
  std::string model;
  std::vector<double> per_fold;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct KResult {
  int k = 0;
  int n = 0;
  SelectionConfig selection;
  // One trace per fold, or a single trace in fixed-subset scope.
  std::vector<selection::SelectionTrace> traces;
  // Chosen members per fold.
  std::vector<selection::Candidate> chosen;
  // Chosen ensemble's selection-split score per fold.
  std::vector<double> selection_scores;
  // Chosen ensemble's validation score per fold (equal to selection_scores
  // in validation mode).
  std::vector<double> validation_scores;
  EnsembleResult ensemble;  // test NDCG per fold
};

struct CellResult {
  std::string dataset;
  int n = 0;
  ModelWeights weights;
  std::vector<ModelRow> models;
  std::vector<KResult> per_k;  // ascending k, only k >= n
  int table_k = 0;
  std::string best_model;
};

// Ensemble selection for one (k, n) over all folds, per the configured mode,
// split and scope.
KResult select_ensembles(const SelectionConfig& config, selection::EnsembleEvaluator& evaluate,
                         const std::vector<std::string>& models, int n_folds, int k, int n,
                         int threads);

CellResult run_cell(const ExperimentConfig& config, const PreparedDataset& dataset, int n,
                    int threads);

struct SweepRow {
  std::string dataset;
  int n = 0;
  int k = 0;
  // Unset when k < n (fusion needs k >= N).
  std::optional<double> ens_mean, ci_low, ci_high;
  std::string best_model;
  double best_mean = 0.0;
};

std::vector<SweepRow> k_sweep(const ExperimentConfig& config, const CellResult& cell);

// CSV renderings (header line included).
std::string render_table(const ExperimentConfig& config, const CellResult& cell);
std::string render_sweep(const std::vector<SweepRow>& rows);
// Trace CSV: `mode,fold,members,k,n,split,ndcg`, one row per evaluated
// candidate. fold is "all" in fixed-subset scope.
std::string trace_header();
std::string render_trace_rows(const KResult& result);
std::string render_trace(const CellResult& cell);

enum class BundleParts { kAll, kReport, kSweep };

struct RunOptions {
  int threads = 0;
  BundleParts parts = BundleParts::kAll;
  // Overrides config.output_dir when nonempty.
  std::string output_dir;
};

struct FailedCell {
  std::string dataset;
  int n = 0;  // 0 when the whole dataset failed to prepare
  std::string message;
};

struct ReportBundle {
  std::vector<CellResult> cells;
  std::vector<FailedCell> failures;
  std::vector<std::string> files;  // written, relative to the output dir
};

// Runs every (dataset, n) cell and writes the bundle. Cell failures are
// logged and recorded; other cells still run.
ReportBundle run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace ensrec::harness
