// ensrec command-line front end. Talks to the library only through the C API.
#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ensrec/ensrec.h"

namespace {

// 1: bad flags, inputs or contracts. 2: the computation itself failed.
int exit_code(ensrec_status status) {
  switch (status) {
    case ENSREC_OK: return 0;
    case ENSREC_ERR_RUNTIME: return 2;
    default: return 1;
  }
}

struct Failure {
  ensrec_status status;
};

void check(ensrec_status status) {
  if (status != ENSREC_OK) throw Failure{status};
}

void fail_usage(const std::string& message) {
  std::cerr << "ensrec: error: " << message << "\n";
  throw Failure{ENSREC_ERR_INVALID_ARGUMENT};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_usage("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes to path, or stdout for "" and "-".
void emit(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    std::cerr << "ensrec: error: cannot write '" << path << "'\n";
    throw Failure{ENSREC_ERR_IO};
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};

using Dataset = Handle<ensrec_dataset, ensrec_dataset_free>;
using Splits = Handle<ensrec_splits, ensrec_splits_free>;
using Matrix = Handle<ensrec_matrix, ensrec_matrix_free>;
using Weights = Handle<ensrec_weights, ensrec_weights_free>;

struct CString {
  char* ptr = nullptr;
  ~CString() { ensrec_string_free(ptr); }
};

struct SplitArgs {
  std::string input, out, format = "csv";
  std::string user = "0", item = "1", rating, timestamp;
  bool no_header = false;
  int folds = 5;
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  int min_interactions = 5;
};

struct PipelineArgs {
  std::string splits, matrix, weights, models, out, members, chosen;
  std::string normalization = "global-minmax";
  std::string mode = "greedy", split = "validation", scope = "per-fold";
  int k = 10, n = 10, k_max = 150, fold = 0;
  bool include_empty = false;
};

struct RunArgs {
  std::string config, output_dir;
};

std::string models_arg(const PipelineArgs& a) {
  return a.models.empty() ? std::string() : read_file(a.models);
}

void load_splits(const std::string& path, Splits& splits) {
  check(ensrec_splits_read(path.c_str(), &splits.ptr));
}

void cmd_split(const SplitArgs& a) {
  ensrec_load_options load;
  ensrec_load_options_default(&load);
  load.format = a.format.c_str();
  load.header = a.no_header ? 0 : 1;
  load.user_column = a.user.c_str();
  load.item_column = a.item.c_str();
  load.rating_column = a.rating.empty() ? nullptr : a.rating.c_str();
  load.timestamp_column = a.timestamp.empty() ? nullptr : a.timestamp.c_str();
  Dataset dataset;
  check(ensrec_dataset_load(a.input.c_str(), &load, &dataset.ptr));
  if (const auto bad = ensrec_dataset_malformed_rows(dataset.ptr))
    std::cerr << "ensrec: skipped " << bad << " malformed row(s) in " << a.input << "\n";

  ensrec_split_options options;
  ensrec_split_options_default(&options);
  options.n_folds = a.folds;
  options.train = a.ratios[0];
  options.validation = a.ratios[1];
  options.test = a.ratios[2];
  options.seed = a.seed;
  options.min_interactions = a.min_interactions;
  Splits splits;
  check(ensrec_splits_create(dataset.ptr, &options, &splits.ptr));
  check(ensrec_splits_write(splits.ptr, a.out.c_str()));
}

void cmd_fit(const PipelineArgs& a, int threads) {
  Splits splits;
  load_splits(a.splits, splits);
  const auto models = models_arg(a);
  CString summary;
  check(ensrec_fit_summary(splits.ptr, models.empty() ? nullptr : models.c_str(), threads,
                           &summary.ptr));
  emit(a.out, summary.ptr);
}

void cmd_predict(const PipelineArgs& a, int threads) {
  Splits splits;
  load_splits(a.splits, splits);
  const auto models = models_arg(a);
  Matrix matrix;
  check(ensrec_matrix_generate(splits.ptr, models.empty() ? nullptr : models.c_str(), a.k_max,
                               threads, &matrix.ptr));
  check(ensrec_matrix_write(matrix.ptr, a.out.c_str()));
}

void cmd_weights(const PipelineArgs& a) {
  Matrix matrix;
  check(ensrec_matrix_read(a.matrix.c_str(), &matrix.ptr));
  Splits splits;
  load_splits(a.splits, splits);
  Weights weights;
  check(ensrec_weights_compute(matrix.ptr, splits.ptr, a.n, a.include_empty ? 1 : 0,
                               &weights.ptr));
  check(ensrec_weights_write(weights.ptr, a.out.c_str()));
}

void cmd_fuse(const PipelineArgs& a) {
  if (a.k < a.n) fail_usage("k must be ≥ N (got k=" + std::to_string(a.k) +
                            ", N=" + std::to_string(a.n) + ")");
  Matrix raw;
  check(ensrec_matrix_read(a.matrix.c_str(), &raw.ptr));
  Matrix normalized;
  check(ensrec_matrix_normalize(raw.ptr, a.normalization.c_str(), &normalized.ptr));
  Weights weights;
  check(ensrec_weights_read(a.weights.c_str(), &weights.ptr));
  check(ensrec_fuse_write(normalized.ptr, weights.ptr, a.members.c_str(), a.fold, a.k, a.n,
                          a.out.c_str()));
}

void cmd_select(const PipelineArgs& a, int threads) {
  Matrix matrix;
  check(ensrec_matrix_read(a.matrix.c_str(), &matrix.ptr));
  Splits splits;
  load_splits(a.splits, splits);
  ensrec_select_options options;
  ensrec_select_options_default(&options);
  options.mode = a.mode.c_str();
  options.split = a.split.c_str();
  options.scope = a.scope.c_str();
  options.k = a.k;
  options.n = a.n;
  options.threads = threads;
  options.include_empty_holdout_users = a.include_empty ? 1 : 0;
  CString chosen;
  check(ensrec_select_write(matrix.ptr, splits.ptr, a.normalization.c_str(), &options,
                            a.out.c_str(), &chosen.ptr));
  emit(a.chosen, chosen.ptr);
}

void cmd_experiment(const RunArgs& a, const char* parts, int threads) {
  check(ensrec_experiment_run(a.config.c_str(), parts, threads,
                              a.output_dir.empty() ? nullptr : a.output_dir.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble top-N recommendation: baselines, weighted rank fusion and ensemble "
               "selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ensrec_version()));

  int threads = 0;
  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
  };
  const auto modes = CLI::IsMember({"greedy", "exhaustive"});
  const auto norms = CLI::IsMember({"global-minmax", "per-user-minmax"});

  SplitArgs sa;
  auto* split = app.add_subcommand("split", "Split interactions into folds; writes the audit CSV");
  split->add_option("--input", sa.input, "Interactions file")->required()->check(CLI::ExistingFile);
  split->add_option("--out", sa.out, "Output splits CSV")->required();
  split->add_option("--format", sa.format, "csv, tsv or a literal delimiter")->capture_default_str();
  split->add_flag("--no-header", sa.no_header, "Input has no header line");
  split->add_option("--user-col", sa.user, "User column name or 0-based index")->capture_default_str();
  split->add_option("--item-col", sa.item, "Item column name or 0-based index")->capture_default_str();
  split->add_option("--rating-col", sa.rating, "Rating column; rows with rating <= 0 are dropped");
  split->add_option("--timestamp-col", sa.timestamp, "Timestamp column");
  split->add_option("--folds", sa.folds, "Number of folds")->capture_default_str()->check(CLI::PositiveNumber);
  split->add_option("--ratios", sa.ratios, "Train, validation and test fractions")
      ->expected(3);
  split->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  split->add_option("--min-interactions", sa.min_interactions,
                    "Users below this keep all items in train")->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  PipelineArgs pa;
  auto* fit = app.add_subcommand("fit", "Fit the models on every fold and print a summary CSV");
  fit->add_option("--splits", pa.splits, "Splits CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--models", pa.models, "JSON array of model specs (default: built-in six)")
      ->check(CLI::ExistingFile);
  fit->add_option("--out", pa.out, "Output file (default: stdout)");
  add_threads(fit);

  auto* predict = app.add_subcommand("predict", "Write the prediction matrix of every model");
  predict->add_option("--splits", pa.splits, "Splits CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--models", pa.models, "JSON array of model specs (default: built-in six)")
      ->check(CLI::ExistingFile);
  predict->add_option("--k-max", pa.k_max, "List length per user")->capture_default_str()
      ->check(CLI::PositiveNumber);
  predict->add_option("--out", pa.out, "Output matrix CSV")->required();
  add_threads(predict);

  auto* weights = app.add_subcommand("weights", "Per-(fold, model) validation NDCG@N weights");
  weights->add_option("--matrix", pa.matrix, "Prediction matrix CSV")
      ->required()->check(CLI::ExistingFile);
  weights->add_option("--splits", pa.splits, "Splits CSV")->required()->check(CLI::ExistingFile);
  weights->add_option("--n", pa.n, "NDCG cutoff")->capture_default_str()->check(CLI::PositiveNumber);
  weights->add_flag("--include-empty-holdout-users", pa.include_empty,
                    "Count users with an empty holdout as 0");
  weights->add_option("--out", pa.out, "Output weights CSV")->required();

  auto* fuse = app.add_subcommand("fuse", "Fuse a member set into top-N lists for one fold");
  fuse->add_option("--matrix", pa.matrix, "Prediction matrix CSV")
      ->required()->check(CLI::ExistingFile);
  fuse->add_option("--weights", pa.weights, "Weights CSV")->required()->check(CLI::ExistingFile);
  fuse->add_option("--members", pa.members, "Model ids joined by '+'")->required();
  fuse->add_option("--fold", pa.fold, "Fold index")->capture_default_str()->check(CLI::NonNegativeNumber);
  fuse->add_option("--k", pa.k, "Items taken from each member list")->capture_default_str()
      ->check(CLI::PositiveNumber);
  fuse->add_option("--n", pa.n, "Fused list length")->capture_default_str()->check(CLI::PositiveNumber);
  fuse->add_option("--normalization", pa.normalization, "Score normalization")->capture_default_str()
      ->check(norms);
  fuse->add_option("--out", pa.out, "Output CSV")->required();

  auto* select = app.add_subcommand("select", "Ensemble selection on every fold; writes the trace");
  select->add_option("--matrix", pa.matrix, "Prediction matrix CSV")
      ->required()->check(CLI::ExistingFile);
  select->add_option("--splits", pa.splits, "Splits CSV")->required()->check(CLI::ExistingFile);
  select->add_option("--mode", pa.mode, "greedy or exhaustive")->capture_default_str()->check(modes);
  select->add_option("--split", pa.split, "validation or paper-faithful")->capture_default_str()
      ->check(CLI::IsMember({"validation", "paper-faithful"}));
  select->add_option("--scope", pa.scope, "per-fold or fixed-subset")->capture_default_str()
      ->check(CLI::IsMember({"per-fold", "fixed-subset"}));
  select->add_option("--k", pa.k, "Items taken from each member list")->capture_default_str()
      ->check(CLI::PositiveNumber);
  select->add_option("--n", pa.n, "NDCG cutoff")->capture_default_str()->check(CLI::PositiveNumber);
  select->add_option("--normalization", pa.normalization, "Score normalization")->capture_default_str()
      ->check(norms);
  select->add_flag("--include-empty-holdout-users", pa.include_empty,
                   "Count users with an empty holdout as 0");
  select->add_option("--out", pa.out, "Output trace CSV")->required();
  select->add_option("--chosen", pa.chosen, "Chosen ensembles CSV (default: stdout)");
  add_threads(select);

  RunArgs ra;
  auto* sweep = app.add_subcommand("sweep", "Write the k-sweep CSVs for a config");
  sweep->add_option("--config", ra.config, "Experiment config")
      ->required()->check(CLI::ExistingFile);
  sweep->add_option("--output-dir", ra.output_dir, "Override the config's output_dir");
  add_threads(sweep);

  auto* report = app.add_subcommand("report", "Write score tables, traces and summaries");
  report->add_option("--config", ra.config, "Experiment config")
      ->required()->check(CLI::ExistingFile);
  report->add_option("--output-dir", ra.output_dir, "Override the config's output_dir");
  add_threads(report);

  auto* run = app.add_subcommand("run", "Run a whole experiment config");
  run->add_option("--config", ra.config, "Experiment config")
      ->required()->check(CLI::ExistingFile);
  add_threads(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*split) cmd_split(sa);
    else if (*fit) cmd_fit(pa, threads);
    else if (*predict) cmd_predict(pa, threads);
    else if (*weights) cmd_weights(pa);
    else if (*fuse) cmd_fuse(pa);
    else if (*select) cmd_select(pa, threads);
    else if (*sweep) cmd_experiment(ra, "sweep", threads);
    else if (*report) cmd_experiment(ra, "report", threads);
    else if (*run) cmd_experiment(ra, "all", threads);
  } catch (const Failure& f) {
    const char* message = ensrec_last_error();
    if (message != nullptr && *message != '\0')
      std::cerr << "ensrec: error: " << message << "\n";
    return exit_code(f.status);
  }
  return 0;
}
