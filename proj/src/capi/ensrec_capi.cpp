#include "ensrec/ensrec.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "ensrec/baselines.hpp"
#include "ensrec/data.hpp"
#include "ensrec/error.hpp"
#include "ensrec/fusion.hpp"
#include "ensrec/harness.hpp"
#include "ensrec/parallel.hpp"
#include "ensrec/selection.hpp"

struct ensrec_dataset {
  ensrec::InteractionDataset value;
};
struct ensrec_splits {
  ensrec::FoldSet value;
};
struct ensrec_matrix {
  ensrec::PredictionMatrix value;
};
struct ensrec_weights {
  ensrec::ModelWeights value;
};

namespace {

thread_local std::string g_last_error;

ensrec_status status_for(ensrec::ErrorKind kind) {
  switch (kind) {
    case ensrec::ErrorKind::kInvalidArgument: return ENSREC_ERR_INVALID_ARGUMENT;
    case ensrec::ErrorKind::kIo: return ENSREC_ERR_IO;
    case ensrec::ErrorKind::kFormat: return ENSREC_ERR_FORMAT;
    case ensrec::ErrorKind::kRuntime: return ENSREC_ERR_RUNTIME;
  }
  return ENSREC_ERR_RUNTIME;
}

// Runs body, translating exceptions into a status and the thread's message.
template <typename Body>
ensrec_status guarded(Body&& body) {
  g_last_error.clear();
  try {
    body();
    return ENSREC_OK;
  } catch (const ensrec::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return ENSREC_ERR_RUNTIME;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ensrec::invalid_argument(std::string(what) + " must not be NULL");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<ensrec::baselines::ModelSpec> roster(const char* models_json) {
  if (models_json == nullptr) return ensrec::baselines::default_roster();
  return ensrec::harness::parse_models(models_json);
}

}  // namespace

extern "C" {

const char* ensrec_last_error(void) { return g_last_error.c_str(); }

const char* ensrec_version(void) { return "1.0.0"; }

void ensrec_string_free(char* s) { std::free(s); }

void ensrec_load_options_default(ensrec_load_options* options) {
  if (options == nullptr) return;
  options->format = "csv";
  options->header = 1;
  options->user_column = "0";
  options->item_column = "1";
  options->rating_column = nullptr;
  options->timestamp_column = nullptr;
}

ensrec_status ensrec_dataset_load(const char* path, const ensrec_load_options* options,
                                  ensrec_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    ensrec_load_options defaults;
    ensrec_load_options_default(&defaults);
    const auto& o = options ? *options : defaults;
    ensrec::data::LoadOptions load;
    load.format = o.format ? o.format : "csv";
    load.header = o.header != 0;
    load.columns.user = o.user_column ? o.user_column : "0";
    load.columns.item = o.item_column ? o.item_column : "1";
    if (o.rating_column) load.columns.rating = o.rating_column;
    if (o.timestamp_column) load.columns.timestamp = o.timestamp_column;
    auto handle = std::make_unique<ensrec_dataset>();
    handle->value = ensrec::data::load_interactions(path, load);
    *out = handle.release();
  });
}

size_t ensrec_dataset_size(const ensrec_dataset* dataset) {
  return dataset ? dataset->value.records.size() : 0;
}

size_t ensrec_dataset_malformed_rows(const ensrec_dataset* dataset) {
  return dataset ? dataset->value.malformed_rows : 0;
}

void ensrec_dataset_free(ensrec_dataset* dataset) { delete dataset; }

void ensrec_split_options_default(ensrec_split_options* options) {
  if (options == nullptr) return;
  const ensrec::data::SplitSpec spec;
  options->n_folds = spec.n_folds;
  options->train = spec.train;
  options->validation = spec.validation;
  options->test = spec.test;
  options->seed = spec.seed;
  options->min_interactions = spec.min_interactions;
}

ensrec_status ensrec_splits_create(const ensrec_dataset* dataset,
                                   const ensrec_split_options* options, ensrec_splits** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    ensrec::data::SplitSpec spec;
    if (options) {
      spec.n_folds = options->n_folds;
      spec.train = options->train;
      spec.validation = options->validation;
      spec.test = options->test;
      spec.seed = options->seed;
      spec.min_interactions = options->min_interactions;
    }
    auto handle = std::make_unique<ensrec_splits>();
    handle->value = ensrec::data::split_folds(dataset->value, spec);
    *out = handle.release();
  });
}

ensrec_status ensrec_splits_read(const char* path, ensrec_splits** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<ensrec_splits>();
    handle->value = ensrec::data::read_splits(path);
    *out = handle.release();
  });
}

ensrec_status ensrec_splits_write(const ensrec_splits* splits, const char* path) {
  return guarded([&] {
    require(splits, "splits");
    require(path, "path");
    ensrec::data::write_splits(splits->value, path);
  });
}

int ensrec_splits_fold_count(const ensrec_splits* splits) {
  return splits ? static_cast<int>(splits->value.n_folds()) : 0;
}

void ensrec_splits_free(ensrec_splits* splits) { delete splits; }

ensrec_status ensrec_fit_summary(const ensrec_splits* splits, const char* models_json,
                                 int threads, char** out_csv) {
  return guarded([&] {
    require(splits, "splits");
    require(out_csv, "out_csv");
    const auto models = roster(models_json);
    const auto& folds = splits->value;
    const std::size_t tasks = folds.n_folds() * models.size();
    std::vector<std::string> lines(tasks);
    ensrec::parallel_for(tasks, threads, [&](std::size_t t) {
      const std::size_t f = t / models.size();
      const auto& spec = models[t % models.size()];
      const auto& train = folds.folds[f].train;
      const auto model = ensrec::baselines::fit(spec, train, folds.items.size());
      std::size_t users = 0, items = 0, neighbors = 0;
      for (const auto& row : train) users += row.empty() ? 0 : 1;
      for (int c : model.popularity()) items += c > 0 ? 1 : 0;
      for (const auto& row : model.neighbors()) neighbors += row.size();
      std::ostringstream line;
      line << f << ',' << spec.id << ',' << ensrec::baselines::kind_name(spec.kind) << ','
           << users << ',' << items << ',' << neighbors << '\n';
      lines[t] = line.str();
    });
    std::string text = "fold,model,kind,users,items,neighbors\n";
    for (const auto& l : lines) text += l;
    *out_csv = duplicate(text);
  });
}

ensrec_status ensrec_matrix_generate(const ensrec_splits* splits, const char* models_json,
                                     int k_max, int threads, ensrec_matrix** out) {
  return guarded([&] {
    require(splits, "splits");
    require(out, "out");
    auto handle = std::make_unique<ensrec_matrix>();
    handle->value =
        ensrec::baselines::generate_matrix(roster(models_json), splits->value, k_max, threads);
    *out = handle.release();
  });
}

ensrec_status ensrec_matrix_read(const char* path, ensrec_matrix** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<ensrec_matrix>();
    handle->value = ensrec::data::read_matrix(path);
    *out = handle.release();
  });
}

ensrec_status ensrec_matrix_write(const ensrec_matrix* matrix, const char* path) {
  return guarded([&] {
    require(matrix, "matrix");
    require(path, "path");
    ensrec::data::write_matrix(matrix->value, path);
  });
}

ensrec_status ensrec_matrix_normalize(const ensrec_matrix* matrix, const char* mode,
                                      ensrec_matrix** out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "out");
    const auto parsed = ensrec::fusion::parse_normalization(mode ? mode : "global-minmax");
    auto handle = std::make_unique<ensrec_matrix>();
    handle->value = ensrec::fusion::normalize_scores(matrix->value, parsed);
    *out = handle.release();
  });
}

size_t ensrec_matrix_model_count(const ensrec_matrix* matrix) {
  return matrix ? matrix->value.models().size() : 0;
}

const char* ensrec_matrix_model_id(const ensrec_matrix* matrix, size_t index) {
  if (matrix == nullptr || index >= matrix->value.models().size()) return nullptr;
  return matrix->value.models()[index].c_str();
}

void ensrec_matrix_free(ensrec_matrix* matrix) { delete matrix; }

ensrec_status ensrec_weights_compute(const ensrec_matrix* matrix, const ensrec_splits* splits,
                                     int n, int include_empty_holdout_users,
                                     ensrec_weights** out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(splits, "splits");
    require(out, "out");
    const auto [m, f] = ensrec::data::align(matrix->value, splits->value);
    auto handle = std::make_unique<ensrec_weights>();
    handle->value = ensrec::selection::compute_weights(
        m, f, n, ensrec::metrics::PopulationPolicy{include_empty_holdout_users != 0});
    *out = handle.release();
  });
}

ensrec_status ensrec_weights_read(const char* path, ensrec_weights** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<ensrec_weights>();
    handle->value = ensrec::data::read_weights(path);
    *out = handle.release();
  });
}

ensrec_status ensrec_weights_write(const ensrec_weights* weights, const char* path) {
  return guarded([&] {
    require(weights, "weights");
    require(path, "path");
    ensrec::data::write_weights(weights->value, path);
  });
}

void ensrec_weights_free(ensrec_weights* weights) { delete weights; }

ensrec_status ensrec_fuse_write(const ensrec_matrix* matrix, const ensrec_weights* weights,
                                const char* members, int fold, int k, int n, const char* path) {
  return guarded([&] {
    require(matrix, "matrix");
    require(weights, "weights");
    require(members, "members");
    require(path, "path");
    if (k < n) throw ensrec::invalid_argument("k must be ≥ N");
    auto ids = ensrec::split_members(members);
    if (ids.empty()) throw ensrec::invalid_argument("no models");
    std::sort(ids.begin(), ids.end());
    const auto& m = matrix->value;
    if (fold < 0 || fold >= m.n_folds())
      throw ensrec::invalid_argument("fold " + std::to_string(fold) + " out of range");
    const auto fused = ensrec::fusion::fuse_all(m, weights->value, ids, fold, k, n);
    ensrec::PredictionMatrix out(m.users(), m.items(), {ensrec::join_members(ids)}, fold + 1);
    for (std::size_t u = 0; u < fused.size(); ++u)
      if (!fused[u].empty()) out.set_list(fold, 0, static_cast<ensrec::UserIndex>(u), fused[u]);
    ensrec::data::write_matrix(out, path);
  });
}

void ensrec_select_options_default(ensrec_select_options* options) {
  if (options == nullptr) return;
  options->mode = "greedy";
  options->split = "validation";
  options->scope = "per-fold";
  options->k = 10;
  options->n = 10;
  options->threads = 0;
  options->include_empty_holdout_users = 0;
}

ensrec_status ensrec_select_write(const ensrec_matrix* matrix, const ensrec_splits* splits,
                                  const char* normalization,
                                  const ensrec_select_options* options, const char* trace_path,
                                  char** chosen_csv) {
  return guarded([&] {
    require(matrix, "matrix");
    require(splits, "splits");
    require(trace_path, "trace_path");
    ensrec_select_options defaults;
    ensrec_select_options_default(&defaults);
    const auto& o = options ? *options : defaults;
    ensrec::harness::SelectionConfig config;
    config.mode = ensrec::selection::parse_mode(o.mode ? o.mode : "greedy");
    config.split = ensrec::harness::parse_selection_split(o.split ? o.split : "validation");
    config.scope = ensrec::harness::parse_selection_scope(o.scope ? o.scope : "per-fold");
    if (o.n < 1) throw ensrec::invalid_argument("N must be >= 1");
    if (o.k < o.n) throw ensrec::invalid_argument("k must be ≥ N");

    const auto [raw, folds] = ensrec::data::align(matrix->value, splits->value);
    const auto normalized = ensrec::fusion::normalize_scores(
        raw, ensrec::fusion::parse_normalization(normalization ? normalization : "global-minmax"));
    const ensrec::metrics::PopulationPolicy policy{o.include_empty_holdout_users != 0};
    const auto weights = ensrec::selection::compute_weights(normalized, folds, o.n, policy);
    ensrec::selection::EnsembleEvaluator evaluate(normalized, weights, folds, policy);
    const auto result = ensrec::harness::select_ensembles(
        config, evaluate, normalized.models(), static_cast<int>(folds.n_folds()), o.k, o.n,
        o.threads);

    std::ofstream out(trace_path, std::ios::binary | std::ios::trunc);
    if (!out) throw ensrec::io_error(std::string("cannot write '") + trace_path + "'");
    out << ensrec::harness::trace_header() << ensrec::harness::render_trace_rows(result);
    if (!out) throw ensrec::io_error(std::string("failed writing '") + trace_path + "'");

    if (chosen_csv) {
      std::ostringstream text;
      text << "fold,members,selection_ndcg,test_ndcg\n";
      char buf[64];
      for (std::size_t f = 0; f < result.chosen.size(); ++f) {
        text << f << ',' << ensrec::join_members(result.chosen[f]);
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", result.selection_scores[f],
                      result.ensemble.per_fold_ndcg[f]);
        text << buf;
      }
      *chosen_csv = duplicate(text.str());
    }
  });
}

ensrec_status ensrec_experiment_run(const char* config_path, const char* parts, int threads,
                                    const char* output_dir) {
  return guarded([&] {
    require(config_path, "config_path");
    const auto config = ensrec::harness::load_config(config_path);
    ensrec::harness::RunOptions options;
    options.threads = threads;
    const std::string which = parts ? parts : "all";
    if (which == "all") {
      options.parts = ensrec::harness::BundleParts::kAll;
    } else if (which == "report") {
      options.parts = ensrec::harness::BundleParts::kReport;
    } else if (which == "sweep") {
      options.parts = ensrec::harness::BundleParts::kSweep;
    } else {
      throw ensrec::invalid_argument("unknown bundle part '" + which + "'");
    }
    if (output_dir) options.output_dir = output_dir;
    const auto bundle = ensrec::harness::run_experiment(config, options);
    if (!bundle.failures.empty()) {
      std::string message = std::to_string(bundle.failures.size()) + " cell(s) failed:";
      for (const auto& f : bundle.failures)
        message += " [" + f.dataset + (f.n ? " N=" + std::to_string(f.n) : "") + "] " + f.message;
      throw ensrec::Error(ensrec::ErrorKind::kRuntime, message);
    }
  });
}

ensrec_status ensrec_config_check(const char* config_path) {
  return guarded([&] {
    require(config_path, "config_path");
    (void)ensrec::harness::load_config(config_path);
  });
}

}  // extern "C"
