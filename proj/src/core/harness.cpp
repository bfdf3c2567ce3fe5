#include "ensrec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "ensrec/error.hpp"
#include "ensrec/metrics.hpp"

namespace ensrec::harness {

using nlohmann::json;

SelectionSplit parse_selection_split(std::string_view name) {
  if (name == "validation") return SelectionSplit::kValidation;
  if (name == "paper-faithful") return SelectionSplit::kPaperFaithful;
  throw invalid_argument("unknown selection split '" + std::string(name) +
                         "' (expected validation or paper-faithful)");
}

const char* selection_split_name(SelectionSplit split) {
  return split == SelectionSplit::kValidation ? "validation" : "paper-faithful";
}

SelectionScope parse_selection_scope(std::string_view name) {
  if (name == "per-fold") return SelectionScope::kPerFold;
  if (name == "fixed-subset") return SelectionScope::kFixedSubset;
  throw invalid_argument("unknown selection scope '" + std::string(name) +
                         "' (expected per-fold or fixed-subset)");
}

const char* selection_scope_name(SelectionScope scope) {
  return scope == SelectionScope::kPerFold ? "per-fold" : "fixed-subset";
}

// ---------------------------------------------------------------------------
// Config

namespace {

void reject_unknown(const json& object, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!object.is_object()) throw invalid_argument(where + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw invalid_argument("unknown key '" + key + "' in " + where);
  }
}

std::string column_ref(const json& value, const std::string& where) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_unsigned()) return std::to_string(value.get<std::uint64_t>());
  throw invalid_argument(where + " must be a column name or index");
}

std::string resolve_path(const std::string& raw, const std::filesystem::path& base) {
  std::filesystem::path p(raw);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal().string();
}

std::vector<int> int_list(const json& value, const std::string& where) {
  if (!value.is_array()) throw invalid_argument(where + " must be an array of integers");
  std::vector<int> out;
  for (const auto& v : value) {
    if (!v.is_number_integer()) throw invalid_argument(where + " must be an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<baselines::ModelSpec> models_from_json(const json& array) {
  if (!array.is_array()) throw invalid_argument("models must be an array");
  std::vector<baselines::ModelSpec> models;
  for (const auto& m : array) {
    reject_unknown(m, {"id", "kind", "nn", "k1", "b"}, "model");
    baselines::ModelSpec spec;
    spec.id = m.at("id").get<std::string>();
    spec.kind = baselines::parse_kind(m.at("kind").get<std::string>());
    spec.params.nn = m.value("nn", spec.params.nn);
    spec.params.k1 = m.value("k1", spec.params.k1);
    spec.params.b = m.value("b", spec.params.b);
    models.push_back(std::move(spec));
  }
  return models;
}

}  // namespace

std::vector<baselines::ModelSpec> parse_models(const std::string& json_text) {
  try {
    return models_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("models: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"datasets", "models", "n_values", "k_values", "seed", "folds", "split_ratios",
                  "min_interactions", "selection", "normalization", "include_empty_holdout_users",
                  "baseline_model", "output_dir", "export"},
                 "config");
  ExperimentConfig config;
  config.source = json_text;
  try {
    if (!root.contains("datasets") || !root["datasets"].is_array())
      throw invalid_argument("config needs a 'datasets' array");
    for (const auto& d : root["datasets"]) {
      reject_unknown(d, {"name", "path", "format", "header", "columns", "matrices"}, "dataset");
      DatasetConfig ds;
      ds.name = d.at("name").get<std::string>();
      ds.path = resolve_path(d.at("path").get<std::string>(), base_dir);
      ds.load.format = d.value("format", std::string("csv"));
      ds.load.header = d.value("header", true);
      if (d.contains("columns")) {
        const auto& c = d["columns"];
        reject_unknown(c, {"user", "item", "rating", "timestamp"}, "columns");
        if (c.contains("user")) ds.load.columns.user = column_ref(c["user"], "columns.user");
        if (c.contains("item")) ds.load.columns.item = column_ref(c["item"], "columns.item");
        if (c.contains("rating")) ds.load.columns.rating = column_ref(c["rating"], "columns.rating");
        if (c.contains("timestamp"))
          ds.load.columns.timestamp = column_ref(c["timestamp"], "columns.timestamp");
      }
      if (d.contains("matrices"))
        for (const auto& m : d["matrices"])
          ds.matrices.push_back(resolve_path(m.get<std::string>(), base_dir));
      config.datasets.push_back(std::move(ds));
    }
    if (root.contains("models")) config.models = models_from_json(root["models"]);
    if (root.contains("n_values")) config.n_values = int_list(root["n_values"], "n_values");
    if (root.contains("k_values")) config.k_values = int_list(root["k_values"], "k_values");
    if (root.contains("seed")) {
      if (!root["seed"].is_number_unsigned())
        throw invalid_argument("seed must be a nonnegative integer");
      config.split.seed = root["seed"].get<std::uint64_t>();
    }
    config.split.n_folds = root.value("folds", config.split.n_folds);
    if (root.contains("split_ratios")) {
      const auto& r = root["split_ratios"];
      if (!r.is_array() || r.size() != 3)
        throw invalid_argument("split_ratios must be [train, validation, test]");
      config.split.train = r[0].get<double>();
      config.split.validation = r[1].get<double>();
      config.split.test = r[2].get<double>();
    }
    config.split.min_interactions = root.value("min_interactions", config.split.min_interactions);
    if (root.contains("selection")) {
      const auto& s = root["selection"];
      reject_unknown(s, {"mode", "split", "scope", "table_k"}, "selection");
      if (s.contains("mode")) config.selection.mode = selection::parse_mode(s["mode"].get<std::string>());
      if (s.contains("split"))
        config.selection.split = parse_selection_split(s["split"].get<std::string>());
      if (s.contains("scope"))
        config.selection.scope = parse_selection_scope(s["scope"].get<std::string>());
      if (s.contains("table_k") && !s["table_k"].is_null())
        config.selection.table_k = s["table_k"].get<int>();
    }
    if (root.contains("normalization"))
      config.normalization = fusion::parse_normalization(root["normalization"].get<std::string>());
    config.include_empty_holdout_users =
        root.value("include_empty_holdout_users", config.include_empty_holdout_users);
    config.baseline_model = root.value("baseline_model", std::string());
    config.output_dir = resolve_path(root.value("output_dir", config.output_dir), base_dir);
    if (root.contains("export")) {
      const auto& e = root["export"];
      reject_unknown(e, {"splits", "matrix"}, "export");
      config.export_splits = e.value("splits", false);
      config.export_matrix = e.value("matrix", false);
    }
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::filesystem::path(path).parent_path());
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw invalid_argument("config lists no datasets");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.empty() || d.name.find_first_of("/\\") != std::string::npos)
      throw invalid_argument("dataset name '" + d.name + "' is not a plain file-name token");
    if (!names.insert(d.name).second) throw invalid_argument("duplicate dataset '" + d.name + "'");
  }
  std::set<std::string> ids;
  for (const auto& m : models)
    if (m.id.empty() || !ids.insert(m.id).second)
      throw invalid_argument("model ids must be unique and nonempty ('" + m.id + "')");
  if (n_values.empty()) throw invalid_argument("n_values must be nonempty");
  for (int n : n_values)
    if (n < 1) throw invalid_argument("n_values must be >= 1");
  if (std::set<int>(n_values.begin(), n_values.end()).size() != n_values.size())
    throw invalid_argument("n_values contains duplicates");
  if (k_values.empty()) throw invalid_argument("k_values must be nonempty");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] < 1) throw invalid_argument("k_values must be >= 1");
    if (i > 0 && k_values[i] <= k_values[i - 1])
      throw invalid_argument("k_values must be strictly ascending");
  }
  for (int n : n_values)
    if (k_values.back() < n)
      throw invalid_argument("no k in k_values is >= N=" + std::to_string(n));
  if (selection.table_k) {
    if (std::find(k_values.begin(), k_values.end(), *selection.table_k) == k_values.end())
      throw invalid_argument("selection.table_k must be one of k_values");
    for (int n : n_values)
      if (*selection.table_k < n) throw invalid_argument("selection.table_k must be >= every N");
  }
  split.validate();
}

int ExperimentConfig::k_max() const { return k_values.back(); }

std::string ExperimentConfig::reference_model() const {
  if (!baseline_model.empty()) return baseline_model;
  for (const auto& m : models)
    if (m.kind == baselines::Kind::kPopularity) return m.id;
  return {};
}

// ---------------------------------------------------------------------------
// Statistics

std::pair<double, double> confidence_interval(const std::vector<double>& values, double level) {
  if (values.size() < 2) throw invalid_argument("confidence interval needs at least 2 values");
  if (level != 0.95) throw invalid_argument("only the 95% level is supported");
  const double count = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= count;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (count - 1.0));
  const double t = boost::math::quantile(boost::math::students_t(count - 1.0), 0.975);
  const double half = t * sd / std::sqrt(count);
  return {mean - half, mean + half};
}

std::optional<long> pct_vs_ppl(double mean, double ppl_mean) {
  if (!(ppl_mean > 0.0)) return std::nullopt;
  return std::lround((mean / ppl_mean - 1.0) * 100.0);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

void log(const std::string& message) { std::cerr << "[ensrec] " << message << '\n'; }

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return v.empty() ? 0.0 : total / static_cast<double>(v.size());
}

void fill_stats(const std::vector<double>& per_fold, double& mean, double& lo, double& hi) {
  mean = mean_of(per_fold);
  if (per_fold.size() >= 2) {
    std::tie(lo, hi) = confidence_interval(per_fold);
  } else {
    lo = hi = mean;
  }
}

}  // namespace

PreparedDataset prepare_dataset(const ExperimentConfig& config, const DatasetConfig& dataset,
                                int threads) {
  PreparedDataset out;
  out.name = dataset.name;
  const auto interactions = data::load_interactions(dataset.path, dataset.load);
  out.malformed_rows = interactions.malformed_rows;
  if (interactions.malformed_rows > 0)
    log(dataset.name + ": skipped " + std::to_string(interactions.malformed_rows) +
        " malformed rows");
  FoldSet folds = data::split_folds(interactions, config.split);

  std::vector<PredictionMatrix> external;
  Vocabulary users = folds.users;
  Vocabulary items = folds.items;
  for (const auto& path : dataset.matrices) {
    auto m = data::read_matrix(path);
    if (m.n_folds() > config.split.n_folds)
      throw invalid_argument(path + ": matrix has fold " + std::to_string(m.n_folds() - 1) +
                             " but the experiment uses " + std::to_string(config.split.n_folds) +
                             " folds");
    users = Vocabulary::unite(users, m.users());
    items = Vocabulary::unite(items, m.items());
    external.push_back(std::move(m));
  }
  if (!(users == folds.users) || !(items == folds.items)) folds = folds.reindexed(users, items);

  PredictionMatrix raw(users, items, {}, config.split.n_folds);
  if (!config.models.empty())
    raw = baselines::generate_matrix(config.models, folds, config.k_max(), threads);
  for (const auto& m : external) {
    PredictionMatrix widened(users, items, m.models(), config.split.n_folds);
    const auto mapped = m.reindexed(users, items);
    for (int f = 0; f < mapped.n_folds(); ++f)
      for (std::size_t j = 0; j < mapped.models().size(); ++j)
        for (std::size_t u = 0; u < users.size(); ++u)
          if (!mapped.list(f, j, static_cast<UserIndex>(u)).empty())
            widened.set_list(f, j, static_cast<UserIndex>(u),
                             mapped.list(f, j, static_cast<UserIndex>(u)));
    raw.absorb(widened);
  }
  if (raw.models().empty()) throw invalid_argument(dataset.name + ": no models to ensemble");

  const std::size_t short_lists = data::count_short_lists(raw, config.k_max());
  if (short_lists > 0)
    log(dataset.name + ": " + std::to_string(short_lists) + " lists shorter than k_max=" +
        std::to_string(config.k_max()));
  out.normalized = fusion::normalize_scores(raw, config.normalization);
  out.raw = std::move(raw);
  out.folds = std::move(folds);
  return out;
}

KResult select_ensembles(const SelectionConfig& config, selection::EnsembleEvaluator& evaluate,
                         const std::vector<std::string>& models, int n_folds, int k, int n,
                         int threads) {
  const Subset select_on =
      config.split == SelectionSplit::kValidation ? Subset::kValidation : Subset::kTest;
  KResult result;
  result.k = k;
  result.n = n;
  result.selection = config;
  result.chosen.resize(n_folds);
  result.selection_scores.resize(n_folds);
  result.validation_scores.resize(n_folds);
  if (config.scope == SelectionScope::kPerFold) {
    for (int f = 0; f < n_folds; ++f) {
      auto trace = selection::run_selection(
          config.mode, models,
          [&](const selection::Candidate& c) { return evaluate(c, f, k, n, select_on); }, threads);
      result.chosen[f] = trace.chosen.members;
      result.selection_scores[f] = trace.chosen.score;
      result.traces.push_back(std::move(trace));
    }
  } else {
    auto trace = selection::run_selection(
        config.mode, models,
        [&](const selection::Candidate& c) {
          double total = 0.0;
          for (int f = 0; f < n_folds; ++f) total += evaluate(c, f, k, n, select_on);
          return total / n_folds;
        },
        threads);
    for (int f = 0; f < n_folds; ++f) {
      result.chosen[f] = trace.chosen.members;
      result.selection_scores[f] = evaluate(trace.chosen.members, f, k, n, select_on);
    }
    result.traces.push_back(std::move(trace));
  }
  std::set<std::string> all_members;
  for (int f = 0; f < n_folds; ++f) {
    result.validation_scores[f] = evaluate(result.chosen[f], f, k, n, Subset::kValidation);
    result.ensemble.per_fold_ndcg.push_back(evaluate(result.chosen[f], f, k, n, Subset::kTest));
    all_members.insert(result.chosen[f].begin(), result.chosen[f].end());
  }
  result.ensemble.members.assign(all_members.begin(), all_members.end());
  result.ensemble.k = k;
  result.ensemble.cutoff_n = n;
  fill_stats(result.ensemble.per_fold_ndcg, result.ensemble.mean_ndcg, result.ensemble.ci_low,
             result.ensemble.ci_high);
  return result;
}

CellResult run_cell(const ExperimentConfig& config, const PreparedDataset& dataset, int n,
                    int threads) {
  const metrics::PopulationPolicy policy{config.include_empty_holdout_users};
  const auto& matrix = dataset.normalized;
  const auto& folds = dataset.folds;
  const int n_folds = static_cast<int>(folds.n_folds());

  CellResult cell;
  cell.dataset = dataset.name;
  cell.n = n;
  cell.weights = selection::compute_weights(matrix, folds, n, policy);

  for (std::size_t m = 0; m < matrix.models().size(); ++m) {
    ModelRow row;
    row.model = matrix.models()[m];
    for (int f = 0; f < n_folds; ++f)
      row.per_fold.push_back(
          metrics::ndcg_model(matrix.user_lists(f, m), folds.folds[f].test, n, policy));
    fill_stats(row.per_fold, row.mean, row.ci_low, row.ci_high);
    cell.models.push_back(std::move(row));
  }
  {
    const ModelRow* best = nullptr;
    for (const auto& row : cell.models)
      if (!best || row.mean > best->mean || (row.mean == best->mean && row.model < best->model))
        best = &row;
    cell.best_model = best->model;
  }

  selection::EnsembleEvaluator evaluate(matrix, cell.weights, folds, policy);
  for (int k : config.k_values) {
    if (k < n) continue;
    cell.per_k.push_back(
        select_ensembles(config.selection, evaluate, matrix.models(), n_folds, k, n, threads));
  }
  if (cell.per_k.empty())
    throw invalid_argument("no k in k_values is >= N=" + std::to_string(n));

  if (config.selection.table_k) {
    cell.table_k = *config.selection.table_k;
  } else {
    double best = -1.0;
    for (const auto& r : cell.per_k) {
      const double score = mean_of(r.selection_scores);
      if (score > best) {
        best = score;
        cell.table_k = r.k;
      }
    }
  }
  return cell;
}

std::vector<SweepRow> k_sweep(const ExperimentConfig& config, const CellResult& cell) {
  double best_mean = 0.0;
  for (const auto& row : cell.models)
    if (row.model == cell.best_model) best_mean = row.mean;
  std::vector<SweepRow> rows;
  for (int k : config.k_values) {
    SweepRow row;
    row.dataset = cell.dataset;
    row.n = cell.n;
    row.k = k;
    row.best_model = cell.best_model;
    row.best_mean = best_mean;
    for (const auto& r : cell.per_k) {
      if (r.k != k) continue;
      row.ens_mean = r.ensemble.mean_ndcg;
      row.ci_low = r.ensemble.ci_low;
      row.ci_high = r.ensemble.ci_high;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

const KResult& table_result(const CellResult& cell) {
  for (const auto& r : cell.per_k)
    if (r.k == cell.table_k) return r;
  throw Error(ErrorKind::kRuntime, "table k missing from results");
}

std::string selection_label(const ExperimentConfig& config) {
  return std::string(selection::mode_name(config.selection.mode)) + "/" +
         selection_split_name(config.selection.split) + "/" +
         selection_scope_name(config.selection.scope);
}

std::string optional_number(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : "n/a";
}

const double* find_mean(const CellResult& cell, const std::string& model) {
  for (const auto& row : cell.models)
    if (row.model == model) return &row.mean;
  return nullptr;
}

std::string pct_cell(double mean, const double* reference) {
  if (!reference) return "n/a";
  auto pct = pct_vs_ppl(mean, *reference);
  return pct ? std::to_string(*pct) + "%" : "n/a";
}

}  // namespace

std::string render_table(const ExperimentConfig& config, const CellResult& cell) {
  std::ostringstream out;
  out << "dataset,model,n,k,selection,members";
  const std::size_t n_folds = cell.models.empty() ? 0 : cell.models.front().per_fold.size();
  for (std::size_t f = 0; f < n_folds; ++f) out << ",fold_" << f;
  out << ",mean,ci_low,ci_high,pct_vs_ppl\n";
  const double* reference = find_mean(cell, config.reference_model());
  for (const auto& row : cell.models) {
    out << csv::quote(cell.dataset) << ',' << csv::quote(row.model) << ',' << cell.n << ','
        << cell.n << ",none," << csv::quote(row.model);
    for (double v : row.per_fold) out << ',' << csv::format_double(v);
    out << ',' << csv::format_double(row.mean) << ',' << csv::format_double(row.ci_low) << ','
        << csv::format_double(row.ci_high) << ',' << pct_cell(row.mean, reference) << '\n';
  }
  const auto& ens = table_result(cell);
  std::string members;
  if (config.selection.scope == SelectionScope::kFixedSubset) {
    members = join_members(ens.chosen.front());
  } else {
    for (std::size_t f = 0; f < ens.chosen.size(); ++f) {
      if (f) members += '|';
      members += join_members(ens.chosen[f]);
    }
  }
  out << csv::quote(cell.dataset) << ",Ensemble-Method," << cell.n << ',' << ens.k << ','
      << selection_label(config) << ',' << csv::quote(members);
  for (double v : ens.ensemble.per_fold_ndcg) out << ',' << csv::format_double(v);
  out << ',' << csv::format_double(ens.ensemble.mean_ndcg) << ','
      << csv::format_double(ens.ensemble.ci_low) << ',' << csv::format_double(ens.ensemble.ci_high)
      << ',' << pct_cell(ens.ensemble.mean_ndcg, reference) << '\n';
  return out.str();
}

std::string render_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "dataset,n,k,ens_mean,ci_low,ci_high,best_model,best_mean\n";
  for (const auto& r : rows)
    out << csv::quote(r.dataset) << ',' << r.n << ',' << r.k << ',' << optional_number(r.ens_mean)
        << ',' << optional_number(r.ci_low) << ',' << optional_number(r.ci_high) << ','
        << csv::quote(r.best_model) << ',' << csv::format_double(r.best_mean) << '\n';
  return out.str();
}

std::string trace_header() { return "mode,fold,members,k,n,split,ndcg\n"; }

std::string render_trace_rows(const KResult& result) {
  std::ostringstream out;
  const bool fixed = result.selection.scope == SelectionScope::kFixedSubset;
  const char* split =
      result.selection.split == SelectionSplit::kValidation ? "validation" : "test";
  for (std::size_t t = 0; t < result.traces.size(); ++t) {
    const std::string fold = fixed ? "all" : std::to_string(t);
    for (const auto& step : result.traces[t].evaluated)
      out << selection::mode_name(result.traces[t].mode) << ',' << fold << ','
          << csv::quote(join_members(step.members)) << ',' << result.k << ',' << result.n << ','
          << split << ',' << csv::format_double(step.score) << '\n';
  }
  return out.str();
}

std::string render_trace(const CellResult& cell) {
  std::string out = trace_header();
  for (const auto& r : cell.per_k) out += render_trace_rows(r);
  return out;
}

namespace {

std::string render_summary(const ExperimentConfig& config, const std::vector<CellResult>& cells,
                           int n) {
  std::vector<const CellResult*> by_dataset;
  for (const auto& d : config.datasets) {
    const CellResult* found = nullptr;
    for (const auto& c : cells)
      if (c.dataset == d.name && c.n == n) found = &c;
    by_dataset.push_back(found);
  }
  std::vector<std::string> rows;
  for (const auto* c : by_dataset) {
    if (!c) continue;
    for (const auto& m : c->models)
      if (std::find(rows.begin(), rows.end(), m.model) == rows.end()) rows.push_back(m.model);
  }
  rows.push_back("Ensemble-Method");

  auto mean_for = [&](const CellResult* c, const std::string& row) -> std::optional<double> {
    if (!c) return std::nullopt;
    if (row == "Ensemble-Method") return table_result(*c).ensemble.mean_ndcg;
    if (const double* m = find_mean(*c, row)) return *m;
    return std::nullopt;
  };
  auto across = [&](const std::string& row) -> std::optional<double> {
    double total = 0.0;
    for (const auto* c : by_dataset) {
      auto v = mean_for(c, row);
      if (!v) return std::nullopt;
      total += *v;
    }
    return total / static_cast<double>(by_dataset.size());
  };

  std::ostringstream out;
  out << "model";
  for (const auto& d : config.datasets) out << ',' << csv::quote(d.name);
  out << ",across_all,pct_vs_ppl\n";
  const auto reference = across(config.reference_model());
  for (const auto& row : rows) {
    out << csv::quote(row);
    for (const auto* c : by_dataset) out << ',' << optional_number(mean_for(c, row));
    const auto all = across(row);
    out << ',' << optional_number(all) << ',';
    if (all && reference) {
      auto pct = pct_vs_ppl(*all, *reference);
      out << (pct ? std::to_string(*pct) + "%" : "n/a");
    } else {
      out << "n/a";
    }
    out << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw io_error("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

ReportBundle run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const int threads = options.threads;
  const std::filesystem::path out_dir =
      options.output_dir.empty() ? config.output_dir : options.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory '" + out_dir.string() + "'");

  const bool want_report = options.parts != BundleParts::kSweep;
  const bool want_sweep = options.parts != BundleParts::kReport;
  const bool want_exports = options.parts == BundleParts::kAll;

  ReportBundle bundle;
  json timings = json::object();
  json dataset_info = json::array();
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
  };

  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(out_dir / name, text);
    bundle.files.push_back(name);
  };

  for (const auto& ds : config.datasets) {
    auto started = Clock::now();
    PreparedDataset prepared;
    try {
      log("preparing " + ds.name);
      prepared = prepare_dataset(config, ds, threads);
    } catch (const std::exception& e) {
      log("dataset " + ds.name + " failed: " + e.what());
      bundle.failures.push_back({ds.name, 0, e.what()});
      continue;
    }
    timings["prepare/" + ds.name] = seconds_since(started);
    dataset_info.push_back({{"name", ds.name},
                            {"users", prepared.folds.users.size()},
                            {"items", prepared.folds.items.size()},
                            {"models", prepared.raw.models()},
                            {"malformed_rows", prepared.malformed_rows},
                            {"short_lists", data::count_short_lists(prepared.raw, config.k_max())}});
    if (want_exports && config.export_splits) {
      data::write_splits(prepared.folds, (out_dir / ("splits_" + ds.name + ".csv")).string());
      bundle.files.push_back("splits_" + ds.name + ".csv");
    }
    if (want_exports && config.export_matrix) {
      data::write_matrix(prepared.raw, (out_dir / ("matrix_" + ds.name + ".csv")).string());
      bundle.files.push_back("matrix_" + ds.name + ".csv");
    }

    for (int n : config.n_values) {
      const std::string suffix = ds.name + "_" + std::to_string(n) + ".csv";
      started = Clock::now();
      try {
        log("running " + ds.name + " N=" + std::to_string(n));
        auto cell = run_cell(config, prepared, n, threads);
        if (want_report) {
          emit("tables_" + suffix, render_table(config, cell));
          emit("trace_" + suffix, render_trace(cell));
        }
        if (want_sweep) emit("sweep_" + suffix, render_sweep(k_sweep(config, cell)));
        bundle.cells.push_back(std::move(cell));
      } catch (const std::exception& e) {
        log("cell " + ds.name + " N=" + std::to_string(n) + " failed: " + e.what());
        bundle.failures.push_back({ds.name, n, e.what()});
      }
      timings["cell/" + ds.name + "/" + std::to_string(n)] = seconds_since(started);
    }
  }

  if (want_report) {
    for (int n : config.n_values) {
      const bool any = std::any_of(bundle.cells.begin(), bundle.cells.end(),
                                   [&](const CellResult& c) { return c.n == n; });
      if (any) emit("summary_" + std::to_string(n) + ".csv", render_summary(config, bundle.cells, n));
    }
  }

  json manifest;
  manifest["config_hash"] = "fnv1a64:" + fnv1a_hex(config.source);
  manifest["seed"] = config.split.seed;
  manifest["folds"] = config.split.n_folds;
  manifest["selection"] = {{"mode", selection::mode_name(config.selection.mode)},
                           {"split", selection_split_name(config.selection.split)},
                           {"scope", selection_scope_name(config.selection.scope)}};
  manifest["normalization"] = fusion::normalization_name(config.normalization);
  manifest["include_empty_holdout_users"] = config.include_empty_holdout_users;
  manifest["datasets"] = dataset_info;
  json cells = json::array();
  for (const auto& c : bundle.cells)
    cells.push_back({{"dataset", c.dataset}, {"n", c.n}, {"table_k", c.table_k},
                     {"best_model", c.best_model}});
  manifest["cells"] = cells;
  json failed = json::array();
  for (const auto& f : bundle.failures)
    failed.push_back({{"dataset", f.dataset}, {"n", f.n}, {"error", f.message}});
  manifest["failed_cells"] = failed;
  json files = json::array();
  for (const auto& name : bundle.files)
    files.push_back({{"name", name}, {"fnv1a64", fnv1a_hex(read_text(out_dir / name))}});
  manifest["files"] = files;
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  bundle.files.push_back("manifest.json");
  // Wall-clock data lives outside the manifest so the bundle stays
  // byte-reproducible.
  write_text(out_dir / "timings.json", timings.dump(2) + "\n");
  return bundle;
}

}  // namespace ensrec::harness
