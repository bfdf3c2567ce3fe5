#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ensrec/data.hpp"
#include "ensrec/error.hpp"
#include "ensrec/harness.hpp"
#include "ensrec/metrics.hpp"
#include "../support/synth.hpp"

using namespace ensrec;
using namespace ensrec::harness;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct Scenario {
  fs::path dir;
  ExperimentConfig config;
};

// Small synthetic dataset on disk plus a config pointing at it.
Scenario make_scenario(const std::string& name, const std::string& extra = "",
                       int users = 120) {
  Scenario s;
  s.dir = ensrec::testing::scratch_dir(name);
  ensrec::testing::write_records_csv(ensrec::testing::synthetic_records(users, 60, 17, 3, 30),
                                     s.dir / "data.csv");
  const std::string text = R"({
    "datasets": [{"name": "syn", "path": "data.csv", "columns": {"user": "user", "item": "item"}}],
    "n_values": [5, 10],
    "k_values": [5, 10, 20],
    "seed": 7,
    "folds": 3)" + extra + "}";
  std::ofstream(s.dir / "config.json") << text;
  s.config = load_config((s.dir / "config.json").string());
  return s;
}

}  // namespace

TEST_CASE("confidence interval") {
  auto [lo, hi] = confidence_interval({0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK(lo == Approx(0.1037).epsilon(1e-4));
  CHECK(hi == Approx(0.4963).epsilon(1e-4));
  // Independent: mean +- t * s / sqrt(n) with t(0.975, 4) from tables.
  CHECK(hi - lo == Approx(2 * 2.7764451051977987 * std::sqrt(0.025) / std::sqrt(5.0)));

  auto [a, b] = confidence_interval({0.2, 0.2, 0.2, 0.2, 0.2});
  CHECK(a == Approx(0.2));
  CHECK(b == Approx(0.2));
  auto [c, d] = confidence_interval({0.0, 1.0});
  CHECK((c + d) / 2 == Approx(0.5));
  CHECK_THROWS_AS(confidence_interval({1.0}), Error);
  CHECK_THROWS_AS(confidence_interval({1.0, 2.0}, 0.9), Error);
  // Large samples fall back to the normal quantile region.
  std::vector<double> many(41);
  for (int i = 0; i < 41; ++i) many[i] = i % 2;
  auto [e, f] = confidence_interval(many);
  CHECK(f - e > 0.0);
}

TEST_CASE("pct_vs_ppl") {
  CHECK(pct_vs_ppl(0.1854, 0.0832) == 123);
  CHECK(pct_vs_ppl(0.1566, 0.0832) == 88);
  CHECK(pct_vs_ppl(0.3, 0.3) == 0);
  CHECK(pct_vs_ppl(0.05, 0.1) == -50);
  CHECK_FALSE(pct_vs_ppl(0.1, 0.0).has_value());
}

TEST_CASE("fnv1a test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("config parsing") {
  const auto s = make_scenario("config");
  CHECK(s.config.datasets.size() == 1);
  CHECK(fs::path(s.config.datasets[0].path) == (s.dir / "data.csv").lexically_normal());
  CHECK(s.config.models.size() == 6);
  CHECK(s.config.split.n_folds == 3);
  CHECK(s.config.reference_model() == "PPL");
  CHECK(s.config.k_max() == 20);

  const std::string base = R"({"datasets": [{"name": "d", "path": "x.csv"}])";
  CHECK_NOTHROW(parse_config(base + "}", "."));
  CHECK_THROWS_WITH(parse_config(base + R"(, "sedd": 1})", "."), "unknown key 'sedd' in config");
  CHECK_THROWS_AS(parse_config(base + R"(, "k_values": [10, 5]})", "."), Error);
  CHECK_THROWS_AS(parse_config(base + R"(, "n_values": [20], "k_values": [5, 10]})", "."),
                  Error);
  CHECK_THROWS_AS(parse_config(base + R"(, "split_ratios": [0.5, 0.2, 0.2]})", "."), Error);
  CHECK_THROWS_AS(parse_config(base + R"(, "selection": {"mode": "random"}})", "."), Error);
  CHECK_THROWS_AS(parse_config(base + R"(, "models": [{"id": "A", "kind": "als"}]})", "."),
                  Error);
  CHECK_THROWS_AS(
      parse_config(base + R"(, "models": [{"id": "A", "kind": "popularity", "alpha": 1}]})", "."),
      Error);
  CHECK_THROWS_AS(parse_config("{", "."), Error);
  CHECK_THROWS_AS(parse_config(R"({"datasets": []})", "."), Error);
  CHECK_THROWS_AS(load_config((s.dir / "missing.json").string()), Error);

  const auto models = parse_models(R"([{"id": "B", "kind": "item-item-bm25", "k1": 2.0}])");
  REQUIRE(models.size() == 1);
  CHECK(models[0].params.k1 == 2.0);
  CHECK(models[0].params.b == 0.75);
}

TEST_CASE("single-model config degenerates to that model") {
  const auto s = make_scenario("single", R"(, "models": [{"id": "TF", "kind": "item-item-tfidf"}])");
  const auto prepared = prepare_dataset(s.config, s.config.datasets[0], 1);
  const auto cell = run_cell(s.config, prepared, 5, 1);
  REQUIRE(cell.models.size() == 1);
  for (const auto& r : cell.per_k) {
    for (const auto& c : r.chosen) CHECK(c == selection::Candidate{"TF"});
  }
  // k = n: the fused list is the model's own top-n.
  const auto sweep = k_sweep(s.config, cell);
  REQUIRE(sweep[0].k == 5);
  CHECK(*sweep[0].ens_mean == Approx(cell.models[0].mean).epsilon(1e-12));
  const auto table = render_table(s.config, cell);
  CHECK(table.find("Ensemble-Method") != std::string::npos);
  CHECK(table.find(",n/a\n") != std::string::npos);  // no popularity model to compare with
}

TEST_CASE("k sweep rows match an independent rerun") {
  const auto s = make_scenario(
      "sweep", R"(, "models": [{"id": "P", "kind": "popularity"}, {"id": "C", "kind": "item-item-cosine"}, {"id": "K", "kind": "user-knn"}])");
  const auto prepared = prepare_dataset(s.config, s.config.datasets[0], 2);
  const auto cell = run_cell(s.config, prepared, 10, 2);
  const auto sweep = k_sweep(s.config, cell);
  REQUIRE(sweep.size() == 3);
  CHECK_FALSE(sweep[0].ens_mean.has_value());  // k = 5 < N
  for (const auto& row : sweep) CHECK(row.best_model == cell.best_model);

  // Rebuild everything from the raw pieces and rerun greedy at each k.
  const auto interactions =
      data::load_interactions(s.config.datasets[0].path, s.config.datasets[0].load);
  const auto folds = data::split_folds(interactions, s.config.split);
  const auto raw = baselines::generate_matrix(s.config.models, folds, 20, 1);
  const auto norm = fusion::normalize_scores(raw, fusion::Normalization::kGlobalMinMax);
  const auto weights = selection::compute_weights(norm, folds, 10);
  for (const auto& row : sweep) {
    if (row.k < 10) continue;
    std::vector<double> per_fold;
    for (int f = 0; f < 3; ++f) {
      auto eval = [&](const selection::Candidate& c) {
        return selection::evaluate_ensemble(c, norm, weights, folds, f, row.k, 10,
                                            Subset::kValidation);
      };
      const auto trace = selection::greedy_select(norm.models(), eval);
      per_fold.push_back(selection::evaluate_ensemble(trace.chosen.members, norm, weights, folds,
                                                      f, row.k, 10, Subset::kTest));
    }
    CHECK(*row.ens_mean == Approx((per_fold[0] + per_fold[1] + per_fold[2]) / 3).epsilon(1e-12));
  }
}

TEST_CASE("greedy ensembles never lose to the best singleton on validation") {
  const auto s = make_scenario("guarantee");
  const auto prepared = prepare_dataset(s.config, s.config.datasets[0], 0);
  for (int n : s.config.n_values) {
    const auto cell = run_cell(s.config, prepared, n, 0);
    for (const auto& r : cell.per_k) {
      for (std::size_t f = 0; f < r.traces.size(); ++f) {
        double best_single = -1.0;
        for (const auto& step : r.traces[f].evaluated)
          if (step.members.size() == 1) best_single = std::max(best_single, step.score);
        CHECK(r.validation_scores[f] >= best_single);
      }
    }
  }
}

TEST_CASE("selection scopes and splits") {
  auto s = make_scenario("scopes");
  s.config.selection.scope = SelectionScope::kFixedSubset;
  s.config.selection.mode = selection::Mode::kExhaustive;
  const auto prepared = prepare_dataset(s.config, s.config.datasets[0], 0);
  const auto cell = run_cell(s.config, prepared, 5, 0);
  for (const auto& r : cell.per_k) {
    REQUIRE(r.traces.size() == 1);
    CHECK(r.traces[0].evaluated.size() == 63);
    for (const auto& c : r.chosen) CHECK(c == r.chosen.front());
  }
  const auto trace = render_trace(cell);
  CHECK(trace.find("exhaustive,all,") != std::string::npos);

  s.config.selection.split = SelectionSplit::kPaperFaithful;
  s.config.selection.scope = SelectionScope::kPerFold;
  s.config.selection.mode = selection::Mode::kGreedy;
  const auto faithful = run_cell(s.config, prepared, 5, 0);
  for (const auto& r : faithful.per_k)
    for (std::size_t f = 0; f < r.chosen.size(); ++f)
      CHECK(r.selection_scores[f] == r.ensemble.per_fold_ndcg[f]);
  CHECK(render_trace(faithful).find(",test,") != std::string::npos);
}

TEST_CASE("run_experiment writes a reproducible bundle") {
  auto s = make_scenario("bundle", R"(, "export": {"splits": true, "matrix": true})");
  RunOptions a;
  a.output_dir = (s.dir / "a").string();
  a.threads = 1;
  RunOptions b = a;
  b.output_dir = (s.dir / "b").string();
  b.threads = 3;
  const auto first = run_experiment(s.config, a);
  const auto second = run_experiment(s.config, b);
  CHECK(first.failures.empty());
  CHECK(first.files == second.files);
  for (const auto& name : first.files)
    CHECK_MESSAGE(ensrec::testing::slurp(s.dir / "a" / name) ==
                      ensrec::testing::slurp(s.dir / "b" / name),
                  name);
  for (const char* name : {"tables_syn_5.csv", "sweep_syn_10.csv", "trace_syn_10.csv",
                           "summary_5.csv", "splits_syn.csv", "matrix_syn.csv", "manifest.json"})
    CHECK(fs::exists(s.dir / "a" / name));
  CHECK(fs::exists(s.dir / "a" / "timings.json"));

  // The exported pieces read back into what the run used.
  const auto folds = data::read_splits((s.dir / "a" / "splits_syn.csv").string());
  CHECK(folds.n_folds() == 3);
  const auto matrix = data::read_matrix((s.dir / "a" / "matrix_syn.csv").string());
  CHECK(matrix.models().size() == 6);
}

TEST_CASE("a failing dataset is recorded and the rest still runs") {
  auto s = make_scenario("failing");
  DatasetConfig broken = s.config.datasets[0];
  broken.name = "broken";
  broken.path = (s.dir / "nope.csv").string();
  s.config.datasets.insert(s.config.datasets.begin(), broken);
  RunOptions o;
  o.output_dir = (s.dir / "out").string();
  const auto bundle = run_experiment(s.config, o);
  REQUIRE(bundle.failures.size() == 1);
  CHECK(bundle.failures[0].dataset == "broken");
  CHECK(bundle.cells.size() == 2);
  CHECK(fs::exists(s.dir / "out" / "tables_syn_5.csv"));
}

TEST_CASE("external matrices join the roster") {
  auto s = make_scenario("external");
  const auto prepared = prepare_dataset(s.config, s.config.datasets[0], 0);
  // Export one built-in model's lists under a new id and feed them back.
  const auto& raw = prepared.raw;
  PredictionMatrix ext(raw.users(), raw.items(), {"EXT"}, raw.n_folds());
  const auto src = raw.require_model("I-I-COSINE");
  for (int f = 0; f < raw.n_folds(); ++f)
    for (std::size_t u = 0; u < raw.users().size(); ++u)
      if (!raw.list(f, src, static_cast<UserIndex>(u)).empty())
        ext.set_list(f, 0, static_cast<UserIndex>(u), raw.list(f, src, static_cast<UserIndex>(u)));
  data::write_matrix(ext, (s.dir / "ext.csv").string());
  s.config.datasets[0].matrices.push_back((s.dir / "ext.csv").string());
  const auto merged = prepare_dataset(s.config, s.config.datasets[0], 0);
  CHECK(merged.raw.models().size() == 7);
  const auto cell = run_cell(s.config, merged, 5, 0);
  double cos = 0, ext_mean = 0;
  for (const auto& r : cell.models) {
    if (r.model == "I-I-COSINE") cos = r.mean;
    if (r.model == "EXT") ext_mean = r.mean;
  }
  CHECK(cos == ext_mean);
}
