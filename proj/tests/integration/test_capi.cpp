#include "doctest.h"

#include <cstdlib>
#include <string>

#include "cli_util.hpp"
#include "ensrec/ensrec.h"

using namespace ensrec::testing;

namespace {

ensrec_dataset* load_toy() {
  ensrec_load_options o;
  ensrec_load_options_default(&o);
  o.user_column = "user";
  o.item_column = "item";
  o.rating_column = "rating";
  o.timestamp_column = "timestamp";
  ensrec_dataset* d = nullptr;
  REQUIRE(ensrec_dataset_load(fixture("toy_interactions.csv").c_str(), &o, &d) == ENSREC_OK);
  return d;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(ensrec_version()) == "1.0.0");

  ensrec_load_options o;
  ensrec_load_options_default(&o);
  ensrec_dataset* d = nullptr;
  CHECK(ensrec_dataset_load("/nonexistent/x.csv", &o, &d) == ENSREC_ERR_IO);
  CHECK(d == nullptr);
  CHECK(std::string(ensrec_last_error()).find("x.csv") != std::string::npos);

  CHECK(ensrec_dataset_load(nullptr, &o, &d) == ENSREC_ERR_INVALID_ARGUMENT);
  CHECK(ensrec_matrix_read(fixture("toy_config.json").c_str(), nullptr) ==
        ENSREC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("end to end through handles") {
  const auto dir = scratch_dir("capi");
  ensrec_dataset* d = load_toy();
  CHECK(ensrec_dataset_size(d) == 330);
  CHECK(ensrec_dataset_malformed_rows(d) == 0);

  ensrec_split_options so;
  ensrec_split_options_default(&so);
  CHECK(so.n_folds == 5);
  so.seed = 42;
  ensrec_splits* s = nullptr;
  REQUIRE(ensrec_splits_create(d, &so, &s) == ENSREC_OK);
  CHECK(ensrec_splits_fold_count(s) == 5);
  const auto splits_path = (dir / "s.csv").string();
  REQUIRE(ensrec_splits_write(s, splits_path.c_str()) == ENSREC_OK);
  ensrec_splits* s2 = nullptr;
  REQUIRE(ensrec_splits_read(splits_path.c_str(), &s2) == ENSREC_OK);
  CHECK(ensrec_splits_fold_count(s2) == 5);

  char* summary = nullptr;
  REQUIRE(ensrec_fit_summary(s, nullptr, 1, &summary) == ENSREC_OK);
  const auto fit_lines = lines_of(summary);
  REQUIRE(fit_lines.size() == 31);
  CHECK(fit_lines[0] == "fold,model,kind,users,items,neighbors");
  ensrec_string_free(summary);

  ensrec_matrix* m = nullptr;
  REQUIRE(ensrec_matrix_generate(s, nullptr, 10, 1, &m) == ENSREC_OK);
  CHECK(ensrec_matrix_model_count(m) == 6);
  CHECK(ensrec_matrix_model_id(m, 99) == nullptr);

  ensrec_matrix* norm = nullptr;
  CHECK(ensrec_matrix_normalize(m, "z-score", &norm) == ENSREC_ERR_INVALID_ARGUMENT);
  REQUIRE(ensrec_matrix_normalize(m, "global-minmax", &norm) == ENSREC_OK);

  ensrec_weights* w = nullptr;
  REQUIRE(ensrec_weights_compute(m, s, 5, 0, &w) == ENSREC_OK);
  CHECK(ensrec_fuse_write(norm, w, "PPL+I-I-TFIDF", 0, 4, 5, (dir / "f.csv").c_str()) ==
        ENSREC_ERR_INVALID_ARGUMENT);
  CHECK(ensrec_fuse_write(norm, w, "PPL+I-I-TFIDF", 9, 10, 5, (dir / "f.csv").c_str()) ==
        ENSREC_ERR_INVALID_ARGUMENT);
  CHECK(ensrec_fuse_write(norm, w, "PPL+I-I-TFIDF", 0, 10, 5, (dir / "f.csv").c_str()) ==
        ENSREC_OK);

  ensrec_select_options opts;
  ensrec_select_options_default(&opts);
  opts.k = 10;
  opts.n = 5;
  opts.threads = 1;
  char* chosen = nullptr;
  REQUIRE(ensrec_select_write(m, s, nullptr, &opts, (dir / "t.csv").c_str(), &chosen) ==
          ENSREC_OK);
  const auto chosen_lines = lines_of(chosen);
  REQUIRE(chosen_lines.size() == 6);
  CHECK(chosen_lines[0] == "fold,members,selection_ndcg,test_ndcg");
  ensrec_string_free(chosen);
  opts.mode = "random";
  CHECK(ensrec_select_write(m, s, nullptr, &opts, (dir / "t.csv").c_str(), nullptr) ==
        ENSREC_ERR_INVALID_ARGUMENT);

  ensrec_weights_free(w);
  ensrec_matrix_free(norm);
  ensrec_matrix_free(m);
  ensrec_splits_free(s2);
  ensrec_splits_free(s);
  ensrec_dataset_free(d);
}
