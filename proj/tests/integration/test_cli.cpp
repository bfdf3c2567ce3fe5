#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "cli_util.hpp"

namespace fs = std::filesystem;
using namespace ensrec::testing;

namespace {

fs::path toy_workspace(const std::string& name) {
  auto dir = scratch_dir(name);
  fs::copy_file(fixture("toy_interactions.csv"), dir / "toy_interactions.csv");
  fs::copy_file(fixture("toy_config.json"), dir / "toy_config.json");
  return dir;
}

std::string body(const std::string& csv) { return csv.substr(csv.find('\n') + 1); }

const char* kSplitFlags =
    " --user-col user --item-col item --rating-col rating --timestamp-col timestamp"
    " --folds 5 --seed 42 --min-interactions 5";

}  // namespace

TEST_CASE("run writes the whole bundle") {
  const auto dir = toy_workspace("cli_run");
  const auto r = cli("run --config toy_config.json --threads 2", dir);
  INFO(r.output);
  REQUIRE(r.code == 0);
  for (const char* f : {"splits_toy.csv", "matrix_toy.csv", "tables_toy_5.csv", "trace_toy_5.csv",
                        "sweep_toy_5.csv", "tables_toy_10.csv", "trace_toy_10.csv",
                        "sweep_toy_10.csv", "summary_5.csv", "summary_10.csv", "manifest.json",
                        "timings.json"})
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
  const auto sweep = lines_of(slurp(dir / "out" / "sweep_toy_10.csv"));
  REQUIRE(sweep.size() == 5);
  CHECK(sweep[1].rfind("toy,10,5,n/a,n/a,n/a,", 0) == 0);
}

TEST_CASE("run matches the chained subcommands") {
  const auto dir = toy_workspace("cli_chain");
  REQUIRE(cli("run --config toy_config.json", dir).code == 0);

  auto r = cli(std::string("split --input toy_interactions.csv --out s.csv") + kSplitFlags, dir);
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "s.csv") == slurp(dir / "out" / "splits_toy.csv"));

  r = cli("predict --splits s.csv --k-max 25 --out m.csv", dir);
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "m.csv") == slurp(dir / "out" / "matrix_toy.csv"));

  for (int n : {5, 10}) {
    std::string rows;
    for (int k : {5, 10, 15, 25}) {
      if (k < n) continue;
      r = cli("select --matrix m.csv --splits s.csv --k " + std::to_string(k) + " --n " +
                  std::to_string(n) + " --out t.csv --chosen c.csv",
              dir);
      REQUIRE(r.code == 0);
      rows += body(slurp(dir / "t.csv"));
    }
    CHECK(rows == body(slurp(dir / "out" / ("trace_toy_" + std::to_string(n) + ".csv"))));
  }
}

TEST_CASE("fuse rejects k below N") {
  const auto dir = toy_workspace("cli_fuse");
  REQUIRE(cli(std::string("split --input toy_interactions.csv --out s.csv") + kSplitFlags, dir)
              .code == 0);
  REQUIRE(cli("predict --splits s.csv --k-max 10 --out m.csv", dir).code == 0);
  REQUIRE(cli("weights --matrix m.csv --splits s.csv --n 5 --out w.csv", dir).code == 0);

  auto r = cli("fuse --matrix m.csv --weights w.csv --members I-I-TFIDF+PPL --k 3 --n 5 --out f.csv",
               dir);
  CHECK(r.code == 1);
  CHECK(r.output.find("k must be \xE2\x89\xA5 N") != std::string::npos);

  r = cli("fuse --matrix m.csv --weights w.csv --members I-I-TFIDF+PPL --k 10 --n 5 --out f.csv",
          dir);
  INFO(r.output);
  REQUIRE(r.code == 0);
  const auto lines = lines_of(slurp(dir / "f.csv"));
  REQUIRE(lines.size() > 1);
  CHECK(lines[1].find(",I-I-TFIDF+PPL,") != std::string::npos);
}

TEST_CASE("exhaustive select over three models evaluates seven candidates per fold") {
  const auto dir = toy_workspace("cli_exhaustive");
  std::ofstream(dir / "models.json")
      << R"([{"id": "PPL", "kind": "popularity"},
             {"id": "I-I-COSINE", "kind": "item-item-cosine"},
             {"id": "U-KNN", "kind": "user-knn"}])";
  REQUIRE(cli(std::string("split --input toy_interactions.csv --out s.csv") + kSplitFlags, dir)
              .code == 0);
  auto r = cli("predict --splits s.csv --models models.json --k-max 10 --out m.csv", dir);
  INFO(r.output);
  REQUIRE(r.code == 0);
  r = cli("select --matrix m.csv --splits s.csv --mode exhaustive --k 10 --n 5 --out t.csv", dir);
  REQUIRE(r.code == 0);
  const auto rows = lines_of(body(slurp(dir / "t.csv")));
  CHECK(rows.size() == 35);
  int fold0 = 0;
  for (const auto& row : rows)
    if (row.rfind("exhaustive,0,", 0) == 0) ++fold0;
  CHECK(fold0 == 7);
  // chosen lines go to stdout
  CHECK(lines_of(r.output).size() == 6);
}

TEST_CASE("exit codes") {
  const auto dir = toy_workspace("cli_exit");
  CHECK(cli("--help", dir).code == 0);
  CHECK(cli("split --bogus", dir).code == 1);
  CHECK(cli("select --matrix missing.csv --splits missing.csv --out t.csv", dir).code == 1);

  auto r = cli("run --config toy_config.json", dir);
  REQUIRE(r.code == 0);
  r = cli("fuse --matrix out/matrix_toy.csv --weights out/matrix_toy.csv --members PPL --out f.csv",
          dir);
  CHECK(r.code == 1);
  CHECK(r.output.find("ensrec: error:") != std::string::npos);

  // a dataset that cannot be prepared is a runtime failure
  std::string config = slurp(dir / "toy_config.json");
  config.replace(config.find("toy_interactions.csv"), 20, "gone.csv");
  std::ofstream(dir / "broken.json") << config;
  r = cli("run --config broken.json", dir);
  CHECK(r.code == 2);
}
