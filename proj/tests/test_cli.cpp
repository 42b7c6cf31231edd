#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include <fstream>
#include <string>
#include <vector>

#include "diffmia/csvio.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(DIFFMIA_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("diffmia_cli_" + std::to_string(::getpid()) + "_" +
                                       std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  static int counter;
};
int Workspace::counter = 0;

std::string write_config(const Workspace& ws, const std::string& out_dir,
                         const std::string& attacks, const std::string& sweep = "") {
  const std::string text = std::string(R"({
  "config_version": 1,
  "seed": 5,
  "out_dir": ")") + out_dir + R"(",
  "dataset": {"dim": 3, "components": 2, "separation": 6.0, "size": 256, "member_count": 16, "query_size": 16},
  "train": {"steps": 300, "batch_size": 16, "learning_rate": 0.001, "T": 20, "hidden_dims": [16], "time_embed_dim": 8},
  "attacks": [)" + attacks + "]" + (sweep.empty() ? "" : ",\n  \"sweep\": " + sweep) + "\n}";
  const std::string path = ws.path("config.json");
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("train writes a loadable checkpoint and is byte-deterministic") {
  Workspace ws;
  const std::string out = ws.path("run");
  const std::string cfg = write_config(ws, out, R"({"scenario": "whitebox"})");
  REQUIRE(run("train --config " + cfg) == 0);
  CHECK(fs::exists(out + "/target.ckpt"));
  CHECK(fs::exists(out + "/train_loss.csv"));
  CHECK(fs::exists(out + "/dataset.csv"));

  const std::string first = slurp(out + "/target.ckpt");
  REQUIRE(run("train --config " + cfg) == 0);
  CHECK(slurp(out + "/target.ckpt") == first);
}

TEST_CASE("attack produces scores and a report with the scenario defaults") {
  Workspace ws;
  const std::string out = ws.path("run");
  const std::string cfg = write_config(
      ws, out, R"({"scenario": "whitebox"}, {"scenario": "graybox"})");
  REQUIRE(run("train --config " + cfg) == 0);
  REQUIRE(run("attack --config " + cfg) == 0);

  std::vector<std::string> header;
  const auto rows = diffmia::read_csv(out + "/report.csv", &header);
  REQUIRE(rows.size() == 2);
  REQUIRE(header.front() == "scenario");
  CHECK(rows[0][0] == "whitebox");
  CHECK(rows[0][1] == "max");
  CHECK(rows[0][2] == "0.75");
  CHECK(rows[1][0] == "graybox");
  CHECK(rows[1][1] == "median");
  CHECK(rows[1][2] == "0.75");
  CHECK(fs::exists(out + "/scores_0_whitebox.csv"));
  CHECK(fs::exists(out + "/scores_1_graybox.csv"));

  SUBCASE("the report command reproduces metrics from the scores file") {
    const std::string prefix = ws.path("rep");
    REQUIRE(run("report --scores " + out + "/scores_0_whitebox.csv --out-prefix " + prefix) == 0);
    std::vector<std::string> mh;
    const auto metrics = diffmia::read_csv(prefix + "_metrics.csv", &mh);
    REQUIRE(metrics.size() == 1);
    const double auc = std::stod(metrics[0][0]);
    const double reported = std::stod(rows[0][7]);
    CHECK(auc == doctest::Approx(reported).epsilon(1e-12));
    CHECK(fs::exists(prefix + "_roc.csv"));
  }
}

TEST_CASE("attack without a checkpoint is a config error, bad config a usage error") {
  Workspace ws;
  const std::string out = ws.path("run");
  const std::string cfg = write_config(ws, out, R"({"scenario": "whitebox"})");
  CHECK(run("attack --config " + cfg) == 1);

  const std::string bad = ws.path("bad.json");
  std::ofstream(bad) << R"({"config_version": 1, "attacks": [{"scenario": "mystery"}]})";
  CHECK(run("attack --config " + bad) == 1);  // unknown scenario is a config error

  const std::string unknown_key = ws.path("unknown.json");
  std::ofstream(unknown_key) << R"({"config_version": 1, "sed": 3})";
  CHECK(run("train --config " + unknown_key) == 1);
  CHECK(run("train") == 1);  // missing required --config
}

TEST_CASE("sample draws the requested number of vectors") {
  Workspace ws;
  const std::string out = ws.path("run");
  const std::string cfg = write_config(ws, out, R"({"scenario": "whitebox"})");
  REQUIRE(run("train --config " + cfg) == 0);
  const std::string samples = ws.path("samples.csv");
  REQUIRE(run("sample --config " + cfg + " --count 20 --samples-out " + samples) == 0);
  std::vector<std::string> header;
  const auto rows = diffmia::read_csv(samples, &header);
  CHECK(rows.size() == 20);
  CHECK(header.size() == 3);
}

TEST_CASE("sweep runs the grid, resumes, and is thread-count invariant") {
  Workspace ws;
  const std::string out = ws.path("run");
  const std::string cfg = write_config(
      ws, out, R"({"scenario": "whitebox"})",
      R"({"statistic": ["max", "median", "sum", "min"],)"
      R"( "truncation_fraction": [1.0, 0.975, 0.875, 0.75, 0.625, 0.5]})");
  REQUIRE(run("train --config " + cfg) == 0);

  setenv("DIFFMIA_THREADS", "1", 1);
  REQUIRE(run("sweep --config " + cfg) == 0);
  std::vector<std::string> header;
  const auto rows = diffmia::read_csv(out + "/sweep/results.csv", &header);
  REQUIRE(rows.size() == 24);  // 4 statistics x 6 fractions
  for (const auto& row : rows) {
    CHECK(row[12] == "");  // no error column entries
  }
  const std::string baseline = slurp(out + "/sweep/results.csv");

  SUBCASE("deleting one cell and rerunning restores identical results") {
    int removed = 0;
    for (const auto& entry : fs::directory_iterator(out + "/sweep/cells")) {
      if (removed == 0) {
        fs::remove(entry.path());
        ++removed;
      }
    }
    REQUIRE(removed == 1);
    REQUIRE(run("sweep --config " + cfg) == 0);
    CHECK(slurp(out + "/sweep/results.csv") == baseline);
  }
  SUBCASE("two workers produce byte-identical results") {
    fs::remove_all(out + "/sweep");
    setenv("DIFFMIA_THREADS", "2", 1);
    REQUIRE(run("sweep --config " + cfg) == 0);
    CHECK(slurp(out + "/sweep/results.csv") == baseline);
    setenv("DIFFMIA_THREADS", "1", 1);
  }
}

TEST_CASE("sweep records failing cells in the error column and continues") {
  Workspace ws;
  const std::string out = ws.path("run");
  // truncation_fraction 0.02 rounds to step 0: gray-box cells fail with an
  // empty-trajectory error while the 0.75 cells succeed.
  const std::string cfg = write_config(
      ws, out, R"({"scenario": "graybox"})",
      R"({"scenario": ["graybox"], "truncation_fraction": [0.02, 0.75]})");
  REQUIRE(run("train --config " + cfg) == 0);
  setenv("DIFFMIA_THREADS", "1", 1);
  REQUIRE(run("sweep --config " + cfg) == 0);
  std::vector<std::string> header;
  const auto rows = diffmia::read_csv(out + "/sweep/results.csv", &header);
  REQUIRE(rows.size() == 2);
  int failed = 0, succeeded = 0;
  for (const auto& row : rows) {
    if (row[12].empty()) {
      ++succeeded;
      CHECK(!row[7].empty());  // auc present
    } else {
      ++failed;
      CHECK(row[7].empty());
    }
  }
  CHECK(failed == 1);
  CHECK(succeeded == 1);
}

TEST_CASE("full pipeline reruns bit-identically") {
  Workspace ws;
  const std::string out_a = ws.path("a");
  const std::string out_b = ws.path("b");
  const std::string cfg = write_config(ws, out_a, R"({"scenario": "whitebox"}, {"scenario": "blackbox_agnostic", "synthetic_count": 32})");
  REQUIRE(run("train --config " + cfg) == 0);
  REQUIRE(run("attack --config " + cfg) == 0);
  REQUIRE(run("train --config " + cfg + " --out " + out_b) == 0);
  REQUIRE(run("attack --config " + cfg + " --out " + out_b) == 0);
  CHECK(slurp(out_a + "/target.ckpt") == slurp(out_b + "/target.ckpt"));
  CHECK(slurp(out_a + "/report.csv") == slurp(out_b + "/report.csv"));
  CHECK(slurp(out_a + "/scores_0_whitebox.csv") == slurp(out_b + "/scores_0_whitebox.csv"));
}
