#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "cowrite/error.hpp"
#include "cowrite/pipeline.hpp"
#include "cowrite/synthetic.hpp"

using namespace cowrite;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cowrite_pipe_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& body) { std::ofstream(p, std::ios::binary) << body; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path synth_corpus(const std::string& name, std::size_t per_family, bool survey) {
  const fs::path dir = scratch(name);
  const auto logs = synthetic::synthetic_logs(per_family, 5, 4, 8);
  for (const auto& l : logs) write_file(dir / (l.session_id + ".jsonl"), l.jsonl);
  if (survey) write_file(dir / "survey.csv", synthetic::synthetic_survey(logs, 5));
  return dir;
}

pipeline::RunConfig quick_config(const fs::path& data, const fs::path& out) {
  pipeline::RunConfig c;
  c.data_dir = data;
  c.output_dir = out;
  c.k_max = 5;
  c.n_restarts = 2;
  c.max_iter = 10;
  c.dba_iter = 5;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COWRITE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> tree(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("config JSON: unknown keys rejected, hash ignores jobs and outputDir") {
  pipeline::RunConfig c;
  CHECK_THROWS_AS(pipeline::apply_json(c, R"({"windowSecs": 60})"), ConfigError);
  CHECK_THROWS_AS(pipeline::apply_json(c, "[1,2]"), ConfigError);
  pipeline::apply_json(c, R"({"windowSeconds": 30, "kRange": [3, 6], "seed": 9})");
  CHECK(c.window_seconds == 30);
  CHECK(c.k_min == 3);
  CHECK(c.k_max == 6);
  CHECK(c.seed == 9);
  auto d = c;
  d.jobs = 8;
  d.output_dir = "/somewhere/else";
  CHECK(pipeline::config_hash(c) == pipeline::config_hash(d));
  d.seed = 10;
  CHECK(pipeline::config_hash(c) != pipeline::config_hash(d));
  CHECK(pipeline::config_hash(c).size() == 64);
}

TEST_CASE("validation errors") {
  pipeline::RunConfig c;
  CHECK_THROWS_AS(pipeline::validate(c), ConfigError);
  c.data_dir = "/definitely/not/here";
  c.output_dir = scratch("v");
  CHECK_THROWS_AS(pipeline::validate(c), ConfigError);
  c.data_dir = scratch("vd");
  c.k_min = 1;
  CHECK_THROWS_AS(pipeline::validate(c), ConfigError);
}

TEST_CASE("an empty data directory is a data error") {
  auto c = quick_config(scratch("empty"), scratch("empty_out"));
  pipeline::validate(c);
  pipeline::Pipeline p(c);
  CHECK_THROWS_AS(p.sessions(), DataError);
}

TEST_CASE("three session files give three sessions; bad files are skipped") {
  const fs::path dir = scratch("three");
  const auto logs = synthetic::synthetic_logs(1, 2, 4, 5);
  for (std::size_t i = 0; i < 3; ++i) write_file(dir / (logs[i].session_id + ".jsonl"), logs[i].jsonl);
  write_file(dir / "broken.jsonl", "{not json\n");
  auto c = quick_config(dir, scratch("three_out"));
  pipeline::validate(c);
  pipeline::Pipeline p(c);
  CHECK(p.sessions().size() == 3);
  CHECK(fs::exists(c.output_dir / "sessions" / (logs[0].session_id + ".csv")));
  const std::string errors = read_file(c.output_dir / "sessions" / "ingest_errors.csv");
  CHECK(errors.find("broken.jsonl") != std::string::npos);
  CHECK(errors.rfind("# cowrite ", 0) == 0);
}

TEST_CASE("full run: outputs, provenance, survey notice and cluster cache") {
  const fs::path data = synth_corpus("full", 3, false);
  const fs::path out = scratch("full_out");
  auto c = quick_config(data, out);
  pipeline::validate(c);
  {
    pipeline::Pipeline p(c);
    p.all();
    CHECK(!p.cluster_cache_hit());
    CHECK(p.sessions().size() == 12);
  }
  for (const char* rel : {"config.json", "features/raw_features.csv", "features/standardized_features.csv",
                          "clusters/elbow.csv", "clusters/assignments.csv", "clusters/trajectories.csv",
                          "ena/coded_lines.csv", "ena/adjacency.csv", "ena/points.csv", "ena/nodes.csv",
                          "ena/subtracted.csv", "stats/normality.csv", "stats/usage_tests.csv",
                          "figures/elbow.svg", "figures/trajectories.svg", "figures/ena_clusters.svg", "report.md"}) {
    INFO(rel);
    CHECK(fs::exists(out / rel));
  }
  const std::string header = read_file(out / "clusters/assignments.csv");
  CHECK(header.rfind("# cowrite " + std::string(pipeline::tool_version()) + " config_sha256=" +
                         pipeline::config_hash(c),
                     0) == 0);
  CHECK(!fs::exists(out / "stats/survey_tests.csv"));
  CHECK(read_file(out / "report.md").find("survey statistics were skipped") != std::string::npos);

  pipeline::Pipeline again(c);
  const auto& m = again.model();
  CHECK(again.cluster_cache_hit());
  CHECK(m.session_ids.size() == 12);
}

TEST_CASE("survey statistics run when a survey is present") {
  const fs::path data = synth_corpus("survey", 3, true);
  const fs::path out = scratch("survey_out");
  auto c = quick_config(data, out);
  c.k = 2;
  pipeline::validate(c);
  pipeline::Pipeline p(c);
  p.all();
  const std::string tests = read_file(out / "stats/survey_tests.csv");
  CHECK(tests.find("Q1") != std::string::npos);
  CHECK(fs::exists(out / "stats/survey_means.csv"));
}

TEST_CASE("outputs are byte-identical for any job count") {
  const fs::path data = synth_corpus("det", 2, true);
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  auto ca = quick_config(data, a), cb = quick_config(data, b);
  cb.jobs = 3;
  pipeline::validate(ca);
  pipeline::validate(cb);
  pipeline::Pipeline(ca).all();
  pipeline::Pipeline(cb).all();
  const auto ta = tree(a), tb = tree(b);
  CHECK(ta == tb);
  for (const auto& rel : ta) {
    INFO(rel);
    CHECK(read_file(a / rel) == read_file(b / rel));
  }
}

TEST_CASE("command-line exit codes") {
  const fs::path data = synth_corpus("cli", 1, false);
  const fs::path out = scratch("cli_out");
  CHECK(run_cli("--no-such-flag") == 1);
  CHECK(run_cli("all --data-dir /definitely/not/here --output-dir " + out.string()) == 1);
  CHECK(run_cli("all --data-dir " + scratch("cli_empty").string() + " --output-dir " + out.string()) == 2);
  CHECK(run_cli("ingest --data-dir " + data.string() + " --output-dir " + out.string()) == 0);
  CHECK(fs::exists(out / "sessions" / "ingest_report.csv"));
}
