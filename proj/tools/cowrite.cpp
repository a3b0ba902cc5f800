#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cowrite/error.hpp"
#include "cowrite/pipeline.hpp"
#include "cowrite/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cowrite;

namespace {

struct Overrides {
  std::string config_file;
  std::string data_dir;
  std::string output_dir;
  std::optional<int> window_seconds;
  std::string scaling;
  std::vector<std::size_t> k_range;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> restarts;
  std::optional<std::size_t> max_iter;
  std::optional<std::size_t> dba_iter;
  std::optional<std::size_t> barycenter_length;
  std::string similarity;
  std::string survey;
  std::string genre_index;
  bool holm = false;
  bool dump_distances = false;
  std::optional<unsigned> jobs;
  bool verbose = false;
};

pipeline::RunConfig build_config(const Overrides& o) {
  pipeline::RunConfig c;
  if (!o.config_file.empty()) c = pipeline::load_config(o.config_file);
  if (!o.data_dir.empty()) c.data_dir = o.data_dir;
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  if (o.window_seconds) c.window_seconds = *o.window_seconds;
  if (!o.scaling.empty()) {
    if (o.scaling == "pooled") {
      c.scaling = features::Scaling::Pooled;
    } else if (o.scaling == "per-series") {
      c.scaling = features::Scaling::PerSeries;
    } else {
      throw ConfigError("--scaling must be pooled or per-series");
    }
  }
  if (!o.k_range.empty()) {
    if (o.k_range.size() != 2) throw ConfigError("--k-range takes two values");
    c.k_min = o.k_range[0];
    c.k_max = o.k_range[1];
  }
  if (o.k) c.k = *o.k;
  if (o.seed) c.seed = *o.seed;
  if (o.restarts) c.n_restarts = *o.restarts;
  if (o.max_iter) c.max_iter = *o.max_iter;
  if (o.dba_iter) c.dba_iter = *o.dba_iter;
  if (o.barycenter_length) c.barycenter_length = *o.barycenter_length;
  if (!o.similarity.empty()) c.similarity = o.similarity;
  if (!o.survey.empty()) c.survey = o.survey;
  if (!o.genre_index.empty()) c.genre_index = o.genre_index;
  if (o.holm) c.holm = true;
  if (o.dump_distances) c.dump_distances = true;
  if (o.jobs) c.jobs = *o.jobs;
  return c;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal AI-usage patterns and writing behaviours from co-writing keystroke logs"};
  app.set_version_flag("--version", std::string(pipeline::tool_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_file, "JSON run config");
  app.add_option("--data-dir", o.data_dir, "Directory of session logs");
  app.add_option("--output-dir", o.output_dir, "Directory for all outputs");
  app.add_option("--window-seconds", o.window_seconds, "Feature window length");
  app.add_option("--scaling", o.scaling, "pooled or per-series");
  app.add_option("--k-range", o.k_range, "Elbow scan range: KMIN KMAX")->expected(2);
  app.add_option("--k", o.k, "Cluster count (default: elbow knee)");
  app.add_option("--seed", o.seed, "Seed for all randomness");
  app.add_option("--restarts", o.restarts, "k-means restarts");
  app.add_option("--max-iter", o.max_iter, "k-means iterations");
  app.add_option("--dba-iter", o.dba_iter, "DBA iterations per update");
  app.add_option("--barycenter-length", o.barycenter_length, "Barycenter length (0: longest series)");
  app.add_option("--similarity", o.similarity, "lexical or http (endpoint from EMBED_URL)");
  app.add_option("--survey", o.survey, "Survey CSV");
  app.add_option("--genre-index", o.genre_index, "sessionId,genre CSV");
  app.add_flag("--holm", o.holm, "Holm-adjust pairwise p values");
  app.add_flag("--dump-distances", o.dump_distances, "Write the pairwise DTW distance matrix");
  app.add_option("--jobs", o.jobs, "Worker threads");
  app.add_flag("-v,--verbose", o.verbose, "Debug logging");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "Parse session logs"},
      {"features", "Windowed AI-usage features"},
      {"cluster", "Elbow scan and DTW k-means"},
      {"code", "Code events into behaviour lines"},
      {"ena", "Epistemic networks"},
      {"stats", "Normality and pairwise tests"},
      {"all", "Every stage plus report.md"}};
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  std::size_t per_family = 25, min_minutes = 4, max_minutes = 14;
  std::uint64_t synth_seed = 1;
  std::string synth_dir;
  synth->add_option("--out", synth_dir, "Target directory")->required();
  synth->add_option("--per-family", per_family, "Sessions per usage family");
  synth->add_option("--synth-seed", synth_seed, "Generator seed");
  synth->add_option("--min-minutes", min_minutes, "Shortest session");
  synth->add_option("--max-minutes", max_minutes, "Longest session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (synth->parsed()) {
      if (min_minutes == 0 || max_minutes < min_minutes) throw ConfigError("need 1 <= min-minutes <= max-minutes");
      fs::create_directories(synth_dir);
      const auto logs = synthetic::synthetic_logs(per_family, synth_seed, min_minutes, max_minutes);
      for (const auto& l : logs) write_text(fs::path(synth_dir) / (l.session_id + ".jsonl"), l.jsonl);
      write_text(fs::path(synth_dir) / "survey.csv", synthetic::synthetic_survey(logs, synth_seed));
      write_text(fs::path(synth_dir) / "sessions_index.csv", synthetic::synthetic_genre_index(logs));
      spdlog::info("wrote {} synthetic sessions to {}", logs.size(), synth_dir);
      return 0;
    }
    pipeline::Pipeline p(build_config(o));
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "ingest") {
      p.sessions();
    } else if (cmd == "features") {
      p.standardized();
    } else if (cmd == "cluster") {
      p.model();
    } else if (cmd == "code") {
      p.coded_lines();
    } else if (cmd == "ena") {
      p.ena();
    } else if (cmd == "stats") {
      p.stats();
    } else {
      p.all();
    }
    if (cmd != "all") p.report();
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
