#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cowrite/cluster.hpp"
#include "cowrite/coding.hpp"
#include "cowrite/ena.hpp"
#include "cowrite/features.hpp"
#include "cowrite/ingest.hpp"

namespace cowrite::pipeline {

std::string_view tool_version();

struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path output_dir;
  int window_seconds = 60;
  features::Scaling scaling = features::Scaling::Pooled;
  std::size_t k_min = 2;
  std::size_t k_max = 10;
  std::optional<std::size_t> k;  // overrides the elbow choice
  std::uint64_t seed = 0;
  std::size_t n_restarts = 10;
  std::size_t max_iter = 50;
  std::size_t dba_iter = 30;
  std::size_t barycenter_length = 0;  // 0: longest series
  std::string similarity = "lexical";
  std::filesystem::path survey;       // empty: <dataDir>/survey.csv when present
  std::filesystem::path genre_index;  // empty: <dataDir>/sessions_index.csv when present
  bool holm = false;
  bool dump_distances = false;
  unsigned jobs = 1;                  // never affects outputs
};

// Result-relevant fields only; jobs and outputDir are left out so they do
// not change the hash.
std::string config_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// Reads a JSON config file; unknown keys are a ConfigError.
RunConfig load_config(const std::filesystem::path& file);
void apply_json(RunConfig& config, const std::string& json_text);

// Resolves paths and checks that dataDir is readable and outputDir writable.
void validate(RunConfig& config);

// Lazily runs stages; each stage writes its outputs the first time it runs
// and pulls in the stages it depends on.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);
  ~Pipeline();

  const std::vector<ingest::Session>& sessions();
  const std::vector<features::Extraction>& extractions();
  const std::vector<features::FeatureSeries>& standardized();
  const cluster::ClusterModel& model();
  const std::vector<coding::CodedLine>& coded_lines();
  const std::vector<ena::AdjacencyVector>& networks();
  void ena();
  void stats();
  void report();

  // Runs every stage and writes report.md.
  void all();

  bool cluster_cache_hit() const { return cache_hit_; }

 private:
  struct State;
  void write(const std::filesystem::path& rel, const std::string& body, bool csv = true) const;
  std::string provenance() const;

  RunConfig config_;
  std::string hash_;
  bool cache_hit_ = false;
  std::unique_ptr<State> s_;
};

}  // namespace cowrite::pipeline
