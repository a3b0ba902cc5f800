#include "cowrite/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cowrite/csv.hpp"
#include "cowrite/error.hpp"
#include "cowrite/hash.hpp"
#include "cowrite/parallel.hpp"
#include "cowrite/plots.hpp"
#include "cowrite/stats.hpp"

#ifndef COWRITE_VERSION
#define COWRITE_VERSION "0.0.0"
#endif

namespace cowrite::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view tool_version() { return COWRITE_VERSION; }

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scaling_name(features::Scaling s) { return s == features::Scaling::Pooled ? "pooled" : "per-series"; }

features::Scaling parse_scaling(const std::string& s) {
  if (s == "pooled") return features::Scaling::Pooled;
  if (s == "per-series") return features::Scaling::PerSeries;
  throw ConfigError("scaling must be 'pooled' or 'per-series', got '" + s + "'");
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, std::abs(v) < 0.5 * std::pow(10.0, -digits) ? 0.0 : v);
  return buf;
}

std::string p_text(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, p < 0.001 ? "%.2e" : "%.4f", p);
  return buf;
}

}  // namespace

std::string config_json(const RunConfig& c) {
  ordered_json j;
  j["dataDir"] = c.data_dir.generic_string();
  j["windowSeconds"] = c.window_seconds;
  j["scaling"] = scaling_name(c.scaling);
  j["kRange"] = {c.k_min, c.k_max};
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  j["seed"] = c.seed;
  j["nRestarts"] = c.n_restarts;
  j["maxIter"] = c.max_iter;
  j["dbaIter"] = c.dba_iter;
  j["barycenterLength"] = c.barycenter_length;
  j["similarityProvider"] = c.similarity;
  j["survey"] = c.survey.generic_string();
  j["genreIndex"] = c.genre_index.generic_string();
  j["holm"] = c.holm;
  j["dumpDistances"] = c.dump_distances;
  return j.dump();
}

std::string config_hash(const RunConfig& c) { return sha256_hex(config_json(c)); }

void apply_json(RunConfig& c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dataDir") {
        c.data_dir = v.get<std::string>();
      } else if (key == "outputDir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "windowSeconds") {
        c.window_seconds = v.get<int>();
      } else if (key == "scaling") {
        c.scaling = parse_scaling(v.get<std::string>());
      } else if (key == "kRange") {
        if (!v.is_array() || v.size() != 2) throw ConfigError("kRange must be [kMin, kMax]");
        c.k_min = v[0].get<std::size_t>();
        c.k_max = v[1].get<std::size_t>();
      } else if (key == "k") {
        c.k = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "nRestarts") {
        c.n_restarts = v.get<std::size_t>();
      } else if (key == "maxIter") {
        c.max_iter = v.get<std::size_t>();
      } else if (key == "dbaIter") {
        c.dba_iter = v.get<std::size_t>();
      } else if (key == "barycenterLength") {
        c.barycenter_length = v.get<std::size_t>();
      } else if (key == "similarityProvider") {
        c.similarity = v.get<std::string>();
      } else if (key == "survey") {
        c.survey = v.get<std::string>();
      } else if (key == "genreIndex") {
        c.genre_index = v.get<std::string>();
      } else if (key == "holm") {
        c.holm = v.get<bool>();
      } else if (key == "dumpDistances") {
        c.dump_distances = v.get<bool>();
      } else if (key == "jobs") {
        c.jobs = v.get<unsigned>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  apply_json(c, ss.str());
  return c;
}

void validate(RunConfig& c) {
  if (c.data_dir.empty()) throw ConfigError("dataDir is required");
  if (c.output_dir.empty()) throw ConfigError("outputDir is required");
  if (!fs::is_directory(c.data_dir)) throw ConfigError("dataDir is not a directory: " + c.data_dir.string());
  c.data_dir = fs::canonical(c.data_dir);
  if (c.window_seconds <= 0) throw ConfigError("windowSeconds must be positive");
  if (c.k_min < 2 || c.k_max < c.k_min) throw ConfigError("kRange needs 2 <= kMin <= kMax");
  if (c.k && *c.k == 0) throw ConfigError("k must be positive");
  if (c.barycenter_length == 1) throw ConfigError("barycenterLength must be 0 or at least 2");
  if (c.similarity != "lexical" && c.similarity != "http") throw ConfigError("similarityProvider must be lexical or http");
  if (c.survey.empty() && fs::exists(c.data_dir / "survey.csv")) c.survey = c.data_dir / "survey.csv";
  if (c.genre_index.empty() && fs::exists(c.data_dir / "sessions_index.csv"))
    c.genre_index = c.data_dir / "sessions_index.csv";
  if (!c.survey.empty()) c.survey = fs::absolute(c.survey).lexically_normal();
  if (!c.genre_index.empty()) c.genre_index = fs::absolute(c.genre_index).lexically_normal();
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec || !fs::is_directory(c.output_dir)) throw ConfigError("cannot create outputDir " + c.output_dir.string());
  const fs::path probe = c.output_dir / ".write-test";
  {
    std::ofstream out(probe);
    if (!out) throw ConfigError("outputDir is not writable: " + c.output_dir.string());
  }
  fs::remove(probe, ec);
  if (c.jobs == 0) c.jobs = 1;
}

struct Pipeline::State {
  std::optional<std::vector<ingest::Session>> sessions;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, std::string>> ingest_errors;
  std::optional<std::vector<features::Extraction>> extractions;
  std::optional<std::vector<features::FeatureSeries>> standardized;
  features::StandardizationParams params;
  std::optional<cluster::ElbowCurve> elbow;
  std::optional<cluster::ClusterModel> model;
  std::vector<cluster::ClusterProfile> profiles;
  std::optional<coding::CodingResult> coding;
  std::vector<std::array<std::size_t, 3>> coding_counts;  // lines, dropped, at threshold
  std::optional<std::vector<ena::AdjacencyVector>> networks;
  bool ena_done = false;
  bool stats_done = false;
  std::map<std::string, std::string> sections;  // report parts by stage
};

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)), s_(std::make_unique<State>()) {
  validate(config_);
  hash_ = config_hash(config_);
  std::ofstream(config_.output_dir / "config.json") << config_json(config_) << '\n';
}

Pipeline::~Pipeline() = default;

std::string Pipeline::provenance() const {
  return "cowrite " + std::string(tool_version()) + " config_sha256=" + hash_ + " config=" + config_json(config_);
}

void Pipeline::write(const fs::path& rel, const std::string& body, bool is_csv) const {
  const fs::path p = config_.output_dir / rel;
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  if (is_csv) out << "# " << provenance() << '\n';
  out << body;
}

const std::vector<ingest::Session>& Pipeline::sessions() {
  if (s_->sessions) return *s_->sessions;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".jsonl") {
      paths.push_back(entry.path());
    } else if (ext == ".csv" && entry.path() != config_.survey && entry.path() != config_.genre_index) {
      // Only normalized event tables carry an eventName column.
      const std::string head = read_file(entry.path()).substr(0, 4096);
      if (head.find("eventName") != std::string::npos) paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DataError("no session logs (*.jsonl or normalized *.csv) in " + config_.data_dir.string());

  std::vector<std::optional<ingest::Session>> parsed(paths.size());
  std::vector<std::string> errors(paths.size());
  parallel_for(paths.size(), config_.jobs, [&](std::size_t i) {
    const auto format =
        paths[i].extension() == ".jsonl" ? ingest::LogFormat::CoauthorJsonl : ingest::LogFormat::NormalizedCsv;
    try {
      parsed[i] = ingest::parse_session_log(read_file(paths[i]), format, paths[i].stem().string());
    } catch (const DataError& e) {
      errors[i] = e.what();
    }
  });

  std::map<std::string, ingest::Genre> genres;
  if (!config_.genre_index.empty()) genres = ingest::load_genre_index(read_file(config_.genre_index));

  std::vector<ingest::Session> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!parsed[i]) {
      spdlog::warn("skipping {}: {}", paths[i].filename().string(), errors[i]);
      s_->ingest_errors.emplace_back(paths[i].filename().string(), errors[i]);
      continue;
    }
    if (!seen.insert(parsed[i]->session_id).second) throw DataError("duplicate session id " + parsed[i]->session_id);
    if (auto it = genres.find(parsed[i]->session_id); it != genres.end()) parsed[i]->genre = it->second;
    s_->files.push_back(paths[i].filename().string());
    out.push_back(std::move(*parsed[i]));
  }
  if (out.empty()) throw EmptySession();
  spdlog::info("ingested {} sessions ({} skipped)", out.size(), s_->ingest_errors.size());

  std::ostringstream report;
  report << "sessionId,file,genre,events,durationMs,finalDocChars\n";
  std::map<std::string, std::size_t> genre_counts;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& s = out[i];
    write(fs::path("sessions") / (s.session_id + ".csv"), ingest::to_normalized_csv(s));
    report << csv::join({s.session_id, s_->files[i], std::string(ingest::to_string(s.genre)),
                         std::to_string(s.events.size()), std::to_string(s.events.back().timestamp_ms),
                         std::to_string(s.final_doc.size())})
           << '\n';
    ++genre_counts[std::string(ingest::to_string(s.genre))];
  }
  write("sessions/ingest_report.csv", report.str());
  std::ostringstream err;
  err << "file,error\n";
  for (const auto& [f, e] : s_->ingest_errors) err << csv::join({f, e}) << '\n';
  write("sessions/ingest_errors.csv", err.str());

  std::ostringstream md;
  md << "## Ingest\n\n| item | count |\n|---|---|\n| sessions | " << out.size() << " |\n";
  for (const auto& [g, n] : genre_counts) md << "| " << g << " | " << n << " |\n";
  md << "| skipped files | " << s_->ingest_errors.size() << " |\n\n";
  s_->sections["1-ingest"] = md.str();
  s_->sessions = std::move(out);
  return *s_->sessions;
}

const std::vector<features::Extraction>& Pipeline::extractions() {
  if (s_->extractions) return *s_->extractions;
  const auto& ss = sessions();
  std::vector<features::Extraction> out(ss.size());
  parallel_for(ss.size(), config_.jobs,
               [&](std::size_t i) { out[i] = features::extract(ss[i], config_.window_seconds); });

  std::vector<features::FeatureSeries> raw;
  std::ostringstream agg;
  agg << "sessionId,calls,acceptRate,modifyRate,aiCharRate,requests,acceptances,modified,windows\n";
  std::size_t t_min = SIZE_MAX, t_max = 0, t_sum = 0;
  for (const auto& e : out) {
    raw.push_back(e.series);
    const auto& a = e.aggregate;
    agg << csv::join({a.session_id, csv::format_double(a.totals.calls), csv::format_double(a.totals.accept_rate),
                      csv::format_double(a.totals.modify_rate), csv::format_double(a.totals.ai_char_rate),
                      std::to_string(a.requests), std::to_string(a.acceptances), std::to_string(a.modified),
                      std::to_string(e.series.windows.size())})
        << '\n';
    const std::size_t t = e.series.windows.size();
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
    t_sum += t;
  }
  write("features/raw_features.csv", features::to_csv(raw));
  write("features/session_aggregates.csv", agg.str());

  std::ostringstream md;
  md << "## Windows\n\n| min T | max T | mean T |\n|---|---|---|\n| " << t_min << " | " << t_max << " | "
     << fixed(static_cast<double>(t_sum) / static_cast<double>(out.size())) << " |\n\n";
  s_->sections["2-features"] = md.str();
  s_->extractions = std::move(out);
  return *s_->extractions;
}

const std::vector<features::FeatureSeries>& Pipeline::standardized() {
  if (s_->standardized) return *s_->standardized;
  std::vector<features::FeatureSeries> raw;
  for (const auto& e : extractions()) raw.push_back(e.series);
  auto [scaled, params] = features::standardize(raw, config_.scaling);
  s_->params = params;
  write("features/standardized_features.csv", features::to_csv(scaled));
  std::ostringstream p;
  p << "feature,mean,sd,degenerate\n";
  for (std::size_t f = 0; f < features::kFeatureCount; ++f) {
    p << csv::join({features::kFeatureNames[f], csv::format_double(params.mean[f]), csv::format_double(params.std_dev[f]),
                    params.degenerate[f] ? "1" : "0"})
      << '\n';
  }
  write("features/standardization.csv", p.str());
  s_->standardized = std::move(scaled);
  return *s_->standardized;
}

namespace {

json model_to_json(const cluster::ClusterModel& m) {
  json j;
  j["k"] = m.k;
  j["sessionIds"] = m.session_ids;
  j["labels"] = m.labels;
  j["inertia"] = m.inertia;
  j["seed"] = m.seed;
  j["iterations"] = m.iterations;
  j["restart"] = m.restart;
  j["inertiaHistory"] = m.inertia_history;
  json bs = json::array();
  for (const auto& b : m.barycenters) {
    bs.push_back({{"dims", b.series.dims()}, {"values", b.series.values()}, {"history", b.inertia_history}});
  }
  j["barycenters"] = bs;
  return j;
}

cluster::ClusterModel model_from_json(const json& j) {
  cluster::ClusterModel m;
  m.k = j.at("k").get<std::size_t>();
  m.session_ids = j.at("sessionIds").get<std::vector<std::string>>();
  m.labels = j.at("labels").get<std::vector<int>>();
  m.inertia = j.at("inertia").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.restart = j.at("restart").get<std::size_t>();
  m.inertia_history = j.at("inertiaHistory").get<std::vector<double>>();
  for (const auto& b : j.at("barycenters")) {
    dtw::Barycenter bc;
    bc.series = dtw::Series(b.at("dims").get<std::size_t>(), b.at("values").get<std::vector<double>>());
    bc.inertia_history = b.at("history").get<std::vector<double>>();
    m.barycenters.push_back(std::move(bc));
  }
  return m;
}

}  // namespace

const cluster::ClusterModel& Pipeline::model() {
  if (s_->model) return *s_->model;
  const auto& scaled = standardized();
  std::vector<dtw::Series> corpus;
  std::vector<std::string> ids;
  for (const auto& s : scaled) {
    corpus.push_back(dtw::Series::from_features(s));
    ids.push_back(s.session_id);
  }
  const std::size_t k_max = std::min(config_.k_max, corpus.size());
  if (k_max < config_.k_min) throw TooFewSeries(corpus.size(), config_.k_min);

  // Cache key: the clustered data plus every setting that shapes the fit.
  const std::string key_input = features::to_csv(scaled) + "|" + std::to_string(k_max) + "|" + config_json(config_);
  const std::string key = sha256_hex(key_input);
  const fs::path cache = config_.output_dir / "cache" / ("cluster-" + key + ".json");

  cluster::FitOptions opt;
  opt.seed = config_.seed;
  opt.n_restarts = config_.n_restarts;
  opt.max_iter = config_.max_iter;
  opt.dba_iter = config_.dba_iter;
  opt.barycenter_length = config_.barycenter_length;
  opt.jobs = config_.jobs;

  cluster::ElbowCurve curve;
  cluster::ClusterModel chosen;
  if (fs::exists(cache)) {
    const json j = json::parse(read_file(cache));
    for (const auto& p : j.at("elbow")) curve.points.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<double>());
    if (!j.at("selectedK").is_null()) curve.selected_k = j.at("selectedK").get<std::size_t>();
    chosen = model_from_json(j.at("model"));
    cache_hit_ = true;
    spdlog::info("cluster cache hit {}", cache.filename().string());
  } else {
    auto scan = cluster::elbow_scan(corpus, ids, config_.k_min, k_max, opt);
    curve = scan.curve;
    const std::size_t k = config_.k.value_or(curve.selected_k.value_or(config_.k_min));
    if (k > corpus.size()) throw TooFewSeries(corpus.size(), k);
    bool found = false;
    for (auto& m : scan.models) {
      if (m.k == k) {
        chosen = std::move(m);
        found = true;
      }
    }
    if (!found) {
      opt.k = k;
      chosen = cluster::fit_kmeans_dtw(corpus, ids, opt);
    }
    json j;
    j["elbow"] = json::array();
    for (const auto& [kk, v] : curve.points) j["elbow"].push_back({kk, v});
    j["selectedK"] = curve.selected_k ? json(*curve.selected_k) : json(nullptr);
    j["model"] = model_to_json(chosen);
    fs::create_directories(cache.parent_path());
    std::ofstream(cache) << j.dump() << '\n';
  }

  std::map<std::string, features::FeatureVector> aggregates;
  for (const auto& e : extractions()) aggregates[e.aggregate.session_id] = e.aggregate.totals;
  s_->profiles = cluster::profile_clusters(chosen, aggregates);

  write("clusters/elbow.csv", cluster::elbow_csv(curve));
  write("clusters/assignments.csv", cluster::assignments_csv(chosen));
  write("clusters/trajectories.csv", cluster::trajectories_csv(s_->profiles));
  std::ostringstream prof;
  prof << "cluster,n";
  for (const char* f : features::kFeatureNames) prof << ',' << f << "Mean," << f << "Sd";
  prof << '\n';
  for (const auto& p : s_->profiles) {
    prof << p.label << ',' << p.n;
    for (std::size_t f = 0; f < features::kFeatureCount; ++f)
      prof << ',' << csv::format_double(p.mean[f]) << ',' << csv::format_double(p.sd[f]);
    prof << '\n';
  }
  write("clusters/profiles.csv", prof.str());
  std::ostringstream summary;
  summary << "k,inertia,iterations,restart,selectedK\n"
          << chosen.k << ',' << csv::format_double(chosen.inertia) << ',' << chosen.iterations << ',' << chosen.restart
          << ',' << (curve.selected_k ? std::to_string(*curve.selected_k) : std::string()) << '\n';
  write("clusters/model.csv", summary.str());
  if (config_.dump_distances) {
    write("clusters/pairwise_distances.csv", dtw::pairwise_csv(ids, dtw::pairwise_distances(corpus, config_.jobs)));
  }
  write("figures/elbow.svg", plot::render_elbow(curve, provenance()), false);
  write("figures/trajectories.svg", plot::render_trajectories(s_->profiles, provenance()), false);

  std::ostringstream md;
  md << "## Elbow\n\n| k | inertia |\n|---|---|\n";
  for (const auto& [kk, v] : curve.points) md << "| " << kk << (curve.selected_k == kk ? " (knee)" : "") << " | " << fixed(v) << " |\n";
  md << "\nClustering uses k = " << chosen.k << ".\n\n## Cluster profiles (session-level raw features)\n\n| feature |";
  for (const auto& p : s_->profiles) md << " cluster " << p.label << " (n=" << p.n << ") |";
  md << "\n|---|";
  for (std::size_t c = 0; c < s_->profiles.size(); ++c) md << "---|";
  md << '\n';
  for (std::size_t f = 0; f < features::kFeatureCount; ++f) {
    md << "| " << features::kFeatureNames[f] << " |";
    for (const auto& p : s_->profiles) md << ' ' << fixed(p.mean[f]) << " (" << fixed(p.sd[f]) << ") |";
    md << '\n';
  }
  md << '\n';
  s_->sections["3-cluster"] = md.str();
  s_->elbow = curve;
  s_->model = std::move(chosen);
  return *s_->model;
}

const std::vector<coding::CodedLine>& Pipeline::coded_lines() {
  if (s_->coding) return s_->coding->lines;
  const auto& ss = sessions();
  auto provider = coding::make_provider(config_.similarity, config_.output_dir / "cache" / "similarity.tsv");
  if (config_.similarity == "http") fs::create_directories(config_.output_dir / "cache");
  std::vector<coding::CodingResult> per(ss.size());
  parallel_for(ss.size(), config_.jobs, [&](std::size_t i) { per[i] = coding::code_events(ss[i], *provider); });
  coding::CodingResult all;
  std::ostringstream summary;
  summary << "sessionId,lines,dropped,atThreshold\n";
  for (std::size_t i = 0; i < per.size(); ++i) {
    summary << csv::join({ss[i].session_id, std::to_string(per[i].lines.size()), std::to_string(per[i].dropped),
                          std::to_string(per[i].at_threshold)})
            << '\n';
    all.dropped += per[i].dropped;
    all.at_threshold += per[i].at_threshold;
    all.lines.insert(all.lines.end(), std::make_move_iterator(per[i].lines.begin()),
                     std::make_move_iterator(per[i].lines.end()));
  }
  write("ena/coded_lines.csv", coding::coded_lines_csv(all.lines));
  write("ena/coding_summary.csv", summary.str());

  std::array<std::size_t, coding::kCodeCount> counts{};
  for (const auto& l : all.lines)
    for (std::size_t c = 0; c < coding::kCodeCount; ++c) counts[c] += l.codes.test(c) ? 1 : 0;
  std::ostringstream md;
  md << "## Coding\n\nSimilarity provider: " << provider->name() << ". Coded lines: " << all.lines.size()
     << "; events without a code: " << all.dropped << "; lines with similarity exactly "
     << coding::kModificationThreshold << ": " << all.at_threshold << ".\n\n| code | lines |\n|---|---|\n";
  for (std::size_t c = 0; c < coding::kCodeCount; ++c)
    md << "| " << coding::to_string(static_cast<coding::Code>(c)) << " | " << counts[c] << " |\n";
  md << '\n';
  s_->sections["4-coding"] = md.str();
  s_->coding = std::move(all);
  return s_->coding->lines;
}

const std::vector<ena::AdjacencyVector>& Pipeline::networks() {
  if (s_->networks) return *s_->networks;
  const auto accumulated = ena::accumulate(coded_lines());
  std::map<std::string, const ena::AdjacencyVector*> by_id;
  for (const auto& v : accumulated) by_id[v.unit_id] = &v;
  std::vector<ena::AdjacencyVector> out;
  for (const auto& s : sessions()) {
    auto it = by_id.find(s.session_id);
    if (it != by_id.end()) {
      out.push_back(*it->second);
    } else {
      ena::AdjacencyVector v;
      v.unit_id = s.session_id;
      out.push_back(v);
    }
  }
  write("ena/adjacency.csv", ena::adjacency_csv(out));
  s_->networks = std::move(out);
  return *s_->networks;
}

void Pipeline::ena() {
  if (s_->ena_done) return;
  const auto& vectors = networks();
  const auto& m = model();
  const auto space = ena::project_space(vectors);
  const auto nodes = ena::place_nodes(space, vectors);
  write("ena/points.csv", ena::points_csv(space, &m));
  write("ena/nodes.csv", ena::nodes_csv(nodes));
  std::ostringstream sp;
  sp << "dimension,varianceExplained,fit,rotation\n";
  for (std::size_t d = 0; d < 2; ++d)
    sp << d + 1 << ',' << csv::format_double(space.variance_explained[d]) << ',' << csv::format_double(nodes.fit[d])
       << ",svd\n";
  write("ena/space.csv", sp.str());

  const auto labels = m.assignments();
  std::vector<plot::NetworkView> views;
  std::ostringstream means;
  means << "cluster";
  for (std::size_t e = 0; e < ena::kEdgeCount; ++e) means << ',' << ena::edge_name(e);
  means << '\n';
  std::vector<ena::EdgeWeights> cluster_means(m.k);
  for (std::size_t c = 0; c < m.k; ++c) {
    cluster_means[c] = ena::mean_network(m, vectors, static_cast<int>(c));
    means << c;
    for (double w : cluster_means[c]) means << ',' << csv::format_double(w);
    means << '\n';
    plot::NetworkView v;
    v.title = "cluster " + std::to_string(c);
    v.nodes = nodes.positions;
    v.weights = cluster_means[c];
    for (std::size_t u = 0; u < space.unit_ids.size(); ++u) {
      if (labels.at(space.unit_ids[u]) != static_cast<int>(c)) continue;
      v.points.push_back(space.points[u]);
      v.point_groups.push_back(static_cast<int>(c));
    }
    write(fs::path("figures") / ("ena_cluster_" + std::to_string(c) + ".svg"), plot::render_network(v, provenance()),
          false);
    views.push_back(std::move(v));
  }
  write("ena/cluster_means.csv", means.str());
  views.resize(std::min<std::size_t>(views.size(), 4));
  write("figures/ena_clusters.svg", plot::render_network_grid(views, provenance()), false);

  std::vector<ena::SubtractedNetwork> subs;
  std::ostringstream md;
  md << "## Epistemic networks\n\nProjection: plain SVD of sphere-normalized, mean-centered adjacency vectors ("
     << space.dimensions << " dimension(s)). Variance explained: " << fixed(100 * space.variance_explained[0], 1)
     << "% and " << fixed(100 * space.variance_explained[1], 1) << "%. Node fit (Pearson r): " << fixed(nodes.fit[0], 3)
     << " and " << fixed(nodes.fit[1], 3) << ".\n\n| clusters | strongest edge for first | strongest edge for second |\n|---|---|---|\n";
  for (std::size_t a = 0; a < m.k; ++a) {
    for (std::size_t b = a + 1; b < m.k; ++b) {
      auto sub = ena::subtract_networks(m, vectors, static_cast<int>(a), static_cast<int>(b));
      plot::NetworkView v;
      v.title = "cluster " + std::to_string(a) + " minus cluster " + std::to_string(b);
      v.nodes = nodes.positions;
      v.weights = sub.deltas;
      v.signed_edges = true;
      v.positive_label = "stronger in cluster " + std::to_string(a);
      v.negative_label = "stronger in cluster " + std::to_string(b);
      for (std::size_t u = 0; u < space.unit_ids.size(); ++u) {
        const int l = labels.at(space.unit_ids[u]);
        if (l != static_cast<int>(a) && l != static_cast<int>(b)) continue;
        v.points.push_back(space.points[u]);
        v.point_groups.push_back(l);
      }
      write(fs::path("figures") / ("ena_subtracted_" + std::to_string(a) + "_" + std::to_string(b) + ".svg"),
            plot::render_network(v, provenance()), false);
      const auto hi = std::max_element(sub.deltas.begin(), sub.deltas.end());
      const auto lo = std::min_element(sub.deltas.begin(), sub.deltas.end());
      md << "| " << a << " vs " << b << " | "
         << (*hi > 0 ? ena::edge_name(static_cast<std::size_t>(hi - sub.deltas.begin())) + " (" + fixed(*hi, 3) + ")" : "none")
         << " | "
         << (*lo < 0 ? ena::edge_name(static_cast<std::size_t>(lo - sub.deltas.begin())) + " (" + fixed(-*lo, 3) + ")" : "none")
         << " |\n";
      subs.push_back(std::move(sub));
    }
  }
  md << '\n';
  write("ena/subtracted.csv", ena::subtracted_csv(subs));
  s_->sections["5-ena"] = md.str();
  s_->ena_done = true;
}

namespace {

struct Grid {
  std::string csv;
  std::string markdown;
};

// One Mann-Whitney grid over named measures (rows: cluster pairs).
Grid test_grid(const cluster::ClusterModel& m, const std::vector<std::string>& measures,
               const std::vector<std::map<std::string, double>>& values, bool holm) {
  std::ostringstream out, md;
  out << "measure,clusterA,clusterB,nA,nB,U,Umin,p,pHolm,stars\n";
  md << "| pair |";
  for (const auto& name : measures) md << ' ' << name << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < measures.size(); ++i) md << "---|";
  md << '\n';
  std::vector<stats::PairwiseGrid> grids;
  for (std::size_t i = 0; i < measures.size(); ++i) grids.push_back(stats::pairwise_cluster_tests(m, values[i]));
  std::vector<std::vector<double>> adjusted(measures.size());
  for (std::size_t i = 0; i < measures.size(); ++i) {
    std::vector<double> ps;
    for (const auto& pt : grids[i].pairs) ps.push_back(pt.result ? pt.result->p_value : 1.0);
    adjusted[i] = stats::holm_adjust(ps);
  }
  const std::size_t pairs = grids.empty() ? 0 : grids[0].pairs.size();
  std::vector<std::vector<std::string>> cells(pairs);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    for (std::size_t p = 0; p < pairs; ++p) {
      const auto& pt = grids[i].pairs[p];
      if (!pt.result) {
        out << csv::join({measures[i], std::to_string(pt.cluster_a), std::to_string(pt.cluster_b), "0", "0", "", "",
                          "", "", ""})
            << '\n';
        cells[p].push_back("n/a");
        continue;
      }
      const auto& r = *pt.result;
      const double umin = std::min(r.statistic, static_cast<double>(r.n_a * r.n_b) - r.statistic);
      const auto stars = holm ? stats::stars_for(adjusted[i][p]) : r.stars;
      out << csv::join({measures[i], std::to_string(pt.cluster_a), std::to_string(pt.cluster_b),
                        std::to_string(r.n_a), std::to_string(r.n_b), csv::format_double(r.statistic),
                        csv::format_double(umin), csv::format_double(r.p_value), csv::format_double(adjusted[i][p]),
                        std::string(stats::to_string(stars))})
          << '\n';
      cells[p].push_back(fixed(umin, 1) + " " + std::string(stats::to_string(stars)));
    }
  }
  for (std::size_t p = 0; p < pairs; ++p) {
    md << "| " << grids[0].pairs[p].cluster_a << " vs " << grids[0].pairs[p].cluster_b << " |";
    for (const auto& c : cells[p]) md << ' ' << c << " |";
    md << '\n';
  }
  return {out.str(), md.str()};
}

}  // namespace

void Pipeline::stats() {
  if (s_->stats_done) return;
  const auto& m = model();
  const auto& ex = extractions();
  std::vector<std::string> names(features::kFeatureNames.begin(), features::kFeatureNames.end());
  std::vector<std::map<std::string, double>> values(features::kFeatureCount);
  std::vector<std::vector<double>> columns(features::kFeatureCount);
  for (const auto& e : ex) {
    const auto a = e.aggregate.totals.as_array();
    for (std::size_t f = 0; f < features::kFeatureCount; ++f) {
      values[f][e.aggregate.session_id] = a[f];
      columns[f].push_back(a[f]);
    }
  }
  std::ostringstream normal, md;
  normal << "measure,n,W,p,stars\n";
  md << "## Normality (Shapiro-Wilk, session-level features)\n\n| feature | W | p |\n|---|---|---|\n";
  for (std::size_t f = 0; f < features::kFeatureCount; ++f) {
    try {
      const auto r = stats::shapiro_wilk(columns[f]);
      normal << csv::join({names[f], std::to_string(r.n_a), csv::format_double(r.statistic),
                           csv::format_double(r.p_value), std::string(stats::to_string(r.stars))})
             << '\n';
      md << "| " << names[f] << " | " << fixed(r.statistic, 4) << " | " << p_text(r.p_value) << " |\n";
    } catch (const NumericError& e) {
      normal << csv::join({names[f], std::to_string(columns[f].size()), "", "", ""}) << '\n';
      md << "| " << names[f] << " | n/a | " << e.what() << " |\n";
    }
  }
  write("stats/normality.csv", normal.str());
  const auto usage = test_grid(m, names, values, config_.holm);
  write("stats/usage_tests.csv", usage.csv);
  md << "\n## Mann-Whitney U, AI-usage features (U = smaller of the two U values)\n\n" << usage.markdown << '\n';

  if (config_.survey.empty() || !fs::exists(config_.survey)) {
    spdlog::info("no survey file; survey statistics skipped");
    md << "## Survey\n\nNo survey file was provided; survey statistics were skipped.\n\n";
  } else {
    const auto responses = ingest::load_survey(read_file(config_.survey));
    std::set<std::string> questions;
    for (const auto& r : responses)
      for (const auto& [q, v] : r.answers) questions.insert(q);
    std::vector<std::string> qs(questions.begin(), questions.end());
    std::sort(qs.begin(), qs.end(), [](const std::string& a, const std::string& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    std::vector<std::map<std::string, double>> qvalues(qs.size());
    const auto labels = m.assignments();
    for (const auto& r : responses) {
      if (!labels.count(r.session_id)) continue;
      for (std::size_t i = 0; i < qs.size(); ++i) {
        if (auto it = r.answers.find(qs[i]); it != r.answers.end()) qvalues[i][r.session_id] = it->second;
      }
    }
    std::ostringstream means;
    means << "question,cluster,n,mean,sd\n";
    md << "## Survey means (sd)\n\n| question |";
    for (std::size_t c = 0; c < m.k; ++c) md << " cluster " << c << " |";
    md << "\n|---|";
    for (std::size_t c = 0; c < m.k; ++c) md << "---|";
    md << '\n';
    for (std::size_t i = 0; i < qs.size(); ++i) {
      md << "| " << qs[i] << " |";
      for (std::size_t c = 0; c < m.k; ++c) {
        std::vector<double> v;
        for (const auto& [id, x] : qvalues[i])
          if (labels.at(id) == static_cast<int>(c)) v.push_back(x);
        double mean = 0, ss = 0;
        for (double x : v) mean += x;
        mean = v.empty() ? 0.0 : mean / static_cast<double>(v.size());
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        means << csv::join({qs[i], std::to_string(c), std::to_string(v.size()), csv::format_double(mean),
                            csv::format_double(sd)})
              << '\n';
        md << ' ' << (v.empty() ? std::string("n/a") : fixed(mean) + " (" + fixed(sd) + ")") << " |";
      }
      md << '\n';
    }
    write("stats/survey_means.csv", means.str());
    const auto survey = test_grid(m, qs, qvalues, config_.holm);
    write("stats/survey_tests.csv", survey.csv);
    md << "\n## Mann-Whitney U, survey responses\n\n" << survey.markdown << '\n';
  }
  s_->sections["6-stats"] = md.str();
  s_->stats_done = true;
}

void Pipeline::report() {
  std::ostringstream md;
  md << "<!-- " << provenance() << " -->\n# Analysis report\n\nGenerated by cowrite " << tool_version()
     << ". Config SHA-256: `" << hash_ << "`.\n\n";
  for (const auto& [key, text] : s_->sections) md << text;
  write("report.md", md.str(), false);
}

void Pipeline::all() {
  sessions();
  extractions();
  standardized();
  model();
  coded_lines();
  networks();
  ena();
  stats();
  report();
}

}  // namespace cowrite::pipeline
