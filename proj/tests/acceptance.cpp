// Acceptance suite: one PASS/FAIL line per criterion. Criteria 1-9 decide the
// exit status; criterion 10 needs the public dataset (COAUTHOR_DIR) and is
// reported only.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "cowrite/cluster.hpp"
#include "cowrite/dtw.hpp"
#include "cowrite/ena.hpp"
#include "cowrite/error.hpp"
#include "cowrite/features.hpp"
#include "cowrite/ingest.hpp"
#include "cowrite/pipeline.hpp"
#include "cowrite/random.hpp"
#include "cowrite/stats.hpp"
#include "cowrite/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "shapiro_reference.hpp"

using namespace cowrite;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace tol {
constexpr double kDtwOracle = 1e-9;
constexpr double kDtwSeconds = 10.0;
constexpr double kSymmetry = 1e-12;  // relative
constexpr double kMonotoneSlack = 1e-9;
constexpr double kAri = 0.95;
constexpr double kExactP = 1e-12;
constexpr double kShapiroRef = 1e-3;
constexpr double kUnitNorm = 1e-9;
constexpr double kCentering = 1e-9;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& o, Clock::time_point start, bool blocking = true) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s %d %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass && blocking) ++g_failures;
}

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

oracle::Frames frames_of(const dtw::Series& s) {
  oracle::Frames f;
  for (std::size_t t = 0; t < s.length(); ++t) {
    const auto fr = s.frame(t);
    f.emplace_back(fr.begin(), fr.end());
  }
  return f;
}

dtw::Series random_series(Rng& rng, std::size_t dims, std::size_t max_len) {
  const std::size_t n = 1 + rng.below(max_len);
  std::vector<double> v(n * dims);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return dtw::Series(dims, std::move(v));
}

bool non_increasing(const std::vector<double>& h) {
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i] > h[i - 1] + tol::kMonotoneSlack) return false;
  return true;
}

std::vector<dtw::Series> standardized_series(const std::vector<features::FeatureSeries>& raw) {
  auto [scaled, params] = features::standardize(raw);
  std::vector<dtw::Series> out;
  for (const auto& s : scaled) out.push_back(dtw::Series::from_features(s));
  return out;
}

std::vector<std::string> ids_for(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
  return ids;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome dtw_oracle() {
  Outcome o;
  Rng rng(1001);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dims = trial % 2 == 0 ? 1 : 4;
    const auto x = random_series(rng, dims, 6), y = random_series(rng, dims, 6);
    const double got = dtw::dtw_distance(x, y).distance;
    const double want = std::sqrt(oracle::dtw_exhaustive(frames_of(x), frames_of(y)));
    worst = std::max(worst, std::abs(got - want));
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (worst > tol::kDtwOracle) fail(o, "max deviation " + fmt(worst));
  if (secs >= tol::kDtwSeconds) fail(o, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = "max deviation " + fmt(worst);
  return o;
}

Outcome dtw_metric() {
  Outcome o;
  Rng rng(2002);
  for (int trial = 0; trial < 10000 && o.pass; ++trial) {
    const std::size_t dims = trial % 2 == 0 ? 1 : 4;
    const auto x = random_series(rng, dims, 32), y = random_series(rng, dims, 32);
    const double xy = dtw::dtw_distance(x, y).distance, yx = dtw::dtw_distance(y, x).distance;
    if (!(xy >= 0.0)) fail(o, "negative distance");
    if (std::abs(xy - yx) > tol::kSymmetry * std::max(1.0, xy)) fail(o, "asymmetric: " + fmt(xy) + " vs " + fmt(yx));
    if (dtw::dtw_distance(x, x).distance != 0.0) fail(o, "d(X,X) != 0");
  }
  return o;
}

Outcome monotonicity() {
  Outcome o;
  std::size_t histories = 0;
  for (std::uint64_t seed = 0; seed < 100 && o.pass; ++seed) {
    const auto planted = synthetic::planted_features(2, 3000 + seed, 4, 12);
    const auto corpus = standardized_series(planted.series);
    for (std::size_t f = 0; f < synthetic::kFamilyCount; ++f) {
      std::vector<dtw::Series> members;
      for (std::size_t i = 0; i < corpus.size(); ++i)
        if (planted.families[i] == static_cast<int>(f)) members.push_back(corpus[i]);
      const auto bc = dtw::dba_barycenter(members, 12, 15, seed);
      ++histories;
      if (!non_increasing(bc.inertia_history)) fail(o, "DBA history rises at seed " + std::to_string(seed));
    }
    cluster::FitOptions opt;
    opt.k = 3;
    opt.seed = seed;
    opt.n_restarts = 2;
    opt.max_iter = 15;
    opt.dba_iter = 8;
    const auto model = cluster::fit_kmeans_dtw(corpus, ids_for(corpus.size()), opt);
    ++histories;
    if (!non_increasing(model.inertia_history)) fail(o, "k-means history rises at seed " + std::to_string(seed));
  }
  if (o.pass) o.detail = std::to_string(histories) + " histories";
  return o;
}

Outcome planted_recovery() {
  Outcome o;
  double worst_ari = 1.0;
  std::string ks;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto planted = synthetic::planted_features(50, 4000 + seed);
    const auto corpus = standardized_series(planted.series);
    cluster::FitOptions opt;
    opt.seed = seed;
    opt.n_restarts = 3;
    opt.max_iter = 20;
    opt.dba_iter = 10;
    const auto scan = cluster::elbow_scan(corpus, ids_for(corpus.size()), 2, 10, opt);
    const auto k = scan.curve.selected_k;
    ks += (ks.empty() ? "" : ",") + (k ? std::to_string(*k) : std::string("none"));
    if (!k || *k != 4) {
      fail(o, "seed " + std::to_string(seed) + " selected k=" + (k ? std::to_string(*k) : std::string("none")));
      continue;
    }
    const auto& model = scan.models[*k - 2];
    const double ari = cluster::adjusted_rand_index(model.labels, planted.families);
    worst_ari = std::min(worst_ari, ari);
    if (ari < tol::kAri) fail(o, "seed " + std::to_string(seed) + " ARI " + fmt(ari));
  }
  if (o.pass) o.detail = "k=" + ks + ", min ARI " + fmt(worst_ari);
  return o;
}

Outcome feature_fixture() {
  Outcome o;
  const auto session = ingest::parse_session_log(testing_support::eleven_minute_log(),
                                                 ingest::LogFormat::CoauthorJsonl, "fixture11");
  const auto ex = features::extract(session, 60);
  const auto expected = testing_support::eleven_minute_expected();
  if (ex.series.windows.size() != 11) {
    fail(o, "T = " + std::to_string(ex.series.windows.size()));
    return o;
  }
  for (std::size_t w = 0; w < expected.size(); ++w)
    if (!(ex.series.windows[w] == expected[w])) fail(o, "window " + std::to_string(w) + " differs");
  if (o.pass) o.detail = "T = 11, 44 values exact";
  return o;
}

Outcome mann_whitney_exact() {
  Outcome o;
  Rng rng(6006);
  double worst = 0.0;
  for (int trial = 0; trial < 500 && o.pass; ++trial) {
    const std::size_t na = 1 + rng.below(11);
    const std::size_t nb = 1 + rng.below(12 - na);
    std::vector<double> a(na), b(nb);
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = rng.normal(0.4, 1.0);
    const auto ab = stats::mann_whitney_u(a, b);
    const auto ba = stats::mann_whitney_u(b, a);
    if (ab.statistic != oracle::u_by_pairs(a, b)) fail(o, "U differs from pair count");
    if (ab.statistic + ba.statistic != static_cast<double>(na * nb)) fail(o, "U_A + U_B != nA nB");
    if (!ab.exact) fail(o, "exact path not taken");
    const double want = oracle::mw_exact_enumerated(na, nb, ab.statistic);
    worst = std::max(worst, std::abs(ab.p_value - want));
    if (std::abs(ab.p_value - want) > tol::kExactP) fail(o, "p " + fmt(ab.p_value) + " vs " + fmt(want));
  }
  if (o.pass) o.detail = "max p deviation " + fmt(worst);
  return o;
}

Outcome shapiro_sanity() {
  Outcome o;
  std::vector<double> grid, skewed;
  for (int i = 0; i < 50; ++i) grid.push_back(stats::normal_quantile((i + 0.5) / 50.0));
  for (int i = 0; i < 100; ++i) skewed.push_back(std::exp(stats::normal_quantile((i + 0.5) / 100.0)));
  const double pg = stats::shapiro_wilk(grid).p_value, ps = stats::shapiro_wilk(skewed).p_value;
  if (!(pg > 0.5)) fail(o, "normal grid p " + fmt(pg));
  if (!(ps < 0.01)) fail(o, "exponentiated p " + fmt(ps));
  double worst = 0.0;
  for (std::size_t s = 0; s < std::size(testing_support::kFrozen); ++s) {
    const auto& ref = testing_support::kFrozen[s];
    const auto r = stats::shapiro_wilk(testing_support::frozen_sample(s, ref.n));
    worst = std::max({worst, std::abs(r.statistic - ref.w), std::abs(r.p_value - ref.p)});
  }
  if (worst > tol::kShapiroRef) fail(o, "reference deviation " + fmt(worst));
  if (o.pass) o.detail = "grid p " + fmt(pg) + ", exp p " + fmt(ps) + ", max ref deviation " + fmt(worst);
  return o;
}

Outcome ena_oracle() {
  Outcome o;
  Rng rng(8008);
  std::vector<ena::AdjacencyVector> units;
  for (int conv = 0; conv < 50; ++conv) {
    std::vector<coding::CodeSet> lines;
    std::vector<std::set<int>> sets;
    for (std::size_t j = 0, n = 1 + rng.below(6); j < n; ++j) {
      coding::CodeSet c;
      std::set<int> s;
      for (std::size_t k = 0, m = 1 + rng.below(4); k < m; ++k) {
        const int code = static_cast<int>(rng.below(coding::kCodeCount));
        c.set(static_cast<std::size_t>(code));
        s.insert(code);
      }
      lines.push_back(c);
      sets.push_back(s);
    }
    const auto got = ena::accumulate_conversation(lines);
    const auto want = oracle::ena_brute(sets);
    for (std::size_t e = 0; e < ena::kEdgeCount; ++e) {
      const auto [a, b] = ena::edge_codes(e);
      const auto key = std::pair{std::min(static_cast<int>(a), static_cast<int>(b)),
                                 std::max(static_cast<int>(a), static_cast<int>(b))};
      const auto it = want.find(key);
      if (got[e] != (it == want.end() ? 0.0 : it->second)) fail(o, "conversation " + std::to_string(conv));
    }
    ena::AdjacencyVector u;
    u.unit_id = "u" + std::to_string(conv);
    u.weights = got;
    ena::normalize(u);
    if (!u.zero) {
      double norm = 0.0;
      for (double x : u.normalized) norm += x * x;
      if (std::abs(std::sqrt(norm) - 1.0) > tol::kUnitNorm) fail(o, "norm " + fmt(std::sqrt(norm)));
    }
    units.push_back(u);
  }

  const auto space = ena::project_space(units);
  std::array<double, 2> mean{};
  for (const auto& p : space.points) {
    mean[0] += p[0];
    mean[1] += p[1];
  }
  for (double& m : mean) m /= static_cast<double>(space.points.size());
  if (std::abs(mean[0]) > tol::kCentering || std::abs(mean[1]) > tol::kCentering)
    fail(o, "points mean (" + fmt(mean[0]) + ", " + fmt(mean[1]) + ")");

  cluster::ClusterModel model;
  model.k = 3;
  for (std::size_t i = 0; i < units.size(); ++i) {
    model.session_ids.push_back(units[i].unit_id);
    model.labels.push_back(static_cast<int>(i % 3));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const auto ab = ena::subtract_networks(model, units, a, b);
      const auto ba = ena::subtract_networks(model, units, b, a);
      for (std::size_t e = 0; e < ena::kEdgeCount; ++e)
        if (ab.deltas[e] != -ba.deltas[e]) fail(o, "subtraction not antisymmetric");
    }
  if (o.pass) o.detail = "50 conversations, points mean |" + fmt(std::max(std::abs(mean[0]), std::abs(mean[1]))) + "|";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> output_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".csv" || ext == ".svg") out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / ("cowrite_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const fs::path data = base / "data";
  fs::create_directories(data);
  const auto logs = synthetic::synthetic_logs(4, 99, 4, 10);
  for (const auto& l : logs) std::ofstream(data / (l.session_id + ".jsonl"), std::ios::binary) << l.jsonl;
  std::ofstream(data / "survey.csv", std::ios::binary) << synthetic::synthetic_survey(logs, 99);
  std::ofstream(data / "sessions_index.csv", std::ios::binary) << synthetic::synthetic_genre_index(logs);

  std::array<std::map<std::string, std::string>, 2> runs;
  for (int r = 0; r < 2; ++r) {
    pipeline::RunConfig c;
    c.data_dir = data;
    c.output_dir = base / ("run" + std::to_string(r));
    c.k_max = 6;
    c.n_restarts = 2;
    c.max_iter = 15;
    c.dba_iter = 8;
    c.seed = 7;
    pipeline::validate(c);
    pipeline::Pipeline(c).all();
    runs[r] = output_files(c.output_dir);
  }
  if (runs[0].size() != runs[1].size()) fail(o, "file sets differ");
  std::size_t svg = 0;
  for (const auto& [rel, body] : runs[0]) {
    svg += rel.size() > 4 && rel.compare(rel.size() - 4, 4, ".svg") == 0;
    const auto it = runs[1].find(rel);
    if (it == runs[1].end() || it->second != body) fail(o, rel + " differs");
  }
  if (svg == 0) fail(o, "no SVG written");
  if (o.pass) o.detail = std::to_string(runs[0].size()) + " files identical";
  fs::remove_all(base);
  return o;
}

// Public-dataset reproduction, non-blocking. Discovered clusters are matched
// to the published cluster rows by their feature means.
Outcome dataset_reproduction(const fs::path& dir) {
  Outcome o;
  const std::array<std::size_t, 4> sizes{168, 368, 550, 359};
  const std::array<std::array<double, 4>, 4> means{{{10.07, 0.62, 0.46, 0.20},
                                                    {18.27, 0.66, 0.17, 0.35},
                                                    {7.86, 0.65, 0.36, 0.18},
                                                    {14.91, 0.77, 0.34, 0.36}}};
  // Stars per pair (1v2, 1v3, 1v4, 2v3, 2v4, 3v4) and feature.
  const std::array<std::array<int, 4>, 6> stars{
      {{4, 3, 4, 4}, {4, 0, 3, 2}, {4, 4, 4, 4}, {4, 2, 4, 4}, {4, 2, 4, 1}, {4, 4, 0, 4}}};

  pipeline::RunConfig c;
  c.data_dir = dir;
  c.output_dir = fs::temp_directory_path() / ("cowrite_coauthor_" + std::to_string(::getpid()));
  c.jobs = std::max(1u, std::thread::hardware_concurrency());
  pipeline::validate(c);
  pipeline::Pipeline p(c);
  const auto& ex = p.extractions();
  std::ostringstream d;
  d << "sessions " << ex.size();
  if (ex.size() != 1445) fail(o, "");
  std::size_t lo = SIZE_MAX, hi = 0, total = 0;
  std::map<std::string, features::FeatureVector> agg;
  for (const auto& e : ex) {
    const std::size_t t = e.series.windows.size();
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    total += t;
    agg[e.series.session_id] = e.aggregate.totals;
  }
  const double mean_t = static_cast<double>(total) / static_cast<double>(ex.size());
  d << "; windows [" << lo << ", " << hi << "] mean " << fmt(mean_t);
  if (lo < 2 || hi > 32 || std::abs(mean_t - 11.0) > 1.0) fail(o, "");

  const auto& model = p.model();
  d << "; k " << model.k;
  if (model.k != 4) {
    fail(o, "");
    o.detail = d.str();
    return o;
  }
  std::array<std::array<double, 4>, 4> found{};
  std::array<std::size_t, 4> counts{};
  for (std::size_t i = 0; i < model.session_ids.size(); ++i) {
    const auto& v = agg.at(model.session_ids[i]).as_array();
    const auto l = static_cast<std::size_t>(model.labels[i]);
    ++counts[l];
    for (std::size_t f = 0; f < 4; ++f) found[l][f] += v[f];
  }
  std::vector<std::vector<double>> cost(4, std::vector<double>(4));
  for (std::size_t a = 0; a < 4; ++a) {
    for (double& v : found[a]) v /= static_cast<double>(std::max<std::size_t>(1, counts[a]));
    for (std::size_t b = 0; b < 4; ++b)
      cost[a][b] = std::abs(found[a][0] - means[b][0]) / 18.27 + std::abs(found[a][1] - means[b][1]) +
                   std::abs(found[a][2] - means[b][2]) + std::abs(found[a][3] - means[b][3]);
  }
  const auto match = cluster::best_matching(cost);  // discovered label -> published row
  std::array<int, 4> row_to_label{};
  for (std::size_t a = 0; a < 4; ++a) {
    const std::size_t r = match[a];
    row_to_label[r] = static_cast<int>(a);
    if (std::abs(static_cast<double>(counts[a]) - static_cast<double>(sizes[r])) > 0.2 * static_cast<double>(sizes[r]))
      fail(o, "");
    if (std::abs(found[a][0] - means[r][0]) > 3.0) fail(o, "");
    for (std::size_t f = 1; f < 4; ++f)
      if (std::abs(found[a][f] - means[r][f]) > 0.15) fail(o, "");
    d << "; C" << r + 1 << " n " << counts[a] << " means " << fmt(found[a][0]) << "/" << fmt(found[a][1]) << "/"
      << fmt(found[a][2]) << "/" << fmt(found[a][3]);
  }
  std::size_t agree = 0, cells = 0, pair = 0;
  for (std::size_t r1 = 0; r1 < 4; ++r1)
    for (std::size_t r2 = r1 + 1; r2 < 4; ++r2, ++pair)
      for (std::size_t f = 0; f < 4; ++f) {
        std::vector<double> xa, xb;
        for (std::size_t i = 0; i < model.session_ids.size(); ++i) {
          const double v = agg.at(model.session_ids[i]).as_array()[f];
          if (model.labels[i] == row_to_label[r1]) xa.push_back(v);
          if (model.labels[i] == row_to_label[r2]) xb.push_back(v);
        }
        const auto t = stats::mann_whitney_u(xa, xb);
        agree += static_cast<int>(t.stars) == stars[pair][f];
        ++cells;
      }
  d << "; star agreement " << agree << "/" << cells;
  if (static_cast<double>(agree) < 0.8 * static_cast<double>(cells)) fail(o, "");
  o.detail = d.str();
  fs::remove_all(c.output_dir);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> blocking = {
      {"DTW matches exhaustive warping-path enumeration", dtw_oracle},
      {"DTW symmetry, non-negativity and identity", dtw_metric},
      {"DBA and k-means inertia histories are non-increasing", monotonicity},
      {"planted four-family corpus is recovered", planted_recovery},
      {"eleven-minute fixture features are exact", feature_fixture},
      {"Mann-Whitney U and exact p match enumeration", mann_whitney_exact},
      {"Shapiro-Wilk sanity and reference agreement", shapiro_sanity},
      {"ENA accumulation, normalization, centering and subtraction", ena_oracle},
      {"pipeline outputs are byte-identical across runs", determinism},
  };
  for (std::size_t i = 0; i < blocking.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = blocking[i].second();
    } catch (const std::exception& e) {
      fail(o, std::string("threw: ") + e.what());
    }
    report(static_cast<int>(i + 1), blocking[i].first, o, start);
  }

  const auto start = Clock::now();
  const char* dir = std::getenv("COAUTHOR_DIR");
  if (dir == nullptr || !fs::is_directory(dir)) {
    std::printf("SKIP 10 public-dataset reproduction (non-blocking): COAUTHOR_DIR not set\n");
  } else {
    Outcome o;
    try {
      o = dataset_reproduction(dir);
    } catch (const std::exception& e) {
      fail(o, std::string("threw: ") + e.what());
    }
    report(10, "public-dataset reproduction (non-blocking)", o, start, false);
  }
  std::printf("%d blocking criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
