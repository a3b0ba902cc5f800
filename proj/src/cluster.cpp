#include "cowrite/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cowrite/csv.hpp"
#include "cowrite/error.hpp"
#include "cowrite/parallel.hpp"
#include "cowrite/random.hpp"

namespace cowrite::cluster {

using dtw::Series;

std::map<std::string, int> ClusterModel::assignments() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < session_ids.size(); ++i) out[session_ids[i]] = labels[i];
  return out;
}

std::vector<std::size_t> ClusterModel::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (int l : labels) ++out[static_cast<std::size_t>(l)];
  return out;
}

namespace {

Series as_center(const Series& s, std::size_t length) {
  return s.length() <= length ? dtw::resample_repeat(s, length) : dtw::resample_linear(s, length);
}

// k-means++ in DTW space: each further center is drawn with probability
// proportional to the squared DTW distance to the nearest chosen one. Centers
// are frame-repeated copies, so a chosen series sits at distance 0.
std::vector<Series> seed_centers(const std::vector<Series>& corpus, std::size_t k, std::size_t length, Rng& rng) {
  const std::size_t n = corpus.size();
  std::vector<Series> centers;
  centers.push_back(as_center(corpus[rng.below(n)], length));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], dtw::dtw_cost(corpus[i], centers.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (pick = 0; pick + 1 < n; ++pick) {
        acc += nearest[pick];
        if (acc > target) break;
      }
    }
    centers.push_back(as_center(corpus[pick], length));
  }
  return centers;
}

struct RestartResult {
  std::vector<int> labels;
  std::vector<dtw::Barycenter> barycenters;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::vector<double> history;
};

RestartResult run_restart(const std::vector<Series>& corpus, const FitOptions& opt, std::size_t length,
                          std::uint64_t seed) {
  const std::size_t n = corpus.size(), k = opt.k;
  Rng rng(seed);
  std::vector<dtw::Barycenter> centers;
  for (auto& s : seed_centers(corpus, k, length, rng)) centers.push_back({std::move(s), {}});

  RestartResult out;
  std::vector<int> labels(n, -1);
  std::vector<double> cost(n * k);
  std::size_t it = 0;
  for (; it < opt.max_iter; ++it) {
    parallel_for(n, 1, [&](std::size_t i) {
      for (std::size_t c = 0; c < k; ++c) cost[i * k + c] = dtw::dtw_cost(corpus[i], centers[c].series);
    });
    std::vector<int> next(n);
    std::vector<std::size_t> size(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (cost[i * k + c] < cost[i * k + best]) best = c;
      }
      next[i] = static_cast<int>(best);
      ++size[best];
    }
    // Empty clusters take the series farthest from its own barycenter.
    for (std::size_t c = 0; c < k; ++c) {
      if (size[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (size[static_cast<std::size_t>(next[i])] < 2) continue;
        if (far == n || cost[i * k + next[i]] > cost[far * k + next[far]]) far = i;
      }
      if (far == n) break;
      spdlog::debug("reseeding empty cluster {} with series {}", c, far);
      --size[static_cast<std::size_t>(next[far])];
      next[far] = static_cast<int>(c);
      ++size[c];
      centers[c].series = as_center(corpus[far], length);
      for (std::size_t i = 0; i < n; ++i) cost[i * k + c] = dtw::dtw_cost(corpus[i], centers[c].series);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += cost[i * k + static_cast<std::size_t>(next[i])];
    out.history.push_back(inertia);
    const bool converged = next == labels;
    labels = std::move(next);
    out.inertia = inertia;
    if (converged || it + 1 == opt.max_iter) break;

    dtw::DbaOptions dba;
    dba.max_iter = opt.dba_iter;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<const Series*> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == static_cast<int>(c)) members.push_back(&corpus[i]);
      }
      if (members.empty()) continue;
      auto refined = dtw::dba_refine(members, centers[c].series, dba);
      centers[c].series = std::move(refined.series);
      centers[c].inertia_history = std::move(refined.inertia_history);
    }
  }
  out.iterations = it + 1;
  out.labels = std::move(labels);
  out.barycenters = std::move(centers);
  return out;
}

}  // namespace

ClusterModel fit_kmeans_dtw(const std::vector<Series>& corpus, const std::vector<std::string>& ids,
                            const FitOptions& options) {
  if (options.k == 0 || corpus.size() < options.k) throw TooFewSeries(corpus.size(), options.k);
  if (ids.size() != corpus.size()) throw DimensionMismatch(ids.size(), corpus.size());
  std::size_t length = options.barycenter_length;
  if (length == 0) {
    for (const auto& s : corpus) length = std::max(length, s.length());
    length = std::max<std::size_t>(length, 2);
  }
  const std::size_t restarts = std::max<std::size_t>(options.n_restarts, 1);
  std::vector<RestartResult> results(restarts);
  parallel_for(restarts, options.jobs, [&](std::size_t r) {
    results[r] = run_restart(corpus, options, length, derive_seed(options.seed, r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (results[r].inertia < results[best].inertia) best = r;
  }

  ClusterModel model;
  model.k = options.k;
  model.session_ids = ids;
  model.labels = std::move(results[best].labels);
  model.barycenters = std::move(results[best].barycenters);
  model.inertia = results[best].inertia;
  model.seed = options.seed;
  model.iterations = results[best].iterations;
  model.restart = best;
  model.inertia_history = std::move(results[best].history);
  return model;
}

double recompute_inertia(const ClusterModel& model, const std::vector<Series>& corpus) {
  double total = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    total += dtw::dtw_cost(corpus[i], model.barycenters[static_cast<std::size_t>(model.labels[i])].series);
  }
  return total;
}

std::optional<std::size_t> detect_knee(const std::vector<std::pair<std::size_t, double>>& points) {
  if (points.empty()) return std::nullopt;
  if (points.size() < 3) return points.front().first;
  const double k_lo = static_cast<double>(points.front().first);
  const double k_hi = static_cast<double>(points.back().first);
  double i_lo = points.front().second, i_hi = points.front().second;
  for (const auto& p : points) {
    i_lo = std::min(i_lo, p.second);
    i_hi = std::max(i_hi, p.second);
  }
  if (i_hi <= i_lo || k_hi <= k_lo) return points.front().first;
  std::size_t best = 0;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = (static_cast<double>(points[i].first) - k_lo) / (k_hi - k_lo);
    const double y = (points[i].second - i_lo) / (i_hi - i_lo);
    const double gap = 1.0 - x - y;
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return points[best].first;
}

ElbowScan elbow_scan(const std::vector<Series>& corpus, const std::vector<std::string>& ids, std::size_t k_min,
                     std::size_t k_max, const FitOptions& base) {
  if (k_min < 2 || k_max < k_min) throw NumericError("elbow scan needs 2 <= kMin <= kMax");
  ElbowScan scan;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    FitOptions opt = base;
    opt.k = k;
    scan.models.push_back(fit_kmeans_dtw(corpus, ids, opt));
    scan.curve.points.emplace_back(k, scan.models.back().inertia);
  }
  scan.curve.selected_k = detect_knee(scan.curve.points);
  return scan;
}

std::vector<ClusterProfile> profile_clusters(const ClusterModel& model,
                                             const std::map<std::string, features::FeatureVector>& aggregates) {
  std::vector<ClusterProfile> out(model.k);
  std::vector<std::vector<std::array<double, features::kFeatureCount>>> groups(model.k);
  for (std::size_t i = 0; i < model.session_ids.size(); ++i) {
    auto it = aggregates.find(model.session_ids[i]);
    if (it == aggregates.end()) continue;
    groups[static_cast<std::size_t>(model.labels[i])].push_back(it->second.as_array());
  }
  for (std::size_t c = 0; c < model.k; ++c) {
    ClusterProfile& p = out[c];
    p.label = static_cast<int>(c);
    p.n = groups[c].size();
    for (std::size_t f = 0; f < features::kFeatureCount; ++f) {
      double sum = 0.0;
      for (const auto& v : groups[c]) sum += v[f];
      p.mean[f] = p.n ? sum / static_cast<double>(p.n) : 0.0;
      double ss = 0.0;
      for (const auto& v : groups[c]) ss += (v[f] - p.mean[f]) * (v[f] - p.mean[f]);
      p.sd[f] = p.n > 1 ? std::sqrt(ss / static_cast<double>(p.n - 1)) : 0.0;
    }
    p.trajectory = dtw::resample_linear(model.barycenters[c].series, kTrajectoryLength);
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto pairs = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [key, v] : table) index += pairs(v);
  for (const auto& [key, v] : rows) sum_rows += pairs(v);
  for (const auto& [key, v] : cols) sum_cols += pairs(v);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<std::size_t> best_matching(const std::vector<std::vector<double>>& cost) {
  const std::size_t k = cost.size();
  std::vector<std::size_t> perm(k), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < k; ++i) c += cost[i][perm[i]];
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string assignments_csv(const ClusterModel& model) {
  std::ostringstream out;
  out << "sessionId,cluster\n";
  for (std::size_t i = 0; i < model.session_ids.size(); ++i) {
    out << csv::join({model.session_ids[i], std::to_string(model.labels[i])}) << '\n';
  }
  return out.str();
}

std::string elbow_csv(const ElbowCurve& curve) {
  std::ostringstream out;
  out << "k,inertia,selected\n";
  for (const auto& [k, inertia] : curve.points) {
    out << k << ',' << csv::format_double(inertia) << ',' << (curve.selected_k == k ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string trajectories_csv(const std::vector<ClusterProfile>& profiles) {
  std::ostringstream out;
  out << "cluster,windowIndex";
  for (const char* name : features::kFeatureNames) out << ',' << name;
  out << '\n';
  for (const auto& p : profiles) {
    for (std::size_t t = 0; t < p.trajectory.length(); ++t) {
      out << p.label << ',' << t;
      for (std::size_t d = 0; d < p.trajectory.dims(); ++d) out << ',' << csv::format_double(p.trajectory.at(t, d));
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace cowrite::cluster
