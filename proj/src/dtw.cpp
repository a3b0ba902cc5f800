#include "cowrite/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cowrite/csv.hpp"
#include "cowrite/error.hpp"
#include "cowrite/parallel.hpp"
#include "cowrite/random.hpp"

namespace cowrite::dtw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const Series& x, const Series& y) {
  if (x.empty() || y.empty()) throw NumericError("DTW needs non-empty series");
  if (x.dims() != y.dims()) throw DimensionMismatch(x.dims(), y.dims());
  for (double v : x.values())
    if (!std::isfinite(v)) throw NonFiniteInput();
  for (double v : y.values())
    if (!std::isfinite(v)) throw NonFiniteInput();
}

inline double sq_dist(const double* a, const double* b, std::size_t dims) {
  double s = 0.0;
  for (std::size_t k = 0; k < dims; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

}  // namespace

Series::Series(std::size_t dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  if (dims_ == 0 && !values_.empty()) throw DimensionMismatch(0, values_.size());
  if (dims_ != 0 && values_.size() % dims_ != 0) throw DimensionMismatch(dims_, values_.size() % dims_);
}

Series Series::from_features(const features::FeatureSeries& fs) {
  std::vector<double> v;
  v.reserve(fs.windows.size() * features::kFeatureCount);
  for (const auto& w : fs.windows) {
    for (double x : w.as_array()) v.push_back(x);
  }
  return Series(features::kFeatureCount, std::move(v));
}

double local_cost(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch(x.size(), y.size());
  for (double v : x)
    if (!std::isfinite(v)) throw NonFiniteInput();
  for (double v : y)
    if (!std::isfinite(v)) throw NonFiniteInput();
  return sq_dist(x.data(), y.data(), x.size());
}

CostMatrix cost_matrix(const Series& x, const Series& y) {
  check_pair(x, y);
  CostMatrix cm;
  cm.n = x.length();
  cm.m = y.length();
  cm.d.assign(cm.n * cm.m, kInf);
  const std::size_t dims = x.dims();
  const double* xv = x.values().data();
  const double* yv = y.values().data();
  for (std::size_t i = 0; i < cm.n; ++i) {
    for (std::size_t j = 0; j < cm.m; ++j) {
      const double c = sq_dist(xv + i * dims, yv + j * dims, dims);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, cm.d[(i - 1) * cm.m + j]);
        if (j > 0) best = std::min(best, cm.d[i * cm.m + j - 1]);
        if (i > 0 && j > 0) best = std::min(best, cm.d[(i - 1) * cm.m + j - 1]);
      }
      cm.d[i * cm.m + j] = c + best;
    }
  }
  return cm;
}

Alignment dtw_distance(const Series& x, const Series& y) {
  const CostMatrix cm = cost_matrix(x, y);
  Alignment out;
  out.cost = cm.at(cm.n - 1, cm.m - 1);
  out.distance = std::sqrt(out.cost);

  std::size_t i = cm.n - 1, j = cm.m - 1;
  auto& steps = out.path.steps;
  steps.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = cm.at(i - 1, j - 1);
      const double up = cm.at(i - 1, j);
      const double left = cm.at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    steps.emplace_back(i, j);
  }
  std::reverse(steps.begin(), steps.end());
  return out;
}

double dtw_cost(const Series& x, const Series& y) {
  check_pair(x, y);
  const std::size_t n = x.length(), m = y.length(), dims = x.dims();
  const double* xv = x.values().data();
  const double* yv = y.values().data();
  std::vector<double> prev(m, kInf), cur(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = sq_dist(xv + i * dims, yv + j * dims, dims);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = c + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

Series resample_linear(const Series& x, std::size_t length) {
  if (length < 2) throw NumericError("resample length must be at least 2");
  if (x.empty()) throw NumericError("cannot resample an empty series");
  const std::size_t n = x.length(), dims = x.dims();
  if (n == length) return x;
  std::vector<double> v(length * dims);
  for (std::size_t t = 0; t < length; ++t) {
    if (n == 1) {
      for (std::size_t d = 0; d < dims; ++d) v[t * dims + d] = x.at(0, d);
      continue;
    }
    const double pos = static_cast<double>(t) * static_cast<double>(n - 1) / static_cast<double>(length - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo >= n - 1) lo = n - 2;
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t d = 0; d < dims; ++d) {
      v[t * dims + d] = t + 1 == length ? x.at(n - 1, d) : x.at(lo, d) * (1.0 - frac) + x.at(lo + 1, d) * frac;
    }
  }
  return Series(dims, std::move(v));
}

Series resample_repeat(const Series& x, std::size_t length) {
  const std::size_t n = x.length(), dims = x.dims();
  if (n == 0 || length < n) throw NumericError("repeat-resampling needs length >= series length");
  std::vector<double> v(length * dims);
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t src = t * n / length;
    for (std::size_t d = 0; d < dims; ++d) v[t * dims + d] = x.at(src, d);
  }
  return Series(dims, std::move(v));
}

namespace {

// Aligns every member to `center`; returns the summed cost and fills the
// per-frame sums and counts of aligned member frames.
double align_all(std::span<const Series* const> members, const Series& center, unsigned jobs,
                 std::vector<double>& sums, std::vector<std::size_t>& counts) {
  const std::size_t dims = center.dims();
  std::vector<Alignment> alignments(members.size());
  parallel_for(members.size(), jobs, [&](std::size_t k) { alignments[k] = dtw_distance(center, *members[k]); });
  sums.assign(center.length() * dims, 0.0);
  counts.assign(center.length(), 0);
  double total = 0.0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    total += alignments[k].cost;
    for (const auto& [i, j] : alignments[k].path.steps) {
      const auto f = members[k]->frame(j);
      for (std::size_t d = 0; d < dims; ++d) sums[i * dims + d] += f[d];
      ++counts[i];
    }
  }
  return total;
}

}  // namespace

Barycenter dba_refine(std::span<const Series* const> members, Series initial, const DbaOptions& options) {
  if (members.empty()) throw EmptyMemberSet();
  Barycenter out;
  out.series = std::move(initial);
  const std::size_t dims = out.series.dims();
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  double cost = align_all(members, out.series, options.jobs, sums, counts);
  out.inertia_history.push_back(cost);
  for (std::size_t it = 0; it < options.max_iter && cost > 0.0; ++it) {
    std::vector<double> v(sums.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      for (std::size_t d = 0; d < dims; ++d) v[i * dims + d] = sums[i * dims + d] / static_cast<double>(counts[i]);
    }
    Series candidate(dims, std::move(v));
    std::vector<double> next_sums;
    std::vector<std::size_t> next_counts;
    const double next_cost = align_all(members, candidate, options.jobs, next_sums, next_counts);
    // The mean minimises cost under the old alignment, so only rounding can
    // make it worse; keep the previous estimate in that case.
    if (next_cost > cost) break;
    const double improvement = (cost - next_cost) / cost;
    out.series = std::move(candidate);
    out.inertia_history.push_back(next_cost);
    cost = next_cost;
    sums = std::move(next_sums);
    counts = std::move(next_counts);
    if (improvement < options.tolerance) break;
  }
  return out;
}

Barycenter dba_barycenter(std::span<const Series* const> members, std::size_t length, std::size_t max_iter,
                          std::uint64_t seed) {
  if (members.empty()) throw EmptyMemberSet();
  if (length < 2) throw NumericError("barycenter length must be at least 2");
  std::size_t best_gap = SIZE_MAX;
  std::vector<std::size_t> ties;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::size_t len = members[k]->length();
    const std::size_t gap = len > length ? len - length : length - len;
    if (gap < best_gap) {
      best_gap = gap;
      ties.clear();
    }
    if (gap == best_gap) ties.push_back(k);
  }
  Rng rng(seed);
  const std::size_t pick = ties[static_cast<std::size_t>(rng.below(ties.size()))];
  DbaOptions options;
  options.max_iter = max_iter;
  return dba_refine(members, resample_linear(*members[pick], length), options);
}

Barycenter dba_barycenter(const std::vector<Series>& members, std::size_t length, std::size_t max_iter,
                          std::uint64_t seed) {
  std::vector<const Series*> ptrs;
  ptrs.reserve(members.size());
  for (const auto& s : members) ptrs.push_back(&s);
  return dba_barycenter(std::span<const Series* const>(ptrs), length, max_iter, seed);
}

std::vector<double> pairwise_distances(const std::vector<Series>& corpus, unsigned jobs) {
  const std::size_t n = corpus.size();
  std::vector<double> out(n * n, 0.0);
  parallel_for(n, jobs, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) out[i * n + j] = std::sqrt(dtw_cost(corpus[i], corpus[j]));
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out[j * n + i] = out[i * n + j];
  }
  return out;
}

std::string pairwise_csv(const std::vector<std::string>& ids, const std::vector<double>& matrix) {
  std::ostringstream out;
  std::vector<std::string> header{"sessionId"};
  header.insert(header.end(), ids.begin(), ids.end());
  out << csv::join(header) << '\n';
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{ids[i]};
    for (std::size_t j = 0; j < n; ++j) row.push_back(csv::format_double(matrix[i * n + j]));
    out << csv::join(row) << '\n';
  }
  return out.str();
}

}  // namespace cowrite::dtw
