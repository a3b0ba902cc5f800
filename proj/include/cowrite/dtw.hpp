#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cowrite/features.hpp"

namespace cowrite::dtw {

// Row-major T x dims matrix: one frame per time step.
class Series {
 public:
  Series() = default;
  Series(std::size_t dims, std::vector<double> values);

  static Series univariate(std::vector<double> values) { return Series(1, std::move(values)); }
  static Series from_features(const features::FeatureSeries& fs);

  std::size_t length() const { return dims_ == 0 ? 0 : values_.size() / dims_; }
  std::size_t dims() const { return dims_; }
  bool empty() const { return values_.empty(); }

  std::span<const double> frame(std::size_t t) const { return {values_.data() + t * dims_, dims_}; }
  std::span<double> frame(std::size_t t) { return {values_.data() + t * dims_, dims_}; }
  double at(std::size_t t, std::size_t d) const { return values_[t * dims_ + d]; }

  const std::vector<double>& values() const { return values_; }

  bool operator==(const Series&) const = default;

 private:
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

// Squared Euclidean distance between frames.
double local_cost(std::span<const double> x, std::span<const double> y);

// Accumulated cost grid, 0-based: at(0,0) = c(0,0),
// at(i,j) = c(i,j) + min(at(i-1,j), at(i,j-1), at(i-1,j-1)).
struct CostMatrix {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> d;
  double at(std::size_t i, std::size_t j) const { return d[i * m + j]; }
};

// 0-based (i, j) pairs from (0,0) to (n-1, m-1).
struct WarpingPath {
  std::vector<std::pair<std::size_t, std::size_t>> steps;
};

struct Alignment {
  double distance = 0.0;  // sqrt of the accumulated cost
  double cost = 0.0;      // accumulated squared cost d(n,m)
  WarpingPath path;
};

CostMatrix cost_matrix(const Series& x, const Series& y);

// Optimal alignment. Traceback prefers diagonal, then (i-1, j), then (i, j-1)
// on ties.
Alignment dtw_distance(const Series& x, const Series& y);

// d(n,m) only, with two rolling rows.
double dtw_cost(const Series& x, const Series& y);

// Piecewise-linear along time, endpoints preserved. Requires length >= 2.
Series resample_linear(const Series& x, std::size_t length);

// Stretches by repeating frames (length >= x.length()); the stretched series
// is at DTW distance 0 from the original.
Series resample_repeat(const Series& x, std::size_t length);

struct Barycenter {
  Series series;
  // Sum of d(n,m) over members, once per iteration.
  std::vector<double> inertia_history;
};

struct DbaOptions {
  std::size_t max_iter = 30;
  double tolerance = 1e-6;  // stop when relative improvement falls below this
  unsigned jobs = 1;
};

// DBA from the member closest in length to `length` (seeded choice among
// ties), resampled to `length`.
Barycenter dba_barycenter(std::span<const Series* const> members, std::size_t length, std::size_t max_iter,
                          std::uint64_t seed);
Barycenter dba_barycenter(const std::vector<Series>& members, std::size_t length, std::size_t max_iter,
                          std::uint64_t seed);

// DBA iterations starting from `initial`. inertia_history[0] is the cost of
// `initial`; every later entry follows one update and is never larger.
Barycenter dba_refine(std::span<const Series* const> members, Series initial, const DbaOptions& options);

// Full symmetric n x n matrix of DTW distances, row-major.
std::vector<double> pairwise_distances(const std::vector<Series>& corpus, unsigned jobs = 1);
std::string pairwise_csv(const std::vector<std::string>& ids, const std::vector<double>& matrix);

}  // namespace cowrite::dtw
