#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cowrite/cluster.hpp"

namespace cowrite::stats {

enum class Stars { None, One, Two, Three, Four };
Stars stars_for(double p);
std::string_view to_string(Stars s);  // "ns", "*", ..., "****"

struct TestResult {
  double statistic = 0.0;  // W or U of the first sample
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  Stars stars = Stars::None;
  bool exact = false;
};

// Royston's AS R94 approximation; 3 <= n <= 5000.
TestResult shapiro_wilk(std::span<const double> sample);

// Two-sided. Exact null distribution when nA + nB <= 16 and there are no
// ties; otherwise the normal approximation with tie and continuity
// corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Standard normal helpers.
double normal_cdf(double z);
double normal_quantile(double p);

struct PairTest {
  int cluster_a = 0;
  int cluster_b = 0;
  std::optional<TestResult> result;  // empty when either side has no values
};

struct PairwiseGrid {
  std::vector<PairTest> pairs;  // (0,1), (0,2), ..., (k-2,k-1)
  std::size_t missing = 0;      // sessions without a value
};

PairwiseGrid pairwise_cluster_tests(const cluster::ClusterModel& model, const std::map<std::string, double>& values);

// Holm step-down adjustment, order preserved.
std::vector<double> holm_adjust(const std::vector<double>& p);

}  // namespace cowrite::stats
