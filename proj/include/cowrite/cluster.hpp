#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cowrite/dtw.hpp"
#include "cowrite/features.hpp"

namespace cowrite::cluster {

struct ClusterModel {
  std::size_t k = 0;
  std::vector<std::string> session_ids;  // corpus order
  std::vector<int> labels;               // parallel to session_ids
  std::vector<dtw::Barycenter> barycenters;
  // Sum over sessions of the squared DTW distance (accumulated cost) to the
  // assigned barycenter.
  double inertia = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::size_t restart = 0;                // index of the winning restart
  std::vector<double> inertia_history;    // winning restart, one per assignment

  std::map<std::string, int> assignments() const;
  std::vector<std::size_t> sizes() const;
};

struct FitOptions {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  std::size_t n_restarts = 10;
  std::size_t max_iter = 50;
  std::size_t barycenter_length = 0;  // 0: longest series in the corpus
  std::size_t dba_iter = 30;
  unsigned jobs = 1;
};

ClusterModel fit_kmeans_dtw(const std::vector<dtw::Series>& corpus, const std::vector<std::string>& ids,
                            const FitOptions& options);

// Recomputes the model's objective from its barycenters and labels.
double recompute_inertia(const ClusterModel& model, const std::vector<dtw::Series>& corpus);

struct ElbowCurve {
  std::vector<std::pair<std::size_t, double>> points;  // sorted by k
  std::optional<std::size_t> selected_k;
};

// Largest gap below the chord of the min-max normalised curve.
std::optional<std::size_t> detect_knee(const std::vector<std::pair<std::size_t, double>>& points);

struct ElbowScan {
  ElbowCurve curve;
  std::vector<ClusterModel> models;  // parallel to curve.points
};

ElbowScan elbow_scan(const std::vector<dtw::Series>& corpus, const std::vector<std::string>& ids, std::size_t k_min,
                     std::size_t k_max, const FitOptions& base);

struct ClusterProfile {
  int label = 0;
  std::size_t n = 0;
  std::array<double, features::kFeatureCount> mean{};
  std::array<double, features::kFeatureCount> sd{};  // sample sd, 0 when n < 2
  dtw::Series trajectory;                            // barycenter on a 32-step axis
};

inline constexpr std::size_t kTrajectoryLength = 32;

std::vector<ClusterProfile> profile_clusters(const ClusterModel& model,
                                             const std::map<std::string, features::FeatureVector>& aggregates);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Assignment minimising total cost over a square matrix (rows -> columns);
// exhaustive over permutations, so intended for small k.
std::vector<std::size_t> best_matching(const std::vector<std::vector<double>>& cost);

std::string assignments_csv(const ClusterModel& model);
std::string elbow_csv(const ElbowCurve& curve);
std::string trajectories_csv(const std::vector<ClusterProfile>& profiles);

}  // namespace cowrite::cluster
