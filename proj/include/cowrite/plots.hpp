#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cowrite/cluster.hpp"
#include "cowrite/ena.hpp"

namespace cowrite::plot {

// Inertia against k with a marker per point; the selected k is ringed and
// labelled.
std::string render_elbow(const cluster::ElbowCurve& curve, std::string_view comment = {});

// Four panels, one per feature, each with one curve per cluster.
std::string render_trajectories(const std::vector<cluster::ClusterProfile>& profiles, std::string_view comment = {});

struct NetworkView {
  std::string title;
  std::array<std::array<double, 2>, coding::kCodeCount> nodes{};
  ena::EdgeWeights weights{};  // signed for a subtracted network
  bool signed_edges = false;
  std::vector<std::array<double, 2>> points;
  std::vector<int> point_groups;  // palette index per point, parallel to points
  std::string positive_label;     // legend for signed edges
  std::string negative_label;
};

// Edges with zero weight are left out; stroke width is affine in |weight|
// with the largest edge at the maximum width. Signed edges are blue when
// positive and vermillion when negative.
std::string render_network(const NetworkView& view, std::string_view comment = {});

// Up to four networks laid out on a 2 x 2 grid.
std::string render_network_grid(const std::vector<NetworkView>& views, std::string_view comment = {});

inline constexpr double kMinStroke = 0.5;
inline constexpr double kMaxStroke = 8.0;

}  // namespace cowrite::plot
