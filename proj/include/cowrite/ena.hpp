#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cowrite/cluster.hpp"
#include "cowrite/coding.hpp"

namespace cowrite::ena {

inline constexpr std::size_t kEdgeCount = coding::kCodeCount * (coding::kCodeCount - 1) / 2;
using EdgeWeights = std::array<double, kEdgeCount>;

// Codes sorted by name; edges are the pairs (i < j) of this order,
// enumerated row by row.
const std::array<coding::Code, coding::kCodeCount>& alphabetical_codes();
std::pair<coding::Code, coding::Code> edge_codes(std::size_t edge);
std::size_t edge_index(coding::Code a, coding::Code b);
std::string edge_name(std::size_t edge);  // "acceptSugg&compose"

struct AdjacencyVector {
  std::string unit_id;
  EdgeWeights weights{};
  EdgeWeights normalized{};  // unit Euclidean norm, or all zero
  bool zero = true;
};

// Weights of one conversation. Each line adds 1 per code pair that occurs
// between it and an earlier line (either orientation), and 1 per pair set
// together on that line.
EdgeWeights accumulate_conversation(const std::vector<coding::CodeSet>& lines);

// Groups lines by unit (session) and conversation (sentence) in line order;
// units come out in order of first appearance.
std::vector<AdjacencyVector> accumulate(const std::vector<coding::CodedLine>& lines);

void normalize(AdjacencyVector& v);

struct EnaSpace {
  std::vector<std::string> unit_ids;
  std::vector<EdgeWeights> centered;      // normalized minus the column mean
  EdgeWeights mean{};
  std::size_t dimensions = 0;             // 2, or fewer on a degenerate space
  std::array<EdgeWeights, 2> directions{};  // orthonormal; unused ones are zero
  std::vector<std::array<double, 2>> points;
  std::array<double, 2> variance_explained{};
};

// Plain SVD of the centered normalized matrix. Each direction's largest
// absolute loading is positive.
EnaSpace project_space(const std::vector<AdjacencyVector>& vectors);

struct NodePlacement {
  std::array<std::array<double, 2>, coding::kCodeCount> positions{};  // indexed by Code
  std::array<double, 2> fit{};  // Pearson r per dimension
  bool regularized = false;
};

// Least-squares node positions such that each unit's weighted mean of edge
// midpoints approximates its projected point. A code that never co-occurs
// sits at the origin.
NodePlacement place_nodes(const EnaSpace& space, const std::vector<AdjacencyVector>& vectors);

struct SubtractedNetwork {
  int cluster_a = 0;
  int cluster_b = 0;
  EdgeWeights deltas{};  // mean normalized weights of A minus those of B
};

EdgeWeights mean_network(const cluster::ClusterModel& model, const std::vector<AdjacencyVector>& vectors, int label);
SubtractedNetwork subtract_networks(const cluster::ClusterModel& model, const std::vector<AdjacencyVector>& vectors,
                                    int cluster_a, int cluster_b);

std::string adjacency_csv(const std::vector<AdjacencyVector>& vectors);
std::string points_csv(const EnaSpace& space, const cluster::ClusterModel* model);
std::string nodes_csv(const NodePlacement& nodes);
std::string subtracted_csv(const std::vector<SubtractedNetwork>& networks);

}  // namespace cowrite::ena
