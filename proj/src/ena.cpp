#include "cowrite/ena.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "cowrite/csv.hpp"
#include "cowrite/error.hpp"

namespace cowrite::ena {

using coding::Code;
using coding::kCodeCount;

namespace {

struct EdgeTable {
  std::array<Code, kCodeCount> sorted{};
  std::array<std::size_t, kCodeCount> rank{};  // Code -> alphabetical position
  std::array<std::pair<std::size_t, std::size_t>, kEdgeCount> pairs{};  // Code indices
  std::array<std::array<std::size_t, kCodeCount>, kCodeCount> index{};

  EdgeTable() {
    for (std::size_t i = 0; i < kCodeCount; ++i) sorted[i] = static_cast<Code>(i);
    std::sort(sorted.begin(), sorted.end(),
              [](Code a, Code b) { return coding::to_string(a) < coding::to_string(b); });
    for (std::size_t i = 0; i < kCodeCount; ++i) rank[static_cast<std::size_t>(sorted[i])] = i;
    std::size_t e = 0;
    for (std::size_t i = 0; i < kCodeCount; ++i) {
      for (std::size_t j = i + 1; j < kCodeCount; ++j) {
        const auto a = static_cast<std::size_t>(sorted[i]), b = static_cast<std::size_t>(sorted[j]);
        pairs[e] = {a, b};
        index[a][b] = index[b][a] = e;
        ++e;
      }
    }
  }
};

const EdgeTable& table() {
  static const EdgeTable t;
  return t;
}

}  // namespace

const std::array<Code, kCodeCount>& alphabetical_codes() { return table().sorted; }

std::pair<Code, Code> edge_codes(std::size_t edge) {
  const auto& p = table().pairs.at(edge);
  return {static_cast<Code>(p.first), static_cast<Code>(p.second)};
}

std::size_t edge_index(Code a, Code b) {
  if (a == b) throw NumericError("an edge needs two distinct codes");
  return table().index[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

std::string edge_name(std::size_t edge) {
  const auto [a, b] = edge_codes(edge);
  return std::string(coding::to_string(a)) + "&" + std::string(coding::to_string(b));
}

EdgeWeights accumulate_conversation(const std::vector<coding::CodeSet>& lines) {
  const auto& t = table();
  EdgeWeights w{};
  // Earlier lines holding code c, and holding both codes of edge e.
  std::array<double, kCodeCount> prior{};
  EdgeWeights prior_both{};
  for (const auto& line : lines) {
    for (std::size_t e = 0; e < kEdgeCount; ++e) {
      const auto [a, b] = t.pairs[e];
      const bool ha = line.test(a), hb = line.test(b);
      if (ha && hb) {
        w[e] += 1.0 + prior[a] + prior[b] - prior_both[e];
      } else if (ha) {
        w[e] += prior[b];
      } else if (hb) {
        w[e] += prior[a];
      }
    }
    for (std::size_t c = 0; c < kCodeCount; ++c) prior[c] += line.test(c) ? 1.0 : 0.0;
    for (std::size_t e = 0; e < kEdgeCount; ++e) {
      if (line.test(t.pairs[e].first) && line.test(t.pairs[e].second)) prior_both[e] += 1.0;
    }
  }
  return w;
}

void normalize(AdjacencyVector& v) {
  double ss = 0.0;
  for (double x : v.weights) ss += x * x;
  v.zero = ss == 0.0;
  const double norm = std::sqrt(ss);
  for (std::size_t e = 0; e < kEdgeCount; ++e) v.normalized[e] = v.zero ? 0.0 : v.weights[e] / norm;
}

std::vector<AdjacencyVector> accumulate(const std::vector<coding::CodedLine>& lines) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::vector<coding::CodeSet>>> grouped;
  for (const auto& l : lines) {
    auto [it, fresh] = grouped.try_emplace(l.session_id);
    if (fresh) order.push_back(l.session_id);
    it->second[l.sentence_index].push_back(l.codes);
  }
  std::vector<AdjacencyVector> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    AdjacencyVector v;
    v.unit_id = id;
    for (const auto& [sentence, convo] : grouped[id]) {
      const auto w = accumulate_conversation(convo);
      for (std::size_t e = 0; e < kEdgeCount; ++e) v.weights[e] += w[e];
    }
    normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

EnaSpace project_space(const std::vector<AdjacencyVector>& vectors) {
  if (vectors.size() < 2) throw NumericError("ENA projection needs at least two units");
  const auto n = static_cast<Eigen::Index>(vectors.size());
  const auto m = static_cast<Eigen::Index>(kEdgeCount);
  Eigen::MatrixXd x(n, m);
  EnaSpace space;
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto& v = vectors[static_cast<std::size_t>(u)];
    space.unit_ids.push_back(v.unit_id);
    AdjacencyVector copy = v;
    normalize(copy);
    const auto& row = copy.normalized;
    for (Eigen::Index e = 0; e < m; ++e) x(u, e) = row[static_cast<std::size_t>(e)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  for (Eigen::Index e = 0; e < m; ++e) space.mean[static_cast<std::size_t>(e)] = mean(e);
  space.centered.resize(vectors.size());
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index e = 0; e < m; ++e) space.centered[static_cast<std::size_t>(u)][static_cast<std::size_t>(e)] = x(u, e);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double total = s.squaredNorm();
  const double tol = s.size() > 0 ? std::max(1e-12, s(0) * 1e-10) : 1e-12;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > tol ? 1 : 0;
  space.dimensions = std::min<std::size_t>(2, rank);
  if (space.dimensions < 2) spdlog::warn("ENA space has rank {}; projecting onto {} dimension(s)", rank, space.dimensions);

  for (std::size_t d = 0; d < space.dimensions; ++d) {
    Eigen::VectorXd dir = svd.matrixV().col(static_cast<Eigen::Index>(d));
    Eigen::Index big = 0;
    for (Eigen::Index e = 1; e < m; ++e) {
      if (std::abs(dir(e)) > std::abs(dir(big)) + 1e-15) big = e;
    }
    if (dir(big) < 0) dir = -dir;
    for (Eigen::Index e = 0; e < m; ++e) space.directions[d][static_cast<std::size_t>(e)] = dir(e);
    space.variance_explained[d] = total > 0 ? s(static_cast<Eigen::Index>(d)) * s(static_cast<Eigen::Index>(d)) / total : 0.0;
  }
  space.points.assign(vectors.size(), {0.0, 0.0});
  for (std::size_t u = 0; u < vectors.size(); ++u) {
    for (std::size_t d = 0; d < space.dimensions; ++d) {
      double p = 0.0;
      for (std::size_t e = 0; e < kEdgeCount; ++e) p += space.centered[u][e] * space.directions[d][e];
      space.points[u][d] = p;
    }
  }
  return space;
}

namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  return den > 0 ? da.dot(db) / den : 0.0;
}

}  // namespace

NodePlacement place_nodes(const EnaSpace& space, const std::vector<AdjacencyVector>& vectors) {
  if (vectors.size() != space.points.size()) throw DimensionMismatch(space.points.size(), vectors.size());
  const auto& t = table();
  const auto n = static_cast<Eigen::Index>(vectors.size());
  // A(u, c): share of unit u's weight on edges that touch code c, halved
  // because each edge midpoint weighs its two endpoints equally.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(kCodeCount));
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto& w = vectors[static_cast<std::size_t>(u)].normalized;
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (sum <= 0) continue;
    for (std::size_t e = 0; e < kEdgeCount; ++e) {
      if (w[e] == 0) continue;
      a(u, static_cast<Eigen::Index>(t.pairs[e].first)) += w[e] / (2.0 * sum);
      a(u, static_cast<Eigen::Index>(t.pairs[e].second)) += w[e] / (2.0 * sum);
    }
  }
  std::vector<Eigen::Index> used;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    if (a.col(c).cwiseAbs().maxCoeff() > 0) used.push_back(c);
  }
  NodePlacement out;
  if (used.empty()) return out;
  Eigen::MatrixXd ar(n, static_cast<Eigen::Index>(used.size()));
  for (std::size_t k = 0; k < used.size(); ++k) ar.col(static_cast<Eigen::Index>(k)) = a.col(used[k]);
  Eigen::MatrixXd p(n, 2);
  for (Eigen::Index u = 0; u < n; ++u) {
    p(u, 0) = space.points[static_cast<std::size_t>(u)][0];
    p(u, 1) = space.points[static_cast<std::size_t>(u)][1];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ar);
  Eigen::MatrixXd nodes;
  if (qr.rank() == ar.cols()) {
    nodes = qr.solve(p);
  } else {
    constexpr double kRidge = 1e-8;
    spdlog::info("node placement system is singular (rank {} of {}); ridge {}", qr.rank(), ar.cols(), kRidge);
    const Eigen::MatrixXd gram =
        ar.transpose() * ar + kRidge * Eigen::MatrixXd::Identity(ar.cols(), ar.cols());
    nodes = gram.ldlt().solve(ar.transpose() * p);
    out.regularized = true;
  }
  for (std::size_t k = 0; k < used.size(); ++k) {
    out.positions[static_cast<std::size_t>(used[k])] = {nodes(static_cast<Eigen::Index>(k), 0),
                                                        nodes(static_cast<Eigen::Index>(k), 1)};
  }
  const Eigen::MatrixXd approx = ar * nodes;
  for (Eigen::Index d = 0; d < 2; ++d) {
    out.fit[static_cast<std::size_t>(d)] =
        static_cast<std::size_t>(d) < space.dimensions ? pearson(approx.col(d), p.col(d)) : 0.0;
  }
  return out;
}

EdgeWeights mean_network(const cluster::ClusterModel& model, const std::vector<AdjacencyVector>& vectors, int label) {
  std::map<std::string, const AdjacencyVector*> by_id;
  for (const auto& v : vectors) by_id[v.unit_id] = &v;
  EdgeWeights sum{};
  std::size_t count = 0;
  for (std::size_t i = 0; i < model.session_ids.size(); ++i) {
    if (model.labels[i] != label) continue;
    auto it = by_id.find(model.session_ids[i]);
    ++count;
    if (it == by_id.end()) continue;  // a session without coded lines has an all-zero network
    for (std::size_t e = 0; e < kEdgeCount; ++e) sum[e] += it->second->normalized[e];
  }
  if (count == 0) throw EmptyCluster(label);
  for (double& x : sum) x /= static_cast<double>(count);
  return sum;
}

SubtractedNetwork subtract_networks(const cluster::ClusterModel& model, const std::vector<AdjacencyVector>& vectors,
                                    int cluster_a, int cluster_b) {
  const EdgeWeights a = mean_network(model, vectors, cluster_a);
  const EdgeWeights b = mean_network(model, vectors, cluster_b);
  SubtractedNetwork out{cluster_a, cluster_b, {}};
  for (std::size_t e = 0; e < kEdgeCount; ++e) out.deltas[e] = a[e] - b[e];
  return out;
}

std::string adjacency_csv(const std::vector<AdjacencyVector>& vectors) {
  std::ostringstream out;
  std::vector<std::string> header{"unitId"};
  for (std::size_t e = 0; e < kEdgeCount; ++e) header.push_back(edge_name(e));
  out << csv::join(header) << '\n';
  for (const auto& v : vectors) {
    std::vector<std::string> row{v.unit_id};
    for (double w : v.weights) row.push_back(csv::format_double(w));
    out << csv::join(row) << '\n';
  }
  return out.str();
}

std::string points_csv(const EnaSpace& space, const cluster::ClusterModel* model) {
  std::map<std::string, int> labels;
  if (model) labels = model->assignments();
  std::ostringstream out;
  out << "unitId,cluster,dim1,dim2\n";
  for (std::size_t u = 0; u < space.unit_ids.size(); ++u) {
    auto it = labels.find(space.unit_ids[u]);
    out << csv::join({space.unit_ids[u], it == labels.end() ? std::string() : std::to_string(it->second),
                      csv::format_double(space.points[u][0]), csv::format_double(space.points[u][1])})
        << '\n';
  }
  return out.str();
}

std::string nodes_csv(const NodePlacement& nodes) {
  std::ostringstream out;
  out << "code,x,y\n";
  for (Code c : alphabetical_codes()) {
    const auto& p = nodes.positions[static_cast<std::size_t>(c)];
    out << csv::join({std::string(coding::to_string(c)), csv::format_double(p[0]), csv::format_double(p[1])}) << '\n';
  }
  return out.str();
}

std::string subtracted_csv(const std::vector<SubtractedNetwork>& networks) {
  std::ostringstream out;
  std::vector<std::string> header{"clusterA", "clusterB"};
  for (std::size_t e = 0; e < kEdgeCount; ++e) header.push_back(edge_name(e));
  out << csv::join(header) << '\n';
  for (const auto& n : networks) {
    std::vector<std::string> row{std::to_string(n.cluster_a), std::to_string(n.cluster_b)};
    for (double d : n.deltas) row.push_back(csv::format_double(d));
    out << csv::join(row) << '\n';
  }
  return out.str();
}

}  // namespace cowrite::ena
