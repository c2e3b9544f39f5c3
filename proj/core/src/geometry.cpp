#include "cgak/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "cgak/error.hpp"

namespace cgak {

double FaceGraph::total_weight() const {
  double total = 0.0;
  for (const auto& e : edges) total += e.weight;
  return total;
}

FaceGraph build_mst(std::span<const Point2> points) {
  const std::size_t n = points.size();
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("non-finite nose-tip coordinates");
    }
  }

  FaceGraph graph;
  graph.node_count = n;
  graph.neighbours.resize(n);
  if (n < 2) return graph;

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, inf);
  std::vector<std::size_t> parent(n, 0);

  in_tree[0] = true;
  for (std::size_t v = 1; v < n; ++v) {
    best[v] = distance(points[0], points[v]);
    parent[v] = 0;
  }

  for (std::size_t added = 1; added < n; ++added) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (next == n || best[v] < best[next])) next = v;
    }
    in_tree[next] = true;
    const std::size_t a = std::min(parent[next], next);
    const std::size_t b = std::max(parent[next], next);
    graph.edges.push_back({a, b, best[next]});
    graph.neighbours[a].push_back(b);
    graph.neighbours[b].push_back(a);

    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = distance(points[next], points[v]);
      if (d < best[v]) {
        best[v] = d;
        parent[v] = next;
      }
    }
  }
  for (auto& adj : graph.neighbours) std::sort(adj.begin(), adj.end());
  return graph;
}

FaceGraph build_mst(std::span<const FaceRecord> faces) {
  std::vector<Point2> noses;
  noses.reserve(faces.size());
  for (const auto& f : faces) noses.push_back(f.nose_tip);
  return build_mst(noses);
}

double eye_distance(const FaceRecord& face) {
  const double d = distance(face.left_eye, face.right_eye);
  if (!(d > 0.0)) throw ValidationError("coincident eyes: eye distance must be positive");
  return d;
}

std::vector<double> relative_sizes(std::span<const FaceRecord> faces, const FaceGraph& graph) {
  const std::size_t n = faces.size();
  if (graph.node_count != n) throw ValidationError("face graph does not match the face list");
  if (n == 1) return {1.0};

  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = eye_distance(faces[k]);

  std::vector<double> sizes(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& adj = graph.neighbours[k];
    if (adj.empty()) throw ValidationError("face " + std::to_string(k) + " has no neighbours");
    double sum = 0.0;
    for (std::size_t j : adj) sum += d[j];
    sizes[k] = d[k] / (sum / static_cast<double>(adj.size()));
  }
  return sizes;
}

std::vector<double> relative_distances(std::span<const FaceRecord> faces,
                                       std::vector<double>* raw) {
  const std::size_t n = faces.size();
  if (n == 0) throw ValidationError("empty face set");

  Point2 centroid;
  for (const auto& f : faces) {
    centroid.x += f.nose_tip.x;
    centroid.y += f.nose_tip.y;
  }
  centroid.x /= static_cast<double>(n);
  centroid.y /= static_cast<double>(n);

  std::vector<double> delta(n);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    delta[k] = distance(faces[k].nose_tip, centroid);
    mean += delta[k];
  }
  mean /= static_cast<double>(n);
  if (raw) *raw = delta;

  if (mean == 0.0) {
    std::fill(delta.begin(), delta.end(), 0.0);
  } else {
    for (auto& v : delta) v /= mean;
  }
  return delta;
}

GlobalWeights global_weights(std::span<const FaceRecord> faces, const FaceGraph& graph,
                             double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ValidationError("lambda must be finite and non-negative");
  }
  GlobalWeights gw;
  gw.lambda = lambda;
  gw.eye_distance.reserve(faces.size());
  for (const auto& f : faces) gw.eye_distance.push_back(eye_distance(f));
  gw.relative_size = relative_sizes(faces, graph);
  gw.distance = relative_distances(faces, &gw.raw_distance);
  gw.weight.resize(faces.size());
  for (std::size_t k = 0; k < faces.size(); ++k) {
    gw.weight[k] = std::abs(1.0 - lambda * gw.distance[k]) * gw.relative_size[k];
  }
  return gw;
}

std::vector<std::size_t> descending_order(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return order;
}

SortedSequence sort_faces(const GroupRecord& group, const std::string& channel, double lambda) {
  if (group.faces.empty()) throw ValidationError("group '" + group.id + "' has no faces");
  const FaceGraph graph = build_mst(std::span<const FaceRecord>(group.faces));
  const GlobalWeights gw = global_weights(group.faces, graph, lambda);

  SortedSequence seq;
  seq.group_id = group.id;
  seq.channel = channel;
  seq.order = descending_order(gw.weight);
  seq.features.reserve(seq.order.size());
  seq.weights.reserve(seq.order.size());
  for (std::size_t k : seq.order) {
    auto it = group.faces[k].channels.find(channel);
    if (it == group.faces[k].channels.end()) {
      throw ValidationError("group '" + group.id + "' face " + std::to_string(k) +
                            " has no channel '" + channel + "'");
    }
    seq.features.push_back(it->second);
    seq.weights.push_back(gw.weight[k]);
  }
  return seq;
}

void write_weight_dump(std::ostream& out, const GroupRecord& group, double lambda) {
  const FaceGraph graph = build_mst(std::span<const FaceRecord>(group.faces));
  const GlobalWeights gw = global_weights(group.faces, graph, lambda);
  const auto order = descending_order(gw.weight);
  std::vector<std::size_t> rank(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) rank[order[p]] = p;

  const auto old_precision = out.precision(17);
  out << "# group=" << group.id << " lambda=" << lambda << " edges=";
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    out << (e ? ";" : "") << edge.a << '-' << edge.b << ':' << edge.weight;
  }
  out << '\n';
  out << "face\trank\tneighbours\teye_distance\trelative_size\traw_delta\tdelta\tweight\n";
  for (std::size_t k = 0; k < group.faces.size(); ++k) {
    out << k << '\t' << rank[k] << '\t';
    const auto& adj = graph.neighbours[k];
    if (adj.empty()) out << '-';
    for (std::size_t i = 0; i < adj.size(); ++i) out << (i ? "," : "") << adj[i];
    out << '\t' << gw.eye_distance[k] << '\t' << gw.relative_size[k] << '\t'
        << gw.raw_distance[k] << '\t' << gw.distance[k] << '\t' << gw.weight[k] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cgak
