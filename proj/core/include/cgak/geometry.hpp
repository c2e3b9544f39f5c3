#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cgak/records.hpp"

namespace cgak {

inline constexpr double kDefaultLambda = 0.1;

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

// Spanning tree over the faces of one group, edges weighted by nose-tip distance.
struct FaceGraph {
  std::size_t node_count = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> neighbours;

  double total_weight() const;
};

// Per-face terms of the global weight w_k = |1 - lambda * delta_k| * S_k.
struct GlobalWeights {
  double lambda = kDefaultLambda;
  std::vector<double> eye_distance;    // d_k
  std::vector<double> relative_size;   // S_k
  std::vector<double> raw_distance;    // ||p_k - c_g||
  std::vector<double> distance;        // raw distance over its group mean
  std::vector<double> weight;          // w_k
};

// Prim's algorithm on the complete graph of points. Ties go to the lowest index.
FaceGraph build_mst(std::span<const Point2> points);
FaceGraph build_mst(std::span<const FaceRecord> faces);

double eye_distance(const FaceRecord& face);

// S_k = d_k / mean of d_j over the tree neighbours of k; 1 for a singleton group.
std::vector<double> relative_sizes(std::span<const FaceRecord> faces, const FaceGraph& graph);

// Normalised centroid distances. All zero when every nose tip coincides.
std::vector<double> relative_distances(std::span<const FaceRecord> faces,
                                       std::vector<double>* raw = nullptr);

GlobalWeights global_weights(std::span<const FaceRecord> faces, const FaceGraph& graph,
                             double lambda = kDefaultLambda);

// Indices ordered by non-increasing weight, ties by ascending index.
std::vector<std::size_t> descending_order(std::span<const double> weights);

SortedSequence sort_faces(const GroupRecord& group, const std::string& channel,
                          double lambda = kDefaultLambda);

// Tab-separated per-face dump: index, rank, neighbours, d_k, S_k, raw delta,
// normalised delta, w_k. Preceded by one "# edges" comment line.
void write_weight_dump(std::ostream& out, const GroupRecord& group, double lambda = kDefaultLambda);

}  // namespace cgak
