#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <limits>
#include <random>
#include <sstream>

#include "cgak/error.hpp"
#include "cgak/geometry.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cgak;
using cgak::fixtures::brute_force_mst;
using cgak::fixtures::face_at;

namespace {

std::vector<FaceRecord> faces_from(std::vector<Point2> noses, std::vector<double> eyes) {
  std::vector<FaceRecord> out;
  for (std::size_t k = 0; k < noses.size(); ++k) out.push_back(face_at(noses[k], eyes[k]));
  return out;
}

}  // namespace

TEST(Mst, SingleFaceHasNoEdges) {
  const std::vector<Point2> p{{3, 4}};
  EXPECT_TRUE(build_mst(p).edges.empty());
}

TEST(Mst, CollinearNoses) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {10, 0}};
  const auto g = build_mst(p);
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(std::min(g.edges[0].a, g.edges[0].b), 0u);
  EXPECT_EQ(std::max(g.edges[0].a, g.edges[0].b), 1u);
  EXPECT_EQ(std::min(g.edges[1].a, g.edges[1].b), 1u);
  EXPECT_EQ(std::max(g.edges[1].a, g.edges[1].b), 2u);
  EXPECT_DOUBLE_EQ(g.total_weight(), 10.0);
}

TEST(Mst, UnitSquare) {
  const std::vector<Point2> p{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_DOUBLE_EQ(build_mst(p).total_weight(), 3.0);
}

TEST(Mst, MatchesBruteForceOnSmallGroups) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point2> p(1 + trial % 6);
    for (auto& q : p) q = {u(rng), u(rng)};
    const auto g = build_mst(p);
    ASSERT_EQ(g.edges.size(), p.size() - 1);
    const double ref = brute_force_mst(p);
    EXPECT_NEAR(g.total_weight(), ref, 1e-12 * std::max(1.0, ref));
  }
}

TEST(EyeDistance, Examples) {
  FaceRecord f;
  f.left_eye = {0, 0};
  f.right_eye = {3, 4};
  EXPECT_EQ(eye_distance(f), 5.0);
  f.right_eye = {2, 0};
  EXPECT_EQ(eye_distance(f), 2.0);
  f.left_eye = f.right_eye = {1, 1};
  EXPECT_THROW(eye_distance(f), ValidationError);
}

TEST(RelativeSize, Examples) {
  auto faces = faces_from({{0, 0}, {4, 0}}, {2, 2});
  EXPECT_EQ(relative_sizes(faces, build_mst(std::span<const FaceRecord>(faces))),
            (std::vector<double>{1, 1}));
  faces = faces_from({{0, 0}, {4, 0}}, {4, 2});
  EXPECT_EQ(relative_sizes(faces, build_mst(std::span<const FaceRecord>(faces))),
            (std::vector<double>{2, 0.5}));
  faces = faces_from({{7, 7}}, {30});
  EXPECT_EQ(relative_sizes(faces, build_mst(std::span<const FaceRecord>(faces))),
            (std::vector<double>{1}));
}

TEST(RelativeDistance, Examples) {
  auto faces = faces_from({{0, 0}, {4, 0}}, {2, 2});
  EXPECT_EQ(relative_distances(faces), (std::vector<double>{1, 1}));
  faces = faces_from({{5, 5}}, {2});
  EXPECT_EQ(relative_distances(faces), (std::vector<double>{0}));
  faces = faces_from({{0, 0}, {2, 0}, {4, 0}}, {2, 2, 2});
  std::vector<double> raw;
  EXPECT_EQ(relative_distances(faces, &raw), (std::vector<double>{1.5, 0, 1.5}));
  EXPECT_EQ(raw, (std::vector<double>{2, 0, 2}));
  faces = faces_from({{1, 1}, {1, 1}}, {2, 3});
  EXPECT_EQ(relative_distances(faces), (std::vector<double>{0, 0}));
}

TEST(GlobalWeights, Examples) {
  auto faces = faces_from({{0, 0}, {4, 0}}, {2, 2});
  auto w = global_weights(faces, build_mst(std::span<const FaceRecord>(faces)), 0.1);
  EXPECT_EQ(w.weight, (std::vector<double>{0.9, 0.9}));
  faces = faces_from({{0, 0}, {4, 0}}, {4, 2});
  w = global_weights(faces, build_mst(std::span<const FaceRecord>(faces)), 0.1);
  EXPECT_EQ(w.weight, (std::vector<double>{1.8, 0.45}));
  w = global_weights(faces, build_mst(std::span<const FaceRecord>(faces)), 0.0);
  EXPECT_EQ(w.weight, w.relative_size);
  EXPECT_THROW(global_weights(faces, build_mst(std::span<const FaceRecord>(faces)), -1.0),
               ValidationError);
}

TEST(GlobalWeights, SingletonWeightIsOne) {
  auto faces = faces_from({{3, 3}}, {12});
  const auto w = global_weights(faces, build_mst(std::span<const FaceRecord>(faces)));
  EXPECT_EQ(w.weight, (std::vector<double>{1.0}));
}

TEST(Sort, Examples) {
  const std::vector<double> w{0.45, 1.8};
  EXPECT_EQ(descending_order(w), (std::vector<std::size_t>{1, 0}));
  const std::vector<double> tied{0.7, 0.7, 0.7};
  EXPECT_EQ(descending_order(tied), (std::vector<std::size_t>{0, 1, 2}));

  GroupRecord g;
  g.id = "two";
  g.faces = faces_from({{0, 0}, {4, 0}}, {2, 4});
  g.faces[0].channels["c"] = {0.0};
  g.faces[1].channels["c"] = {1.0};
  const auto s = sort_faces(g, "c");
  EXPECT_EQ(s.order, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(s.features[0], (FeatureVector{1.0}));
  EXPECT_EQ(s.weights, (std::vector<double>{1.8, 0.45}));

  GroupRecord one;
  one.faces = faces_from({{0, 0}}, {5});
  EXPECT_EQ(sort_faces(one, "c").order, (std::vector<std::size_t>{0}));
}

TEST(Sort, PermutationInvariance) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = fixtures::random_group(rng, 2 + trial % 9);
    const auto ref = sort_faces(g, "c");
    auto sorted_w = ref.weights;
    ASSERT_TRUE(std::adjacent_find(sorted_w.begin(), sorted_w.end()) == sorted_w.end());
    auto shuffled = g;
    std::shuffle(shuffled.faces.begin(), shuffled.faces.end(), rng);
    EXPECT_EQ(sort_faces(shuffled, "c").features, ref.features);
  }
}

TEST(Sort, ScaleInvariance) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = fixtures::random_group(rng, 1 + trial % 8);
    const double s = scale(rng);
    auto scaled = g;
    for (auto& f : scaled.faces) {
      for (Point2* p : {&f.left_eye, &f.right_eye, &f.nose_tip}) {
        p->x *= s;
        p->y *= s;
      }
    }
    const auto a = global_weights(g.faces, build_mst(std::span<const FaceRecord>(g.faces)));
    const auto b =
        global_weights(scaled.faces, build_mst(std::span<const FaceRecord>(scaled.faces)));
    for (std::size_t k = 0; k < g.faces.size(); ++k) {
      EXPECT_NEAR(a.relative_size[k], b.relative_size[k], 1e-12 * a.relative_size[k]);
      EXPECT_NEAR(a.distance[k], b.distance[k], 1e-12);
    }
    EXPECT_EQ(sort_faces(g, "c").order, sort_faces(scaled, "c").order);
  }
}

TEST(RelativeDistance, MeanIsOne) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = fixtures::random_group(rng, 2 + trial % 10);
    const auto d = relative_distances(g.faces);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    EXPECT_NEAR(mean, 1.0, 1e-12);
  }
}

TEST(WeightDump, HasHeaderAndRowPerFace) {
  GroupRecord g;
  g.id = "dump";
  g.faces = faces_from({{0, 0}, {4, 0}, {9, 0}}, {2, 4, 3});
  std::ostringstream out;
  write_weight_dump(out, g);
  std::istringstream in(out.str());
  std::string line;
  std::size_t lines = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# group=dump", 0), 0u);
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4u);
}
