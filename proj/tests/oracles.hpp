#pragma once

// Reference implementations that share no code path with the library routines
// they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "cgak/alignment.hpp"
#include "cgak/records.hpp"
#include "cgak/svr.hpp"

namespace cgak::fixtures {

// Minimum spanning weight by trying every (n-1)-subset of the complete graph.
inline double brute_force_mst(const std::vector<Point2>& pts) {
  const std::size_t n = pts.size();
  if (n < 2) return 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(all.size(), false);
  std::fill(pick.end() - static_cast<long>(n - 1), pick.end(), true);
  do {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> root = [&](std::size_t v) {
      return parent[v] == v ? v : parent[v] = root(parent[v]);
    };
    bool tree = true;
    double total = 0.0;
    for (std::size_t e = 0; e < all.size() && tree; ++e) {
      if (!pick[e]) continue;
      const auto [a, b] = all[e];
      const auto ra = root(a), rb = root(b);
      if (ra == rb) tree = false;
      parent[ra] = rb;
      total += std::hypot(pts[a].x - pts[b].x, pts[a].y - pts[b].y);
    }
    if (tree) best = std::min(best, total);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

// Minimum summed divergence over explicitly enumerated alignments, costs added
// in path order.
inline double enumerated_dtw(FeatureSpan x, FeatureSpan y, DivergenceKind kind) {
  double best = std::numeric_limits<double>::infinity();
  for_each_alignment(x.size(), y.size(), [&](const Alignment& al) {
    double cost = 0;
    for (std::size_t s = 0; s < al.length(); ++s) cost += divergence(kind, x[al.first[s]], y[al.second[s]]);
    best = std::min(best, cost);
  });
  return best;
}

struct GridResult {
  double theta1 = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

// Two-point epsilon-SVR dual, maximised by exhaustive search over
// (a+_1, a-_1) in [0, C]^2: a coarse grid, then a fine grid around its best
// cell. The equality constraint fixes theta_2 = -theta_1 and the second point
// takes the cheapest split of theta_2.
inline GridResult svr_grid_search(const double k[2][2], const double y[2], double C, double eps) {
  auto eval = [&](double ap1, double am1) {
    const double t = ap1 - am1;
    const double ap2 = std::max(0.0, -t), am2 = std::max(0.0, t);
    if (ap2 > C || am2 > C) return -std::numeric_limits<double>::infinity();
    const double th[2] = {t, -t};
    double quad = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) quad += th[i] * k[i][j] * th[j];
    return y[0] * th[0] + y[1] * th[1] - eps * (ap1 + am1 + ap2 + am2) - 0.5 * quad;
  };
  GridResult best;
  double bp = 0, bm = 0;
  const int coarse = 1000;
  for (int a = 0; a <= coarse; ++a) {
    for (int b = 0; b <= coarse; ++b) {
      const double ap = C * a / coarse, am = C * b / coarse;
      const double v = eval(ap, am);
      if (v > best.value) best = {ap - am, v}, bp = ap, bm = am;
    }
  }
  const double step = (2.0 * C / coarse) / 2000;
  const double p0 = bp, m0 = bm;
  for (int a = -2000; a <= 2000; ++a) {
    for (int b = -2000; b <= 2000; b += 40) {
      const double ap = std::clamp(p0 + a * step, 0.0, C), am = std::clamp(m0 + b * step, 0.0, C);
      const double v = eval(ap, am);
      if (v > best.value) best = {ap - am, v};
    }
  }
  return best;
}

}  // namespace cgak::fixtures
