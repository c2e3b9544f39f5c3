#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cgak/gram.hpp"

namespace cgak {

struct SvrConfig {
  double C = 1.0;
  double epsilon = 0.1;
  double tolerance = 1e-6;
  std::size_t max_iterations = 10'000'000;

  void validate() const;
};

// Dual solution of epsilon-SVR on a precomputed kernel.
//
// Solves  max  sum_i y_i theta_i - eps sum_i (a+_i + a-_i) - 1/2 theta' K theta
//         s.t. sum_i theta_i = 0,  0 <= a+_i, a-_i <= C,  theta = a+ - a-
// with pairwise (SMO) updates: the maximal violator is paired with the partner
// of largest second-order gain. Prediction is
// g(x) = sum_i theta_i K(x_i, x) + b.
struct SvrModel {
  std::vector<double> alpha_plus;
  std::vector<double> alpha_minus;
  std::vector<double> theta;
  double bias = 0.0;
  std::vector<std::size_t> support;  // indices with theta_i != 0

  std::size_t iterations = 0;
  double kkt_gap = 0.0;      // max violation of the optimality conditions at exit
  double objective = 0.0;    // dual objective value (maximised)
  bool converged = false;    // false when the iteration cap stopped the solver
  bool nonconvex = false;    // negative curvature was met and clamped
};

// `warm_start`, when given, seeds the multipliers (clamped to the box); it only
// changes the starting point, not the optimum.
SvrModel svr_fit(const GramMatrix& kernel, std::span<const double> labels, const SvrConfig& config,
                 const SvrModel* warm_start = nullptr);

// sum_i theta_i row_i + b
double svr_predict(const SvrModel& model, std::span<const double> kernel_row);

// Dual objective for arbitrary (feasible) multipliers.
double svr_dual_objective(const GramMatrix& kernel, std::span<const double> labels,
                          std::span<const double> alpha_plus, std::span<const double> alpha_minus,
                          double epsilon);

// Largest violation of the KKT conditions of the dual (the maximal-violating-pair
// gap, clamped at 0) for the given multipliers.
double svr_kkt_violation(const GramMatrix& kernel, std::span<const double> labels,
                         std::span<const double> alpha_plus, std::span<const double> alpha_minus,
                         const SvrConfig& config);

}  // namespace cgak
