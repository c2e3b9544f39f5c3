#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cgak/gram.hpp"
#include "cgak/svr.hpp"

namespace cgak {

enum class CombinationStrategy { single, summation, multiplication, weighted_summation };

// CLI spellings: single, sum, prod, weighted.
std::string_view to_string(CombinationStrategy strategy);
CombinationStrategy parse_strategy(std::string_view text);

enum class GatingInput {
  // The inner-product term of the softmax gate is fixed at zero, so beta is one
  // simplex point shared by every instance.
  constant,
};

// Softmax gate over Q kernels: beta_q = exp(v_q0) / sum_r exp(v_r0).
struct GatingState {
  GatingInput input = GatingInput::constant;
  std::vector<double> offsets;              // v_q0
  std::vector<std::vector<double>> slopes;  // v_q, unused under constant gating

  // Filled by fit_gating.
  std::vector<double> objective_trace;  // dual objective after each accepted step
  std::size_t iterations = 0;
  bool converged = false;

  static GatingState uniform(std::size_t q);
  std::size_t size() const { return offsets.size(); }
};

// Max-subtracted softmax of the gate offsets. Requires Q >= 2.
std::vector<double> softmax_weights(const GatingState& state);

// Combines per-kernel values of one cell. `beta` is only read for
// weighted_summation; single requires exactly one value.
double combine_values(std::span<const double> values, CombinationStrategy strategy,
                      std::span<const double> beta = {});

// Elementwise combination. All inputs must have the same size and dataset hash.
// Summation and multiplication ignore `beta`.
GramMatrix combine(std::span<const GramMatrix> grams, CombinationStrategy strategy,
                   std::span<const double> beta = {});
GramMatrix combine(const GramMatrix& a, const GramMatrix& b, CombinationStrategy strategy,
                   std::span<const double> beta = {});

struct GatingOptions {
  double tolerance = 1e-6;     // relative change of the objective
  std::size_t max_iterations = 50;
  double initial_step = 1.0;   // step on the gate offsets, in logit units
  double min_step = 1e-8;
};

// Alternates an SVR dual solve on the beta-weighted Gram with a gradient step on
// the gate offsets. The objective is the optimal dual value J(beta), minimised
// over beta, with dJ/dbeta_q = -1/2 theta' G_q theta. A step that increases J is
// rejected and the step halved. When `solution` is given and max_iterations > 0
// it receives the SVR fit at the returned weights.
GatingState fit_gating(std::span<const GramMatrix> grams, std::span<const double> labels,
                       const SvrConfig& svr, const GatingOptions& options = {},
                       SvrModel* solution = nullptr);

// Optimal SVR dual objective for a fixed beta.
double gated_objective(std::span<const GramMatrix> grams, std::span<const double> labels,
                       std::span<const double> beta, const SvrConfig& svr);

}  // namespace cgak
