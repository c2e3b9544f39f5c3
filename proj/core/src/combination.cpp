#include "cgak/combination.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgak/error.hpp"

namespace cgak {

std::string_view to_string(CombinationStrategy strategy) {
  switch (strategy) {
    case CombinationStrategy::single: return "single";
    case CombinationStrategy::summation: return "sum";
    case CombinationStrategy::multiplication: return "prod";
    case CombinationStrategy::weighted_summation: return "weighted";
  }
  return "unknown";
}

CombinationStrategy parse_strategy(std::string_view text) {
  if (text == "single") return CombinationStrategy::single;
  if (text == "sum" || text == "summation") return CombinationStrategy::summation;
  if (text == "prod" || text == "multiplication") return CombinationStrategy::multiplication;
  if (text == "weighted" || text == "weighted_summation") {
    return CombinationStrategy::weighted_summation;
  }
  throw ValidationError("unknown combination strategy '" + std::string(text) + "'");
}

GatingState GatingState::uniform(std::size_t q) {
  GatingState state;
  state.offsets.assign(q, 0.0);
  state.slopes.assign(q, {});
  return state;
}

std::vector<double> softmax_weights(const GatingState& state) {
  const auto& z = state.offsets;
  if (z.size() < 2) throw ValidationError("softmax gating needs at least two kernels");
  const double hi = *std::max_element(z.begin(), z.end());
  std::vector<double> beta(z.size());
  double sum = 0.0;
  for (std::size_t q = 0; q < z.size(); ++q) {
    beta[q] = std::exp(z[q] - hi);
    sum += beta[q];
  }
  for (auto& b : beta) b /= sum;
  return beta;
}

double combine_values(std::span<const double> values, CombinationStrategy strategy,
                      std::span<const double> beta) {
  switch (strategy) {
    case CombinationStrategy::single:
      if (values.size() != 1) throw ValidationError("single strategy takes exactly one kernel");
      return values[0];
    case CombinationStrategy::summation:
      return std::accumulate(values.begin(), values.end(), 0.0);
    case CombinationStrategy::multiplication:
      return std::accumulate(values.begin(), values.end(), 1.0, std::multiplies<>());
    case CombinationStrategy::weighted_summation: {
      if (beta.size() != values.size()) {
        throw ValidationError("weighted summation needs one weight per kernel");
      }
      double sum = 0.0;
      for (std::size_t q = 0; q < values.size(); ++q) sum += beta[q] * values[q];
      return sum;
    }
  }
  throw ValidationError("unknown combination strategy");
}

GramMatrix combine(std::span<const GramMatrix> grams, CombinationStrategy strategy,
                   std::span<const double> beta) {
  if (grams.empty()) throw ValidationError("nothing to combine");
  const std::size_t n = grams.front().size();
  const auto hash = grams.front().metadata.dataset_hash;
  for (const auto& g : grams) {
    if (g.size() != n) throw ValidationError("cannot combine grams of different sizes");
    if (g.metadata.dataset_hash != hash) {
      throw ValidationError("cannot combine grams over differently ordered datasets");
    }
  }
  if (strategy == CombinationStrategy::weighted_summation) {
    if (beta.size() != grams.size()) {
      throw ValidationError("weighted summation needs one weight per kernel");
    }
    for (double b : beta) {
      if (!(b >= 0.0)) throw ValidationError("combination weights must be non-negative");
    }
  }

  GramMatrix out(n);
  std::vector<double> cell(grams.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t q = 0; q < grams.size(); ++q) cell[q] = grams[q](i, j);
      out(i, j) = combine_values(cell, strategy, beta);
    }
  }

  auto& md = out.metadata;
  md = grams.front().metadata;
  for (std::size_t q = 1; q < grams.size(); ++q) md.channel += "+" + grams[q].metadata.channel;
  md.strategy = std::string(to_string(strategy));
  if (strategy == CombinationStrategy::weighted_summation) md.beta.assign(beta.begin(), beta.end());
  else md.beta.clear();
  return out;
}

GramMatrix combine(const GramMatrix& a, const GramMatrix& b, CombinationStrategy strategy,
                   std::span<const double> beta) {
  const GramMatrix pair[] = {a, b};
  return combine(pair, strategy, beta);
}

double gated_objective(std::span<const GramMatrix> grams, std::span<const double> labels,
                       std::span<const double> beta, const SvrConfig& svr) {
  const GramMatrix k = combine(grams, CombinationStrategy::weighted_summation, beta);
  return svr_fit(k, labels, svr).objective;
}

namespace {

struct Evaluation {
  double objective = 0.0;
  std::vector<double> gradient;  // dJ / dv_q0
  SvrModel model;
};

Evaluation evaluate(std::span<const GramMatrix> grams, std::span<const double> labels,
                    const GatingState& state, const SvrConfig& svr, const SvrModel* warm) {
  const auto beta = softmax_weights(state);
  const GramMatrix k = combine(grams, CombinationStrategy::weighted_summation, beta);
  SvrModel model = svr_fit(k, labels, svr, warm);

  const std::size_t q_count = grams.size();
  std::vector<double> d_beta(q_count, 0.0);
  for (std::size_t q = 0; q < q_count; ++q) {
    double quad = 0.0;
    for (std::size_t i : model.support) {
      double row = 0.0;
      for (std::size_t j : model.support) row += grams[q](i, j) * model.theta[j];
      quad += model.theta[i] * row;
    }
    d_beta[q] = -0.5 * quad;
  }
  // Softmax Jacobian: dbeta_q/dv_r = beta_q (delta_qr - beta_r).
  double mean = 0.0;
  for (std::size_t q = 0; q < q_count; ++q) mean += beta[q] * d_beta[q];
  Evaluation ev;
  ev.objective = model.objective;
  ev.gradient.resize(q_count);
  for (std::size_t r = 0; r < q_count; ++r) ev.gradient[r] = beta[r] * (d_beta[r] - mean);
  ev.model = std::move(model);
  return ev;
}

}  // namespace

GatingState fit_gating(std::span<const GramMatrix> grams, std::span<const double> labels,
                       const SvrConfig& svr, const GatingOptions& options,
                       SvrModel* solution) {
  if (grams.size() < 2) throw ValidationError("gating needs at least two kernels");
  const std::size_t n = grams.front().size();
  for (const auto& g : grams) {
    if (g.size() != n) throw ValidationError("gating grams differ in size");
  }

  GatingState state = GatingState::uniform(grams.size());
  if (options.max_iterations == 0) return state;

  Evaluation current = evaluate(grams, labels, state, svr, nullptr);
  state.objective_trace.push_back(current.objective);
  double step = options.initial_step;

  while (state.iterations < options.max_iterations) {
    ++state.iterations;
    double g_norm = 0.0;
    for (double g : current.gradient) g_norm = std::max(g_norm, std::abs(g));
    if (g_norm == 0.0) {
      state.converged = true;
      break;
    }

    GatingState trial = state;
    for (std::size_t q = 0; q < trial.offsets.size(); ++q) {
      trial.offsets[q] -= step * current.gradient[q] / g_norm;
    }
    Evaluation next = evaluate(grams, labels, trial, svr, &current.model);
    if (next.objective > current.objective) {
      step *= 0.5;
      if (step < options.min_step) {
        state.converged = true;
        break;
      }
      continue;
    }

    const double change = current.objective - next.objective;
    state.offsets = std::move(trial.offsets);
    current = std::move(next);
    state.objective_trace.push_back(current.objective);
    if (change <= options.tolerance * std::max(1.0, std::abs(current.objective))) {
      state.converged = true;
      break;
    }
  }
  if (solution) *solution = std::move(current.model);
  return state;
}

}  // namespace cgak
