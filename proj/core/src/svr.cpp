#include "cgak/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgak/error.hpp"

namespace cgak {

void SvrConfig::validate() const {
  if (!std::isfinite(C) || C <= 0.0) throw ValidationError("SVR C must be positive");
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw ValidationError("SVR epsilon must be >= 0");
  if (!std::isfinite(tolerance) || tolerance <= 0.0) {
    throw ValidationError("SVR tolerance must be positive");
  }
}

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// The 2N-variable problem  min 1/2 a'Qa + p'a,  z'a = 0,  0 <= a <= C  where
// a = [a+; a-], z = [+1; -1], p = [eps - y; eps + y], Q_st = z_s z_t K(s mod N, t mod N).
struct Problem {
  const GramMatrix& kernel;
  std::span<const double> labels;
  double C;
  double epsilon;

  std::size_t n() const { return labels.size(); }
  std::size_t l() const { return 2 * labels.size(); }
  double z(std::size_t t) const { return t < n() ? 1.0 : -1.0; }
  std::size_t point(std::size_t t) const { return t < n() ? t : t - n(); }
  double q(std::size_t s, std::size_t t) const {
    return z(s) * z(t) * kernel(point(s), point(t));
  }
  double p(std::size_t t) const {
    return t < n() ? epsilon - labels[t] : epsilon + labels[t - n()];
  }
};

bool in_up(const Problem& pr, const std::vector<double>& a, std::size_t t) {
  return pr.z(t) > 0 ? a[t] < pr.C : a[t] > 0.0;
}

bool in_low(const Problem& pr, const std::vector<double>& a, std::size_t t) {
  return pr.z(t) > 0 ? a[t] > 0.0 : a[t] < pr.C;
}

struct Violation {
  std::size_t i = 0;
  std::size_t j = 0;
  double gap = -kInf;
};

Violation max_violating_pair(const Problem& pr, const std::vector<double>& a,
                             const std::vector<double>& grad) {
  double up = -kInf, low = kInf;
  Violation v;
  for (std::size_t t = 0; t < pr.l(); ++t) {
    const double score = -pr.z(t) * grad[t];
    if (in_up(pr, a, t) && score > up) {
      up = score;
      v.i = t;
    }
    if (in_low(pr, a, t) && score < low) {
      low = score;
      v.j = t;
    }
  }
  v.gap = (up == -kInf || low == kInf) ? 0.0 : up - low;
  return v;
}

std::vector<double> gradient(const Problem& pr, const std::vector<double>& a) {
  const std::size_t n = pr.n();
  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = a[i] - a[i + n];
  std::vector<double> grad(pr.l());
  for (std::size_t i = 0; i < n; ++i) {
    double k_theta = 0.0;
    for (std::size_t j = 0; j < n; ++j) k_theta += pr.kernel(i, j) * theta[j];
    grad[i] = k_theta + pr.p(i);
    grad[i + n] = -k_theta + pr.p(i + n);
  }
  return grad;
}

// The first index is the maximal violator; the second is the partner in the
// violating set with the largest second-order decrease of the objective.
Violation select_working_set(const Problem& pr, const std::vector<double>& a,
                             const std::vector<double>& grad) {
  Violation v;
  double up = -kInf;
  for (std::size_t t = 0; t < pr.l(); ++t) {
    const double score = -pr.z(t) * grad[t];
    if (in_up(pr, a, t) && score > up) {
      up = score;
      v.i = t;
    }
  }
  if (up == -kInf) {
    v.gap = 0.0;
    return v;
  }
  const std::size_t pi = pr.point(v.i);
  const double kii = pr.kernel(pi, pi);
  double low = kInf, best = kInf;
  for (std::size_t t = 0; t < pr.l(); ++t) {
    if (!in_low(pr, a, t)) continue;
    const double score = -pr.z(t) * grad[t];
    low = std::min(low, score);
    const double diff = up - score;
    if (diff <= 0.0) continue;
    const std::size_t pt = pr.point(t);
    double quad = kii + pr.kernel(pt, pt) - 2.0 * pr.kernel(pi, pt);
    if (quad <= 0.0) quad = kTau;
    const double decrease = -diff * diff / quad;
    if (decrease <= best) {
      best = decrease;
      v.j = t;
    }
  }
  v.gap = low == kInf ? 0.0 : up - low;
  return v;
}

double bias_from(const Problem& pr, const std::vector<double>& a, const std::vector<double>& grad) {
  double upper = kInf, lower = -kInf, sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < pr.l(); ++t) {
    const double zg = pr.z(t) * grad[t];
    if (a[t] >= pr.C) {
      if (pr.z(t) < 0) upper = std::min(upper, zg);
      else lower = std::max(lower, zg);
    } else if (a[t] <= 0.0) {
      if (pr.z(t) > 0) upper = std::min(upper, zg);
      else lower = std::max(lower, zg);
    } else {
      ++free;
      sum_free += zg;
    }
  }
  const double rho = free > 0 ? sum_free / static_cast<double>(free) : (upper + lower) / 2.0;
  return -rho;
}

}  // namespace

SvrModel svr_fit(const GramMatrix& kernel, std::span<const double> labels,
                 const SvrConfig& config, const SvrModel* warm_start) {
  config.validate();
  if (kernel.size() != labels.size()) {
    throw ValidationError("gram size " + std::to_string(kernel.size()) + " does not match " +
                          std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw ValidationError("no training labels");
  for (double y : labels) {
    if (!std::isfinite(y)) throw ValidationError("non-finite label");
  }
  for (double v : kernel.values()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite gram entry");
  }
  if (!kernel.is_symmetric(1e-12)) throw ValidationError("gram matrix is not symmetric");

  const Problem pr{kernel, labels, config.C, config.epsilon};
  const std::size_t n = pr.n();
  std::vector<double> a(pr.l(), 0.0);
  std::vector<double> grad(pr.l());
  if (warm_start && warm_start->alpha_plus.size() == n && warm_start->alpha_minus.size() == n) {
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::clamp(warm_start->alpha_plus[i], 0.0, config.C);
      a[i + n] = std::clamp(warm_start->alpha_minus[i], 0.0, config.C);
    }
    double imbalance = 0.0;
    for (std::size_t i = 0; i < n; ++i) imbalance += a[i] - a[i + n];
    // Infeasible after clamping (C changed): start cold.
    if (std::abs(imbalance) > 1e-12 * config.C * static_cast<double>(n)) {
      std::fill(a.begin(), a.end(), 0.0);
    }
    grad = gradient(pr, a);
  } else {
    for (std::size_t t = 0; t < pr.l(); ++t) grad[t] = pr.p(t);
  }

  SvrModel model;
  const double C = config.C;
  while (true) {
    const Violation v = select_working_set(pr, a, grad);
    model.kkt_gap = std::max(0.0, v.gap);
    if (v.gap < config.tolerance) {
      model.converged = true;
      break;
    }
    if (model.iterations >= config.max_iterations) break;
    ++model.iterations;

    const std::size_t i = v.i, j = v.j;
    const double qii = pr.q(i, i), qjj = pr.q(j, j), qij = pr.q(i, j);
    const double old_i = a[i], old_j = a[j];

    if (pr.z(i) != pr.z(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) {
        if (quad < 0.0 && pr.point(i) != pr.point(j)) model.nonconvex = true;
        quad = kTau;
      }
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) { a[j] = 0; a[i] = diff; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = -diff; }
      }
      if (diff > 0) {
        if (a[i] > C) { a[i] = C; a[j] = C - diff; }
      } else {
        if (a[j] > C) { a[j] = C; a[i] = C + diff; }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) {
        if (quad < 0.0 && pr.point(i) != pr.point(j)) model.nonconvex = true;
        quad = kTau;
      }
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) { a[i] = C; a[j] = sum - C; }
      } else {
        if (a[j] < 0) { a[j] = 0; a[i] = sum; }
      }
      if (sum > C) {
        if (a[j] > C) { a[j] = C; a[i] = sum - C; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = sum; }
      }
    }

    // Change of theta at the two underlying points, pushed through K.
    const double ui = pr.z(i) * (a[i] - old_i), uj = pr.z(j) * (a[j] - old_j);
    const auto row_i = kernel.row(pr.point(i));
    const auto row_j = kernel.row(pr.point(j));
    for (std::size_t t = 0; t < n; ++t) {
      const double change = row_i[t] * ui + row_j[t] * uj;
      grad[t] += change;
      grad[t + n] -= change;
    }
  }

  // a+_i a-_i = 0 at the optimum; removing the common part leaves theta and the
  // gradient unchanged and can only shrink the violation.
  for (std::size_t i = 0; i < n; ++i) {
    const double common = std::min(a[i], a[i + n]);
    if (common > 0.0) {
      a[i] -= common;
      a[i + n] -= common;
    }
  }

  model.alpha_plus.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
  model.alpha_minus.assign(a.begin() + static_cast<std::ptrdiff_t>(n), a.end());
  model.theta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    model.theta[i] = model.alpha_plus[i] - model.alpha_minus[i];
    if (model.theta[i] != 0.0) model.support.push_back(i);
  }
  model.bias = bias_from(pr, a, grad);
  model.kkt_gap = std::max(0.0, max_violating_pair(pr, a, grad).gap);
  model.objective =
      svr_dual_objective(kernel, labels, model.alpha_plus, model.alpha_minus, config.epsilon);
  return model;
}

double svr_predict(const SvrModel& model, std::span<const double> kernel_row) {
  if (kernel_row.size() != model.theta.size()) {
    throw ValidationError("kernel row has " + std::to_string(kernel_row.size()) +
                          " entries, model expects " + std::to_string(model.theta.size()));
  }
  double sum = model.bias;
  for (std::size_t i : model.support) sum += model.theta[i] * kernel_row[i];
  return sum;
}

double svr_dual_objective(const GramMatrix& kernel, std::span<const double> labels,
                          std::span<const double> alpha_plus, std::span<const double> alpha_minus,
                          double epsilon) {
  const std::size_t n = labels.size();
  if (kernel.size() != n || alpha_plus.size() != n || alpha_minus.size() != n) {
    throw ValidationError("dual objective size mismatch");
  }
  double linear = 0.0, quadratic = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = alpha_plus[i] - alpha_minus[i];
    linear += labels[i] * ti - epsilon * (alpha_plus[i] + alpha_minus[i]);
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += kernel(i, j) * (alpha_plus[j] - alpha_minus[j]);
    quadratic += ti * row;
  }
  return linear - 0.5 * quadratic;
}

double svr_kkt_violation(const GramMatrix& kernel, std::span<const double> labels,
                         std::span<const double> alpha_plus, std::span<const double> alpha_minus,
                         const SvrConfig& config) {
  const std::size_t n = labels.size();
  if (kernel.size() != n || alpha_plus.size() != n || alpha_minus.size() != n) {
    throw ValidationError("KKT check size mismatch");
  }
  const Problem pr{kernel, labels, config.C, config.epsilon};
  std::vector<double> a(alpha_plus.begin(), alpha_plus.end());
  a.insert(a.end(), alpha_minus.begin(), alpha_minus.end());
  return std::max(0.0, max_violating_pair(pr, a, gradient(pr, a)).gap);
}

}  // namespace cgak
