#include "cgak/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgak/error.hpp"

namespace cgak {

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gak: return "gak";
    case KernelKind::dtw: return "dtw";
    case KernelKind::ndtw: return "ndtw";
    case KernelKind::gdtw: return "gdtw";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "gak") return KernelKind::gak;
  if (text == "dtw") return KernelKind::dtw;
  if (text == "ndtw") return KernelKind::ndtw;
  if (text == "gdtw") return KernelKind::gdtw;
  throw ValidationError("unknown kernel kind '" + std::string(text) + "'");
}

void KernelSpec::validate() const {
  if (kind == KernelKind::gak || kind == KernelKind::gdtw) local().validate();
}

namespace {

void check_sequences(FeatureSpan x, FeatureSpan y) {
  if (x.empty() || y.empty()) throw ValidationError("empty sequence");
  const std::size_t dim = x.front().size();
  for (const auto& v : x) {
    if (v.size() != dim) throw ValidationError("dimension mismatch within sequence");
  }
  for (const auto& v : y) {
    if (v.size() != dim) throw ValidationError("dimension mismatch between sequences");
  }
}

// Row-major m x n matrix of local log-similarities.
std::vector<double> local_log_similarities(FeatureSpan x, FeatureSpan y,
                                           const LocalKernelParams& params) {
  std::vector<double> out(x.size() * y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      out[i * y.size() + j] = log_local_similarity(x[i], y[j], params);
    }
  }
  return out;
}

double gak_linear(const std::vector<double>& log_local, std::size_t m, std::size_t n) {
  // Rolling rows of the (m+1) x (n+1) table, row 0 and column 0 are borders.
  std::vector<double> prev(n + 1, 0.0), cur(n + 1, 0.0);
  prev[0] = 1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double e = std::exp(log_local[(i - 1) * n + (j - 1)]);
      cur[j] = e * (prev[j - 1] + prev[j] + cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double log_sum_exp3(double a, double b, double c) {
  const double hi = std::max({a, b, c});
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi) + std::exp(c - hi));
}

double gak_log_domain(const std::vector<double>& log_local, std::size_t m, std::size_t n) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> prev(n + 1, neg_inf), cur(n + 1, neg_inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = neg_inf;
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = log_local[(i - 1) * n + (j - 1)] + log_sum_exp3(prev[j - 1], prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

}  // namespace

double gak(FeatureSpan x, FeatureSpan y, const LocalKernelParams& params, GakDomain domain) {
  check_sequences(x, y);
  params.validate();
  const auto log_local = local_log_similarities(x, y, params);
  if (domain == GakDomain::automatic) {
    const double lowest = *std::min_element(log_local.begin(), log_local.end());
    domain = lowest < kLogDomainThreshold ? GakDomain::log : GakDomain::linear;
  }
  if (domain == GakDomain::log) return std::exp(gak_log_domain(log_local, x.size(), y.size()));
  return gak_linear(log_local, x.size(), y.size());
}

double gak(const SortedSequence& x, const SortedSequence& y, const LocalKernelParams& params,
           GakDomain domain) {
  return gak(FeatureSpan(x.features), FeatureSpan(y.features), params, domain);
}

double log_gak(FeatureSpan x, FeatureSpan y, const LocalKernelParams& params) {
  check_sequences(x, y);
  params.validate();
  return gak_log_domain(local_log_similarities(x, y, params), x.size(), y.size());
}

std::size_t count_alignments(std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) return 0;
  // D(a, b) = D(a-1, b) + D(a, b-1) + D(a-1, b-1), D(0, *) = D(*, 0) = 1.
  std::vector<std::size_t> row(n, 1);
  for (std::size_t a = 1; a < m; ++a) {
    std::size_t diag = row[0];
    for (std::size_t b = 1; b < n; ++b) {
      const std::size_t up = row[b];
      row[b] = up + row[b - 1] + diag;
      diag = up;
    }
  }
  return row[n - 1];
}

void for_each_alignment(std::size_t m, std::size_t n,
                        const std::function<void(const Alignment&)>& visit) {
  if (m == 0 || n == 0) throw ValidationError("empty sequence");
  if (m > kMaxEnumerationLength || n > kMaxEnumerationLength) {
    throw ValidationError("sequences too long for enumeration (max " +
                          std::to_string(kMaxEnumerationLength) + ")");
  }
  Alignment path;
  path.first.reserve(m + n - 1);
  path.second.reserve(m + n - 1);
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
    path.first.push_back(i);
    path.second.push_back(j);
    if (i + 1 == m && j + 1 == n) {
      visit(path);
    } else {
      if (i + 1 < m) walk(i + 1, j);
      if (j + 1 < n) walk(i, j + 1);
      if (i + 1 < m && j + 1 < n) walk(i + 1, j + 1);
    }
    path.first.pop_back();
    path.second.pop_back();
  };
  walk(0, 0);
}

BruteForceGak gak_bruteforce(FeatureSpan x, FeatureSpan y, const LocalKernelParams& params) {
  check_sequences(x, y);
  params.validate();
  BruteForceGak result;
  for_each_alignment(x.size(), y.size(), [&](const Alignment& path) {
    double product = 1.0;
    for (std::size_t p = 0; p < path.length(); ++p) {
      product *= local_similarity(x[path.first[p]], y[path.second[p]], params);
    }
    result.value += product;
    ++result.alignments;
  });
  return result;
}

double dtw_distance(FeatureSpan x, FeatureSpan y, DivergenceKind kind) {
  check_sequences(x, y);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = y.size();
  std::vector<double> prev(n + 1, inf), cur(n + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = divergence(kind, x[i - 1], y[j - 1]) + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

double baseline_kernel_from_distance(KernelKind kind, double dtw, double sigma) {
  switch (kind) {
    case KernelKind::dtw: return 1.0 / (1.0 + dtw);
    case KernelKind::ndtw: return -dtw;
    case KernelKind::gdtw: return std::exp(-dtw / (2.0 * sigma * sigma));
    case KernelKind::gak: break;
  }
  throw ValidationError("baseline_kernel does not evaluate gak");
}

double baseline_kernel(KernelKind kind, FeatureSpan x, FeatureSpan y, const KernelSpec& spec) {
  if (kind == KernelKind::gak) throw ValidationError("baseline_kernel does not evaluate gak");
  if (kind == KernelKind::gdtw) spec.local().validate();
  return baseline_kernel_from_distance(kind, dtw_distance(x, y, spec.divergence), spec.sigma);
}

double kernel_value(FeatureSpan x, FeatureSpan y, const KernelSpec& spec) {
  if (spec.kind == KernelKind::gak) return gak(x, y, spec.local());
  return baseline_kernel(spec.kind, x, y, spec);
}

}  // namespace cgak
