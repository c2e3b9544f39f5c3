#include "cgak/divergence.hpp"

#include <cmath>

#include "cgak/error.hpp"

namespace cgak {

std::string_view to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::sq_euclidean: return "sq_euclidean";
    case DivergenceKind::chi_square: return "chi_square";
  }
  return "unknown";
}

DivergenceKind parse_divergence(std::string_view text) {
  if (text == "sq_euclidean") return DivergenceKind::sq_euclidean;
  if (text == "chi_square") return DivergenceKind::chi_square;
  throw ValidationError("unknown divergence '" + std::string(text) + "'");
}

void LocalKernelParams::validate() const {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw ValidationError("sigma must be finite and positive, got " + std::to_string(sigma));
  }
}

namespace {

void check_dims(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(f.size()) + " vs " +
                          std::to_string(g.size()));
  }
}

}  // namespace

double sq_euclidean(std::span<const double> f, std::span<const double> g) {
  check_dims(f, g);
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double diff = f[k] - g[k];
    sum += diff * diff;
  }
  return sum;
}

double chi_square(std::span<const double> f, std::span<const double> g) {
  check_dims(f, g);
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] < 0.0 || g[k] < 0.0) {
      throw ValidationError("chi-square requires non-negative bins (bin " + std::to_string(k) +
                            ")");
    }
    const double denom = f[k] + g[k];
    if (denom == 0.0) continue;
    const double diff = f[k] - g[k];
    sum += diff * diff / denom;
  }
  return sum;
}

double divergence(DivergenceKind kind, std::span<const double> f, std::span<const double> g) {
  switch (kind) {
    case DivergenceKind::sq_euclidean: return sq_euclidean(f, g);
    case DivergenceKind::chi_square: return chi_square(f, g);
  }
  throw ValidationError("unknown divergence kind");
}

double local_similarity_from_divergence(double d, double sigma) {
  const double kappa = std::exp(-d / (2.0 * sigma * sigma));
  return kappa / (2.0 - kappa);
}

double log_local_similarity_from_divergence(double d, double sigma) {
  const double u = d / (2.0 * sigma * sigma);
  // log(2 - kappa) = log1p(1 - kappa) and 1 - kappa = -expm1(-u)
  return -u - std::log1p(-std::expm1(-u));
}

double local_similarity(std::span<const double> f, std::span<const double> g,
                        const LocalKernelParams& params) {
  return local_similarity_from_divergence(divergence(params.divergence, f, g), params.sigma);
}

double log_local_similarity(std::span<const double> f, std::span<const double> g,
                            const LocalKernelParams& params) {
  return log_local_similarity_from_divergence(divergence(params.divergence, f, g),
                                              params.sigma);
}

}  // namespace cgak
