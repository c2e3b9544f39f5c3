#pragma once

#include <span>
#include <string>
#include <string_view>

namespace cgak {

enum class DivergenceKind { sq_euclidean, chi_square };

std::string_view to_string(DivergenceKind kind);
DivergenceKind parse_divergence(std::string_view text);

// Parameters of the local similarity exp(-phi_sigma).
struct LocalKernelParams {
  double sigma = 10.0;
  DivergenceKind divergence = DivergenceKind::sq_euclidean;

  // Throws ValidationError unless sigma is finite and positive.
  void validate() const;
};

// sum_k (f_k - g_k)^2
double sq_euclidean(std::span<const double> f, std::span<const double> g);

// sum_k (f_k - g_k)^2 / (f_k + g_k). Bins that are empty in both histograms
// contribute 0. Negative bins are rejected.
double chi_square(std::span<const double> f, std::span<const double> g);

double divergence(DivergenceKind kind, std::span<const double> f, std::span<const double> g);

// exp(-phi_sigma(d)) = kappa / (2 - kappa) with kappa = exp(-d / (2 sigma^2)).
double local_similarity_from_divergence(double d, double sigma);

// -phi_sigma(d), evaluated without forming kappa / (2 - kappa) so that it stays
// finite for arbitrarily large d.
double log_local_similarity_from_divergence(double d, double sigma);

double local_similarity(std::span<const double> f, std::span<const double> g,
                        const LocalKernelParams& params);
double log_local_similarity(std::span<const double> f, std::span<const double> g,
                            const LocalKernelParams& params);

}  // namespace cgak
