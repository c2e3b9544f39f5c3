#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "cgak/divergence.hpp"
#include "cgak/records.hpp"

namespace cgak {

using FeatureSpan = std::span<const FeatureVector>;

enum class KernelKind { gak, dtw, ndtw, gdtw };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view text);

// Whether Grams of this kind are guaranteed positive semidefinite.
constexpr bool is_psd_kernel(KernelKind kind) { return kind == KernelKind::gak; }

// Kernel configuration for one channel. `sigma` is the local-kernel bandwidth
// for gak and the Gaussian bandwidth for gdtw; dtw and ndtw ignore it.
struct KernelSpec {
  KernelKind kind = KernelKind::gak;
  DivergenceKind divergence = DivergenceKind::sq_euclidean;
  double sigma = 10.0;

  LocalKernelParams local() const { return {sigma, divergence}; }
  void validate() const;
};

// Monotone index path. Indices are 0-based here.
struct Alignment {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;

  std::size_t length() const { return first.size(); }
};

enum class GakDomain {
  automatic,  // log domain when any local log-similarity < -500
  linear,
  log,
};

inline constexpr double kLogDomainThreshold = -500.0;

// Global alignment kernel: sum over all alignments of the product of local
// similarities, by the DP M(i,j) = e_ij (M(i-1,j-1) + M(i-1,j) + M(i,j-1)).
double gak(FeatureSpan x, FeatureSpan y, const LocalKernelParams& params,
           GakDomain domain = GakDomain::automatic);
double gak(const SortedSequence& x, const SortedSequence& y, const LocalKernelParams& params,
           GakDomain domain = GakDomain::automatic);

// log of the global alignment kernel, always evaluated with log-sum-exp.
double log_gak(FeatureSpan x, FeatureSpan y, const LocalKernelParams& params);

// Number of alignments between sequences of lengths m and n: D(m-1, n-1).
std::size_t count_alignments(std::size_t m, std::size_t n);

inline constexpr std::size_t kMaxEnumerationLength = 6;

// Visits every alignment between lengths m and n (each at most 6).
void for_each_alignment(std::size_t m, std::size_t n,
                        const std::function<void(const Alignment&)>& visit);

struct BruteForceGak {
  double value = 0.0;
  std::size_t alignments = 0;
};

// Reference evaluation by explicit path enumeration.
BruteForceGak gak_bruteforce(FeatureSpan x, FeatureSpan y, const LocalKernelParams& params);

// Minimum over alignments of the summed divergence.
double dtw_distance(FeatureSpan x, FeatureSpan y, DivergenceKind divergence);

// dtw: 1 / (1 + DTW); ndtw: -DTW; gdtw: exp(-DTW / (2 sigma^2)).
double baseline_kernel_from_distance(KernelKind kind, double dtw, double sigma);
double baseline_kernel(KernelKind kind, FeatureSpan x, FeatureSpan y, const KernelSpec& spec);

// Dispatches on spec.kind.
double kernel_value(FeatureSpan x, FeatureSpan y, const KernelSpec& spec);

}  // namespace cgak
