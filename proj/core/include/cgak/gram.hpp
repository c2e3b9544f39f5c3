#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cgak/alignment.hpp"
#include "cgak/records.hpp"

namespace cgak {

// Provenance carried alongside a Gram matrix and written into its CSV header.
struct GramMetadata {
  KernelKind kind = KernelKind::gak;
  std::string channel;
  double sigma = 0.0;
  DivergenceKind divergence = DivergenceKind::sq_euclidean;
  std::uint64_t dataset_hash = 0;
  // Set on combined Grams: "sum", "prod" or "weighted", with beta for the latter.
  std::string strategy;
  std::vector<double> beta;
};

// Dense symmetric N x N matrix, row-major.
class GramMatrix {
 public:
  GramMatrix() = default;
  explicit GramMatrix(std::size_t n, double fill = 0.0) : n_(n), values_(n * n, fill) {}
  GramMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }
  const std::vector<double>& values() const { return values_; }

  GramMatrix principal_submatrix(std::span<const std::size_t> indices) const;

  // max |G_ij - G_ji| <= tol * max |G_ij|
  bool is_symmetric(double tol = 1e-12) const;

  GramMetadata metadata;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

// G[i][j] = kernel(X_i, X_j). Only the upper triangle is evaluated and mirrored.
// Cells are independent, so the result is identical for any thread count.
GramMatrix gram(std::span<const SortedSequence> sequences, const KernelSpec& spec,
                std::size_t threads = 1);

// out[i][j] = kernel(rows_i, cols_j), e.g. test groups against training groups.
std::vector<std::vector<double>> cross_kernel_rows(std::span<const SortedSequence> rows,
                                                   std::span<const SortedSequence> cols,
                                                   const KernelSpec& spec,
                                                   std::size_t threads = 1);

struct PsdReport {
  bool is_psd = false;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

// Symmetric eigen-decomposition; PSD when min eigenvalue >= -tol * max(|eig|).
PsdReport psd_check(const GramMatrix& g, double tol = 1e-8);

// CSV with one leading "# key=value ..." metadata line.
void write_gram_csv(std::ostream& out, const GramMatrix& g);
GramMatrix read_gram_csv(std::istream& in);

}  // namespace cgak
