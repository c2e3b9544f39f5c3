#include "cgak/gram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "cgak/error.hpp"

namespace cgak {

GramMatrix::GramMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (values_.size() != n * n) throw ValidationError("gram values do not form an n x n matrix");
}

GramMatrix GramMatrix::principal_submatrix(std::span<const std::size_t> indices) const {
  GramMatrix out(indices.size());
  for (std::size_t a = 0; a < indices.size(); ++a) {
    for (std::size_t b = 0; b < indices.size(); ++b) out(a, b) = (*this)(indices[a], indices[b]);
  }
  out.metadata = metadata;
  return out;
}

bool GramMatrix::is_symmetric(double tol) const {
  double scale = 0.0;
  for (double v : values_) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (std::abs((*this)(i, j) - (*this)(j, i)) > tol * scale) return false;
    }
  }
  return true;
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

GramMetadata metadata_for(std::span<const SortedSequence> seqs, const KernelSpec& spec) {
  GramMetadata md;
  md.kind = spec.kind;
  md.sigma = spec.sigma;
  md.divergence = spec.divergence;
  if (!seqs.empty()) md.channel = seqs.front().channel;
  return md;
}

void check_channel(std::span<const SortedSequence> seqs, const std::string& channel) {
  for (const auto& s : seqs) {
    if (s.channel != channel) {
      throw ValidationError("sequences mix channels '" + channel + "' and '" + s.channel + "'");
    }
  }
}

}  // namespace

GramMatrix gram(std::span<const SortedSequence> sequences, const KernelSpec& spec,
                std::size_t threads) {
  spec.validate();
  const std::size_t n = sequences.size();
  GramMatrix g(n);
  g.metadata = metadata_for(sequences, spec);
  check_channel(sequences, g.metadata.channel);

  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = i; j < n; ++j) {
      g(i, j) = kernel_value(sequences[i].features, sequences[j].features, spec);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  }
  return g;
}

std::vector<std::vector<double>> cross_kernel_rows(std::span<const SortedSequence> rows,
                                                   std::span<const SortedSequence> cols,
                                                   const KernelSpec& spec, std::size_t threads) {
  spec.validate();
  if (!cols.empty()) {
    check_channel(rows, cols.front().channel);
    check_channel(cols, cols.front().channel);
  }
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(cols.size()));
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out[i][j] = kernel_value(rows[i].features, cols[j].features, spec);
    }
  });
  return out;
}

PsdReport psd_check(const GramMatrix& g, double tol) {
  if (!g.is_symmetric(1e-12)) throw ValidationError("psd_check requires a symmetric matrix");
  const auto n = static_cast<Eigen::Index>(g.size());
  PsdReport report;
  if (n == 0) {
    report.is_psd = true;
    return report;
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      g.values().data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("eigen-decomposition failed");
  const auto& eig = solver.eigenvalues();
  report.min_eigenvalue = eig.minCoeff();
  report.max_eigenvalue = eig.maxCoeff();
  const double scale = std::max(std::abs(report.min_eigenvalue), std::abs(report.max_eigenvalue));
  report.is_psd = report.min_eigenvalue >= -tol * scale;
  return report;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_gram_csv(std::ostream& out, const GramMatrix& g) {
  const auto& md = g.metadata;
  out << "# kernel=" << to_string(md.kind) << " channel=" << md.channel
      << " sigma=" << format_double(md.sigma) << " divergence=" << to_string(md.divergence)
      << " dataset=" << hash_to_hex(md.dataset_hash) << " n=" << g.size();
  if (!md.strategy.empty()) out << " strategy=" << md.strategy;
  if (!md.beta.empty()) {
    out << " beta=";
    for (std::size_t q = 0; q < md.beta.size(); ++q) out << (q ? ";" : "") << format_double(md.beta[q]);
  }
  out << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) out << (j ? "," : "") << format_double(g(i, j));
    out << '\n';
  }
}

GramMatrix read_gram_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0) {
    throw ParseError("gram CSV must start with a '# ' metadata line", 1);
  }
  GramMetadata md;
  std::size_t n = 0;
  bool have_n = false;
  std::istringstream fields(header.substr(2));
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("bad metadata field '" + field + "'", 1);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "kernel") md.kind = parse_kernel_kind(value);
    else if (key == "channel") md.channel = value;
    else if (key == "sigma") md.sigma = std::stod(value);
    else if (key == "divergence") md.divergence = parse_divergence(value);
    else if (key == "dataset") md.dataset_hash = hash_from_hex(value);
    else if (key == "n") { n = std::stoul(value); have_n = true; }
    else if (key == "strategy") md.strategy = value;
    else if (key == "beta") {
      std::istringstream parts(value);
      std::string part;
      while (std::getline(parts, part, ';')) md.beta.push_back(std::stod(part));
    }
  }
  if (!have_n) throw ParseError("gram metadata lacks n", 1);

  std::vector<double> values;
  values.reserve(n * n);
  std::string line;
  std::size_t line_number = 1;
  while (values.size() < n * n && std::getline(in, line)) {
    ++line_number;
    if (line.rfind("#", 0) == 0) continue;
    std::istringstream cells(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("bad gram cell '" + cell + "'", line_number);
      }
      ++count;
    }
    if (count != n) throw ParseError("gram row has " + std::to_string(count) + " cells", line_number);
  }
  if (values.size() != n * n) throw ParseError("gram CSV has too few rows");
  GramMatrix g(n, std::move(values));
  g.metadata = std::move(md);
  return g;
}

}  // namespace cgak
