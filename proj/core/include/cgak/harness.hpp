#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cgak/model.hpp"

namespace cgak {

double mae(std::span<const double> predictions, std::span<const double> labels);

// Seeded k-fold split. test[f] is fold f; train[f] is everything else, in
// ascending index order.
struct CvPlan {
  std::size_t folds = 4;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> train;
  std::vector<std::vector<std::size_t>> test;
};

CvPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Parameters of the synthetic group-intensity generator.
//
// Each group draws a mood in [label_min + margin, label_max - margin]; each face
// draws a latent expression around that mood. The label is the mean latent
// expression. Channel "hist" encodes a face's latent as a normalised soft
// histogram, channel "embed" as a fixed smooth nonlinear embedding. Feature noise
// (scaled by `noise`) is independent per channel, so the channels complement
// each other once noise is present.
struct SynthSpec {
  std::size_t groups = 200;
  std::size_t min_faces = 2;
  std::size_t max_faces = 8;
  std::size_t hist_dim = 16;
  std::size_t embed_dim = 8;
  double noise = 0.0;
  double label_min = 0.0;
  double label_max = 5.0;
  double face_spread = 0.2;  // latent expression jitter around the group mood

  void validate() const;
};

std::vector<GroupRecord> synth_dataset(const SynthSpec& spec, std::uint64_t seed);

// Schema matching synth_dataset output, with bandwidths suited to its feature scale.
ChannelSchema synth_schema(const SynthSpec& spec);

struct ExperimentConfig {
  std::vector<std::string> channels;  // empty: every schema channel
  KernelKind kernel = KernelKind::gak;
  std::optional<double> sigma;                 // overrides the schema per channel
  std::optional<DivergenceKind> divergence;    // idem
  CombinationStrategy strategy = CombinationStrategy::single;
  SvrConfig svr;
  GatingOptions gating;
  double lambda = kDefaultLambda;
  std::size_t folds = 4;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Reads an experiment config document. Returns the config and fills the dataset
// and schema paths when present.
ExperimentConfig parse_experiment_config(std::istream& in, std::string* dataset_path = nullptr,
                                         std::string* schema_path = nullptr);

struct FoldReport {
  std::size_t fold = 0;
  std::vector<std::size_t> train_indices;  // groups that entered Gram construction
  std::vector<std::size_t> test_indices;
  std::vector<double> predictions;         // aligned with test_indices
  double mae = 0.0;
  std::vector<double> beta;
  std::size_t gating_iterations = 0;
  bool svr_converged = false;
  bool svr_nonconvex = false;
  std::size_t support_vectors = 0;
  // Timing, excluded from determinism comparisons.
  double kernel_ms_per_pair = 0.0;
};

struct EvalReport {
  ExperimentConfig config;
  std::vector<std::string> channels;
  std::vector<FoldReport> folds;
  double mean_mae = 0.0;
  double kernel_ms_per_pair = 0.0;
};

EvalReport run_experiment(const std::vector<GroupRecord>& dataset, const ChannelSchema& schema,
                          const ExperimentConfig& config);

// Structured report. Timing fields are omitted when include_timing is false.
nlohmann::json report_to_json(const EvalReport& report, bool include_timing = true);

void write_report_table(std::ostream& out, const EvalReport& report);

}  // namespace cgak
