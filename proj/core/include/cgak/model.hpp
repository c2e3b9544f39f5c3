#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgak/combination.hpp"
#include "cgak/geometry.hpp"
#include "cgak/records.hpp"
#include "cgak/svr.hpp"

namespace cgak {

struct ChannelKernel {
  std::string channel;
  KernelSpec spec;
};

// Everything needed to turn a group into a kernel row against the training set.
struct KernelConfig {
  std::vector<ChannelKernel> channels;
  CombinationStrategy strategy = CombinationStrategy::single;
  GatingState gating;  // weighted_summation only
  double lambda = kDefaultLambda;

  // Combination weights for weighted_summation, empty otherwise.
  std::vector<double> beta() const;
  void validate() const;
};

// Builds a kernel configuration for `channels`, taking divergence and sigma
// from the schema unless overridden.
KernelConfig make_kernel_config(const ChannelSchema& schema, std::vector<std::string> channels,
                                KernelKind kind, CombinationStrategy strategy,
                                const double* sigma_override = nullptr,
                                const DivergenceKind* divergence_override = nullptr,
                                double lambda = kDefaultLambda);

struct TrainedModel {
  SvrConfig svr;
  KernelConfig kernel;
  ChannelSchema schema;
  SvrModel solution;
  std::vector<std::string> train_ids;
  std::vector<double> train_labels;
  // sequences[q][i]: training group i sorted for channel q of kernel.channels.
  std::vector<std::vector<SortedSequence>> sequences;

  std::size_t size() const { return train_ids.size(); }
};

struct TrainTiming {
  std::size_t kernel_pairs = 0;
  double kernel_seconds = 0.0;
};

// Sorts every group per channel, builds the Gram(s), fits the gate when the
// strategy is weighted summation, then fits the SVR on the combined Gram.
TrainedModel train_model(const std::vector<GroupRecord>& records, const ChannelSchema& schema,
                         KernelConfig kernel, const SvrConfig& svr,
                         const GatingOptions& gating = {}, std::size_t threads = 1,
                         TrainTiming* timing = nullptr);

// Combined kernel values between `group` and every training group.
std::vector<double> kernel_row_for(const TrainedModel& model, const GroupRecord& group);

double predict(const TrainedModel& model, const GroupRecord& group);

void save_model(std::ostream& out, const TrainedModel& model);
TrainedModel load_model(std::istream& in);

}  // namespace cgak
