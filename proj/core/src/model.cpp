#include "cgak/model.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <optional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cgak/error.hpp"

namespace cgak {

using nlohmann::json;

std::vector<double> KernelConfig::beta() const {
  if (strategy != CombinationStrategy::weighted_summation) return {};
  if (gating.size() != channels.size()) {
    return std::vector<double>(channels.size(), 1.0 / static_cast<double>(channels.size()));
  }
  return softmax_weights(gating);
}

void KernelConfig::validate() const {
  if (channels.empty()) throw ValidationError("kernel configuration names no channels");
  if (strategy == CombinationStrategy::single && channels.size() != 1) {
    throw ValidationError("strategy 'single' takes exactly one channel");
  }
  if (strategy != CombinationStrategy::single && channels.size() < 2) {
    throw ValidationError("combination strategies need at least two channels");
  }
  for (const auto& c : channels) c.spec.validate();
}

KernelConfig make_kernel_config(const ChannelSchema& schema, std::vector<std::string> channels,
                                KernelKind kind, CombinationStrategy strategy,
                                const double* sigma_override,
                                const DivergenceKind* divergence_override, double lambda) {
  KernelConfig config;
  config.strategy = strategy;
  config.lambda = lambda;
  for (auto& name : channels) {
    const ChannelSpec& cs = schema.at(name);
    KernelSpec spec;
    spec.kind = kind;
    spec.divergence = divergence_override ? *divergence_override : cs.divergence;
    spec.sigma = sigma_override ? *sigma_override : cs.sigma;
    if (spec.divergence == DivergenceKind::chi_square && cs.kind != ChannelKind::histogram) {
      throw ValidationError("chi_square divergence requires a histogram channel ('" + name + "')");
    }
    config.channels.push_back({std::move(name), spec});
  }
  if (strategy == CombinationStrategy::weighted_summation) {
    config.gating = GatingState::uniform(config.channels.size());
  }
  config.validate();
  return config;
}

namespace {

void check_group(const TrainedModel& model, const GroupRecord& group) {
  try {
    validate_schema({group}, model.schema);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("schema mismatch: ") + e.what());
  }
}

}  // namespace

TrainedModel train_model(const std::vector<GroupRecord>& records, const ChannelSchema& schema,
                         KernelConfig kernel, const SvrConfig& svr, const GatingOptions& gating,
                         std::size_t threads, TrainTiming* timing) {
  kernel.validate();
  svr.validate();
  validate_schema(records, schema);

  TrainedModel model;
  model.svr = svr;
  model.schema = schema;
  for (const auto& r : records) {
    model.train_ids.push_back(r.id);
    model.train_labels.push_back(r.label);
  }
  const auto hash = dataset_hash(records);

  std::vector<GramMatrix> grams;
  for (const auto& ck : kernel.channels) {
    std::vector<SortedSequence> seqs;
    seqs.reserve(records.size());
    for (const auto& r : records) seqs.push_back(sort_faces(r, ck.channel, kernel.lambda));
    const auto start = std::chrono::steady_clock::now();
    grams.push_back(gram(seqs, ck.spec, threads));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    grams.back().metadata.dataset_hash = hash;
    if (timing) {
      timing->kernel_seconds += elapsed.count();
      timing->kernel_pairs += records.size() * (records.size() + 1) / 2;
    }
    model.sequences.push_back(std::move(seqs));
  }

  std::optional<SvrModel> gated;
  if (kernel.strategy == CombinationStrategy::weighted_summation && gating.max_iterations > 0) {
    gated.emplace();
    kernel.gating = fit_gating(grams, model.train_labels, svr, gating, &*gated);
  } else if (kernel.strategy == CombinationStrategy::weighted_summation) {
    kernel.gating = fit_gating(grams, model.train_labels, svr, gating);
  }
  const GramMatrix combined = kernel.strategy == CombinationStrategy::single
                                  ? grams.front()
                                  : combine(grams, kernel.strategy, kernel.beta());
  model.kernel = std::move(kernel);
  model.solution = gated ? std::move(*gated) : svr_fit(combined, model.train_labels, svr);
  // Pairwise curvature can stay positive on an indefinite Gram.
  const bool psd_by_construction =
      std::all_of(model.kernel.channels.begin(), model.kernel.channels.end(),
                  [](const ChannelKernel& c) { return is_psd_kernel(c.spec.kind); });
  if (!psd_by_construction && !psd_check(combined).is_psd) model.solution.nonconvex = true;
  return model;
}

std::vector<double> kernel_row_for(const TrainedModel& model, const GroupRecord& group) {
  check_group(model, group);
  const auto& channels = model.kernel.channels;
  const auto beta = model.kernel.beta();
  const std::size_t n = model.size();

  std::vector<std::vector<double>> per_channel(channels.size(), std::vector<double>(n));
  for (std::size_t q = 0; q < channels.size(); ++q) {
    const SortedSequence seq = sort_faces(group, channels[q].channel, model.kernel.lambda);
    for (std::size_t i = 0; i < n; ++i) {
      per_channel[q][i] = kernel_value(seq.features, model.sequences[q][i].features,
                                       channels[q].spec);
    }
  }
  std::vector<double> row(n);
  std::vector<double> cell(channels.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < channels.size(); ++q) cell[q] = per_channel[q][i];
    row[i] = combine_values(cell, model.kernel.strategy, beta);
  }
  return row;
}

double predict(const TrainedModel& model, const GroupRecord& group) {
  return svr_predict(model.solution, kernel_row_for(model, group));
}

namespace {

json schema_json(const ChannelSchema& schema) {
  json channels = json::array();
  for (const auto& c : schema.channels()) {
    channels.push_back({{"name", c.name},
                        {"dim", c.dim},
                        {"kind", to_string(c.kind)},
                        {"divergence", to_string(c.divergence)},
                        {"sigma", c.sigma}});
  }
  return {{"channels", channels}};
}

ChannelSchema schema_from_json(const json& j) {
  std::vector<ChannelSpec> specs;
  for (const auto& c : j.at("channels")) {
    ChannelSpec spec;
    spec.name = c.at("name").get<std::string>();
    spec.dim = c.at("dim").get<std::size_t>();
    spec.kind = parse_channel_kind(c.at("kind").get<std::string>());
    spec.divergence = parse_divergence(c.at("divergence").get<std::string>());
    spec.sigma = c.at("sigma").get<double>();
    specs.push_back(std::move(spec));
  }
  return ChannelSchema(std::move(specs));
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
  json channels = json::array();
  for (const auto& c : model.kernel.channels) {
    channels.push_back({{"channel", c.channel},
                        {"kernel", to_string(c.spec.kind)},
                        {"divergence", to_string(c.spec.divergence)},
                        {"sigma", c.spec.sigma}});
  }
  const auto& g = model.kernel.gating;
  json gating = {{"input", "constant"},
                 {"offsets", g.offsets},
                 {"beta", model.kernel.beta()},
                 {"iterations", g.iterations},
                 {"converged", g.converged},
                 {"objective_trace", g.objective_trace}};
  const auto& s = model.solution;
  json solution = {{"theta", s.theta},
                   {"alpha_plus", s.alpha_plus},
                   {"alpha_minus", s.alpha_minus},
                   {"bias", s.bias},
                   {"iterations", s.iterations},
                   {"kkt_gap", s.kkt_gap},
                   {"objective", s.objective},
                   {"converged", s.converged},
                   {"nonconvex", s.nonconvex}};
  json training = json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    json seqs = json::object();
    for (std::size_t q = 0; q < model.kernel.channels.size(); ++q) {
      const auto& seq = model.sequences[q][i];
      seqs[seq.channel] = {{"order", seq.order}, {"weights", seq.weights}, {"features", seq.features}};
    }
    training.push_back({{"id", model.train_ids[i]},
                        {"label", model.train_labels[i]},
                        {"sequences", std::move(seqs)}});
  }
  json j = {{"format", "cgak-model"},
            {"version", 1},
            {"svr",
             {{"C", model.svr.C},
              {"epsilon", model.svr.epsilon},
              {"tolerance", model.svr.tolerance},
              {"max_iterations", model.svr.max_iterations}}},
            {"lambda", model.kernel.lambda},
            {"strategy", to_string(model.kernel.strategy)},
            {"channels", std::move(channels)},
            {"gating", std::move(gating)},
            {"schema", schema_json(model.schema)},
            {"solution", std::move(solution)},
            {"training", std::move(training)}};
  out << j.dump() << '\n';
}

TrainedModel load_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "cgak-model") {
    throw ParseError("not a cgak model file");
  }
  try {
    TrainedModel model;
    const auto& svr = j.at("svr");
    model.svr.C = svr.at("C").get<double>();
    model.svr.epsilon = svr.at("epsilon").get<double>();
    model.svr.tolerance = svr.at("tolerance").get<double>();
    model.svr.max_iterations = svr.at("max_iterations").get<std::size_t>();

    model.kernel.lambda = j.at("lambda").get<double>();
    model.kernel.strategy = parse_strategy(j.at("strategy").get<std::string>());
    for (const auto& c : j.at("channels")) {
      KernelSpec spec;
      spec.kind = parse_kernel_kind(c.at("kernel").get<std::string>());
      spec.divergence = parse_divergence(c.at("divergence").get<std::string>());
      spec.sigma = c.at("sigma").get<double>();
      model.kernel.channels.push_back({c.at("channel").get<std::string>(), spec});
    }
    const auto& g = j.at("gating");
    model.kernel.gating.offsets = g.at("offsets").get<std::vector<double>>();
    model.kernel.gating.slopes.assign(model.kernel.gating.offsets.size(), {});
    model.kernel.gating.iterations = g.at("iterations").get<std::size_t>();
    model.kernel.gating.converged = g.at("converged").get<bool>();
    model.kernel.gating.objective_trace = g.at("objective_trace").get<std::vector<double>>();
    model.kernel.validate();

    model.schema = schema_from_json(j.at("schema"));

    const auto& s = j.at("solution");
    model.solution.theta = s.at("theta").get<std::vector<double>>();
    model.solution.alpha_plus = s.at("alpha_plus").get<std::vector<double>>();
    model.solution.alpha_minus = s.at("alpha_minus").get<std::vector<double>>();
    model.solution.bias = s.at("bias").get<double>();
    model.solution.iterations = s.at("iterations").get<std::size_t>();
    model.solution.kkt_gap = s.at("kkt_gap").get<double>();
    model.solution.objective = s.at("objective").get<double>();
    model.solution.converged = s.at("converged").get<bool>();
    model.solution.nonconvex = s.at("nonconvex").get<bool>();
    for (std::size_t i = 0; i < model.solution.theta.size(); ++i) {
      if (model.solution.theta[i] != 0.0) model.solution.support.push_back(i);
    }

    model.sequences.resize(model.kernel.channels.size());
    for (const auto& t : j.at("training")) {
      model.train_ids.push_back(t.at("id").get<std::string>());
      model.train_labels.push_back(t.at("label").get<double>());
      const auto& seqs = t.at("sequences");
      for (std::size_t q = 0; q < model.kernel.channels.size(); ++q) {
        const auto& name = model.kernel.channels[q].channel;
        const auto& js = seqs.at(name);
        SortedSequence seq;
        seq.group_id = model.train_ids.back();
        seq.channel = name;
        seq.order = js.at("order").get<std::vector<std::size_t>>();
        seq.weights = js.at("weights").get<std::vector<double>>();
        seq.features = js.at("features").get<std::vector<FeatureVector>>();
        model.sequences[q].push_back(std::move(seq));
      }
    }
    if (model.solution.theta.size() != model.size()) {
      throw ParseError("model has " + std::to_string(model.solution.theta.size()) +
                       " coefficients for " + std::to_string(model.size()) + " training groups");
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid model file: ") + e.what());
  }
}

}  // namespace cgak
