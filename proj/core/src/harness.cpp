#include "cgak/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "cgak/error.hpp"

namespace cgak {

using nlohmann::json;

double mae(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.size() != labels.size()) throw ValidationError("mae: length mismatch");
  if (predictions.empty()) throw ValidationError("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - labels[i]);
  return sum / static_cast<double>(predictions.size());
}

CvPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("need at least 2 folds");
  if (n < k) {
    throw ValidationError("cannot split " + std::to_string(n) + " groups into " +
                          std::to_string(k) + " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  CvPlan plan;
  plan.folds = k;
  plan.seed = seed;
  plan.test.resize(k);
  plan.train.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t begin = f * n / k, end = (f + 1) * n / k;
    plan.test[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                        perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(plan.test[f].begin(), plan.test[f].end());
    std::vector<bool> in_test(n, false);
    for (std::size_t i : plan.test[f]) in_test[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_test[i]) plan.train[f].push_back(i);
    }
  }
  return plan;
}

void SynthSpec::validate() const {
  if (groups < 1) throw ValidationError("synth: groups must be >= 1");
  if (min_faces < 1 || max_faces < min_faces) throw ValidationError("synth: invalid face-count range");
  if (hist_dim < 2 || embed_dim < 1) throw ValidationError("synth: invalid channel dims");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("synth: noise must be >= 0");
  if (!(label_max > label_min)) throw ValidationError("synth: invalid label range");
  if (!(face_spread >= 0.0)) throw ValidationError("synth: face_spread must be >= 0");
}

namespace {

constexpr double kImageWidth = 1024.0;
constexpr double kImageHeight = 768.0;
constexpr double kMinNoseSeparation = 30.0;
constexpr std::uint64_t kEmbeddingSeed = 0x9e3779b97f4a7c15ULL;

struct Embedding {
  std::vector<double> frequency;
  std::vector<double> phase;
};

// The feature map is fixed across datasets so that sets drawn with different
// seeds remain comparable.
Embedding make_embedding(std::size_t dim) {
  std::mt19937_64 rng(kEmbeddingSeed);
  std::uniform_real_distribution<double> freq(0.3, 0.9);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Embedding e;
  for (std::size_t c = 0; c < dim; ++c) {
    e.frequency.push_back(freq(rng));
    e.phase.push_back(phase(rng));
  }
  return e;
}

FeatureVector soft_histogram(double latent, const SynthSpec& spec) {
  const std::size_t bins = spec.hist_dim;
  const double spacing = (spec.label_max - spec.label_min) / static_cast<double>(bins - 1);
  const double width = 4.0 * spacing;
  FeatureVector h(bins);
  double sum = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double center = spec.label_min + spacing * static_cast<double>(b);
    const double z = (latent - center) / width;
    h[b] = std::exp(-0.5 * z * z);
    sum += h[b];
  }
  for (auto& v : h) v /= sum;
  return h;
}

}  // namespace

std::vector<GroupRecord> synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Embedding embedding = make_embedding(spec.embed_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> face_count(spec.min_faces, spec.max_faces);

  const double range = spec.label_max - spec.label_min;
  const double margin = 0.1 * range;

  std::vector<GroupRecord> records;
  records.reserve(spec.groups);
  for (std::size_t g = 0; g < spec.groups; ++g) {
    GroupRecord record;
    char id[32];
    std::snprintf(id, sizeof id, "g%05zu", g);
    record.id = id;

    const double mood = spec.label_min + margin + (range - 2.0 * margin) * unit(rng);
    const std::size_t m = face_count(rng);
    double latent_sum = 0.0;
    std::vector<Point2> noses;
    for (std::size_t k = 0; k < m; ++k) {
      const double latent = std::clamp(mood + spec.face_spread * (2.0 * unit(rng) - 1.0),
                                       spec.label_min, spec.label_max);
      latent_sum += latent;

      Point2 nose;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        nose = {60.0 + (kImageWidth - 120.0) * unit(rng), 60.0 + (kImageHeight - 120.0) * unit(rng)};
        const bool clear = std::all_of(noses.begin(), noses.end(), [&](Point2 p) {
          return distance(p, nose) >= kMinNoseSeparation;
        });
        if (clear) break;
      }
      noses.push_back(nose);

      FaceRecord face;
      const double eyes = 20.0 + 40.0 * unit(rng);
      const double tilt = 0.3 * (2.0 * unit(rng) - 1.0);
      const double dx = 0.5 * eyes * std::cos(tilt), dy = 0.5 * eyes * std::sin(tilt);
      const Point2 mid{nose.x, nose.y - 0.4 * eyes};
      face.left_eye = {mid.x - dx, mid.y - dy};
      face.right_eye = {mid.x + dx, mid.y + dy};
      face.nose_tip = nose;

      FeatureVector hist = soft_histogram(latent, spec);
      if (spec.noise > 0.0) {
        double sum = 0.0;
        for (auto& v : hist) {
          v = std::max(0.0, v + 0.05 * spec.noise * gauss(rng));
          sum += v;
        }
        if (sum > 0.0) {
          for (auto& v : hist) v /= sum;
        }
      }
      FeatureVector embed(spec.embed_dim);
      for (std::size_t c = 0; c < spec.embed_dim; ++c) {
        embed[c] = std::sin(embedding.frequency[c] * latent + embedding.phase[c]);
        if (spec.noise > 0.0) embed[c] += 0.1 * spec.noise * gauss(rng);
      }
      face.channels.emplace("hist", std::move(hist));
      face.channels.emplace("embed", std::move(embed));
      record.faces.push_back(std::move(face));
    }
    record.label = latent_sum / static_cast<double>(m);
    records.push_back(std::move(record));
  }
  return records;
}

ChannelSchema synth_schema(const SynthSpec& spec) {
  ChannelSpec hist{"hist", spec.hist_dim, ChannelKind::histogram, DivergenceKind::chi_square, 4.0};
  ChannelSpec embed{"embed", spec.embed_dim, ChannelKind::embedding, DivergenceKind::sq_euclidean,
                    8.0};
  return ChannelSchema({embed, hist});
}

ExperimentConfig parse_experiment_config(std::istream& in, std::string* dataset_path,
                                         std::string* schema_path) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed experiment config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("experiment config must be an object");
  ExperimentConfig c;
  try {
    if (dataset_path && j.contains("dataset")) *dataset_path = j.at("dataset").get<std::string>();
    if (schema_path && j.contains("schema")) *schema_path = j.at("schema").get<std::string>();
    if (j.contains("channels")) c.channels = j.at("channels").get<std::vector<std::string>>();
    if (j.contains("kernel")) c.kernel = parse_kernel_kind(j.at("kernel").get<std::string>());
    if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
    if (j.contains("divergence")) {
      c.divergence = parse_divergence(j.at("divergence").get<std::string>());
    }
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("C")) c.svr.C = j.at("C").get<double>();
    if (j.contains("epsilon")) c.svr.epsilon = j.at("epsilon").get<double>();
    if (j.contains("tolerance")) c.svr.tolerance = j.at("tolerance").get<double>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("folds")) c.folds = j.at("folds").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid experiment config: ") + e.what());
  }
  return c;
}

EvalReport run_experiment(const std::vector<GroupRecord>& dataset, const ChannelSchema& schema,
                          const ExperimentConfig& config) {
  EvalReport report;
  report.config = config;
  report.channels = config.channels;
  if (report.channels.empty()) {
    for (const auto& c : schema.channels()) report.channels.push_back(c.name);
  }
  const double* sigma = config.sigma ? &*config.sigma : nullptr;
  const DivergenceKind* divergence = config.divergence ? &*config.divergence : nullptr;
  const KernelConfig kernel = make_kernel_config(schema, report.channels, config.kernel,
                                                 config.strategy, sigma, divergence, config.lambda);
  validate_schema(dataset, schema);

  const CvPlan plan = make_folds(dataset.size(), config.folds, config.seed);
  std::size_t total_pairs = 0;
  double total_seconds = 0.0;
  for (std::size_t f = 0; f < plan.folds; ++f) {
    FoldReport fold;
    fold.fold = f;
    fold.train_indices = plan.train[f];
    fold.test_indices = plan.test[f];

    std::vector<GroupRecord> train;
    train.reserve(fold.train_indices.size());
    for (std::size_t i : fold.train_indices) train.push_back(dataset[i]);

    TrainTiming timing;
    const TrainedModel model =
        train_model(train, schema, kernel, config.svr, config.gating, config.threads, &timing);

    std::vector<double> labels;
    fold.predictions.resize(fold.test_indices.size());
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < fold.test_indices.size(); ++t) {
      const GroupRecord& group = dataset[fold.test_indices[t]];
      fold.predictions[t] = predict(model, group);
      labels.push_back(group.label);
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    timing.kernel_seconds += elapsed.count();
    timing.kernel_pairs += fold.test_indices.size() * model.size() * kernel.channels.size();

    fold.mae = mae(fold.predictions, labels);
    fold.beta = model.kernel.beta();
    fold.gating_iterations = model.kernel.gating.iterations;
    fold.svr_converged = model.solution.converged;
    fold.svr_nonconvex = model.solution.nonconvex;
    fold.support_vectors = model.solution.support.size();
    fold.kernel_ms_per_pair =
        timing.kernel_pairs ? 1e3 * timing.kernel_seconds / static_cast<double>(timing.kernel_pairs)
                            : 0.0;
    total_pairs += timing.kernel_pairs;
    total_seconds += timing.kernel_seconds;
    report.folds.push_back(std::move(fold));
  }

  double sum = 0.0;
  for (const auto& fold : report.folds) sum += fold.mae;
  report.mean_mae = sum / static_cast<double>(report.folds.size());
  report.kernel_ms_per_pair =
      total_pairs ? 1e3 * total_seconds / static_cast<double>(total_pairs) : 0.0;
  return report;
}

json report_to_json(const EvalReport& report, bool include_timing) {
  const auto& c = report.config;
  json config = {{"channels", report.channels},
                 {"kernel", to_string(c.kernel)},
                 {"strategy", to_string(c.strategy)},
                 {"C", c.svr.C},
                 {"epsilon", c.svr.epsilon},
                 {"lambda", c.lambda},
                 {"folds", c.folds},
                 {"seed", c.seed}};
  if (c.sigma) config["sigma"] = *c.sigma;
  if (c.divergence) config["divergence"] = to_string(*c.divergence);

  json folds = json::array();
  for (const auto& f : report.folds) {
    json jf = {{"fold", f.fold},
               {"train_size", f.train_indices.size()},
               {"test_indices", f.test_indices},
               {"predictions", f.predictions},
               {"mae", f.mae},
               {"support_vectors", f.support_vectors},
               {"svr_converged", f.svr_converged},
               {"svr_nonconvex", f.svr_nonconvex}};
    if (!f.beta.empty()) {
      jf["beta"] = f.beta;
      jf["gating_iterations"] = f.gating_iterations;
    }
    if (include_timing) jf["kernel_ms_per_pair"] = f.kernel_ms_per_pair;
    folds.push_back(std::move(jf));
  }
  json fold_mae = json::array();
  for (const auto& f : report.folds) fold_mae.push_back(f.mae);

  json j = {{"config", std::move(config)},
            {"fold_mae", std::move(fold_mae)},
            {"mean_mae", report.mean_mae},
            {"folds", std::move(folds)}};
  if (include_timing) j["kernel_ms_per_pair"] = report.kernel_ms_per_pair;
  return j;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  const auto& c = report.config;
  char line[160];
  std::string channels;
  for (const auto& name : report.channels) channels += (channels.empty() ? "" : "+") + name;
  out << "kernel=" << to_string(c.kernel) << " strategy=" << to_string(c.strategy)
      << " channels=" << channels << " C=" << c.svr.C << " epsilon=" << c.svr.epsilon
      << " lambda=" << c.lambda << " seed=" << c.seed << '\n';
  out << "fold  train  test     MAE      beta\n";
  for (const auto& f : report.folds) {
    std::snprintf(line, sizeof line, "%4zu  %5zu  %4zu  %8.4f  ", f.fold, f.train_indices.size(),
                  f.test_indices.size(), f.mae);
    out << line;
    if (f.beta.empty()) out << '-';
    for (std::size_t q = 0; q < f.beta.size(); ++q) {
      std::snprintf(line, sizeof line, "%s%.4f", q ? "/" : "", f.beta[q]);
      out << line;
    }
    out << '\n';
  }
  std::snprintf(line, sizeof line, "mean MAE %.4f  (%.4f ms per kernel pair)\n", report.mean_mae,
                report.kernel_ms_per_pair);
  out << line;
}

}  // namespace cgak
