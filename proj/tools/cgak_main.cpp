// cgak: group-level intensity estimation with alignment kernels over
// weight-sorted face sets.
//
//   cgak synth    --seed 7 --out data.jsonl --schema-out schema.json
//   cgak validate --data data.jsonl
//   cgak sort     --data data.jsonl --channel hist
//   cgak gram     --data data.jsonl --channel hist --kernel gak --check-psd
//   cgak train    --data data.jsonl --channel hist --channel embed --strategy weighted --out model.json
//   cgak predict  --model model.json --data test.jsonl
//   cgak evaluate --data data.jsonl --seed 1 --strategy sum

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cgak/combination.hpp"
#include "cgak/error.hpp"
#include "cgak/geometry.hpp"
#include "cgak/gram.hpp"
#include "cgak/harness.hpp"
#include "cgak/model.hpp"
#include "cgak/records.hpp"

namespace {

constexpr int kExitParse = 1;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

struct DataArgs {
  std::string data;
  std::string schema;
};

struct KernelArgs {
  std::vector<std::string> channels;
  std::string kernel = "gak";
  std::optional<double> sigma;
  std::optional<std::string> divergence;
  std::string strategy;
  double lambda = cgak::kDefaultLambda;
};

struct SvrArgs {
  double C = 1.0;
  double epsilon = 0.1;
  double tolerance = 1e-6;
  std::size_t max_iterations = 10'000'000;
};

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw cgak::ParseError("cannot open output '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Dataset {
  std::vector<cgak::GroupRecord> records;
  cgak::ChannelSchema schema;
};

Dataset load_dataset(const DataArgs& args) {
  Dataset d;
  if (!args.schema.empty()) {
    d.schema = cgak::load_schema(args.schema);
    d.records = cgak::load_group_records(args.data, &d.schema);
    cgak::validate_schema(d.records, d.schema);
  } else {
    d.records = cgak::load_group_records(args.data);
    d.schema = cgak::validate_schema(d.records);
  }
  return d;
}

void add_data_options(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.data, "Line-delimited group records")->required();
  cmd->add_option("--schema", args.schema, "Channel schema sidecar (inferred when absent)");
}

void add_kernel_options(CLI::App* cmd, KernelArgs& args, bool many_channels) {
  auto* channel = cmd->add_option("--channel", args.channels, "Feature channel");
  if (!many_channels) channel->expected(1);
  cmd->add_option("--kernel", args.kernel, "gak|dtw|ndtw|gdtw")
      ->check(CLI::IsMember({"gak", "dtw", "ndtw", "gdtw"}));
  cmd->add_option("--sigma", args.sigma, "Kernel bandwidth (overrides the schema)");
  cmd->add_option("--divergence", args.divergence, "chi_square|sq_euclidean")
      ->check(CLI::IsMember({"chi_square", "sq_euclidean"}));
  cmd->add_option("--lambda", args.lambda, "Global-weight distance factor");
}

void add_svr_options(CLI::App* cmd, SvrArgs& args) {
  cmd->add_option("--C", args.C, "SVR regularisation");
  cmd->add_option("--epsilon", args.epsilon, "SVR tube width");
  cmd->add_option("--tolerance", args.tolerance, "SVR KKT tolerance");
  cmd->add_option("--max-iterations", args.max_iterations, "SVR iteration cap");
}

std::vector<std::string> resolve_channels(const KernelArgs& args, const cgak::ChannelSchema& schema,
                                          cgak::CombinationStrategy strategy) {
  if (!args.channels.empty()) return args.channels;
  std::vector<std::string> all;
  for (const auto& c : schema.channels()) all.push_back(c.name);
  if (strategy == cgak::CombinationStrategy::single && all.size() != 1) {
    throw cgak::ValidationError("--channel is required when the dataset has several channels");
  }
  return all;
}

cgak::KernelConfig kernel_config(const KernelArgs& args, const cgak::ChannelSchema& schema) {
  std::vector<std::string> given = args.channels;
  auto strategy = args.strategy.empty()
                      ? (given.size() > 1 ? cgak::CombinationStrategy::summation
                                          : cgak::CombinationStrategy::single)
                      : cgak::parse_strategy(args.strategy);
  auto channels = resolve_channels(args, schema, strategy);
  std::optional<cgak::DivergenceKind> divergence;
  if (args.divergence) divergence = cgak::parse_divergence(*args.divergence);
  return cgak::make_kernel_config(schema, std::move(channels), cgak::parse_kernel_kind(args.kernel),
                                  strategy, args.sigma ? &*args.sigma : nullptr,
                                  divergence ? &*divergence : nullptr, args.lambda);
}

cgak::SvrConfig svr_config(const SvrArgs& args) {
  cgak::SvrConfig c;
  c.C = args.C;
  c.epsilon = args.epsilon;
  c.tolerance = args.tolerance;
  c.max_iterations = args.max_iterations;
  c.validate();
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"Group-level intensity estimation with global alignment kernels"};
  app.require_subcommand(1);

  std::size_t threads = 1;
  std::string out_path;

  // validate
  DataArgs validate_data;
  auto* validate = app.add_subcommand("validate", "Parse a dataset and print its channel schema");
  add_data_options(validate, validate_data);

  // sort
  DataArgs sort_data;
  double sort_lambda = cgak::kDefaultLambda;
  auto* sort = app.add_subcommand("sort", "Dump global weights and face order per group");
  add_data_options(sort, sort_data);
  sort->add_option("--lambda", sort_lambda, "Global-weight distance factor");
  sort->add_option("--out", out_path, "Output file");

  // gram
  DataArgs gram_data;
  KernelArgs gram_kernel;
  bool check_psd = false;
  auto* gram = app.add_subcommand("gram", "Compute a Gram matrix as CSV");
  add_data_options(gram, gram_data);
  add_kernel_options(gram, gram_kernel, false);
  gram->add_flag("--check-psd", check_psd, "Append the minimum eigenvalue");
  gram->add_option("--threads", threads, "Worker threads");
  gram->add_option("--out", out_path, "Output file");

  // train
  DataArgs train_data;
  KernelArgs train_kernel;
  SvrArgs train_svr;
  auto* train = app.add_subcommand("train", "Fit an SVR model");
  add_data_options(train, train_data);
  add_kernel_options(train, train_kernel, true);
  add_svr_options(train, train_svr);
  train->add_option("--strategy", train_kernel.strategy, "single|sum|prod|weighted")
      ->check(CLI::IsMember({"single", "sum", "prod", "weighted"}));
  train->add_option("--threads", threads, "Worker threads");
  train->add_option("--out", out_path, "Model file")->required();

  // predict
  std::string model_path;
  DataArgs predict_data;
  auto* predict = app.add_subcommand("predict", "Predict intensities with a trained model");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--data", predict_data.data, "Line-delimited group records")->required();
  predict->add_option("--out", out_path, "Output file");

  // evaluate
  DataArgs eval_data;
  KernelArgs eval_kernel;
  SvrArgs eval_svr;
  std::string config_path;
  std::size_t folds = 4;
  std::uint64_t eval_seed = 0;
  bool table = false;
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validated MAE");
  evaluate->add_option("--config", config_path, "Experiment config file");
  evaluate->add_option("--data", eval_data.data, "Line-delimited group records");
  evaluate->add_option("--schema", eval_data.schema, "Channel schema sidecar");
  add_kernel_options(evaluate, eval_kernel, true);
  add_svr_options(evaluate, eval_svr);
  evaluate->add_option("--strategy", eval_kernel.strategy, "single|sum|prod|weighted")
      ->check(CLI::IsMember({"single", "sum", "prod", "weighted"}));
  evaluate->add_option("--folds", folds, "Number of folds");
  auto* eval_seed_opt = evaluate->add_option("--seed", eval_seed, "Fold shuffling seed");
  evaluate->add_option("--threads", threads, "Worker threads");
  evaluate->add_flag("--table", table, "Human-readable table instead of JSON");
  evaluate->add_option("--out", out_path, "Report file");

  // synth
  cgak::SynthSpec synth_spec;
  std::uint64_t synth_seed = 0;
  std::string schema_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--groups", synth_spec.groups, "Number of groups");
  synth->add_option("--min-faces", synth_spec.min_faces, "Minimum faces per group");
  synth->add_option("--max-faces", synth_spec.max_faces, "Maximum faces per group");
  synth->add_option("--hist-dim", synth_spec.hist_dim, "Histogram channel bins");
  synth->add_option("--embed-dim", synth_spec.embed_dim, "Embedding channel dims");
  synth->add_option("--noise", synth_spec.noise, "Feature noise level");
  synth->add_option("--face-spread", synth_spec.face_spread, "Per-face latent jitter around the group mood");
  synth->add_option("--seed", synth_seed, "Generator seed")->required();
  synth->add_option("--out", out_path, "Dataset file");
  synth->add_option("--schema-out", schema_out, "Write the matching schema here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  if (*validate) {
    const Dataset d = load_dataset(validate_data);
    cgak::write_schema(std::cout, d.schema);
    std::cerr << "ok: " << d.records.size() << " records\n";
    return 0;
  }

  if (*sort) {
    const Dataset d = load_dataset(sort_data);
    Output out(out_path);
    for (const auto& r : d.records) cgak::write_weight_dump(out.stream(), r, sort_lambda);
    return 0;
  }

  if (*gram) {
    const Dataset d = load_dataset(gram_data);
    const auto config = kernel_config(gram_kernel, d.schema);
    const auto& ck = config.channels.front();
    std::vector<cgak::SortedSequence> seqs;
    for (const auto& r : d.records) seqs.push_back(cgak::sort_faces(r, ck.channel, config.lambda));
    auto g = cgak::gram(seqs, ck.spec, threads);
    g.metadata.dataset_hash = cgak::dataset_hash(d.records);
    Output out(out_path);
    cgak::write_gram_csv(out.stream(), g);
    if (check_psd) {
      const auto psd = cgak::psd_check(g);
      char buf[128];
      std::snprintf(buf, sizeof buf, "# min_eigenvalue=%.17g is_psd=%s\n", psd.min_eigenvalue,
                    psd.is_psd ? "true" : "false");
      out.stream() << buf;
    }
    return 0;
  }

  if (*train) {
    const Dataset d = load_dataset(train_data);
    const auto model = cgak::train_model(d.records, d.schema, kernel_config(train_kernel, d.schema),
                                         svr_config(train_svr), {}, threads);
    Output out(out_path);
    cgak::save_model(out.stream(), model);
    if (model.solution.nonconvex) std::cerr << "warning: indefinite Gram, curvature clamped\n";
    if (!model.solution.converged) {
      std::cerr << "error: SVR solver hit its iteration cap (KKT gap " << model.solution.kkt_gap
                << ")\n";
      return kExitConvergence;
    }
    return 0;
  }

  if (*predict) {
    std::ifstream in(model_path);
    if (!in) throw cgak::ParseError("cannot open model '" + model_path + "'");
    const auto model = cgak::load_model(in);
    const auto records = cgak::load_group_records(predict_data.data);
    Output out(out_path);
    auto& os = out.stream();
    os.precision(17);
    for (const auto& r : records) os << r.id << ',' << cgak::predict(model, r) << '\n';
    return 0;
  }

  if (*evaluate) {
    cgak::ExperimentConfig config;
    std::string data_path = eval_data.data, schema_path = eval_data.schema;
    bool seed_given = eval_seed_opt->count() > 0;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw cgak::ParseError("cannot open config '" + config_path + "'");
      std::string cfg_data, cfg_schema;
      std::ifstream peek(config_path);
      config = cgak::parse_experiment_config(in, &cfg_data, &cfg_schema);
      if (data_path.empty()) data_path = cfg_data;
      if (schema_path.empty()) schema_path = cfg_schema;
      nlohmann::json raw = nlohmann::json::parse(peek);
      seed_given = seed_given || raw.contains("seed");
    }
    if (!seed_given) throw cgak::ValidationError("evaluate requires --seed (or a seed in --config)");
    if (data_path.empty()) throw cgak::ValidationError("evaluate requires --data");

    if (!eval_kernel.channels.empty()) config.channels = eval_kernel.channels;
    if (evaluate->get_option("--kernel")->count()) {
      config.kernel = cgak::parse_kernel_kind(eval_kernel.kernel);
    }
    if (eval_kernel.sigma) config.sigma = eval_kernel.sigma;
    if (eval_kernel.divergence) config.divergence = cgak::parse_divergence(*eval_kernel.divergence);
    if (!eval_kernel.strategy.empty()) config.strategy = cgak::parse_strategy(eval_kernel.strategy);
    if (evaluate->get_option("--lambda")->count()) config.lambda = eval_kernel.lambda;
    if (evaluate->get_option("--C")->count()) config.svr.C = eval_svr.C;
    if (evaluate->get_option("--epsilon")->count()) config.svr.epsilon = eval_svr.epsilon;
    if (evaluate->get_option("--tolerance")->count()) config.svr.tolerance = eval_svr.tolerance;
    if (evaluate->get_option("--max-iterations")->count()) {
      config.svr.max_iterations = eval_svr.max_iterations;
    }
    if (evaluate->get_option("--folds")->count()) config.folds = folds;
    if (eval_seed_opt->count()) config.seed = eval_seed;
    if (evaluate->get_option("--threads")->count()) config.threads = threads;
    config.svr.validate();

    const Dataset d = load_dataset({data_path, schema_path});
    if (config.channels.empty() && config.strategy == cgak::CombinationStrategy::single &&
        d.schema.channels().size() > 1) {
      throw cgak::ValidationError("--channel is required for strategy 'single'");
    }
    const auto report = cgak::run_experiment(d.records, d.schema, config);
    Output out(out_path);
    if (table) {
      cgak::write_report_table(out.stream(), report);
    } else {
      out.stream() << cgak::report_to_json(report).dump(2) << '\n';
    }
    for (const auto& f : report.folds) {
      if (!f.svr_converged) {
        std::cerr << "error: SVR solver hit its iteration cap in fold " << f.fold << '\n';
        return kExitConvergence;
      }
    }
    return 0;
  }

  if (*synth) {
    const auto records = cgak::synth_dataset(synth_spec, synth_seed);
    Output out(out_path);
    cgak::write_group_records(out.stream(), records);
    if (!schema_out.empty()) {
      std::ofstream s(schema_out);
      if (!s) throw cgak::ParseError("cannot open '" + schema_out + "'");
      cgak::write_schema(s, cgak::synth_schema(synth_spec));
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cgak::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const cgak::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cgak::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  }
}
