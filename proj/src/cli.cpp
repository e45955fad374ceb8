#include "hace/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "hace/errors.hpp"
#include "hace/experiment.hpp"
#include "hace/features.hpp"
#include "hace/metrics.hpp"
#include "hace/synthetic.hpp"
#include "hace/targets.hpp"
#include "hace/taxonomy.hpp"
#include "hace/trainer.hpp"
#include "numeric_text.hpp"

namespace hace::cli {

namespace {

HierarchyMode mode_of(bool dag) { return dag ? HierarchyMode::kDag : HierarchyMode::kTree; }

void check_levels(const Taxonomy& taxonomy, const std::vector<std::size_t>& levels) {
  for (auto level : levels)
    if (level < 1 || level > taxonomy.max_depth())
      throw ValidationError("unknown level " + std::to_string(level) + " (hierarchy depth " +
                            std::to_string(taxonomy.max_depth()) + ")");
}

struct ValidateArgs {
  std::string hierarchy;
  bool dag = false;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto taxonomy = load_taxonomy(a.hierarchy, mode_of(a.dag));
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> histogram;  // depth -> nodes, leaves
  for (NodeId v = 0; v < taxonomy.node_count(); ++v) {
    auto& [nodes, leaves] = histogram[taxonomy.depth(v)];
    ++nodes;
    if (taxonomy.is_leaf(v)) ++leaves;
  }
  out << "root=" << taxonomy.root() << '\n';
  out << "mode=" << (taxonomy.is_tree() ? "tree" : "dag") << '\n';
  out << "n=" << taxonomy.leaf_count() << " N=" << taxonomy.node_count()
      << " depth≤" << taxonomy.max_depth() << '\n';
  for (const auto& [depth, counts] : histogram)
    out << "depth " << depth << ": " << counts.first << " nodes, " << counts.second
        << " leaves\n";
  return kOk;
}

struct TargetsArgs {
  std::string hierarchy;
  std::string scheme;
  std::optional<double> epsilon;
  std::optional<double> dilution;
  std::optional<double> beta;
  std::string out;
  bool dag = false;
};

int cmd_targets(const TargetsArgs& a, std::ostream& out) {
  TargetScheme scheme{parse_target_kind(a.scheme), a.epsilon, a.dilution, a.beta};
  scheme.validate();
  const auto taxonomy = load_taxonomy(a.hierarchy, mode_of(a.dag));
  const auto targets = build_target_matrix(taxonomy, scheme);
  write_target_csv(targets, taxonomy, a.out);
  out << "wrote " << targets.leaf_count() << " x " << targets.node_count() << " target matrix to "
      << a.out << '\n';
  return kOk;
}

struct SynthArgs {
  std::string out;
  std::vector<std::size_t> branching{5, 5};
  std::size_t dim = 64;
  double sigma_leaf = 1.0;
  double sigma_level = 3.0;
  std::size_t samples = 40;
  std::uint64_t seed = 0;
  std::string format = "bin";
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec{a.branching, a.dim, a.sigma_leaf, a.sigma_level, a.samples};
  spec.validate();
  const auto data = generate_synthetic(spec, a.seed);
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  {
    std::ofstream h(dir / "hierarchy.tsv", std::ios::binary);
    h << format_taxonomy(data.taxonomy);
    if (!h) throw std::runtime_error("failed writing hierarchy.tsv");
  }
  const std::string ext = a.format == "csv" ? ".csv" : ".bin";
  for (const auto* split : {&data.train, &data.test}) {
    auto path = dir / ((split == &data.train ? "train" : "test") + ext);
    if (a.format == "csv")
      write_features_csv(*split, path);
    else
      write_features_binary(*split, path);
  }
  nlohmann::ordered_json meta;
  meta["branching"] = a.branching;
  meta["dim"] = a.dim;
  meta["sigma_leaf"] = a.sigma_leaf;
  meta["sigma_level"] = a.sigma_level;
  meta["samples_per_leaf"] = a.samples;
  meta["seed"] = a.seed;
  std::ofstream m(dir / "synth.json", std::ios::binary);
  m << meta.dump(2) << '\n';
  out << "n=" << data.taxonomy.leaf_count() << " N=" << data.taxonomy.node_count()
      << " train=" << data.train.size() << " test=" << data.test.size() << '\n';
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string features;
  std::string test_features;
  std::string hierarchy;
  std::string out;
  std::vector<std::size_t> levels;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> base_lr;
  std::optional<double> dilution;
  bool normalize = false;
  bool dag = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig config = load_run_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.base_lr) config.base_lr = *a.base_lr;
  if (a.dilution) config.dilution = *a.dilution;
  config.validate();
  effective_lr(config, config.loss);

  const auto taxonomy = load_taxonomy(a.hierarchy, mode_of(a.dag));
  const auto levels = a.levels.empty() ? default_eval_levels(taxonomy) : a.levels;
  check_levels(taxonomy, levels);
  FeatureLoadOptions opts{taxonomy.leaf_count(), a.normalize, Split::kTrain};
  const auto train_set = load_features(a.features, opts);
  std::optional<FeatureDataset> test_set;
  if (!a.test_features.empty()) {
    opts.split = Split::kTest;
    test_set = load_features(a.test_features, opts);
  }

  const auto run = execute_run("train", config, taxonomy, train_set,
                               test_set ? *test_set : train_set, levels);
  write_run_outputs(run, taxonomy, a.out);
  if (run.failure) {
    err << "error: " << *run.failure << '\n';
    return kRuntimeFailure;
  }
  out << "lr=" << format_double(run.learning_rate) << " top1=" << format_double(run.report.top1)
      << " top5=" << format_double(run.report.top5) << '\n';
  return kOk;
}

struct GridArgs {
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_grid(const GridArgs& a, std::ostream& out) {
  auto grid = load_grid_config(a.config);
  if (a.seed) grid.run.seed = *a.seed;
  const auto plan = plan_grid(grid.run, grid.dilutions);

  const auto taxonomy = load_taxonomy(grid.hierarchy, mode_of(grid.dag));
  const auto levels = grid.eval_levels ? *grid.eval_levels : default_eval_levels(taxonomy);
  check_levels(taxonomy, levels);
  FeatureLoadOptions opts{taxonomy.leaf_count(), grid.normalize_features, Split::kTrain};
  const auto train_set = load_features(grid.train_features, opts);
  std::optional<FeatureDataset> test_set;
  if (grid.test_features) {
    opts.split = Split::kTest;
    test_set = load_features(*grid.test_features, opts);
  }

  const auto runs = run_grid(plan, taxonomy, train_set, test_set ? *test_set : train_set, levels,
                             a.jobs);
  const std::filesystem::path dir(a.out);
  for (const auto& run : runs) write_run_outputs(run, taxonomy, dir / run.name);
  write_grid_summary(runs, dir / "summary.csv");
  std::size_t failed = 0;
  for (const auto& run : runs) failed += run.failure ? 1 : 0;
  out << runs.size() << " runs (" << failed << " diverged) written to " << a.out << '\n';
  return kOk;
}

struct EvalArgs {
  std::string dump;
  std::string hierarchy;
  std::vector<std::size_t> levels;
  std::string out;
  bool dag = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto taxonomy = load_taxonomy(a.hierarchy, mode_of(a.dag));
  check_levels(taxonomy, a.levels);
  const auto dump = load_prediction_dump(a.dump, taxonomy);
  const ReachabilityMatrix reach(taxonomy);
  nlohmann::ordered_json echo;
  echo["dump"] = std::filesystem::path(a.dump).filename().string();
  echo["hierarchy"] = std::filesystem::path(a.hierarchy).filename().string();
  echo["levels"] = a.levels;
  const auto report = evaluate(dump, taxonomy, reach, a.levels, echo);
  emit_report(report, taxonomy, a.out);
  out << "top1=" << format_double(report.top1) << " top5=" << format_double(report.top5) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchy-aware classification losses: targets, training and evaluation", "hace"};
  app.require_subcommand(1);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Parse and check a hierarchy file");
  validate->add_option("--hierarchy", va.hierarchy, "parent<TAB>child edge list")->required();
  validate->add_flag("--dag", va.dag, "Allow nodes with several parents");

  TargetsArgs ta;
  auto* targets = app.add_subcommand("targets", "Write the soft-target matrix as CSV");
  targets->add_option("--hierarchy", ta.hierarchy)->required();
  targets->add_option("--scheme", ta.scheme,
                      "one_hot | uniform_smooth | ancestral | ancestral_with_uniform | lca_soft | "
                      "ancestral_with_lca")
      ->required();
  targets->add_option("--epsilon", ta.epsilon);
  targets->add_option("--dilution", ta.dilution);
  targets->add_option("--beta", ta.beta);
  targets->add_option("--out", ta.out)->required();
  targets->add_flag("--dag", ta.dag);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic hierarchy and feature files");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--branching", sa.branching, "Children per level, e.g. 5,5")->delimiter(',');
  synth->add_option("--dim", sa.dim);
  synth->add_option("--sigma-leaf", sa.sigma_leaf);
  synth->add_option("--sigma-level", sa.sigma_level);
  synth->add_option("--samples", sa.samples, "Samples per leaf and split");
  synth->add_option("--seed", sa.seed);
  synth->add_option("--format", sa.format)->check(CLI::IsMember({"bin", "csv"}));

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one linear probe");
  train_cmd->add_option("--config", tr.config, "RunConfig JSON")->required();
  train_cmd->add_option("--features", tr.features, "Training features")->required();
  train_cmd->add_option("--test-features", tr.test_features, "Evaluation features");
  train_cmd->add_option("--hierarchy", tr.hierarchy)->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--levels", tr.levels)->delimiter(',');
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--base-lr", tr.base_lr);
  train_cmd->add_option("--dilution", tr.dilution);
  train_cmd->add_flag("--normalize", tr.normalize, "L2-normalize feature rows");
  train_cmd->add_flag("--dag", tr.dag);

  GridArgs ga;
  auto* grid = app.add_subcommand("grid", "Run the HACE/SCE learning-rate pairing grid");
  grid->add_option("--config", ga.config, "Grid JSON")->required();
  grid->add_option("--out", ga.out, "Output directory")->required();
  grid->add_option("--jobs", ga.jobs)->check(CLI::PositiveNumber);
  grid->add_option("--seed", ga.seed);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a prediction dump");
  eval->add_option("--dump", ea.dump)->required();
  eval->add_option("--hierarchy", ea.hierarchy)->required();
  eval->add_option("--levels", ea.levels)->delimiter(',');
  eval->add_option("--out", ea.out, "Report JSON path")->required();
  eval->add_flag("--dag", ea.dag);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (*validate) return cmd_validate(va, out);
    if (*targets) return cmd_targets(ta, out);
    if (*synth) return cmd_synth(sa, out);
    if (*train_cmd) return cmd_train(tr, out, err);
    if (*grid) return cmd_grid(ga, out);
    if (*eval) return cmd_eval(ea, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kInvalidInput;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hace::cli
