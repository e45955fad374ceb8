#pragma once

// Single training runs and the HACE/SCE learning-rate pairing grid.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hace/features.hpp"
#include "hace/metrics.hpp"
#include "hace/taxonomy.hpp"
#include "hace/trainer.hpp"

namespace hace {

struct RunOutcome {
  std::string name;
  RunConfig config;
  double learning_rate = 0.0;
  std::optional<std::string> failure;  // set when training diverged
  std::vector<double> trace;
  LinearModel model;
  PredictionDump dump;
  MetricsReport report;
};

// Levels 1 .. max_depth-1: every level strictly between root and leaves.
std::vector<std::size_t> default_eval_levels(const Taxonomy& taxonomy);

// Trains on `train` and evaluates on `eval`. Divergence is caught and stored
// in `failure`; anything else propagates.
RunOutcome execute_run(const std::string& name, const RunConfig& config, const Taxonomy& taxonomy,
                       const FeatureDataset& train, const FeatureDataset& eval,
                       const std::vector<std::size_t>& levels);

// config.json, model.json, trace.csv, report.json (+ per-class CSV),
// predictions.csv. A diverged run only gets config.json and FAILED.
void write_run_outputs(const RunOutcome& run, const Taxonomy& taxonomy,
                       const std::filesystem::path& dir);

struct GridRun {
  std::string name;
  RunConfig config;
};

// Per dilution: HACE under both pairings plus the HACE-anchored SCE, then one
// SCE at the base rate shared by all dilutions: 3|d| + 1 runs.
std::vector<GridRun> plan_grid(const RunConfig& base, const std::vector<double>& dilutions);

// Runs the plan on up to `jobs` threads; outcomes come back in plan order.
std::vector<RunOutcome> run_grid(const std::vector<GridRun>& plan, const Taxonomy& taxonomy,
                                 const FeatureDataset& train, const FeatureDataset& eval,
                                 const std::vector<std::size_t>& levels, std::size_t jobs);

void write_grid_summary(const std::vector<RunOutcome>& runs, const std::filesystem::path& path);

// Grid description file.
struct GridConfig {
  std::filesystem::path hierarchy;
  bool dag = false;
  std::filesystem::path train_features;
  std::optional<std::filesystem::path> test_features;
  bool normalize_features = false;
  std::optional<std::vector<std::size_t>> eval_levels;
  std::vector<double> dilutions;
  RunConfig run;
};

// Relative paths are resolved against the config file's directory.
GridConfig load_grid_config(const std::filesystem::path& path);

}  // namespace hace
