#pragma once

// Leaf-level top-k accuracy and per-class accuracy at coarser levels of the
// hierarchy.
//
// Ties are broken toward the lower node index everywhere. A leaf that sits
// above the requested level (mixed-depth hierarchies) stands for itself at
// that level.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "hace/matrix.hpp"
#include "hace/taxonomy.hpp"
#include "json.hpp"

namespace hace {

struct PredictionDump {
  // S x n leaf scores, or S x N native scores (HACE q*) whose first n columns
  // are the leaf scores.
  Matrix scores;
  std::vector<std::size_t> labels;
  std::size_t leaf_count = 0;

  bool has_internal_scores() const { return scores.cols() > leaf_count; }
  void validate() const;
};

// Reads the CSV (`label,p0,...`) or binary layout. The column count must be
// n or N for the given hierarchy.
PredictionDump load_prediction_dump(const std::filesystem::path& path, const Taxonomy& taxonomy);
void write_prediction_dump(const PredictionDump& dump, const std::filesystem::path& path);

double top_k_accuracy(const PredictionDump& dump, std::size_t k);

struct ClassAccuracy {
  NodeId node = 0;
  std::size_t support = 0;
  std::size_t correct = 0;
  std::optional<double> accuracy;  // percent; empty when support is 0
};

struct LevelAccuracy {
  std::size_t level = 0;
  std::vector<ClassAccuracy> classes;  // node index order
  std::optional<double> mean;          // unweighted over supported classes
  double overall = 0.0;                // sample-weighted, percent
};

// Scores at the level come from native internal columns when the dump has
// them, otherwise leaf scores are summed through the reachability matrix.
LevelAccuracy level_accuracy(const PredictionDump& dump, const Taxonomy& taxonomy,
                             const ReachabilityMatrix& reach, std::size_t level);

// Nodes that represent `level`: nodes at that depth plus shallower leaves.
std::vector<NodeId> level_nodes(const Taxonomy& taxonomy, std::size_t level);

struct MetricsReport {
  double top1 = 0.0;
  double top5 = 0.0;
  std::size_t top5_k = 5;  // min(5, n)
  std::map<std::size_t, LevelAccuracy> per_level;
  nlohmann::ordered_json config;  // echo of the producing configuration
  std::uint64_t seed = 0;
};

MetricsReport evaluate(const PredictionDump& dump, const Taxonomy& taxonomy,
                       const ReachabilityMatrix& reach, const std::vector<std::size_t>& levels,
                       nlohmann::ordered_json config = {}, std::uint64_t seed = 0);

nlohmann::ordered_json report_json(const MetricsReport& report, const Taxonomy& taxonomy);

// Writes the JSON report to `path` and the per-class table
// (`node_id,level,accuracy,support`) to per_class_csv_path(path).
void emit_report(const MetricsReport& report, const Taxonomy& taxonomy,
                 const std::filesystem::path& path);
std::filesystem::path per_class_csv_path(const std::filesystem::path& report_path);

// One row per class of a level, baseline vs candidate, sorted by descending
// baseline accuracy (unsupported classes last, then node index).
struct ComparisonRow {
  NodeId node = 0;
  std::size_t support = 0;
  std::optional<double> baseline;
  std::optional<double> candidate;
};
std::vector<ComparisonRow> comparison_table(const LevelAccuracy& baseline,
                                            const LevelAccuracy& candidate);
// `node_id,baseline_accuracy,candidate_accuracy,gain,support`
void write_comparison_csv(const std::vector<ComparisonRow>& rows, const Taxonomy& taxonomy,
                          const std::filesystem::path& path);

}  // namespace hace
