#include "hace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hace/errors.hpp"
#include "hace/features.hpp"
#include "numeric_text.hpp"

namespace hace {

void PredictionDump::validate() const {
  if (labels.size() != scores.rows()) throw ValidationError("dump label count mismatch");
  if (leaf_count == 0 || scores.cols() < leaf_count)
    throw ValidationError("dump has fewer columns than leaf classes");
  for (auto y : labels)
    if (y >= leaf_count) throw ValidationError("dump label out of range: " + std::to_string(y));
  for (double v : scores.data())
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("dump scores must be finite and non-negative");
}

PredictionDump load_prediction_dump(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  auto raw = read_labeled_matrix(path, 'p');
  const auto cols = raw.values.cols();
  if (cols != taxonomy.leaf_count() && cols != taxonomy.node_count())
    throw ValidationError(path.string() + ": " + std::to_string(cols) +
                          " score columns, expected n=" + std::to_string(taxonomy.leaf_count()) +
                          " or N=" + std::to_string(taxonomy.node_count()));
  PredictionDump dump{std::move(raw.values), std::move(raw.labels), taxonomy.leaf_count()};
  dump.validate();
  return dump;
}

void write_prediction_dump(const PredictionDump& dump, const std::filesystem::path& path) {
  write_labeled_matrix_csv(dump.scores, dump.labels, 'p', path);
}

double top_k_accuracy(const PredictionDump& dump, std::size_t k) {
  dump.validate();
  const std::size_t n = dump.leaf_count;
  if (k < 1 || k > n)
    throw ValidationError("k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  if (dump.labels.empty()) throw ValidationError("empty prediction dump");
  std::size_t hits = 0;
  for (std::size_t s = 0; s < dump.labels.size(); ++s) {
    auto row = dump.scores.row(s);
    const std::size_t y = dump.labels[s];
    // Rank of the true leaf: strictly better scores, plus equal scores at
    // lower indices.
    std::size_t rank = 0;
    for (std::size_t j = 0; j < n && rank < k; ++j)
      if (row[j] > row[y] || (row[j] == row[y] && j < y)) ++rank;
    if (rank < k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(dump.labels.size());
}

std::vector<NodeId> level_nodes(const Taxonomy& taxonomy, std::size_t level) {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < taxonomy.node_count(); ++v)
    if (taxonomy.depth(v) == level || (taxonomy.is_leaf(v) && taxonomy.depth(v) < level))
      out.push_back(v);
  return out;
}

namespace {

NodeId ancestor_at_level(const Taxonomy& taxonomy, NodeId leaf, std::size_t level) {
  NodeId v = leaf;
  while (taxonomy.depth(v) > level) v = taxonomy.parents(v).front();
  return v;
}

}  // namespace

LevelAccuracy level_accuracy(const PredictionDump& dump, const Taxonomy& taxonomy,
                             const ReachabilityMatrix& reach, std::size_t level) {
  dump.validate();
  if (!taxonomy.is_tree()) throw ValidationError("level accuracy requires a tree hierarchy");
  if (level < 1 || level > taxonomy.max_depth())
    throw ValidationError("invalid level " + std::to_string(level) + " (hierarchy depth " +
                          std::to_string(taxonomy.max_depth()) + ")");
  if (dump.leaf_count != taxonomy.leaf_count() ||
      (dump.has_internal_scores() && dump.scores.cols() != taxonomy.node_count()))
    throw ValidationError("dump does not match the hierarchy");

  const auto nodes = level_nodes(taxonomy, level);
  std::vector<std::size_t> slot(taxonomy.node_count(), nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) slot[nodes[i]] = i;

  LevelAccuracy out;
  out.level = level;
  for (NodeId v : nodes) out.classes.push_back({v, 0, 0, std::nullopt});

  const bool native = dump.has_internal_scores();
  std::size_t correct_total = 0;
  for (std::size_t s = 0; s < dump.labels.size(); ++s) {
    auto row = dump.scores.row(s);
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double score = 0.0;
      if (native) {
        score = row[nodes[i]];
      } else {
        for (NodeId j : reach.descendants(nodes[i]))
          if (taxonomy.is_leaf(j)) score += row[j];
      }
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    auto& cls = out.classes[slot[ancestor_at_level(taxonomy, dump.labels[s], level)]];
    ++cls.support;
    if (out.classes[best].node == cls.node) {
      ++cls.correct;
      ++correct_total;
    }
  }

  double sum = 0.0;
  std::size_t supported = 0;
  for (auto& cls : out.classes) {
    if (cls.support == 0) continue;
    cls.accuracy = 100.0 * static_cast<double>(cls.correct) / static_cast<double>(cls.support);
    sum += *cls.accuracy;
    ++supported;
  }
  if (supported > 0) out.mean = sum / static_cast<double>(supported);
  if (!dump.labels.empty())
    out.overall =
        100.0 * static_cast<double>(correct_total) / static_cast<double>(dump.labels.size());
  return out;
}

MetricsReport evaluate(const PredictionDump& dump, const Taxonomy& taxonomy,
                       const ReachabilityMatrix& reach, const std::vector<std::size_t>& levels,
                       nlohmann::ordered_json config, std::uint64_t seed) {
  MetricsReport report;
  report.top1 = top_k_accuracy(dump, 1);
  report.top5_k = std::min<std::size_t>(5, dump.leaf_count);
  report.top5 = top_k_accuracy(dump, report.top5_k);
  for (auto level : levels) report.per_level[level] = level_accuracy(dump, taxonomy, reach, level);
  report.config = std::move(config);
  report.seed = seed;
  return report;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json report_json(const MetricsReport& report, const Taxonomy& taxonomy) {
  nlohmann::ordered_json j;
  j["top1"] = report.top1;
  j["top5"] = report.top5;
  j["top5_k"] = report.top5_k;
  auto levels = nlohmann::ordered_json::array();
  for (const auto& [level, acc] : report.per_level) {
    nlohmann::ordered_json l;
    l["level"] = level;
    l["mean_class_accuracy"] = optional_number(acc.mean);
    l["overall_accuracy"] = acc.overall;
    auto classes = nlohmann::ordered_json::array();
    for (const auto& cls : acc.classes) {
      nlohmann::ordered_json c;
      c["node_id"] = taxonomy.name(cls.node);
      c["accuracy"] = optional_number(cls.accuracy);
      c["support"] = cls.support;
      classes.push_back(std::move(c));
    }
    l["classes"] = std::move(classes);
    levels.push_back(std::move(l));
  }
  j["per_level"] = std::move(levels);
  j["shallow_leaf_rule"] = "leaves above the requested level are scored as themselves";
  j["config"] = report.config;
  j["seed"] = report.seed;
  return j;
}

std::filesystem::path per_class_csv_path(const std::filesystem::path& report_path) {
  auto p = report_path;
  p.replace_extension();
  p += "_per_class.csv";
  return p;
}

void emit_report(const MetricsReport& report, const Taxonomy& taxonomy,
                 const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << report_json(report, taxonomy).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }
  const auto csv = per_class_csv_path(path);
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + csv.string());
  out << "node_id,level,accuracy,support\n";
  for (const auto& [level, acc] : report.per_level) {
    for (const auto& cls : acc.classes) {
      out << csv_field(taxonomy.name(cls.node)) << ',' << level << ','
          << (cls.accuracy ? format_double(*cls.accuracy) : "") << ',' << cls.support << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing " + csv.string());
}

std::vector<ComparisonRow> comparison_table(const LevelAccuracy& baseline,
                                            const LevelAccuracy& candidate) {
  if (baseline.classes.size() != candidate.classes.size())
    throw ValidationError("comparison needs the same level on both sides");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < baseline.classes.size(); ++i) {
    const auto& b = baseline.classes[i];
    const auto& c = candidate.classes[i];
    if (b.node != c.node) throw ValidationError("comparison class lists differ");
    rows.push_back({b.node, b.support, b.accuracy, c.accuracy});
  }
  std::ranges::stable_sort(rows, [](const ComparisonRow& x, const ComparisonRow& y) {
    if (x.baseline.has_value() != y.baseline.has_value()) return x.baseline.has_value();
    if (x.baseline && *x.baseline != *y.baseline) return *x.baseline > *y.baseline;
    return x.node < y.node;
  });
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const Taxonomy& taxonomy,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "node_id,baseline_accuracy,candidate_accuracy,gain,support\n";
  for (const auto& r : rows) {
    out << csv_field(taxonomy.name(r.node)) << ','
        << (r.baseline ? format_double(*r.baseline) : "") << ','
        << (r.candidate ? format_double(*r.candidate) : "") << ','
        << (r.baseline && r.candidate ? format_double(*r.candidate - *r.baseline) : "") << ','
        << r.support << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace hace
