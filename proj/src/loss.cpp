#include "hace/loss.hpp"

#include <algorithm>
#include <cmath>

#include "hace/errors.hpp"

namespace hace {

namespace {

double floored(double x, std::size_t& clamped) {
  if (x < kLogFloor) {
    ++clamped;
    return kLogFloor;
  }
  return x;
}

// dz = q (.) u - q (q^T u), written in terms of s = -q (.) u so the flat
// case reproduces q - p without a reciprocal round trip.
void softmax_backward(std::span<const double> probs, std::span<const double> s,
                      std::span<double> out, double scale) {
  double total = 0.0;
  for (double v : s) total += v;
  for (std::size_t j = 0; j < probs.size(); ++j) out[j] = (probs[j] * total - s[j]) * scale;
}

}  // namespace

LogitBatch LogitBatch::from_float(std::span<const float> logits, std::size_t cols,
                                  std::vector<std::size_t> labels) {
  if (cols == 0 || logits.size() % cols != 0)
    throw ValidationError("logit buffer is not a whole number of rows");
  LogitBatch batch{Matrix(logits.size() / cols, cols), std::move(labels)};
  std::ranges::transform(logits, batch.logits.data().begin(),
                         [](float v) { return static_cast<double>(v); });
  return batch;
}

void LogitBatch::validate(std::size_t expected_cols, std::size_t leaf_count) const {
  if (logits.cols() != expected_cols)
    throw ValidationError("logits have " + std::to_string(logits.cols()) +
                          " columns, expected " + std::to_string(expected_cols));
  if (labels.size() != logits.rows())
    throw ValidationError("label count does not match batch size");
  if (labels.empty()) throw ValidationError("empty batch");
  for (auto y : labels)
    if (y >= leaf_count) throw ValidationError("label out of range: " + std::to_string(y));
  for (double v : logits.data())
    if (!std::isfinite(v)) throw ValidationError("non-finite logit");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::ranges::max_element(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> aggregate(const ReachabilityMatrix& reach, std::span<const double> probs) {
  if (probs.size() != reach.size())
    throw ValidationError("probability vector has " + std::to_string(probs.size()) +
                          " entries, reachability matrix is " + std::to_string(reach.size()));
  std::vector<double> out(probs.size(), 0.0);
  for (NodeId i = 0; i < probs.size(); ++i)
    for (NodeId j : reach.descendants(i)) out[i] += probs[j];
  return out;
}

LossResult hace_loss(const LogitBatch& batch, const TargetMatrix& targets,
                     const ReachabilityMatrix& reach, bool keep_aggregated) {
  const std::size_t n_nodes = reach.size();
  if (targets.node_count() != n_nodes)
    throw ValidationError("target matrix width does not match the hierarchy");
  batch.validate(n_nodes, targets.leaf_count());

  const std::size_t rows = batch.logits.rows();
  const double scale = 1.0 / static_cast<double>(rows);
  LossResult result;
  result.grad = Matrix(rows, n_nodes);
  if (keep_aggregated) result.aggregated = Matrix(rows, n_nodes);

  std::vector<double> s(n_nodes);
  std::vector<double> q_floor(n_nodes);
  double total = 0.0;
  for (std::size_t b = 0; b < rows; ++b) {
    const auto q = softmax(batch.logits.row(b));
    const auto agg = aggregate(reach, q);
    const auto p = targets.row(batch.labels[b]);
    if (keep_aggregated) std::ranges::copy(agg, result.aggregated->row(b).begin());

    double sample = 0.0;
    for (NodeId i = 0; i < n_nodes; ++i) {
      if (p[i] <= 0.0) continue;
      q_floor[i] = floored(agg[i], result.clamped);
      sample -= p[i] * std::log(q_floor[i]);
    }
    total += sample;

    // s(j) = q(j) * sum over ancestors i of j of p*(i) / q*(i).
    for (NodeId j = 0; j < n_nodes; ++j) {
      double acc = 0.0;
      for (NodeId i : reach.ancestors(j))
        if (p[i] > 0.0) acc += p[i] * (q[j] / q_floor[i]);
      s[j] = acc;
    }
    softmax_backward(q, s, result.grad.row(b), scale);
  }
  result.loss = total * scale;
  return result;
}

LossResult sce_loss(const LogitBatch& batch, const TargetMatrix& targets) {
  const std::size_t n = targets.leaf_count();
  if (!targets.leaf_only())
    throw ValidationError("SCE needs leaf-only targets; ancestral schemes require HACE");
  batch.validate(n, n);

  const std::size_t rows = batch.logits.rows();
  const double scale = 1.0 / static_cast<double>(rows);
  LossResult result;
  result.grad = Matrix(rows, n);
  double total = 0.0;
  for (std::size_t b = 0; b < rows; ++b) {
    const auto q = softmax(batch.logits.row(b));
    const auto p = targets.row(batch.labels[b]);
    double sample = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (p[i] > 0.0) sample -= p[i] * std::log(floored(q[i], result.clamped));
    total += sample;
    auto g = result.grad.row(b);
    for (std::size_t i = 0; i < n; ++i) g[i] = (q[i] - p[i]) * scale;
  }
  result.loss = total * scale;
  return result;
}

LossResult hxe_loss(const LogitBatch& batch, const Taxonomy& taxonomy, double alpha) {
  if (!taxonomy.is_tree()) throw ValidationError("HXE requires a tree hierarchy");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be >= 0");
  const std::size_t n = taxonomy.leaf_count();
  const std::size_t n_nodes = taxonomy.node_count();
  batch.validate(n, n);

  const std::size_t rows = batch.logits.rows();
  const double scale = 1.0 / static_cast<double>(rows);
  LossResult result;
  result.grad = Matrix(rows, n);

  // Position of each node on the current true path, or npos.
  constexpr auto kOff = static_cast<std::size_t>(-1);
  std::vector<std::size_t> position(n_nodes, kOff);
  std::vector<double> subtree(n_nodes);
  std::vector<NodeId> path;
  std::vector<double> path_mass;
  std::vector<double> dmass;  // dL/dS(b_j)
  std::vector<double> suffix;
  std::vector<double> s(n);
  double total = 0.0;

  for (std::size_t b = 0; b < rows; ++b) {
    const auto q = softmax(batch.logits.row(b));
    std::ranges::fill(subtree, 0.0);
    for (NodeId l = 0; l < n; ++l)
      for (NodeId v = l; v != kRoot; v = taxonomy.parents(v).front()) subtree[v] += q[l];

    path.clear();
    for (NodeId v = batch.labels[b]; v != kRoot; v = taxonomy.parents(v).front())
      path.push_back(v);
    const std::size_t k = path.size();  // edges to the root
    path_mass.assign(k + 1, 1.0);       // S(root) = 1
    for (std::size_t j = 0; j < k; ++j) {
      path_mass[j] = floored(subtree[path[j]], result.clamped);
      position[path[j]] = j;
    }

    double sample = 0.0;
    dmass.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = std::exp(-alpha * static_cast<double>(j));
      sample -= w * (std::log(path_mass[j]) - std::log(path_mass[j + 1]));
      dmass[j] -= w / path_mass[j];
      if (j + 1 < k) dmass[j + 1] += w / path_mass[j + 1];
    }
    total += sample;

    // A leaf's probability feeds S(b_j) for every path node at or above the
    // first path node among its ancestors.
    suffix.assign(k + 1, 0.0);
    for (std::size_t j = k; j-- > 0;) suffix[j] = suffix[j + 1] + dmass[j];
    for (NodeId l = 0; l < n; ++l) {
      std::size_t first = k;
      for (NodeId v = l; v != kRoot; v = taxonomy.parents(v).front()) {
        if (position[v] != kOff) {
          first = position[v];
          break;
        }
      }
      s[l] = -q[l] * suffix[first];
    }
    softmax_backward(q, s, result.grad.row(b), scale);
    for (NodeId v : path) position[v] = kOff;
  }
  result.loss = total * scale;
  return result;
}

}  // namespace hace
