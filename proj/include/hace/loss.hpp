#pragma once

// Cross-entropy losses over raw logits with analytic gradients.
//
// All losses use mean reduction over the batch, so `grad` already carries
// the 1/B factor.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hace/matrix.hpp"
#include "hace/targets.hpp"
#include "hace/taxonomy.hpp"

namespace hace {

// log() arguments are floored here; every use is counted in LossResult.
inline constexpr double kLogFloor = 1e-30;

struct LogitBatch {
  Matrix logits;                     // B x M
  std::vector<std::size_t> labels;   // leaf indices, length B

  // Widens 32-bit logits (row-major, B x cols).
  static LogitBatch from_float(std::span<const float> logits, std::size_t cols,
                               std::vector<std::size_t> labels);

  // Throws ValidationError on shape mismatch, bad labels or non-finite logits.
  void validate(std::size_t expected_cols, std::size_t leaf_count) const;
};

struct LossResult {
  double loss = 0.0;
  Matrix grad;                       // dL/dz, B x M
  std::optional<Matrix> aggregated;  // q*, B x N (HACE only, on request)
  std::size_t clamped = 0;           // log-floor hits
};

std::vector<double> softmax(std::span<const double> logits);

// q*(i) = sum of q over i and its descendants. The virtual root would be 1.
std::vector<double> aggregate(const ReachabilityMatrix& reach, std::span<const double> probs);

// -sum_i p*(i) log q*(i) over the N indexed nodes.
LossResult hace_loss(const LogitBatch& batch, const TargetMatrix& targets,
                     const ReachabilityMatrix& reach, bool keep_aggregated = false);

// Flat softmax over the n leaves against a leaf-only target matrix.
LossResult sce_loss(const LogitBatch& batch, const TargetMatrix& targets);

// Hierarchical cross-entropy: conditional log-probabilities along the true
// leaf's path, edge j (leaf edge is j = 0) weighted by exp(-alpha * j).
LossResult hxe_loss(const LogitBatch& batch, const Taxonomy& taxonomy, double alpha);

}  // namespace hace
