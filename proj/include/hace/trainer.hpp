#pragma once

// Linear probes on fixed features: run configuration, the learning-rate
// pairing between HACE and SCE, and a deterministic SGD loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "hace/features.hpp"
#include "hace/loss.hpp"
#include "hace/matrix.hpp"
#include "hace/targets.hpp"
#include "hace/taxonomy.hpp"
#include "json.hpp"

namespace hace {

enum class LossKind { kHace, kSce, kHxe };
enum class Smoothing { kNone, kUniform, kLca };
enum class Pairing { kNone, kHaceAnchored, kSceAnchored };
enum class Schedule { kConstant, kCosine };

std::string_view to_string(LossKind v);
std::string_view to_string(Smoothing v);
std::string_view to_string(Pairing v);
std::string_view to_string(Schedule v);

struct RunConfig {
  LossKind loss = LossKind::kSce;
  // Horizontal step; HACE always adds the vertical step on top.
  Smoothing smoothing = Smoothing::kNone;
  std::optional<double> epsilon;
  std::optional<double> dilution;  // HACE targets; also the pairing factor
  std::optional<double> beta;
  std::optional<double> alpha;     // HXE only
  Pairing pairing = Pairing::kNone;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  Schedule schedule = Schedule::kConstant;

  void validate() const;
  // Target scheme for HACE/SCE runs. Not meaningful for HXE.
  TargetScheme target_scheme() const;
};

nlohmann::ordered_json to_json(const RunConfig& config);
// Strict: unknown keys and wrong types are rejected. Does not validate().
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// HACE-anchored: HACE at l, SCE at l*d. SCE-anchored: HACE at l/d, SCE at l.
// Losses outside the pairing (HXE, LCA soft-label SCE) keep l.
double effective_lr(const RunConfig& config, LossKind kind);

struct LinearModel {
  Matrix weights;             // M x D
  std::vector<double> bias;   // M

  // Weights ~ N(0, 0.01^2), bias 0.
  static LinearModel initialize(std::size_t outputs, std::size_t dim, std::uint64_t seed);
  Matrix logits(const Matrix& x) const;
};

// Loss bound to a hierarchy and configuration.
class Objective {
 public:
  Objective(const RunConfig& config, Taxonomy taxonomy);

  LossKind kind() const { return kind_; }
  std::size_t output_dim() const;
  const Taxonomy& taxonomy() const { return taxonomy_; }
  const ReachabilityMatrix& reach() const { return reach_; }

  LossResult evaluate(const LogitBatch& batch) const;
  // Per-sample scores written to prediction dumps: native q* (N columns) for
  // HACE, leaf softmax (n columns) otherwise.
  Matrix scores(const Matrix& logits) const;

 private:
  LossKind kind_;
  Taxonomy taxonomy_;
  ReachabilityMatrix reach_;
  std::optional<TargetMatrix> targets_;
  double alpha_ = 0.0;
};

struct TrainResult {
  LinearModel model;
  // trace[0] is the loss before any update, trace[e] the full-data loss
  // after epoch e.
  std::vector<double> trace;
  double learning_rate = 0.0;
  std::size_t clamped = 0;
};

// Epoch loss above this multiple of the initial loss aborts training.
inline constexpr double kDivergenceFactor = 10.0;

TrainResult train(LinearModel model, const FeatureDataset& data, const RunConfig& config,
                  const Objective& objective);

void write_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path);
void write_model_json(const LinearModel& model, const std::filesystem::path& path);

}  // namespace hace
