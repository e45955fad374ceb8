#include "hace/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "hace/errors.hpp"
#include "numeric_text.hpp"

namespace hace {

std::string_view to_string(LossKind v) {
  switch (v) {
    case LossKind::kHace: return "hace";
    case LossKind::kSce: return "sce";
    case LossKind::kHxe: return "hxe";
  }
  return "?";
}

std::string_view to_string(Smoothing v) {
  switch (v) {
    case Smoothing::kNone: return "none";
    case Smoothing::kUniform: return "uniform";
    case Smoothing::kLca: return "lca";
  }
  return "?";
}

std::string_view to_string(Pairing v) {
  switch (v) {
    case Pairing::kNone: return "none";
    case Pairing::kHaceAnchored: return "hace_anchored";
    case Pairing::kSceAnchored: return "sce_anchored";
  }
  return "?";
}

std::string_view to_string(Schedule v) {
  switch (v) {
    case Schedule::kConstant: return "constant";
    case Schedule::kCosine: return "cosine";
  }
  return "?";
}

namespace {

template <typename Enum, std::size_t K>
Enum parse_enum(std::string_view text, const Enum (&options)[K], std::string_view field) {
  for (auto option : options)
    if (to_string(option) == text) return option;
  throw ValidationError("invalid value '" + std::string(text) + "' for " + std::string(field));
}

bool is_paired(const RunConfig& config, LossKind kind) {
  if (kind == LossKind::kHace) return true;
  return kind == LossKind::kSce && config.smoothing != Smoothing::kLca;
}

}  // namespace

void RunConfig::validate() const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ValidationError("base_lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw ValidationError("weight_decay must be non-negative");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");

  if (loss == LossKind::kHxe) {
    if (!alpha) throw ValidationError("hxe requires alpha");
    if (!(*alpha >= 0.0) || !std::isfinite(*alpha)) throw ValidationError("alpha must be >= 0");
    if (smoothing != Smoothing::kNone || epsilon || beta)
      throw ValidationError("hxe does not take smoothing parameters");
    if (dilution && pairing == Pairing::kNone)
      throw ValidationError("hxe does not take dilution");
    return;
  }
  if (alpha) throw ValidationError("alpha is only used by hxe");
  if ((smoothing == Smoothing::kUniform) != epsilon.has_value())
    throw ValidationError("epsilon must be given exactly when smoothing is uniform");
  if ((smoothing == Smoothing::kLca) != beta.has_value())
    throw ValidationError("beta must be given exactly when smoothing is lca");
  if (loss == LossKind::kHace && !dilution) throw ValidationError("hace requires dilution");
  if (loss == LossKind::kSce) {
    const bool scaled = pairing != Pairing::kNone && is_paired(*this, LossKind::kSce);
    if (scaled && !dilution) throw ValidationError("pairing requires dilution");
    if (!scaled && dilution && pairing == Pairing::kNone)
      throw ValidationError("sce only takes dilution together with a pairing");
  }
  if (dilution && !(*dilution > 0.0 && *dilution <= 1.0))
    throw ValidationError("dilution must lie in (0, 1]");
  target_scheme().validate();
}

TargetScheme RunConfig::target_scheme() const {
  TargetScheme scheme;
  const bool hace = loss == LossKind::kHace;
  switch (smoothing) {
    case Smoothing::kNone:
      scheme.kind = hace ? TargetKind::kAncestral : TargetKind::kOneHot;
      break;
    case Smoothing::kUniform:
      scheme.kind = hace ? TargetKind::kAncestralWithUniform : TargetKind::kUniformSmooth;
      scheme.epsilon = epsilon;
      break;
    case Smoothing::kLca:
      scheme.kind = hace ? TargetKind::kAncestralWithLca : TargetKind::kLcaSoft;
      scheme.beta = beta;
      break;
  }
  if (hace) scheme.dilution = dilution;
  return scheme;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["loss"] = to_string(c.loss);
  j["smoothing"] = to_string(c.smoothing);
  j["epsilon"] = opt(c.epsilon);
  j["dilution"] = opt(c.dilution);
  j["beta"] = opt(c.beta);
  j["alpha"] = opt(c.alpha);
  j["pairing"] = to_string(c.pairing);
  j["base_lr"] = c.base_lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["schedule"] = to_string(c.schedule);
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("run config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "loss",     "smoothing",    "epsilon", "dilution",   "beta", "alpha",   "pairing",
      "base_lr",  "momentum",     "weight_decay", "epochs", "batch_size", "seed", "schedule"};
  for (const auto& [key, value] : doc.items())
    if (!kKeys.contains(key)) throw ValidationError("unknown run config key: " + key);

  RunConfig c;
  try {
    auto text = [&](const char* key, auto& out, const auto& options) {
      if (doc.contains(key)) out = parse_enum(doc.at(key).get<std::string>(), options, key);
    };
    auto number = [&](const char* key, std::optional<double>& out) {
      if (doc.contains(key) && !doc.at(key).is_null()) out = doc.at(key).get<double>();
    };
    auto count = [&](const char* key, auto& out) {
      if (!doc.contains(key)) return;
      const auto& v = doc.at(key);
      if (!v.is_number_unsigned()) throw ValidationError(std::string(key) + " must be a non-negative integer");
      out = v.get<std::remove_reference_t<decltype(out)>>();
    };
    static const LossKind kLoss[] = {LossKind::kHace, LossKind::kSce, LossKind::kHxe};
    static const Smoothing kSmooth[] = {Smoothing::kNone, Smoothing::kUniform, Smoothing::kLca};
    static const Pairing kPair[] = {Pairing::kNone, Pairing::kHaceAnchored, Pairing::kSceAnchored};
    static const Schedule kSched[] = {Schedule::kConstant, Schedule::kCosine};
    text("loss", c.loss, kLoss);
    text("smoothing", c.smoothing, kSmooth);
    text("pairing", c.pairing, kPair);
    text("schedule", c.schedule, kSched);
    number("epsilon", c.epsilon);
    number("dilution", c.dilution);
    number("beta", c.beta);
    number("alpha", c.alpha);
    if (doc.contains("base_lr")) c.base_lr = doc.at("base_lr").get<double>();
    if (doc.contains("momentum")) c.momentum = doc.at("momentum").get<double>();
    if (doc.contains("weight_decay")) c.weight_decay = doc.at("weight_decay").get<double>();
    count("epochs", c.epochs);
    count("batch_size", c.batch_size);
    count("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return run_config_from_json(doc);
}

double effective_lr(const RunConfig& config, LossKind kind) {
  const double lr = config.base_lr;
  if (config.pairing == Pairing::kNone || !is_paired(config, kind)) return lr;
  if (!config.dilution) throw ValidationError("pairing requires dilution");
  const double d = *config.dilution;
  if (!(d > 0.0 && d <= 1.0)) throw ValidationError("dilution must lie in (0, 1]");
  if (config.pairing == Pairing::kHaceAnchored) return kind == LossKind::kSce ? lr * d : lr;
  return kind == LossKind::kHace ? lr / d : lr;
}

LinearModel LinearModel::initialize(std::size_t outputs, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.01);
  LinearModel model{Matrix(outputs, dim), std::vector<double>(outputs, 0.0)};
  for (double& w : model.weights.data()) w = init(rng);
  return model;
}

Matrix LinearModel::logits(const Matrix& x) const {
  if (x.cols() != weights.cols()) throw ValidationError("feature dimension does not match model");
  Matrix out(x.rows(), weights.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    for (std::size_t m = 0; m < weights.rows(); ++m) {
      auto wm = weights.row(m);
      double acc = bias[m];
      for (std::size_t d = 0; d < xr.size(); ++d) acc += wm[d] * xr[d];
      out(r, m) = acc;
    }
  }
  return out;
}

Objective::Objective(const RunConfig& config, Taxonomy taxonomy)
    : kind_(config.loss), taxonomy_(std::move(taxonomy)), reach_(taxonomy_) {
  config.validate();
  if (kind_ == LossKind::kHxe)
    alpha_ = *config.alpha;
  else
    targets_ = build_target_matrix(taxonomy_, config.target_scheme());
}

std::size_t Objective::output_dim() const {
  return kind_ == LossKind::kHace ? taxonomy_.node_count() : taxonomy_.leaf_count();
}

LossResult Objective::evaluate(const LogitBatch& batch) const {
  switch (kind_) {
    case LossKind::kHace: return hace_loss(batch, *targets_, reach_);
    case LossKind::kSce: return sce_loss(batch, *targets_);
    case LossKind::kHxe: return hxe_loss(batch, taxonomy_, alpha_);
  }
  throw std::logic_error("unreachable");
}

Matrix Objective::scores(const Matrix& logits) const {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto q = softmax(logits.row(r));
    if (kind_ == LossKind::kHace) q = aggregate(reach_, q);
    std::ranges::copy(q, out.row(r).begin());
  }
  return out;
}

namespace {

LogitBatch gather_batch(const LinearModel& model, const FeatureDataset& data,
                        std::span<const std::size_t> rows) {
  Matrix x(rows.size(), data.dim());
  std::vector<std::size_t> labels(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    std::ranges::copy(data.x.row(rows[b]), x.row(b).begin());
    labels[b] = data.y[rows[b]];
  }
  return LogitBatch{model.logits(x), std::move(labels)};
}

double full_loss(const LinearModel& model, const FeatureDataset& data, const Objective& objective,
                 std::size_t chunk) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  double total = 0.0;
  for (std::size_t start = 0; start < rows.size(); start += chunk) {
    const std::size_t len = std::min(chunk, rows.size() - start);
    auto batch = gather_batch(model, data, std::span(rows).subspan(start, len));
    total += objective.evaluate(batch).loss * static_cast<double>(len);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

TrainResult train(LinearModel model, const FeatureDataset& data, const RunConfig& config,
                  const Objective& objective) {
  config.validate();
  if (data.size() == 0) throw ValidationError("empty training set");
  if (model.weights.cols() != data.dim())
    throw ValidationError("model expects D=" + std::to_string(model.weights.cols()) +
                          ", data has D=" + std::to_string(data.dim()));
  if (model.weights.rows() != objective.output_dim() || model.bias.size() != objective.output_dim())
    throw ValidationError("model output size does not match the loss");
  for (auto y : data.y)
    if (y >= objective.taxonomy().leaf_count()) throw ValidationError("label out of range");

  TrainResult result;
  result.learning_rate = effective_lr(config, config.loss);
  const std::size_t outputs = model.weights.rows();
  const std::size_t dim = model.weights.cols();

  result.trace.push_back(full_loss(model, data, objective, config.batch_size));
  const double initial = result.trace.front();

  Matrix velocity_w(outputs, dim);
  std::vector<double> velocity_b(outputs, 0.0);
  Matrix grad_w(outputs, dim);
  std::vector<double> grad_b(outputs);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = result.learning_rate;
    if (config.schedule == Schedule::kCosine)
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                                  static_cast<double>(config.epochs)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      auto rows = std::span(order).subspan(start, len);
      auto batch = gather_batch(model, data, rows);
      auto loss = objective.evaluate(batch);
      result.clamped += loss.clamped;

      std::ranges::fill(grad_w.data(), 0.0);
      std::ranges::fill(grad_b, 0.0);
      for (std::size_t b = 0; b < len; ++b) {
        auto g = loss.grad.row(b);
        auto x = data.x.row(rows[b]);
        for (std::size_t m = 0; m < outputs; ++m) {
          if (g[m] == 0.0) continue;
          auto gw = grad_w.row(m);
          for (std::size_t d = 0; d < dim; ++d) gw[d] += g[m] * x[d];
          grad_b[m] += g[m];
        }
      }
      auto w = model.weights.data();
      auto gw = grad_w.data();
      auto vw = velocity_w.data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        vw[i] = config.momentum * vw[i] + gw[i] + config.weight_decay * w[i];
        w[i] -= lr * vw[i];
      }
      for (std::size_t m = 0; m < outputs; ++m) {
        velocity_b[m] = config.momentum * velocity_b[m] + grad_b[m];
        model.bias[m] -= lr * velocity_b[m];
      }
    }

    const double epoch_loss = full_loss(model, data, objective, config.batch_size);
    result.trace.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss) || epoch_loss > kDivergenceFactor * initial)
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch + 1) +
                             ": loss " + format_double(epoch_loss) + " exceeds " +
                             format_double(kDivergenceFactor) + "x initial loss " +
                             format_double(initial) + " (lr " +
                             format_double(result.learning_rate) + ")");
  }
  for (double v : model.weights.data())
    if (!std::isfinite(v)) throw TrainingDiverged("non-finite weights after training");
  result.model = std::move(model);
  return result;
}

void write_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e) out << e << ',' << format_double(trace[e]) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_model_json(const LinearModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["outputs"] = model.weights.rows();
  j["dim"] = model.weights.cols();
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < model.weights.rows(); ++m) {
    auto r = model.weights.row(m);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["weights"] = std::move(rows);
  j["bias"] = model.bias;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace hace
