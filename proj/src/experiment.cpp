#include "hace/experiment.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "hace/errors.hpp"
#include "numeric_text.hpp"

namespace hace {

std::vector<std::size_t> default_eval_levels(const Taxonomy& taxonomy) {
  std::vector<std::size_t> levels;
  for (std::size_t l = 1; l < taxonomy.max_depth(); ++l) levels.push_back(l);
  return levels;
}

RunOutcome execute_run(const std::string& name, const RunConfig& config, const Taxonomy& taxonomy,
                       const FeatureDataset& train_set, const FeatureDataset& eval_set,
                       const std::vector<std::size_t>& levels) {
  check_compatible(train_set, eval_set);
  RunOutcome out;
  out.name = name;
  out.config = config;
  Objective objective(config, taxonomy);
  out.learning_rate = effective_lr(config, config.loss);
  auto model = LinearModel::initialize(objective.output_dim(), train_set.dim(), config.seed);
  try {
    auto trained = train(std::move(model), train_set, config, objective);
    out.trace = std::move(trained.trace);
    out.model = std::move(trained.model);
  } catch (const TrainingDiverged& e) {
    out.failure = e.what();
    return out;
  }
  out.dump.scores = objective.scores(out.model.logits(eval_set.x));
  out.dump.labels = eval_set.y;
  out.dump.leaf_count = taxonomy.leaf_count();
  out.report = evaluate(out.dump, taxonomy, objective.reach(), levels, to_json(config), config.seed);
  return out;
}

void write_run_outputs(const RunOutcome& run, const Taxonomy& taxonomy,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json", std::ios::binary);
    out << to_json(run.config).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + (dir / "config.json").string());
  }
  if (run.failure) {
    std::ofstream out(dir / "FAILED", std::ios::binary);
    out << *run.failure << '\n';
    return;
  }
  write_model_json(run.model, dir / "model.json");
  write_trace_csv(run.trace, dir / "trace.csv");
  emit_report(run.report, taxonomy, dir / "report.json");
  write_prediction_dump(run.dump, dir / "predictions.csv");
}

std::vector<GridRun> plan_grid(const RunConfig& base, const std::vector<double>& dilutions) {
  if (dilutions.empty()) throw ValidationError("grid needs at least one dilution value");
  std::set<double> seen;
  for (double d : dilutions) {
    if (!(d > 0.0 && d <= 1.0)) throw ValidationError("dilution must lie in (0, 1]");
    if (!seen.insert(d).second) throw ValidationError("duplicate dilution " + format_double(d));
  }

  auto variant = [&](LossKind loss, Pairing pairing, std::optional<double> d) {
    RunConfig c = base;
    c.loss = loss;
    c.pairing = pairing;
    c.dilution = d;
    c.alpha.reset();
    return c;
  };
  std::vector<GridRun> plan;
  for (double d : dilutions) {
    const std::string tag = "d" + format_double(d);
    plan.push_back({"hace_" + tag + "_hace_anchored",
                    variant(LossKind::kHace, Pairing::kHaceAnchored, d)});
    plan.push_back({"hace_" + tag + "_sce_anchored",
                    variant(LossKind::kHace, Pairing::kSceAnchored, d)});
    plan.push_back({"sce_" + tag + "_hace_anchored",
                    variant(LossKind::kSce, Pairing::kHaceAnchored, d)});
  }
  plan.push_back({"sce_base", variant(LossKind::kSce, Pairing::kNone, std::nullopt)});
  for (const auto& run : plan) run.config.validate();
  return plan;
}

std::vector<RunOutcome> run_grid(const std::vector<GridRun>& plan, const Taxonomy& taxonomy,
                                 const FeatureDataset& train, const FeatureDataset& eval,
                                 const std::vector<std::size_t>& levels, std::size_t jobs) {
  std::vector<RunOutcome> outcomes(plan.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      try {
        outcomes[i] = execute_run(plan[i].name, plan[i].config, taxonomy, train, eval, levels);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(plan.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return outcomes;
}

void write_grid_summary(const std::vector<RunOutcome>& runs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "name,loss,pairing,dilution,learning_rate,top1,top5,status\n";
  for (const auto& r : runs) {
    out << r.name << ',' << to_string(r.config.loss) << ',' << to_string(r.config.pairing) << ','
        << (r.config.dilution ? format_double(*r.config.dilution) : "") << ','
        << format_double(r.learning_rate) << ',';
    if (r.failure)
      out << ",,diverged\n";
    else
      out << format_double(r.report.top1) << ',' << format_double(r.report.top5) << ",ok\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

GridConfig load_grid_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("grid config must be a JSON object");
  static const std::set<std::string> kKeys = {"hierarchy",   "dag",         "train_features",
                                              "test_features", "normalize_features",
                                              "eval_levels", "dilutions",   "run"};
  for (const auto& [key, value] : doc.items())
    if (!kKeys.contains(key)) throw ValidationError("unknown grid config key: " + key);

  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  GridConfig g;
  try {
    if (!doc.contains("hierarchy") || !doc.contains("train_features") || !doc.contains("dilutions"))
      throw ValidationError("grid config needs hierarchy, train_features and dilutions");
    g.hierarchy = resolve(doc.at("hierarchy").get<std::string>());
    g.train_features = resolve(doc.at("train_features").get<std::string>());
    if (doc.contains("test_features"))
      g.test_features = resolve(doc.at("test_features").get<std::string>());
    g.dag = doc.value("dag", false);
    g.normalize_features = doc.value("normalize_features", false);
    if (doc.contains("eval_levels")) g.eval_levels = doc.at("eval_levels").get<std::vector<std::size_t>>();
    g.dilutions = doc.at("dilutions").get<std::vector<double>>();
    if (doc.contains("run")) g.run = run_config_from_json(doc.at("run"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return g;
}

}  // namespace hace
