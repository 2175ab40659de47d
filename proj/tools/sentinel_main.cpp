#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sentinel/cluster.hpp"
#include "sentinel/config.hpp"
#include "sentinel/core.hpp"
#include "sentinel/experiments.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/learn.hpp"
#include "sentinel/log.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/synth.hpp"
#include "sentinel/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sentinel;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string experiment_id;
};

/// Writes via a temp file and rename so failures never leave partial output.
void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void write_manifest(const fs::path& out_dir, const CliOptions& opts, const std::string& config_raw,
                    std::uint64_t seed) {
  json manifest{{"artifact_version", kArtifactVersion},
                {"config_path", opts.config_path},
                {"config_hash", fnv1a_hex(config_raw)},
                {"out_dir", out_dir.string()},
                {"seed", seed}};
  if (!opts.experiment_id.empty()) manifest["experiment"] = opts.experiment_id;
  atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "none") return Strategy::kNone;
  if (name == "static1") return Strategy::kStaticCase1;
  if (name == "static2") return Strategy::kStaticCase2;
  if (name == "static3") return Strategy::kStaticCase3;
  if (name == "drifting") return Strategy::kDrifting;
  throw ConfigError("adversary.strategy: unknown strategy '" + name +
                    "' (none, static1, static2, static3, drifting)");
}

SensingTask task_from_config(const Config& cfg) {
  SensingTask task;
  task.phenomenon = cfg.get_string("task.phenomenon", "phenomenon");
  task.values_per_report = static_cast<int>(cfg.get_long("task.values_per_report", 12));
  task.interval = static_cast<int>(cfg.get_long("task.interval", 1));
  task.legit_spec.mu = cfg.get_double("task.legit_mu");
  task.legit_spec.sigma = cfg.get_double("task.legit_sigma");
  task.units = {SpatialUnit{"unit-0", 0.0, 0.0, 1.0, 1.0}};
  return task;
}

PopulationConfig population_from_config(const Config& cfg) {
  PopulationConfig pop;
  pop.task = task_from_config(cfg);
  pop.n_users = static_cast<int>(cfg.get_long("population.users", 250));
  pop.ticks = cfg.get_long("population.ticks", 4);
  pop.adversary.fraction = cfg.get_double("adversary.fraction", 0.0);
  pop.adversary.strategy = strategy_from_name(cfg.get_string("adversary.strategy", "none"));
  pop.adversary.adv_spec.mu = cfg.get_double("adversary.mu", pop.task.legit_spec.mu);
  pop.adversary.adv_spec.sigma = cfg.get_double("adversary.sigma", pop.task.legit_spec.sigma);
  pop.adversary.delta = cfg.get_double("adversary.delta", 0.0);
  pop.adversary.target = cfg.get_double("adversary.target", 0.0);
  pop.adversary.noise_sigma = cfg.get_double("adversary.noise_sigma", 0.0);
  if (cfg.has("concept_drift.target_mu")) {
    ConceptDrift drift;
    drift.target_mu = cfg.get_double("concept_drift.target_mu");
    drift.start_tick = cfg.get_long("concept_drift.start_tick");
    drift.end_tick = cfg.get_long("concept_drift.end_tick");
    pop.concept_drift = drift;
  }
  try {
    validate(pop);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.name() + ": " + e.what());
  }
  return pop;
}

verify::PipelineConfig pipeline_from_config(const Config& cfg, const SensingTask& task,
                                            std::uint64_t seed) {
  verify::PipelineConfig pc;
  pc.feature = FeatureSpec::for_task(task);
  pc.min_pts = static_cast<int>(cfg.get_long("pipeline.min_pts", 4));
  pc.theta = cfg.get_double("pipeline.theta", 1.5);
  pc.window_size = static_cast<int>(cfg.get_long("pipeline.window", 50));
  pc.alpha = cfg.get_double("pipeline.alpha", 0.05);
  pc.retrain_buffer_factor = static_cast<int>(cfg.get_long("pipeline.retrain_buffer_factor", 4));
  pc.hp.seed = seed;
  try {
    pc.active = learn::variant_from_name(cfg.get_string("pipeline.active", "svm"));
    pc.variants.clear();
    for (const std::string& name :
         cfg.get_string_list("pipeline.variants", {"nb", "rf", "svm", "mlp"}))
      pc.variants.push_back(learn::variant_from_name(name));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.name() + ": " + e.what());
  }
  return pc;
}

int cmd_generate(const CliOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("generate: --config is required");
  Config cfg = Config::parse_file(opts.config_path);
  PopulationConfig pop = population_from_config(cfg);
  std::uint64_t seed = opts.seed ? *opts.seed
                                 : static_cast<std::uint64_t>(cfg.get_long("run.seed", 42));

  fs::create_directories(opts.out_dir);
  write_manifest(opts.out_dir, opts, cfg.raw_bytes(), seed);

  Rng rng(seed, 0);
  auto stream = generate_stream(pop, rng);
  Dataset dataset;
  dataset.task = pop.task;
  dataset.source = Source::kSynthetic;
  for (auto& entry : stream) {
    dataset.reports.push_back(std::move(entry.report));
    dataset.labels.push_back(entry.label);
  }
  fs::path target = fs::path(opts.out_dir) / "dataset.csv";
  fs::path tmp = target;
  tmp += ".tmp";
  write_csv(tmp, dataset);
  fs::rename(tmp, target);
  log::info("generate: wrote " + std::to_string(dataset.size()) + " reports to " +
            target.string());
  return 0;
}

int cmd_run(const CliOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("run: --config is required");
  Config cfg = Config::parse_file(opts.config_path);
  std::uint64_t seed = opts.seed ? *opts.seed
                                 : static_cast<std::uint64_t>(cfg.get_long("run.seed", 42));

  Dataset dataset;
  if (cfg.has("run.dataset")) {
    dataset = load_csv(cfg.get_string("run.dataset"), task_from_config(cfg));
  } else {
    PopulationConfig pop = population_from_config(cfg);
    Rng data_rng(seed, 1);
    auto stream = generate_stream(pop, data_rng);
    dataset.task = pop.task;
    for (auto& entry : stream) {
      dataset.reports.push_back(std::move(entry.report));
      dataset.labels.push_back(entry.label);
    }
  }
  if (dataset.reports.empty()) throw std::runtime_error("run: dataset is empty");

  verify::PipelineConfig pc = pipeline_from_config(cfg, dataset.task, seed);
  const long bootstrap_ticks = cfg.get_long("pipeline.bootstrap_ticks", 1);

  std::vector<std::size_t> boot_idx, stream_idx;
  for (std::size_t i = 0; i < dataset.reports.size(); ++i)
    (dataset.reports[i].tick < bootstrap_ticks ? boot_idx : stream_idx).push_back(i);
  std::vector<Report> boot;
  for (std::size_t i : boot_idx) boot.push_back(dataset.reports[i]);
  if (static_cast<int>(boot.size()) < 2 * pc.min_pts)
    throw ConfigError("run: pipeline.bootstrap_ticks selects too few reports");

  fs::create_directories(opts.out_dir);
  write_manifest(opts.out_dir, opts, cfg.raw_bytes(), seed);

  Rng pipe_rng(seed, 2);
  verify::PipelineState state;
  try {
    state = verify::bootstrap(boot, pc, std::nullopt, pipe_rng);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("run: bootstrap failed: ") + e.what());
  }

  std::string events;
  metrics::ConfusionMatrix cm;
  bool have_truth = true;
  long retrains = 0;
  long current_tick = stream_idx.empty() ? 0 : dataset.reports[stream_idx.front()].tick;
  auto drift_check = [&](long tick) {
    if (verify::check_and_recluster(state, pipe_rng)) {
      ++retrains;
      verify::PipelineEvent event;
      event.tick = tick;
      event.reporter_id = "";
      event.perception = state.monitor.perception;
      event.retrain = true;
      events += verify::to_json(event).dump() + "\n";
    }
  };
  for (std::size_t i : stream_idx) {
    const Report& report = dataset.reports[i];
    if (report.tick != current_tick) {
      drift_check(current_tick);
      current_tick = report.tick;
    }
    auto [label, score] = verify::ingest_report(state, report);
    verify::PipelineEvent event;
    event.tick = report.tick;
    event.reporter_id = report.reporter_id;
    event.predicted_label = label.value;
    event.score = score;
    event.perception = state.monitor.perception;
    event.drift_stat = state.monitor.window.empty() ? 0.0 : verify::drift_statistic(state);
    events += verify::to_json(event).dump() + "\n";

    if (dataset.labels[i].has_value()) {
      const int truth = dataset.labels[i]->value;
      if (label.value == kLegitimate)
        (truth == kLegitimate ? cm.tp : cm.fp) += 1;
      else
        (truth == kLegitimate ? cm.fn : cm.tn) += 1;
    } else {
      have_truth = false;
    }
  }
  if (!stream_idx.empty()) drift_check(current_tick);

  atomic_write(fs::path(opts.out_dir) / "events.ndjson", events);

  json metrics_doc{{"reports_streamed", stream_idx.size()},
                   {"retrains", retrains},
                   {"terminal_perception", state.monitor.perception}};
  if (have_truth && cm.total() > 0) {
    metrics::Rates r = metrics::rates(cm);
    json rates_doc{{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
    if (r.accuracy) rates_doc["accuracy"] = *r.accuracy;
    if (r.tpr) rates_doc["tpr"] = *r.tpr;
    if (r.fpr) rates_doc["fpr"] = *r.fpr;
    if (r.precision) rates_doc["precision"] = *r.precision;
    metrics_doc["confusion"] = rates_doc;
  }
  atomic_write(fs::path(opts.out_dir) / "metrics.json", metrics_doc.dump(2) + "\n");
  return 0;
}

experiments::ExperimentConfig experiment_from_config(const CliOptions& opts, const Config& cfg) {
  experiments::ExperimentConfig ec;
  try {
    ec = experiments::ExperimentConfig::defaults(opts.experiment_id);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ec.repetitions = static_cast<int>(cfg.get_long("experiment.repetitions", ec.repetitions));
  ec.seed = static_cast<std::uint64_t>(cfg.get_long("experiment.seed", 42));
  ec.users = static_cast<int>(cfg.get_long("experiment.users", ec.users));
  ec.ticks = cfg.get_long("experiment.ticks", ec.ticks);
  ec.values_per_report =
      static_cast<int>(cfg.get_long("experiment.values_per_report", ec.values_per_report));
  ec.legit.mu = cfg.get_double("experiment.legit_mu", ec.legit.mu);
  ec.legit.sigma = cfg.get_double("experiment.legit_sigma", ec.legit.sigma);
  ec.mu_grid = cfg.get_double_list("experiment.mu_grid", ec.mu_grid);
  ec.sigma_grid = cfg.get_double_list("experiment.sigma_grid", ec.sigma_grid);
  ec.fractions = cfg.get_double_list("experiment.fractions", ec.fractions);
  ec.fraction = cfg.get_double("experiment.fraction", ec.fraction);
  ec.fig4a_values_per_report = static_cast<int>(
      cfg.get_long("experiment.fig4a_values_per_report", ec.fig4a_values_per_report));
  ec.cls_users = static_cast<int>(cfg.get_long("experiment.cls_users", ec.cls_users));
  ec.cls_values_per_report =
      static_cast<int>(cfg.get_long("experiment.cls_values_per_report", ec.cls_values_per_report));
  ec.cls_legit.mu = cfg.get_double("experiment.cls_legit_mu", ec.cls_legit.mu);
  ec.cls_legit.sigma = cfg.get_double("experiment.cls_legit_sigma", ec.cls_legit.sigma);
  ec.cls_adv.mu = cfg.get_double("experiment.cls_adv_mu", ec.cls_adv.mu);
  ec.cls_adv.sigma = cfg.get_double("experiment.cls_adv_sigma", ec.cls_adv.sigma);
  ec.corruption_users =
      static_cast<int>(cfg.get_long("experiment.corruption_users", ec.corruption_users));
  ec.corruption_levels = cfg.get_double_list("experiment.corruption_levels", ec.corruption_levels);
  ec.theta_grid = cfg.get_double_list("experiment.theta_grid", ec.theta_grid);
  ec.cv_folds = static_cast<int>(cfg.get_long("experiment.cv_folds", ec.cv_folds));
  if (cfg.has("experiment.variants")) {
    ec.variants.clear();
    try {
      for (const std::string& name : cfg.get_string_list("experiment.variants"))
        ec.variants.push_back(learn::variant_from_name(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.name() + ": " + e.what());
    }
  }
  return ec;
}

int cmd_experiment(const CliOptions& opts) {
  Config cfg = opts.config_path.empty() ? Config::parse_string("", "<defaults>")
                                        : Config::parse_file(opts.config_path);
  experiments::ExperimentConfig ec = experiment_from_config(opts, cfg);
  if (opts.seed) ec.seed = *opts.seed;
  if (opts.jobs) ec.jobs = *opts.jobs;
  try {
    experiments::validate(ec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  fs::create_directories(opts.out_dir);
  write_manifest(opts.out_dir, opts, cfg.raw_bytes(), ec.seed);

  auto records = experiments::run(ec);
  experiments::write_csv(fs::path(opts.out_dir) / (ec.id + ".csv"), records);
  json summary{{"experiment", ec.id},
               {"seed", ec.seed},
               {"repetitions", ec.repetitions},
               {"summary", experiments::summarize(records)}};
  atomic_write(fs::path(opts.out_dir) / (ec.id + "_summary.json"), summary.dump(2) + "\n");
  log::info("experiment " + ec.id + ": " + std::to_string(records.size()) + " records");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCS data verification pipeline"};
  app.require_subcommand(1);

  CliOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "configuration file");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "seed override");
    sub->add_option("--jobs", opts.jobs, "parallel grid jobs");
  };
  CLI::App* generate = app.add_subcommand("generate", "emit a labeled synthetic dataset");
  add_common(generate);
  CLI::App* run_cmd = app.add_subcommand("run", "run the verification pipeline once");
  add_common(run_cmd);
  CLI::App* experiment = app.add_subcommand("experiment", "run an experiment sweep");
  experiment->add_option("id", opts.experiment_id, "experiment id")->required();
  add_common(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(opts);
    if (run_cmd->parsed()) return cmd_run(opts);
    if (experiment->parsed()) return cmd_experiment(opts);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
