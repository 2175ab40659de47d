#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentinel/core.hpp"
#include "sentinel/learn.hpp"

namespace sentinel {
namespace experiments {

/// One sweep description. Defaults depend on the experiment id; start from
/// defaults(id) and override selectively.
struct ExperimentConfig {
  std::string id;  // fig2a | fig2b | fig3 | fig4a | fig4b | drift-demo
  int repetitions = 10;
  std::uint64_t seed = 42;
  int jobs = 0;  // 0 means hardware concurrency
  std::vector<learn::Variant> variants{learn::Variant::kNaiveBayes, learn::Variant::kRandomForest,
                                       learn::Variant::kSvm, learn::Variant::kMlp};
  learn::HyperParams hp;

  // Population shared by the clustering sweeps (fig2*, fig4a).
  int users = 250;
  long ticks = 4;
  int values_per_report = 12;
  GaussianSpec legit{16.0, 2.0};

  int fig4a_values_per_report = 24;  // larger n moves the cluster split boundary below 1.6 sigma

  std::vector<double> mu_grid;          // adversarial means (fig2a, fig2b, fig4a)
  std::vector<double> sigma_grid;       // adversarial sigmas (fig2b)
  std::vector<double> fractions;        // malicious fractions (fig2a)
  double fraction = 0.40;               // single-fraction sweeps

  // Classification scenario (fig3, fig4b).
  GaussianSpec cls_legit{21.0, 1.3};
  GaussianSpec cls_adv{22.0, 2.0};
  int cls_users = 250;
  int cls_values_per_report = 150;
  int cv_folds = 10;

  // fig4b label corruption.
  std::vector<double> corruption_levels;
  int corruption_users = 200;
  double holdout_fraction = 0.7;

  // drift-demo streaming scenarios.
  int demo_users = 100;
  long demo_ticks = 200;
  int demo_values_per_report = 8;
  int demo_min_pts = 20;  // few-value reports quantize the pmf; a higher density floor keeps one cluster
  long bootstrap_ticks = 4;
  std::vector<double> theta_grid;  // genuine-drift sensitivity sweep
  double demo_drift_target = 20.0;
  double demo_attack_fraction = 0.20;
  double demo_forced_fraction = 0.45;
  int demo_forced_min_pts = 30;  // keeps the drifting blob merged with the legit cluster longer
  int window_size = 50;

  static ExperimentConfig defaults(const std::string& id);
};

void validate(const ExperimentConfig& config);

/// One metric observation at one grid point of one repetition. grid holds
/// ordered (name, printed value) pairs, uniform within an experiment.
struct ResultRecord {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> grid;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

std::vector<ResultRecord> run_fig2a(const ExperimentConfig& config);
std::vector<ResultRecord> run_fig2b(const ExperimentConfig& config);
std::vector<ResultRecord> run_fig3(const ExperimentConfig& config);
std::vector<ResultRecord> run_fig4a(const ExperimentConfig& config);
std::vector<ResultRecord> run_fig4b(const ExperimentConfig& config);

/// Streaming pipeline demos. Scenarios: "genuine" (concept drift, one run
/// per theta in theta_grid), "attack" (drifting attack masked by concept
/// drift, theta = inf), "forced" (attack only, theta = 0.01). A
/// first_trigger_tick equal to the scenario's tick count means no trigger.
std::vector<ResultRecord> run_drift_demo(const ExperimentConfig& config);

/// Dispatch by config.id; unknown ids raise std::invalid_argument.
std::vector<ResultRecord> run(const ExperimentConfig& config);

/// CSV columns: experiment, one column per grid parameter, repetition,
/// seed, metric, value.
void write_csv(const std::filesystem::path& path, const std::vector<ResultRecord>& records);

/// Mean/std/count per (grid point, metric).
nlohmann::json summarize(const std::vector<ResultRecord>& records);

}  // namespace experiments
}  // namespace sentinel
