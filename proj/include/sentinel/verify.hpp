#pragma once

#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentinel/cluster.hpp"
#include "sentinel/core.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/learn.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {
namespace verify {

struct PipelineConfig {
  FeatureSpec feature;
  int min_pts = 4;              // DBSCAN density floor; eps is re-estimated per batch
  double eps_scale = 1.0;       // multiplier on the estimated eps; < 1 peels tails into noise
  learn::HyperParams hp;
  std::vector<learn::Variant> variants{learn::Variant::kNaiveBayes, learn::Variant::kRandomForest,
                                       learn::Variant::kSvm, learn::Variant::kMlp};
  learn::Variant active = learn::Variant::kSvm;  // gates acceptance
  double theta = 1.5;        // sensitivity threshold in units of legitimate sigma
  int window_size = 50;      // W
  double alpha = 0.05;       // EWMA weight for the perception update
  int retrain_buffer_factor = 4;  // buffer holds the last W * factor reports
};

struct DriftMonitorState {
  double perception = 0.0;           // current estimate of the phenomenon
  double perception_at_train = 0.0;  // frozen at the last (re)training
  std::deque<double> window;         // raw means of the last W accepted reports
  long ticks_since_train = 0;
};

struct PipelineState {
  PipelineConfig config;
  cluster::ClusterModel cluster_model;
  std::map<learn::Variant, learn::TrainedClassifier> classifiers;
  DriftMonitorState monitor;
  std::deque<Report> retrain_buffer;
};

/// Training phase: featurize -> dbscan -> cluster-derived labels (prior-
/// proximity when a prior is given) -> train every requested variant.
/// Perception starts at the mean raw_mean of the +1-labeled reports.
PipelineState bootstrap(const std::vector<Report>& reports, const PipelineConfig& config,
                        std::optional<double> prior, Rng& rng);

/// Classification phase for one incoming report. Accepted (+1) reports
/// update the window and the EWMA perception; every report enters the
/// retraining buffer.
std::pair<Label, double> ingest_report(PipelineState& state, const Report& report);

/// Dimensionless conflict score:
/// |mean(window) - perception_at_last_training| / sigma_legit.
double drift_statistic(const PipelineState& state);

/// Concept-drift check: when the statistic exceeds theta, re-bootstrap on
/// the given reports with the current perception as prior.
bool check_and_recluster(PipelineState& state, const std::vector<Report>& recent_reports, Rng& rng);

/// Convenience overload over the internal retraining buffer.
bool check_and_recluster(PipelineState& state, Rng& rng);

struct PipelineEvent {
  long tick = 0;
  std::string reporter_id;
  int predicted_label = 0;
  double score = 0.0;
  double perception = 0.0;
  double drift_stat = 0.0;
  bool retrain = false;
};

nlohmann::json to_json(const PipelineEvent& event);

}  // namespace verify
}  // namespace sentinel
