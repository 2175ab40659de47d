#include "sentinel/verify.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sentinel {
namespace verify {

PipelineState bootstrap(const std::vector<Report>& reports, const PipelineConfig& config,
                        std::optional<double> prior, Rng& rng) {
  if (static_cast<int>(reports.size()) < 2 * config.min_pts)
    throw std::invalid_argument("bootstrap: need at least 2 * min_pts reports");
  if (!(config.theta > 0.0)) throw std::invalid_argument("bootstrap: theta must be > 0");
  if (config.window_size < 1) throw std::invalid_argument("bootstrap: window_size must be >= 1");
  if (!(config.eps_scale > 0.0)) throw std::invalid_argument("bootstrap: eps_scale must be > 0");

  std::vector<std::vector<double>> points;
  std::vector<double> raw_means;
  points.reserve(reports.size());
  for (const Report& r : reports) {
    FeatureVector fv = featurize(r, config.feature.bins, config.feature.lo, config.feature.hi);
    raw_means.push_back(fv.raw_mean);
    points.push_back(feature_coords(fv, config.feature.sigma_legit));
  }

  cluster::DbscanParams params;
  params.min_pts = config.min_pts;
  params.eps = cluster::estimate_eps(points, config.min_pts) * config.eps_scale;

  PipelineState state;
  state.config = config;
  state.cluster_model = cluster::dbscan(points, params);
  auto labels = cluster::assign_labels(state.cluster_model, points, raw_means, prior);

  std::vector<int> y(labels.size());
  double legit_sum = 0.0;
  long legit_count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i].value;
    if (y[i] == kLegitimate) {
      legit_sum += raw_means[i];
      ++legit_count;
    }
  }

  learn::HyperParams hp = config.hp;
  hp.seed = splitmix64(hp.seed ^ rng.next_u64());
  for (learn::Variant variant : config.variants)
    state.classifiers.emplace(variant, learn::train(variant, points, y, hp));
  if (!state.classifiers.count(config.active))
    throw std::invalid_argument("bootstrap: active variant not among trained variants");

  state.monitor.perception = legit_sum / static_cast<double>(legit_count);
  state.monitor.perception_at_train = state.monitor.perception;
  state.monitor.window.clear();
  state.monitor.ticks_since_train = 0;
  return state;
}

std::pair<Label, double> ingest_report(PipelineState& state, const Report& report) {
  const PipelineConfig& cfg = state.config;
  FeatureVector fv = featurize(report, cfg.feature.bins, cfg.feature.lo, cfg.feature.hi);
  auto coords = feature_coords(fv, cfg.feature.sigma_legit);
  auto [value, score] = learn::predict(state.classifiers.at(cfg.active), coords);

  if (value == kLegitimate) {
    state.monitor.window.push_back(fv.raw_mean);
    while (static_cast<int>(state.monitor.window.size()) > cfg.window_size)
      state.monitor.window.pop_front();
    state.monitor.perception =
        (1.0 - cfg.alpha) * state.monitor.perception + cfg.alpha * fv.raw_mean;
  }
  ++state.monitor.ticks_since_train;

  state.retrain_buffer.push_back(report);
  const std::size_t cap =
      static_cast<std::size_t>(cfg.window_size) * static_cast<std::size_t>(cfg.retrain_buffer_factor);
  while (state.retrain_buffer.size() > cap) state.retrain_buffer.pop_front();

  return {Label{value, Provenance::kClassifierPredicted}, score};
}

double drift_statistic(const PipelineState& state) {
  if (state.monitor.window.empty()) throw std::runtime_error("drift_statistic: empty window");
  double mean = std::accumulate(state.monitor.window.begin(), state.monitor.window.end(), 0.0) /
                static_cast<double>(state.monitor.window.size());
  return std::fabs(mean - state.monitor.perception_at_train) / state.config.feature.sigma_legit;
}

bool check_and_recluster(PipelineState& state, const std::vector<Report>& recent_reports, Rng& rng) {
  if (state.monitor.window.empty()) return false;
  if (!(drift_statistic(state) > state.config.theta)) return false;
  PipelineState rebuilt = bootstrap(recent_reports, state.config, state.monitor.perception, rng);
  rebuilt.retrain_buffer = state.retrain_buffer;
  state = std::move(rebuilt);
  return true;
}

bool check_and_recluster(PipelineState& state, Rng& rng) {
  std::vector<Report> recent(state.retrain_buffer.begin(), state.retrain_buffer.end());
  return check_and_recluster(state, recent, rng);
}

nlohmann::json to_json(const PipelineEvent& event) {
  return nlohmann::json{{"tick", event.tick},
                        {"reporter_id", event.reporter_id},
                        {"predicted_label", event.predicted_label},
                        {"score", event.score},
                        {"perception", event.perception},
                        {"drift_stat", event.drift_stat},
                        {"retrain", event.retrain}};
}

}  // namespace verify
}  // namespace sentinel
