#include "sentinel/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "sentinel/cluster.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/log.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/rng.hpp"
#include "sentinel/synth.hpp"
#include "sentinel/verify.hpp"

namespace sentinel {
namespace experiments {

namespace {

constexpr int kMinPts = 4;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

SensingTask make_task(const std::string& phenomenon, int values_per_report,
                      const GaussianSpec& legit) {
  SensingTask task;
  task.phenomenon = phenomenon;
  task.values_per_report = values_per_report;
  task.interval = 1;
  task.units = {SpatialUnit{"unit-0", 0.0, 0.0, 1.0, 1.0}};
  task.legit_spec = legit;
  return task;
}

std::uint64_t job_seed(const ExperimentConfig& cfg, std::uint64_t exp_code, std::uint64_t grid_idx,
                       std::uint64_t rep) {
  return splitmix64(cfg.seed ^ splitmix64(exp_code * 0x9E3779B97F4A7C15ULL + grid_idx * 1000003ULL +
                                          rep));
}

/// Runs fn(0..n-1) on up to `jobs` worker threads. Each index writes only
/// its own output slot, so aggregation stays order-independent.
void parallel_jobs(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct FeaturizedStream {
  std::vector<std::vector<double>> points;
  std::vector<double> raw_means;
  std::vector<Label> truth;
};

FeaturizedStream featurize_stream(const std::vector<LabeledReport>& stream,
                                  const FeatureSpec& spec) {
  FeaturizedStream out;
  out.points.reserve(stream.size());
  out.raw_means.reserve(stream.size());
  out.truth.reserve(stream.size());
  for (const LabeledReport& entry : stream) {
    FeatureVector fv = featurize(entry.report, spec.bins, spec.lo, spec.hi);
    out.raw_means.push_back(fv.raw_mean);
    out.points.push_back(feature_coords(fv, spec.sigma_legit));
    out.truth.push_back(entry.label);
  }
  return out;
}

/// Cluster-derived labels; an all-noise model degenerates to rejecting
/// everything instead of aborting the sweep.
std::vector<Label> derive_labels(cluster::ClusterModel& model, const FeaturizedStream& data,
                                 std::optional<double> prior) {
  try {
    return cluster::assign_labels(model, data.points, data.raw_means, prior);
  } catch (const std::runtime_error& e) {
    log::warn(std::string("experiment: ") + e.what() + "; labeling all points malicious");
    return std::vector<Label>(data.points.size(),
                              Label{kMalicious, Provenance::kClusterDerived});
  }
}

double precision_job(const PopulationConfig& pop, std::uint64_t seed) {
  Rng rng(seed, 0);
  auto stream = generate_stream(pop, rng);
  FeatureSpec spec = FeatureSpec::for_task(pop.task);
  FeaturizedStream data = featurize_stream(stream, spec);
  cluster::DbscanParams params;
  params.min_pts = kMinPts;
  params.eps = cluster::estimate_eps(data.points, kMinPts);
  cluster::ClusterModel model = cluster::dbscan(data.points, params);
  auto derived = derive_labels(model, data, std::nullopt);
  return cluster::clustering_precision(derived, data.truth);
}

PopulationConfig static_population(int users, long ticks, int values_per_report,
                                   const GaussianSpec& legit, double fraction,
                                   const GaussianSpec& adv) {
  PopulationConfig pop;
  pop.n_users = users;
  pop.ticks = ticks;
  pop.task = make_task("phenomenon", values_per_report, legit);
  pop.adversary.fraction = fraction;
  pop.adversary.strategy = fraction > 0.0 ? Strategy::kStaticCase1 : Strategy::kNone;
  pop.adversary.adv_spec = adv;
  return pop;
}

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

HoldoutSplit holdout_indices(std::size_t n, double train_fraction, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  std::size_t cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  cut = std::min(cut, n);
  HoldoutSplit split;
  split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
  split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  return split;
}

/// Train each variant on (x, y) and score accuracy against the held-out
/// ground truth. Single-class training labels degenerate to a constant
/// predictor shared by every variant.
void variant_accuracies(const ExperimentConfig& cfg, const learn::Samples& train_x,
                        const std::vector<int>& train_y, const learn::Samples& test_x,
                        const std::vector<int>& test_truth, std::uint64_t seed,
                        std::vector<std::pair<learn::Variant, double>>& out) {
  bool has_pos = false, has_neg = false;
  for (int y : train_y) (y == kLegitimate ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    log::warn("experiment: single-class bootstrap labels, using constant predictor");
    const int constant = has_pos ? kLegitimate : kMalicious;
    long hits = std::count(test_truth.begin(), test_truth.end(), constant);
    double acc = test_truth.empty() ? 0.0 : static_cast<double>(hits) / test_truth.size();
    for (learn::Variant v : cfg.variants) out.emplace_back(v, acc);
    return;
  }
  learn::HyperParams hp = cfg.hp;
  hp.seed = seed;
  for (learn::Variant variant : cfg.variants) {
    learn::TrainedClassifier clf = learn::train(variant, train_x, train_y, hp);
    long hits = 0;
    for (std::size_t i = 0; i < test_x.size(); ++i)
      if (learn::predict(clf, test_x[i]).first == test_truth[i]) ++hits;
    out.emplace_back(variant, test_truth.empty()
                                  ? 0.0
                                  : static_cast<double>(hits) / static_cast<double>(test_x.size()));
  }
}

struct DemoOutcome {
  long triggers = 0;
  long first_trigger_tick = 0;
  double terminal_perception = 0.0;
  double accuracy_start = 0.0;
  double accuracy_end = 0.0;
  double true_final_mean = 0.0;
  double peak_bias_sigma = 0.0;  // max perception excursion above the true legit mean
};

/// A clustering without noise yields single-class labels and no trainable
/// discriminator; shrinking eps peels tail reports into noise while keeping
/// the cluster topology intact.
constexpr double kEpsLadder[] = {1.0, 0.85, 0.7, 0.55, 0.4};

verify::PipelineState demo_bootstrap(const std::vector<Report>& boot,
                                     const verify::PipelineConfig& pc, Rng& rng) {
  for (double scale : kEpsLadder) {
    verify::PipelineConfig attempt = pc;
    attempt.eps_scale = pc.eps_scale * scale;
    try {
      verify::PipelineState state = verify::bootstrap(boot, attempt, std::nullopt, rng);
      state.config.eps_scale = pc.eps_scale;
      return state;
    } catch (const std::exception& e) {
      log::debug(std::string("drift-demo: bootstrap at eps_scale ") + std::to_string(scale) +
                 " failed: " + e.what());
    }
  }
  throw std::runtime_error("drift-demo: bootstrap failed at every eps scale");
}

bool demo_check(verify::PipelineState& state, Rng& rng) {
  const double original = state.config.eps_scale;
  for (double scale : kEpsLadder) {
    state.config.eps_scale = original * scale;
    try {
      bool retrained = verify::check_and_recluster(state, rng);
      state.config.eps_scale = original;
      return retrained;
    } catch (const std::exception&) {
      // stat stayed above theta; retry with a smaller eps
    }
  }
  state.config.eps_scale = original;
  return false;
}

/// Streams one population through the full pipeline: bootstrap on the first
/// bootstrap_ticks ticks, then per tick classify every report and run one
/// drift check. Start/end accuracies cover the 50 ticks after bootstrap and
/// the last 50 ticks.
DemoOutcome simulate_demo(const PopulationConfig& pop, const ExperimentConfig& cfg, double theta,
                          std::uint64_t seed, int min_pts) {
  Rng data_rng(seed, 101);
  auto stream = generate_stream(pop, data_rng);
  const std::size_t per_tick = static_cast<std::size_t>(pop.n_users);

  verify::PipelineConfig pc;
  pc.feature = FeatureSpec::for_task(pop.task);
  pc.min_pts = min_pts;
  pc.hp = cfg.hp;
  pc.hp.seed = seed;
  pc.variants = {learn::Variant::kRandomForest};
  pc.active = learn::Variant::kRandomForest;
  pc.theta = theta;
  pc.window_size = cfg.window_size;

  std::vector<Report> boot;
  boot.reserve(static_cast<std::size_t>(cfg.bootstrap_ticks) * per_tick);
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.bootstrap_ticks) * per_tick; ++i)
    boot.push_back(stream[i].report);

  Rng pipe_rng(seed, 202);
  verify::PipelineState state = demo_bootstrap(boot, pc, pipe_rng);

  DemoOutcome out;
  out.first_trigger_tick = pop.ticks;  // sentinel: never triggered
  const long start_hi = cfg.bootstrap_ticks + 50;
  const long end_lo = pop.ticks - 50;
  long start_hits = 0, start_total = 0, end_hits = 0, end_total = 0;

  for (long tick = cfg.bootstrap_ticks; tick < pop.ticks; ++tick) {
    for (std::size_t u = 0; u < per_tick; ++u) {
      const LabeledReport& entry = stream[static_cast<std::size_t>(tick) * per_tick + u];
      auto [label, score] = verify::ingest_report(state, entry.report);
      const bool hit = label.value == entry.label.value;
      if (tick < start_hi) {
        ++start_total;
        start_hits += hit;
      }
      if (tick >= end_lo) {
        ++end_total;
        end_hits += hit;
      }
    }
    const bool retrained = demo_check(state, pipe_rng);
    if (retrained) {
      ++out.triggers;
      if (out.first_trigger_tick == pop.ticks) out.first_trigger_tick = tick;
    }
    const double bias =
        (state.monitor.perception - legit_spec_at(pop, tick).mu) / pop.task.legit_spec.sigma;
    out.peak_bias_sigma = std::max(out.peak_bias_sigma, bias);
  }

  out.terminal_perception = state.monitor.perception;
  out.true_final_mean = legit_spec_at(pop, pop.ticks - 1).mu;
  if (start_total > 0) out.accuracy_start = static_cast<double>(start_hits) / start_total;
  if (end_total > 0) out.accuracy_end = static_cast<double>(end_hits) / end_total;
  return out;
}

using Grid = std::vector<std::pair<std::string, std::string>>;

void emit(std::vector<ResultRecord>& records, const ExperimentConfig& cfg, Grid grid, int rep,
          std::uint64_t seed, const std::string& metric, double value) {
  if (!std::isfinite(value)) throw std::logic_error("experiment metric '" + metric + "' not finite");
  records.push_back(ResultRecord{cfg.id, std::move(grid), rep, seed, metric, value});
}

std::vector<ResultRecord> flatten(std::vector<std::vector<ResultRecord>>& per_job) {
  std::vector<ResultRecord> out;
  for (auto& job : per_job)
    for (auto& rec : job) out.push_back(std::move(rec));
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& id) {
  ExperimentConfig cfg;
  cfg.id = id;
  if (id == "fig2a") {
    cfg.mu_grid = {16, 17, 18, 19, 20, 21, 22};
    cfg.fractions = {0.35, 0.40, 0.45};
  } else if (id == "fig2b") {
    cfg.mu_grid = {16, 17, 18, 20, 22};
    cfg.sigma_grid = {1, 2, 4};
  } else if (id == "fig3") {
    // scenario fields carry the defaults
  } else if (id == "fig4a") {
    cfg.mu_grid = {16.8, 17.6, 19.2, 20.8, 22.4};
  } else if (id == "fig4b") {
    cfg.corruption_levels = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  } else if (id == "drift-demo") {
    cfg.theta_grid = {0.5, 1.0, 1.5, 2.0};
    cfg.repetitions = 3;
  } else {
    throw std::invalid_argument(
        "unknown experiment id '" + id +
        "' (valid: fig2a, fig2b, fig3, fig4a, fig4b, drift-demo)");
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1)
    throw std::invalid_argument("ExperimentConfig: repetitions must be >= 1");
  if (cfg.variants.empty()) throw std::invalid_argument("ExperimentConfig: no variants");
  auto need = [&](bool ok, const char* what) {
    if (!ok)
      throw std::invalid_argument(std::string("ExperimentConfig(") + cfg.id + "): " + what);
  };
  if (cfg.id == "fig2a") {
    need(!cfg.mu_grid.empty(), "empty mu grid");
    need(!cfg.fractions.empty(), "empty fractions grid");
  } else if (cfg.id == "fig2b") {
    need(!cfg.mu_grid.empty(), "empty mu grid");
    need(!cfg.sigma_grid.empty(), "empty sigma grid");
  } else if (cfg.id == "fig3") {
    need(cfg.cv_folds >= 2, "cv_folds must be >= 2");
  } else if (cfg.id == "fig4a") {
    need(!cfg.mu_grid.empty(), "empty mu grid");
  } else if (cfg.id == "fig4b") {
    need(!cfg.corruption_levels.empty(), "empty corruption grid");
    for (double p : cfg.corruption_levels)
      need(p >= 0.5 && p <= 1.0, "corruption levels must lie in [0.5, 1]");
  } else if (cfg.id == "drift-demo") {
    need(!cfg.theta_grid.empty(), "empty theta grid");
    need(cfg.demo_ticks >= cfg.bootstrap_ticks + 100, "demo_ticks too small");
  } else {
    throw std::invalid_argument("unknown experiment id '" + cfg.id + "'");
  }
}

std::vector<ResultRecord> run_fig2a(const ExperimentConfig& cfg) {
  struct Point {
    double fraction, mu;
  };
  std::vector<Point> grid;
  for (double f : cfg.fractions)
    for (double mu : cfg.mu_grid) grid.push_back({f, mu});

  const std::size_t jobs = grid.size() * static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<ResultRecord>> per_job(jobs);
  parallel_jobs(cfg.jobs, jobs, [&](std::size_t j) {
    const std::size_t g = j / static_cast<std::size_t>(cfg.repetitions);
    const int rep = static_cast<int>(j % static_cast<std::size_t>(cfg.repetitions));
    const std::uint64_t seed = job_seed(cfg, 0x2A, g, static_cast<std::uint64_t>(rep));
    PopulationConfig pop =
        static_population(cfg.users, cfg.ticks, cfg.values_per_report, cfg.legit,
                          grid[g].fraction, GaussianSpec{grid[g].mu, cfg.legit.sigma});
    double precision = precision_job(pop, seed);
    emit(per_job[j], cfg, {{"fraction", fmt(grid[g].fraction)}, {"mu_a", fmt(grid[g].mu)}}, rep,
         seed, "precision", precision);
  });
  return flatten(per_job);
}

std::vector<ResultRecord> run_fig2b(const ExperimentConfig& cfg) {
  struct Point {
    double mu, sigma;
  };
  std::vector<Point> grid;
  for (double mu : cfg.mu_grid)
    for (double sigma : cfg.sigma_grid) grid.push_back({mu, sigma});

  const std::size_t jobs = grid.size() * static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<ResultRecord>> per_job(jobs);
  parallel_jobs(cfg.jobs, jobs, [&](std::size_t j) {
    const std::size_t g = j / static_cast<std::size_t>(cfg.repetitions);
    const int rep = static_cast<int>(j % static_cast<std::size_t>(cfg.repetitions));
    const std::uint64_t seed = job_seed(cfg, 0x2B, g, static_cast<std::uint64_t>(rep));
    PopulationConfig pop =
        static_population(cfg.users, cfg.ticks, cfg.values_per_report, cfg.legit, cfg.fraction,
                          GaussianSpec{grid[g].mu, grid[g].sigma});
    double precision = precision_job(pop, seed);
    emit(per_job[j], cfg, {{"mu_a", fmt(grid[g].mu)}, {"sigma_a", fmt(grid[g].sigma)}}, rep, seed,
         "precision", precision);
  });
  return flatten(per_job);
}

std::vector<ResultRecord> run_fig3(const ExperimentConfig& cfg) {
  const std::size_t jobs = static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<ResultRecord>> per_job(jobs);
  parallel_jobs(cfg.jobs, jobs, [&](std::size_t j) {
    const int rep = static_cast<int>(j);
    const std::uint64_t seed = job_seed(cfg, 0x30, 0, static_cast<std::uint64_t>(rep));
    PopulationConfig pop = static_population(cfg.cls_users, cfg.ticks, cfg.cls_values_per_report,
                                             cfg.cls_legit, cfg.fraction, cfg.cls_adv);
    Rng rng(seed, 0);
    auto stream = generate_stream(pop, rng);
    FeatureSpec spec = FeatureSpec::for_task(pop.task);
    FeaturizedStream data = featurize_stream(stream, spec);

    cluster::DbscanParams params;
    params.min_pts = kMinPts;
    params.eps = cluster::estimate_eps(data.points, kMinPts);
    cluster::ClusterModel model = cluster::dbscan(data.points, params);
    auto derived = derive_labels(model, data, std::nullopt);
    std::vector<int> y(derived.size());
    for (std::size_t i = 0; i < derived.size(); ++i) y[i] = derived[i].value;

    bool has_pos = false, has_neg = false;
    for (int v : y) (v == kLegitimate ? has_pos : has_neg) = true;

    learn::HyperParams hp = cfg.hp;
    hp.seed = seed;
    for (learn::Variant variant : cfg.variants) {
      Grid grid{{"variant", learn::variant_name(variant)}};
      if (!has_pos || !has_neg) {
        // Fully merged clustering leaves nothing to cross-validate; a
        // constant predictor matches the single derived class exactly.
        log::warn("fig3: single-class bootstrap labels, reporting constant predictor");
        emit(per_job[j], cfg, grid, rep, seed, "accuracy", 1.0);
        continue;
      }
      metrics::ConfusionMatrix cm =
          learn::crossval(variant, data.points, y, hp, cfg.cv_folds, rng);
      metrics::Rates r = metrics::rates(cm);
      if (r.accuracy) emit(per_job[j], cfg, grid, rep, seed, "accuracy", *r.accuracy);
      if (r.fpr) emit(per_job[j], cfg, grid, rep, seed, "fpr", *r.fpr);
      emit(per_job[j], cfg, grid, rep, seed, "tp", static_cast<double>(cm.tp));
      emit(per_job[j], cfg, grid, rep, seed, "fp", static_cast<double>(cm.fp));
      emit(per_job[j], cfg, grid, rep, seed, "tn", static_cast<double>(cm.tn));
      emit(per_job[j], cfg, grid, rep, seed, "fn", static_cast<double>(cm.fn));
    }
  });
  return flatten(per_job);
}

std::vector<ResultRecord> run_fig4a(const ExperimentConfig& cfg) {
  const std::size_t jobs =
      cfg.mu_grid.size() * static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<ResultRecord>> per_job(jobs);
  parallel_jobs(cfg.jobs, jobs, [&](std::size_t j) {
    const std::size_t g = j / static_cast<std::size_t>(cfg.repetitions);
    const int rep = static_cast<int>(j % static_cast<std::size_t>(cfg.repetitions));
    const std::uint64_t seed = job_seed(cfg, 0x4A, g, static_cast<std::uint64_t>(rep));
    const double mu_a = cfg.mu_grid[g];
    PopulationConfig pop =
        static_population(cfg.users, cfg.ticks, cfg.fig4a_values_per_report, cfg.legit,
                          cfg.fraction, GaussianSpec{mu_a, cfg.legit.sigma});
    Rng rng(seed, 0);
    auto stream = generate_stream(pop, rng);
    FeatureSpec spec = FeatureSpec::for_task(pop.task);
    FeaturizedStream data = featurize_stream(stream, spec);

    HoldoutSplit split = holdout_indices(data.points.size(), cfg.holdout_fraction, rng);
    FeaturizedStream train;
    for (std::size_t i : split.train) {
      train.points.push_back(data.points[i]);
      train.raw_means.push_back(data.raw_means[i]);
      train.truth.push_back(data.truth[i]);
    }
    cluster::DbscanParams params;
    params.min_pts = kMinPts;
    params.eps = cluster::estimate_eps(train.points, kMinPts);
    cluster::ClusterModel model = cluster::dbscan(train.points, params);
    auto derived = derive_labels(model, train, std::nullopt);
    std::vector<int> train_y(derived.size());
    for (std::size_t i = 0; i < derived.size(); ++i) train_y[i] = derived[i].value;

    learn::Samples test_x;
    std::vector<int> test_truth;
    for (std::size_t i : split.test) {
      test_x.push_back(data.points[i]);
      test_truth.push_back(data.truth[i].value);
    }

    std::vector<std::pair<learn::Variant, double>> accs;
    variant_accuracies(cfg, train.points, train_y, test_x, test_truth, seed, accs);
    for (auto& [variant, acc] : accs)
      emit(per_job[j], cfg, {{"mu_a", fmt(mu_a)}, {"variant", learn::variant_name(variant)}}, rep,
           seed, "accuracy", acc);
  });
  return flatten(per_job);
}

std::vector<ResultRecord> run_fig4b(const ExperimentConfig& cfg) {
  const std::size_t jobs =
      cfg.corruption_levels.size() * static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<ResultRecord>> per_job(jobs);
  parallel_jobs(cfg.jobs, jobs, [&](std::size_t j) {
    const std::size_t g = j / static_cast<std::size_t>(cfg.repetitions);
    const int rep = static_cast<int>(j % static_cast<std::size_t>(cfg.repetitions));
    const std::uint64_t seed = job_seed(cfg, 0x4B, g, static_cast<std::uint64_t>(rep));
    const double p = cfg.corruption_levels[g];
    PopulationConfig pop =
        static_population(cfg.corruption_users, cfg.ticks, cfg.cls_values_per_report,
                          cfg.cls_legit, cfg.fraction, cfg.cls_adv);
    Rng rng(seed, 0);
    auto stream = generate_stream(pop, rng);
    FeatureSpec spec = FeatureSpec::for_task(pop.task);
    FeaturizedStream data = featurize_stream(stream, spec);

    HoldoutSplit split = holdout_indices(data.points.size(), cfg.holdout_fraction, rng);
    FeaturizedStream train;
    for (std::size_t i : split.train) {
      train.points.push_back(data.points[i]);
      train.raw_means.push_back(data.raw_means[i]);
      train.truth.push_back(data.truth[i]);
    }
    cluster::DbscanParams params;
    params.min_pts = kMinPts;
    params.eps = cluster::estimate_eps(train.points, kMinPts);
    cluster::ClusterModel model = cluster::dbscan(train.points, params);
    auto derived = derive_labels(model, train, std::nullopt);
    std::vector<int> train_y(derived.size());
    for (std::size_t i = 0; i < derived.size(); ++i) train_y[i] = derived[i].value;

    // Simulated clustering accuracy p: flip a (1 - p) fraction of the
    // bootstrap labels, chosen uniformly at random.
    std::vector<std::size_t> flip_idx(train_y.size());
    std::iota(flip_idx.begin(), flip_idx.end(), std::size_t{0});
    rng.shuffle(flip_idx);
    const std::size_t flips = static_cast<std::size_t>(
        std::llround((1.0 - p) * static_cast<double>(train_y.size())));
    for (std::size_t i = 0; i < flips; ++i) train_y[flip_idx[i]] = -train_y[flip_idx[i]];

    learn::Samples test_x;
    std::vector<int> test_truth;
    for (std::size_t i : split.test) {
      test_x.push_back(data.points[i]);
      test_truth.push_back(data.truth[i].value);
    }

    std::vector<std::pair<learn::Variant, double>> accs;
    variant_accuracies(cfg, train.points, train_y, test_x, test_truth, seed, accs);
    for (auto& [variant, acc] : accs)
      emit(per_job[j], cfg, {{"p", fmt(p)}, {"variant", learn::variant_name(variant)}}, rep, seed,
           "accuracy", acc);
  });
  return flatten(per_job);
}

std::vector<ResultRecord> run_drift_demo(const ExperimentConfig& cfg) {
  const std::size_t jobs = static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<ResultRecord>> per_job(jobs);
  parallel_jobs(cfg.jobs, jobs, [&](std::size_t j) {
    const int rep = static_cast<int>(j);
    const std::uint64_t base = job_seed(cfg, 0xDD, 0, static_cast<std::uint64_t>(rep));
    const double sigma = cfg.legit.sigma;
    const double delta = 0.01 * sigma;
    const double target = cfg.legit.mu + 3.0 * sigma;

    // Genuine concept drift, no adversaries; one pass per theta over the
    // same seeded stream so first-trigger ticks are comparable.
    {
      PopulationConfig pop;
      pop.n_users = cfg.demo_users;
      pop.ticks = cfg.demo_ticks;
      pop.task = make_task("phenomenon", cfg.demo_values_per_report, cfg.legit);
      pop.concept_drift =
          ConceptDrift{cfg.demo_drift_target, cfg.demo_ticks / 5, 7 * cfg.demo_ticks / 10};
      const std::uint64_t seed = splitmix64(base ^ 0x01);
      for (double theta : cfg.theta_grid) {
        DemoOutcome out = simulate_demo(pop, cfg, theta, seed, cfg.demo_min_pts);
        Grid grid{{"scenario", "genuine"}, {"theta", fmt(theta)}};
        emit(per_job[j], cfg, grid, rep, seed, "triggers", static_cast<double>(out.triggers));
        emit(per_job[j], cfg, grid, rep, seed, "first_trigger_tick",
             static_cast<double>(out.first_trigger_tick));
        emit(per_job[j], cfg, grid, rep, seed, "terminal_perception", out.terminal_perception);
        emit(per_job[j], cfg, grid, rep, seed, "true_final_mean", out.true_final_mean);
      }
    }

    // Drifting attack masked by concurrent genuine drift; theta = inf keeps
    // the bootstrap classifier for the whole run.
    {
      PopulationConfig pop;
      pop.n_users = cfg.demo_users;
      pop.ticks = 3 * cfg.demo_ticks / 2;
      pop.task = make_task("phenomenon", cfg.demo_values_per_report, cfg.legit);
      pop.adversary.fraction = cfg.demo_attack_fraction;
      pop.adversary.strategy = Strategy::kDrifting;
      pop.adversary.delta = delta;
      pop.adversary.target = target;
      pop.adversary.noise_sigma = 0.25 * sigma;
      // Legit drift deep enough that the frozen bootstrap classifier starts
      // rejecting genuine reports by the end of the run.
      pop.concept_drift =
          ConceptDrift{cfg.legit.mu + 3.5 * sigma, pop.ticks / 6, 5 * pop.ticks / 6};
      const std::uint64_t seed = splitmix64(base ^ 0x02);
      DemoOutcome out = simulate_demo(pop, cfg, std::numeric_limits<double>::infinity(), seed,
                                      cfg.demo_min_pts);
      Grid grid{{"scenario", "attack"}, {"theta", "inf"}};
      emit(per_job[j], cfg, grid, rep, seed, "triggers", static_cast<double>(out.triggers));
      emit(per_job[j], cfg, grid, rep, seed, "first_trigger_tick",
           static_cast<double>(out.first_trigger_tick));
      emit(per_job[j], cfg, grid, rep, seed, "accuracy_start", out.accuracy_start);
      emit(per_job[j], cfg, grid, rep, seed, "accuracy_end", out.accuracy_end);
    }

    // Over-retraining hazard: theta near zero retrains every tick while a
    // drifting attack drags the merged cluster's centroid.
    {
      PopulationConfig pop;
      pop.n_users = cfg.demo_users;
      pop.ticks = 2 * cfg.demo_ticks;
      pop.task = make_task("phenomenon", cfg.demo_values_per_report, cfg.legit);
      pop.adversary.fraction = cfg.demo_forced_fraction;
      pop.adversary.strategy = Strategy::kDrifting;
      pop.adversary.delta = delta;
      pop.adversary.target = target;
      pop.adversary.noise_sigma = 0.5 * sigma;
      const std::uint64_t seed = splitmix64(base ^ 0x03);
      DemoOutcome out = simulate_demo(pop, cfg, 0.01, seed, cfg.demo_forced_min_pts);
      Grid grid{{"scenario", "forced"}, {"theta", fmt(0.01)}};
      emit(per_job[j], cfg, grid, rep, seed, "triggers", static_cast<double>(out.triggers));
      emit(per_job[j], cfg, grid, rep, seed, "terminal_perception", out.terminal_perception);
      emit(per_job[j], cfg, grid, rep, seed, "peak_bias_sigma", out.peak_bias_sigma);
    }
  });
  return flatten(per_job);
}

std::vector<ResultRecord> run(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.id == "fig2a") return run_fig2a(cfg);
  if (cfg.id == "fig2b") return run_fig2b(cfg);
  if (cfg.id == "fig3") return run_fig3(cfg);
  if (cfg.id == "fig4a") return run_fig4a(cfg);
  if (cfg.id == "fig4b") return run_fig4b(cfg);
  if (cfg.id == "drift-demo") return run_drift_demo(cfg);
  throw std::invalid_argument("unknown experiment id '" + cfg.id + "'");
}

void write_csv(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
  if (records.empty()) throw std::invalid_argument("write_csv: no records");
  const auto& head = records.front().grid;
  for (const ResultRecord& rec : records) {
    if (rec.grid.size() != head.size())
      throw std::invalid_argument("write_csv: inconsistent grid parameters");
    for (std::size_t i = 0; i < head.size(); ++i)
      if (rec.grid[i].first != head[i].first)
        throw std::invalid_argument("write_csv: inconsistent grid parameters");
  }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + tmp.string() + "'");
    out << "experiment";
    for (const auto& [name, value] : head) out << "," << name;
    out << ",repetition,seed,metric,value\n";
    for (const ResultRecord& rec : records) {
      out << rec.experiment;
      for (const auto& [name, value] : rec.grid) out << "," << value;
      out << "," << rec.repetition << "," << rec.seed << "," << rec.metric << ","
          << fmt(rec.value) << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json summarize(const std::vector<ResultRecord>& records) {
  struct Group {
    Grid grid;
    std::string metric;
    std::vector<double> values;
  };
  std::map<std::string, std::size_t> index;
  std::vector<Group> groups;
  for (const ResultRecord& rec : records) {
    std::string key = rec.metric;
    for (const auto& [name, value] : rec.grid) key += "|" + name + "=" + value;
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.push_back(Group{rec.grid, rec.metric, {}});
    groups[it->second].values.push_back(rec.value);
  }

  nlohmann::json out = nlohmann::json::array();
  for (const Group& g : groups) {
    double mean = std::accumulate(g.values.begin(), g.values.end(), 0.0) /
                  static_cast<double>(g.values.size());
    double var = 0.0;
    for (double v : g.values) var += (v - mean) * (v - mean);
    double std_dev =
        g.values.size() > 1 ? std::sqrt(var / static_cast<double>(g.values.size() - 1)) : 0.0;
    nlohmann::json grid = nlohmann::json::object();
    for (const auto& [name, value] : g.grid) grid[name] = value;
    out.push_back({{"grid", grid},
                   {"metric", g.metric},
                   {"mean", mean},
                   {"std", std_dev},
                   {"count", g.values.size()}});
  }
  return out;
}

}  // namespace experiments
}  // namespace sentinel
