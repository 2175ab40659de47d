#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sentinel/core.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {

/// Empirical probability mass of a report's values over equal-width bins,
/// plus the raw first two moments.
struct FeatureVector {
  std::vector<double> pmf;
  double raw_mean = 0.0;
  double raw_std = 0.0;
};

FeatureVector featurize(const Report& report, int bins, double lo, double hi);

/// Binning and normalization anchors derived from the task configuration:
/// 10 bins over mu +- 5 sigma, mean coordinate scaled by 1 / (10 sigma).
struct FeatureSpec {
  int bins = 10;
  double lo = 0.0;
  double hi = 1.0;
  double sigma_legit = 1.0;

  static FeatureSpec for_task(const SensingTask& task);
  int dim() const { return bins + 1; }
};

/// Flat coordinates used for clustering and classification:
/// pmf concatenated with raw_mean / (10 * sigma_legit).
std::vector<double> feature_coords(const FeatureVector& fv, double sigma_legit);
std::vector<double> feature_coords(const Report& report, const FeatureSpec& spec);

enum class Source { kSynthetic, kFile };

struct Dataset {
  SensingTask task;
  std::vector<Report> reports;
  std::vector<std::optional<Label>> labels;  // parallel to reports
  Source source = Source::kSynthetic;

  std::size_t size() const { return reports.size(); }
};

/// CSV schema (header row): reporter_id,tick,unit_id,x,y,v1,...,vn[,label]
Dataset load_csv(const std::filesystem::path& path, const SensingTask& task);
void write_csv(const std::filesystem::path& path, const Dataset& dataset);

struct SplitSpec {
  enum class Mode { kHoldout, kKfold };
  Mode mode = Mode::kHoldout;
  double train_fraction = 0.7;  // holdout
  int k = 10;                   // kfold
};

/// Holdout returns one (TS, ES) pair; kfold returns k pairs whose ES folds
/// are disjoint and cover the dataset. Stratified by ground-truth label
/// when labels exist.
std::vector<std::pair<Dataset, Dataset>> split(const Dataset& dataset, const SplitSpec& spec,
                                               Rng& rng);

/// Fold index per record for stratified k-fold; shared with learn::crossval.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k, Rng& rng);

}  // namespace sentinel
