#pragma once

#include <optional>
#include <vector>

#include "sentinel/core.hpp"

namespace sentinel {
namespace cluster {

inline constexpr int kNoise = -1;

struct DbscanParams {
  double eps = 0.0;  // > 0
  int min_pts = 4;   // >= 1, neighborhood count includes the point itself
};

struct ClusterModel {
  std::vector<int> assignment;  // cluster id per point, kNoise for noise
  std::vector<bool> core;
  DbscanParams params;
  int num_clusters = 0;
  int legit_cluster = kNoise;          // set by assign_labels
  std::vector<double> legit_centroid;  // feature-space centroid of the +1 cluster
  double legit_centroid_mean = 0.0;    // raw_mean centroid of the +1 cluster
};

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

/// Density clustering with the usual reachability semantics: a point is
/// core iff it has >= min_pts neighbors within eps (inclusive, counting
/// itself); border points join the first discovered adjacent core cluster.
ClusterModel dbscan(const std::vector<std::vector<double>>& points, const DbscanParams& params);

/// Knee of the sorted k-th-nearest-neighbor distance curve (maximum second
/// difference on a lightly smoothed curve); falls back to the curve's 90th
/// percentile when no pronounced knee exists.
double estimate_eps(const std::vector<std::vector<double>>& points, int k);

/// Maps exactly one cluster to legitimate (+1): the largest one, or with a
/// prior the cluster whose raw_mean centroid is nearest the prior. All other
/// clusters and noise map to -1. Errors when everything is noise.
std::vector<Label> assign_labels(ClusterModel& model, const std::vector<std::vector<double>>& points,
                                 const std::vector<double>& raw_means,
                                 std::optional<double> prior_perception);

/// Fraction of points whose derived label value matches ground truth.
double clustering_precision(const std::vector<Label>& derived, const std::vector<Label>& truth);

}  // namespace cluster
}  // namespace sentinel
