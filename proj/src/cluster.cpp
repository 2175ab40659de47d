#include "sentinel/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace sentinel {
namespace cluster {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

namespace {

std::vector<std::vector<int>> neighbor_lists(const std::vector<std::vector<double>>& points,
                                             double eps) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    neighbors[static_cast<std::size_t>(i)].push_back(i);
    for (int j = i + 1; j < n; ++j) {
      if (euclidean(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]) <= eps) {
        neighbors[static_cast<std::size_t>(i)].push_back(j);
        neighbors[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  return neighbors;
}

}  // namespace

ClusterModel dbscan(const std::vector<std::vector<double>>& points, const DbscanParams& params) {
  if (points.empty()) throw std::invalid_argument("dbscan: no points");
  if (!(params.eps >= 0.0)) throw std::invalid_argument("dbscan: eps must be >= 0");
  if (params.min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");

  const int n = static_cast<int>(points.size());
  auto neighbors = neighbor_lists(points, params.eps);

  ClusterModel model;
  model.params = params;
  model.assignment.assign(static_cast<std::size_t>(n), kNoise);
  model.core.assign(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i)
    model.core[static_cast<std::size_t>(i)] =
        static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) >= params.min_pts;

  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  int cluster_id = 0;
  for (int i = 0; i < n; ++i) {
    if (visited[static_cast<std::size_t>(i)] || !model.core[static_cast<std::size_t>(i)]) continue;
    // Expand a new cluster from this core point.
    std::deque<int> queue{i};
    visited[static_cast<std::size_t>(i)] = true;
    model.assignment[static_cast<std::size_t>(i)] = cluster_id;
    while (!queue.empty()) {
      int p = queue.front();
      queue.pop_front();
      if (!model.core[static_cast<std::size_t>(p)]) continue;
      for (int q : neighbors[static_cast<std::size_t>(p)]) {
        if (model.assignment[static_cast<std::size_t>(q)] == kNoise)
          model.assignment[static_cast<std::size_t>(q)] = cluster_id;
        if (!visited[static_cast<std::size_t>(q)]) {
          visited[static_cast<std::size_t>(q)] = true;
          queue.push_back(q);
        }
      }
    }
    ++cluster_id;
  }
  model.num_clusters = cluster_id;
  return model;
}

double estimate_eps(const std::vector<std::vector<double>>& points, int k) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw std::invalid_argument("estimate_eps: k must be >= 1");
  if (n <= k) throw std::invalid_argument("estimate_eps: need more than k points");

  // k-th nearest neighbor distance per point, self excluded.
  std::vector<double> kdist(static_cast<std::size_t>(n));
  std::vector<double> dists;
  for (int i = 0; i < n; ++i) {
    dists.clear();
    for (int j = 0; j < n; ++j)
      if (j != i)
        dists.push_back(euclidean(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]));
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    kdist[static_cast<std::size_t>(i)] = dists[static_cast<std::size_t>(k - 1)];
  }
  std::sort(kdist.begin(), kdist.end());

  const double p90 = kdist[static_cast<std::size_t>(std::min<double>(n - 1, 0.90 * n))];
  if (n < 10) return p90;

  // Light smoothing keeps single-point spikes from posing as the knee.
  const int w = std::clamp(n / 50, 1, 25);
  std::vector<double> smooth(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - w), hi = std::min(n - 1, i + w);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += kdist[static_cast<std::size_t>(j)];
    smooth[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }

  int knee = -1;
  double best = 0.0, total = 0.0;
  int count = 0;
  for (int i = 1; i + 1 < n; ++i) {
    double second = smooth[static_cast<std::size_t>(i + 1)] - 2.0 * smooth[static_cast<std::size_t>(i)] +
                    smooth[static_cast<std::size_t>(i - 1)];
    total += std::fabs(second);
    ++count;
    if (second > best) {
      best = second;
      knee = i;
    }
  }
  const double mean_abs = total / std::max(1, count);
  // A knee must be a pronounced convex corner in the upper half of the
  // curve; anything weaker falls back to the 90th percentile.
  if (knee < n / 2 || best <= 4.0 * mean_abs || best <= 0.0) return p90;
  return smooth[static_cast<std::size_t>(knee)];
}

std::vector<Label> assign_labels(ClusterModel& model, const std::vector<std::vector<double>>& points,
                                 const std::vector<double>& raw_means,
                                 std::optional<double> prior_perception) {
  if (model.assignment.size() != points.size() || raw_means.size() != points.size())
    throw std::invalid_argument("assign_labels: size mismatch");
  if (model.num_clusters == 0)
    throw std::runtime_error("assign_labels: all points are noise, batch is unlabelable");

  std::vector<int> sizes(static_cast<std::size_t>(model.num_clusters), 0);
  std::vector<double> mean_sum(static_cast<std::size_t>(model.num_clusters), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    int c = model.assignment[i];
    if (c == kNoise) continue;
    ++sizes[static_cast<std::size_t>(c)];
    mean_sum[static_cast<std::size_t>(c)] += raw_means[i];
  }

  int legit = 0;
  if (prior_perception) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.num_clusters; ++c) {
      double centroid = mean_sum[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)];
      double dist = std::fabs(centroid - *prior_perception);
      if (dist < best) {
        best = dist;
        legit = c;
      }
    }
  } else {
    for (int c = 1; c < model.num_clusters; ++c)
      if (sizes[static_cast<std::size_t>(c)] > sizes[static_cast<std::size_t>(legit)]) legit = c;
  }

  model.legit_cluster = legit;
  model.legit_centroid_mean = mean_sum[static_cast<std::size_t>(legit)] / sizes[static_cast<std::size_t>(legit)];
  model.legit_centroid.assign(points[0].size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (model.assignment[i] != legit) continue;
    for (std::size_t d = 0; d < points[i].size(); ++d) model.legit_centroid[d] += points[i][d];
  }
  for (double& v : model.legit_centroid) v /= sizes[static_cast<std::size_t>(legit)];

  std::vector<Label> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    labels[i] = {model.assignment[i] == legit ? kLegitimate : kMalicious, Provenance::kClusterDerived};
  return labels;
}

double clustering_precision(const std::vector<Label>& derived, const std::vector<Label>& truth) {
  if (derived.size() != truth.size())
    throw std::invalid_argument("clustering_precision: length mismatch");
  if (derived.empty()) throw std::invalid_argument("clustering_precision: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < derived.size(); ++i)
    if (derived[i].value == truth[i].value) ++hits;
  return static_cast<double>(hits) / static_cast<double>(derived.size());
}

}  // namespace cluster
}  // namespace sentinel
