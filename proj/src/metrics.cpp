#include "sentinel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sentinel {
namespace metrics {

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i] == kLegitimate)
      (predicted[i] == kLegitimate ? cm.tp : cm.fn)++;
    else
      (predicted[i] == kLegitimate ? cm.fp : cm.tn)++;
  }
  return cm;
}

ConfusionMatrix confusion(const std::vector<Label>& predicted, const std::vector<Label>& truth) {
  std::vector<int> p(predicted.size()), t(truth.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) p[i] = predicted[i].value;
  for (std::size_t i = 0; i < truth.size(); ++i) t[i] = truth[i].value;
  return confusion(p, t);
}

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Rates rates(const ConfusionMatrix& cm) {
  Rates r;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());
  r.tpr = ratio(cm.tp, cm.tp + cm.fn);
  r.fpr = ratio(cm.fp, cm.fp + cm.tn);
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  return r;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

double pdf(const GaussianSpec& g, double x) {
  double z = (x - g.mu) / g.sigma;
  return std::exp(-0.5 * z * z) / (g.sigma * std::sqrt(2.0 * M_PI));
}

double cdf(const GaussianSpec& g, double x) { return normal_cdf((x - g.mu) / g.sigma); }

}  // namespace

double gaussian_overlap(const GaussianSpec& a, const GaussianSpec& b) {
  if (!(a.sigma > 0.0) || !(b.sigma > 0.0))
    throw std::invalid_argument("gaussian_overlap: sigma must be > 0");
  if (a.mu == b.mu && a.sigma == b.sigma) return 1.0;

  if (a.sigma == b.sigma)
    return 2.0 * normal_cdf(-std::fabs(a.mu - b.mu) / (2.0 * a.sigma));

  // Unequal sigmas: the log densities cross at the roots of a quadratic.
  // Integrate the pointwise minimum piecewise via the two CDFs.
  const double qa = 1.0 / (b.sigma * b.sigma) - 1.0 / (a.sigma * a.sigma);
  const double qb = 2.0 * (a.mu / (a.sigma * a.sigma) - b.mu / (b.sigma * b.sigma));
  const double qc = b.mu * b.mu / (b.sigma * b.sigma) - a.mu * a.mu / (a.sigma * a.sigma) +
                    2.0 * std::log(b.sigma / a.sigma);
  const double disc = qb * qb - 4.0 * qa * qc;
  // Two real crossings always exist for unequal sigmas; disc can only hit
  // zero through rounding when the sigmas are nearly equal.
  if (disc <= 0.0) return 2.0 * normal_cdf(-std::fabs(a.mu - b.mu) / (a.sigma + b.sigma));
  double r1 = (-qb - std::sqrt(disc)) / (2.0 * qa);
  double r2 = (-qb + std::sqrt(disc)) / (2.0 * qa);
  if (r1 > r2) std::swap(r1, r2);

  // Identify the smaller density on each of the three intervals.
  auto smaller_mass = [&](double lo, double hi) {
    double probe = std::isinf(lo) ? hi - 1.0 : (std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi));
    const GaussianSpec& g = pdf(a, probe) <= pdf(b, probe) ? a : b;
    double upper = std::isinf(hi) ? 1.0 : cdf(g, hi);
    double lower = std::isinf(lo) ? 0.0 : cdf(g, lo);
    return upper - lower;
  };
  const double inf = std::numeric_limits<double>::infinity();
  double overlap = smaller_mass(-inf, r1) + smaller_mass(r1, r2) + smaller_mass(r2, inf);
  return std::clamp(overlap, 0.0, 1.0);
}

}  // namespace metrics
}  // namespace sentinel
