#pragma once

#include <optional>
#include <vector>

#include "sentinel/core.hpp"

namespace sentinel {
namespace metrics {

struct ConfusionMatrix {
  long tp = 0, fp = 0, tn = 0, fn = 0;  // positive = legitimate = +1

  long total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    return *this;
  }
};

ConfusionMatrix confusion(const std::vector<Label>& predicted, const std::vector<Label>& truth);
ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Undefined ratios (zero denominator) are reported as absent, never 0.
struct Rates {
  std::optional<double> accuracy;
  std::optional<double> tpr;  // recall
  std::optional<double> fpr;
  std::optional<double> precision;
};

Rates rates(const ConfusionMatrix& cm);

/// Standard normal CDF.
double normal_cdf(double x);

/// Overlapping coefficient of two normal densities, integral of
/// min(pdf_a, pdf_b). Equal sigmas reduce to 2 Phi(-|mu_a - mu_b| / (2 sigma)).
double gaussian_overlap(const GaussianSpec& a, const GaussianSpec& b);

}  // namespace metrics
}  // namespace sentinel
