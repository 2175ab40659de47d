#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sentinel/metrics.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {
namespace learn {

enum class Variant { kNaiveBayes, kRandomForest, kSvm, kMlp };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct HyperParams {
  int rf_trees = 50;
  int rf_max_depth = 8;
  int rf_feature_subsample = 0;  // 0 means ceil(sqrt(d))
  double svm_c = 1.0;
  int svm_epochs = 200;
  int mlp_hidden = 16;
  double mlp_lr = 0.01;
  int mlp_epochs = 300;
  std::uint64_t seed = 0;
};

using Sample = std::vector<double>;
using Samples = std::vector<Sample>;

/// Gaussian naive Bayes: per-class priors and per-feature (mu, sigma),
/// sigma floored at 1e-6. Score is the posterior log odds.
struct NbModel {
  std::array<double, 2> prior{};                  // [positive, negative]
  std::array<std::vector<double>, 2> mu{};        // per class, per feature
  std::array<std::vector<double>, 2> sigma{};
};

struct RfNode {
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  long count_pos = 0, count_neg = 0;
};

struct RfModel {
  std::vector<std::vector<RfNode>> trees;  // node 0 is each tree's root
};

/// Soft-margin linear separator trained by stochastic subgradient descent
/// on C * sum hinge + 0.5 ||w||^2. The per-epoch objective is evaluated at
/// the epoch-averaged iterate, which is also the returned model.
struct SvmModel {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> objective_history;  // one entry per epoch
};

/// One sigmoid hidden layer and a logistic output trained on cross-entropy.
/// The output layer starts at zero so label negation flips the score exactly.
struct MlpModel {
  int hidden = 0;
  std::vector<double> w1;  // hidden x dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  double logit(const Sample& x) const;

  // Flat parameter views used by the finite-difference gradient check.
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& params);
  double sample_loss(const Sample& x, int label) const;
  std::vector<double> sample_grad(const Sample& x, int label) const;
};

struct TrainedClassifier {
  Variant variant = Variant::kNaiveBayes;
  int feature_dim = 0;
  std::variant<NbModel, RfModel, SvmModel, MlpModel> model;
};

/// Labels are +1 / -1; data must contain both classes.
TrainedClassifier train(Variant variant, const Samples& x, const std::vector<int>& y,
                        const HyperParams& hp);

/// Label is the sign of the score with ties breaking to +1; 0 is the
/// decision boundary for every variant.
std::pair<int, double> predict(const TrainedClassifier& clf, const Sample& x);

/// Two-class posteriors of the naive Bayes model, [positive, negative].
std::array<double, 2> nb_posteriors(const NbModel& nb, const Sample& x);

/// Stratified k-fold cross validation; returns the sum of the per-fold
/// held-out confusion matrices.
metrics::ConfusionMatrix crossval(Variant variant, const Samples& x, const std::vector<int>& y,
                                  const HyperParams& hp, int k, Rng& rng);

/// Versioned JSON round-trip for trained classifiers.
nlohmann::json to_json(const TrainedClassifier& clf);
TrainedClassifier classifier_from_json(const nlohmann::json& doc);

}  // namespace learn
}  // namespace sentinel
