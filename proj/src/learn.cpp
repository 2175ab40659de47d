#include "sentinel/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sentinel/ingest.hpp"

namespace sentinel {
namespace learn {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kNaiveBayes: return "nb";
    case Variant::kRandomForest: return "rf";
    case Variant::kSvm: return "svm";
    case Variant::kMlp: return "mlp";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "nb") return Variant::kNaiveBayes;
  if (name == "rf") return Variant::kRandomForest;
  if (name == "svm") return Variant::kSvm;
  if (name == "mlp" || name == "nn") return Variant::kMlp;
  throw std::invalid_argument("unknown classifier variant '" + name + "'");
}

namespace {

constexpr double kSigmaFloor = 1e-6;

void check_training_data(const Samples& x, const std::vector<int>& y) {
  if (x.empty()) throw std::invalid_argument("train: empty data");
  if (x.size() != y.size()) throw std::invalid_argument("train: feature/label length mismatch");
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == kLegitimate) has_pos = true;
    else if (label == kMalicious) has_neg = true;
    else throw std::invalid_argument("train: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("train: single-class data");
  const std::size_t dim = x.front().size();
  for (const auto& row : x)
    if (row.size() != dim) throw std::invalid_argument("train: ragged feature matrix");
}

// ---------------------------------------------------------------- naive Bayes

NbModel train_nb(const Samples& x, const std::vector<int>& y) {
  const std::size_t dim = x.front().size();
  NbModel nb;
  std::array<long, 2> counts{0, 0};
  for (int c = 0; c < 2; ++c) {
    nb.mu[c].assign(dim, 0.0);
    nb.sigma[c].assign(dim, 0.0);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    int c = y[i] == kLegitimate ? 0 : 1;
    ++counts[c];
    for (std::size_t d = 0; d < dim; ++d) nb.mu[c][d] += x[i][d];
  }
  for (int c = 0; c < 2; ++c)
    for (std::size_t d = 0; d < dim; ++d) nb.mu[c][d] /= static_cast<double>(counts[c]);
  for (std::size_t i = 0; i < x.size(); ++i) {
    int c = y[i] == kLegitimate ? 0 : 1;
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = x[i][d] - nb.mu[c][d];
      nb.sigma[c][d] += diff * diff;
    }
  }
  for (int c = 0; c < 2; ++c) {
    nb.prior[c] = static_cast<double>(counts[c]) / static_cast<double>(x.size());
    for (std::size_t d = 0; d < dim; ++d)
      nb.sigma[c][d] = std::max(kSigmaFloor, std::sqrt(nb.sigma[c][d] / static_cast<double>(counts[c])));
  }
  return nb;
}

double nb_log_joint(const NbModel& nb, const Sample& x, int c) {
  double lj = std::log(nb.prior[c]);
  for (std::size_t d = 0; d < x.size(); ++d) {
    double z = (x[d] - nb.mu[c][d]) / nb.sigma[c][d];
    lj += -0.5 * z * z - std::log(nb.sigma[c][d]);
  }
  return lj;
}

// -------------------------------------------------------------- random forest

struct TreeBuilder {
  const Samples& x;
  const std::vector<int>& y;
  int max_depth;
  int feature_subsample;
  Rng& rng;
  std::vector<RfNode> nodes;

  static double gini(long pos, long neg) {
    long total = pos + neg;
    if (total == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
  }

  int build(std::vector<std::size_t>& idx, int depth) {
    long pos = 0, neg = 0;
    for (std::size_t i : idx) (y[i] == kLegitimate ? pos : neg)++;
    int node_id = static_cast<int>(nodes.size());
    nodes.push_back(RfNode{true, -1, 0.0, -1, -1, pos, neg});
    if (depth >= max_depth || pos == 0 || neg == 0 || idx.size() < 2) return node_id;

    const int dim = static_cast<int>(x.front().size());
    std::vector<int> features(static_cast<std::size_t>(dim));
    std::iota(features.begin(), features.end(), 0);
    rng.shuffle(features);
    features.resize(static_cast<std::size_t>(std::min(dim, feature_subsample)));

    // Thresholds are midpoints of adjacent distinct sorted values; the best
    // Gini decrease wins, first encountered on ties.
    double best_impurity = gini(pos, neg);
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> sorted(idx.size());
    for (int f : features) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        sorted[i] = {x[idx[i]][static_cast<std::size_t>(f)], y[idx[i]]};
      std::sort(sorted.begin(), sorted.end());
      long lp = 0, ln = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        (sorted[i].second == kLegitimate ? lp : ln)++;
        if (sorted[i].first == sorted[i + 1].first) continue;
        long count_left = lp + ln, count_right = static_cast<long>(idx.size()) - count_left;
        double impurity =
            (static_cast<double>(count_left) * gini(lp, ln) +
             static_cast<double>(count_right) * gini(pos - lp, neg - ln)) /
            static_cast<double>(idx.size());
        if (impurity < best_impurity - 1e-12) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (x[i][static_cast<std::size_t>(best_feature)] < best_threshold ? left : right).push_back(i);
    nodes[static_cast<std::size_t>(node_id)].leaf = false;
    nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    int l = build(left, depth + 1);
    int r = build(right, depth + 1);
    nodes[static_cast<std::size_t>(node_id)].left = l;
    nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
  }
};

RfModel train_rf(const Samples& x, const std::vector<int>& y, const HyperParams& hp, Rng& rng) {
  if (hp.rf_trees < 1) throw std::invalid_argument("train: rf_trees must be >= 1");
  const int dim = static_cast<int>(x.front().size());
  const int subsample = hp.rf_feature_subsample > 0
                            ? hp.rf_feature_subsample
                            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim))));
  RfModel rf;
  for (int t = 0; t < hp.rf_trees; ++t) {
    std::vector<std::size_t> idx(x.size());
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(x.size()) - 1));
    TreeBuilder builder{x, y, hp.rf_max_depth, subsample, rng, {}};
    builder.build(idx, 0);
    rf.trees.push_back(std::move(builder.nodes));
  }
  return rf;
}

int tree_vote(const std::vector<RfNode>& tree, const Sample& x) {
  int node = 0;
  while (!tree[static_cast<std::size_t>(node)].leaf) {
    const RfNode& n = tree[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  const RfNode& leaf = tree[static_cast<std::size_t>(node)];
  if (leaf.count_pos == leaf.count_neg) return 0;
  return leaf.count_pos > leaf.count_neg ? 1 : -1;
}

// ------------------------------------------------------------------------ SVM

double svm_objective(const std::vector<double>& w_aug, const Samples& x, const std::vector<int>& y,
                     double c) {
  // Bias is carried as the trailing augmented coordinate and shares the
  // regularizer.
  double obj = 0.0;
  for (double wi : w_aug) obj += 0.5 * wi * wi;
  const std::size_t dim = x.front().size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    double score = w_aug[dim];
    for (std::size_t d = 0; d < dim; ++d) score += w_aug[d] * x[i][d];
    obj += c * std::max(0.0, 1.0 - y[i] * score);
  }
  return obj;
}

SvmModel train_svm(const Samples& x, const std::vector<int>& y, const HyperParams& hp, Rng& rng) {
  if (!(hp.svm_c > 0.0)) throw std::invalid_argument("train: svm_c must be > 0");
  const std::size_t dim = x.front().size();
  const std::size_t n = x.size();
  const double lambda = 1.0 / (static_cast<double>(n) * hp.svm_c);
  const double radius = 1.0 / std::sqrt(lambda);

  std::vector<double> w(dim + 1, 0.0);      // trailing entry is the bias
  std::vector<double> w_sum(dim + 1, 0.0);  // running Polyak average
  long t = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  SvmModel svm;
  for (int epoch = 0; epoch < hp.svm_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      double score = w[dim];
      for (std::size_t d = 0; d < dim; ++d) score += w[d] * x[i][d];
      const double scale = 1.0 - eta * lambda;
      for (double& wd : w) wd *= scale;
      if (y[i] * score < 1.0) {
        const double step = eta * y[i];
        for (std::size_t d = 0; d < dim; ++d) w[d] += step * x[i][d];
        w[dim] += step;
      }
      double norm = 0.0;
      for (double wd : w) norm += wd * wd;
      norm = std::sqrt(norm);
      if (norm > radius)
        for (double& wd : w) wd *= radius / norm;
      for (std::size_t d = 0; d <= dim; ++d) w_sum[d] += w[d];
    }
    std::vector<double> w_avg(dim + 1);
    for (std::size_t d = 0; d <= dim; ++d) w_avg[d] = w_sum[d] / static_cast<double>(t);
    svm.objective_history.push_back(svm_objective(w_avg, x, y, hp.svm_c));
    if (epoch == hp.svm_epochs - 1) {
      svm.w.assign(w_avg.begin(), w_avg.end() - 1);
      svm.b = w_avg[dim];
    }
  }
  return svm;
}

}  // namespace

// ------------------------------------------------------------------------ MLP

double MlpModel::logit(const Sample& x) const {
  const std::size_t dim = x.size();
  double z = b2;
  for (int h = 0; h < hidden; ++h) {
    double a = b1[static_cast<std::size_t>(h)];
    for (std::size_t d = 0; d < dim; ++d)
      a += w1[static_cast<std::size_t>(h) * dim + d] * x[d];
    z += w2[static_cast<std::size_t>(h)] / (1.0 + std::exp(-a));
  }
  return z;
}

std::vector<double> MlpModel::flat_params() const {
  std::vector<double> params;
  params.reserve(w1.size() + b1.size() + w2.size() + 1);
  params.insert(params.end(), w1.begin(), w1.end());
  params.insert(params.end(), b1.begin(), b1.end());
  params.insert(params.end(), w2.begin(), w2.end());
  params.push_back(b2);
  return params;
}

void MlpModel::set_flat_params(const std::vector<double>& params) {
  if (params.size() != w1.size() + b1.size() + w2.size() + 1)
    throw std::invalid_argument("MlpModel: flat parameter size mismatch");
  std::size_t at = 0;
  std::copy_n(params.begin(), w1.size(), w1.begin());
  at += w1.size();
  std::copy_n(params.begin() + static_cast<long>(at), b1.size(), b1.begin());
  at += b1.size();
  std::copy_n(params.begin() + static_cast<long>(at), w2.size(), w2.begin());
  at += w2.size();
  b2 = params[at];
}

double MlpModel::sample_loss(const Sample& x, int label) const {
  const double z = logit(x);
  const double target = label == kLegitimate ? 1.0 : 0.0;
  // Numerically stable cross-entropy: log(1 + e^z) - t z.
  const double softplus = z > 30.0 ? z : std::log1p(std::exp(z));
  return softplus - target * z;
}

std::vector<double> MlpModel::sample_grad(const Sample& x, int label) const {
  const std::size_t dim = x.size();
  const double target = label == kLegitimate ? 1.0 : 0.0;
  std::vector<double> activations(static_cast<std::size_t>(hidden));
  double z = b2;
  for (int h = 0; h < hidden; ++h) {
    double a = b1[static_cast<std::size_t>(h)];
    for (std::size_t d = 0; d < dim; ++d)
      a += w1[static_cast<std::size_t>(h) * dim + d] * x[d];
    activations[static_cast<std::size_t>(h)] = 1.0 / (1.0 + std::exp(-a));
    z += w2[static_cast<std::size_t>(h)] * activations[static_cast<std::size_t>(h)];
  }
  const double dz = 1.0 / (1.0 + std::exp(-z)) - target;

  std::vector<double> grad(w1.size() + b1.size() + w2.size() + 1, 0.0);
  const std::size_t b1_at = w1.size();
  const std::size_t w2_at = b1_at + b1.size();
  for (int h = 0; h < hidden; ++h) {
    const double act = activations[static_cast<std::size_t>(h)];
    const double da = dz * w2[static_cast<std::size_t>(h)] * act * (1.0 - act);
    for (std::size_t d = 0; d < dim; ++d)
      grad[static_cast<std::size_t>(h) * dim + d] = da * x[d];
    grad[b1_at + static_cast<std::size_t>(h)] = da;
    grad[w2_at + static_cast<std::size_t>(h)] = dz * act;
  }
  grad.back() = dz;
  return grad;
}

namespace {

MlpModel train_mlp(const Samples& x, const std::vector<int>& y, const HyperParams& hp, Rng& rng) {
  if (hp.mlp_hidden < 1) throw std::invalid_argument("train: mlp_hidden must be >= 1");
  const std::size_t dim = x.front().size();
  MlpModel mlp;
  mlp.hidden = hp.mlp_hidden;
  mlp.w1.resize(static_cast<std::size_t>(hp.mlp_hidden) * dim);
  mlp.b1.assign(static_cast<std::size_t>(hp.mlp_hidden), 0.0);
  mlp.w2.assign(static_cast<std::size_t>(hp.mlp_hidden), 0.0);
  mlp.b2 = 0.0;
  const double init_scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& wi : mlp.w1) wi = rng.gaussian(0.0, init_scale);

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> activations(static_cast<std::size_t>(hp.mlp_hidden));
  for (int epoch = 0; epoch < hp.mlp_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const Sample& xi = x[i];
      const double target = y[i] == kLegitimate ? 1.0 : 0.0;
      double z = mlp.b2;
      for (int h = 0; h < hp.mlp_hidden; ++h) {
        double a = mlp.b1[static_cast<std::size_t>(h)];
        for (std::size_t d = 0; d < dim; ++d)
          a += mlp.w1[static_cast<std::size_t>(h) * dim + d] * xi[d];
        activations[static_cast<std::size_t>(h)] = 1.0 / (1.0 + std::exp(-a));
        z += mlp.w2[static_cast<std::size_t>(h)] * activations[static_cast<std::size_t>(h)];
      }
      const double dz = 1.0 / (1.0 + std::exp(-z)) - target;
      for (int h = 0; h < hp.mlp_hidden; ++h) {
        const double act = activations[static_cast<std::size_t>(h)];
        const double da = dz * mlp.w2[static_cast<std::size_t>(h)] * act * (1.0 - act);
        mlp.w2[static_cast<std::size_t>(h)] -= hp.mlp_lr * dz * act;
        mlp.b1[static_cast<std::size_t>(h)] -= hp.mlp_lr * da;
        for (std::size_t d = 0; d < dim; ++d)
          mlp.w1[static_cast<std::size_t>(h) * dim + d] -= hp.mlp_lr * da * xi[d];
      }
      mlp.b2 -= hp.mlp_lr * dz;
    }
  }
  return mlp;
}

}  // namespace

TrainedClassifier train(Variant variant, const Samples& x, const std::vector<int>& y,
                        const HyperParams& hp) {
  check_training_data(x, y);
  Rng rng(hp.seed, static_cast<std::uint64_t>(variant) + 0x5E4Eu);
  TrainedClassifier clf;
  clf.variant = variant;
  clf.feature_dim = static_cast<int>(x.front().size());
  switch (variant) {
    case Variant::kNaiveBayes: clf.model = train_nb(x, y); break;
    case Variant::kRandomForest: clf.model = train_rf(x, y, hp, rng); break;
    case Variant::kSvm: clf.model = train_svm(x, y, hp, rng); break;
    case Variant::kMlp: clf.model = train_mlp(x, y, hp, rng); break;
  }
  return clf;
}

std::array<double, 2> nb_posteriors(const NbModel& nb, const Sample& x) {
  double lj0 = nb_log_joint(nb, x, 0);
  double lj1 = nb_log_joint(nb, x, 1);
  double m = std::max(lj0, lj1);
  double e0 = std::exp(lj0 - m), e1 = std::exp(lj1 - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::pair<int, double> predict(const TrainedClassifier& clf, const Sample& x) {
  if (static_cast<int>(x.size()) != clf.feature_dim)
    throw std::invalid_argument("predict: feature dimension mismatch");
  double score = 0.0;
  if (const auto* nb = std::get_if<NbModel>(&clf.model)) {
    score = nb_log_joint(*nb, x, 0) - nb_log_joint(*nb, x, 1);
  } else if (const auto* rf = std::get_if<RfModel>(&clf.model)) {
    double votes = 0.0;
    for (const auto& tree : rf->trees) votes += tree_vote(tree, x);
    score = votes / static_cast<double>(rf->trees.size());
  } else if (const auto* svm = std::get_if<SvmModel>(&clf.model)) {
    score = svm->b;
    for (std::size_t d = 0; d < x.size(); ++d) score += svm->w[d] * x[d];
  } else if (const auto* mlp = std::get_if<MlpModel>(&clf.model)) {
    score = mlp->logit(x);
  }
  return {score >= 0.0 ? kLegitimate : kMalicious, score};
}

metrics::ConfusionMatrix crossval(Variant variant, const Samples& x, const std::vector<int>& y,
                                  const HyperParams& hp, int k, Rng& rng) {
  if (k < 2) throw std::invalid_argument("crossval: k must be >= 2");
  auto fold = stratified_folds(y, k, rng);
  metrics::ConfusionMatrix total;
  for (int f = 0; f < k; ++f) {
    Samples train_x;
    std::vector<int> train_y;
    std::vector<std::size_t> held;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (fold[i] == f) {
        held.push_back(i);
      } else {
        train_x.push_back(x[i]);
        train_y.push_back(y[i]);
      }
    }
    if (held.empty()) continue;
    auto clf = train(variant, train_x, train_y, hp);
    std::vector<int> pred, truth;
    for (std::size_t i : held) {
      pred.push_back(predict(clf, x[i]).first);
      truth.push_back(y[i]);
    }
    total += metrics::confusion(pred, truth);
  }
  return total;
}

// -------------------------------------------------------------- serialization

namespace {
constexpr int kSchemaVersion = 1;
}

nlohmann::json to_json(const TrainedClassifier& clf) {
  nlohmann::json doc;
  doc["version"] = kSchemaVersion;
  doc["variant"] = variant_name(clf.variant);
  doc["feature_dim"] = clf.feature_dim;
  nlohmann::json& params = doc["params"];
  if (const auto* nb = std::get_if<NbModel>(&clf.model)) {
    params["prior"] = nb->prior;
    params["mu"] = nb->mu;
    params["sigma"] = nb->sigma;
  } else if (const auto* rf = std::get_if<RfModel>(&clf.model)) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : rf->trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree)
        nodes.push_back({{"leaf", n.leaf},
                         {"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"pos", n.count_pos},
                         {"neg", n.count_neg}});
      trees.push_back(std::move(nodes));
    }
    params["trees"] = std::move(trees);
  } else if (const auto* svm = std::get_if<SvmModel>(&clf.model)) {
    params["w"] = svm->w;
    params["b"] = svm->b;
    params["objective_history"] = svm->objective_history;
  } else if (const auto* mlp = std::get_if<MlpModel>(&clf.model)) {
    params["hidden"] = mlp->hidden;
    params["w1"] = mlp->w1;
    params["b1"] = mlp->b1;
    params["w2"] = mlp->w2;
    params["b2"] = mlp->b2;
  }
  return doc;
}

TrainedClassifier classifier_from_json(const nlohmann::json& doc) {
  if (doc.at("version").get<int>() != kSchemaVersion)
    throw std::runtime_error("classifier_from_json: unsupported schema version");
  TrainedClassifier clf;
  clf.variant = variant_from_name(doc.at("variant").get<std::string>());
  clf.feature_dim = doc.at("feature_dim").get<int>();
  const nlohmann::json& params = doc.at("params");
  switch (clf.variant) {
    case Variant::kNaiveBayes: {
      NbModel nb;
      nb.prior = params.at("prior").get<std::array<double, 2>>();
      nb.mu = params.at("mu").get<std::array<std::vector<double>, 2>>();
      nb.sigma = params.at("sigma").get<std::array<std::vector<double>, 2>>();
      clf.model = std::move(nb);
      break;
    }
    case Variant::kRandomForest: {
      RfModel rf;
      for (const auto& tree : params.at("trees")) {
        std::vector<RfNode> nodes;
        for (const auto& n : tree)
          nodes.push_back(RfNode{n.at("leaf").get<bool>(), n.at("feature").get<int>(),
                                 n.at("threshold").get<double>(), n.at("left").get<int>(),
                                 n.at("right").get<int>(), n.at("pos").get<long>(),
                                 n.at("neg").get<long>()});
        rf.trees.push_back(std::move(nodes));
      }
      clf.model = std::move(rf);
      break;
    }
    case Variant::kSvm: {
      SvmModel svm;
      svm.w = params.at("w").get<std::vector<double>>();
      svm.b = params.at("b").get<double>();
      svm.objective_history = params.at("objective_history").get<std::vector<double>>();
      clf.model = std::move(svm);
      break;
    }
    case Variant::kMlp: {
      MlpModel mlp;
      mlp.hidden = params.at("hidden").get<int>();
      mlp.w1 = params.at("w1").get<std::vector<double>>();
      mlp.b1 = params.at("b1").get<std::vector<double>>();
      mlp.w2 = params.at("w2").get<std::vector<double>>();
      mlp.b2 = params.at("b2").get<double>();
      clf.model = std::move(mlp);
      break;
    }
  }
  return clf;
}

}  // namespace learn
}  // namespace sentinel
