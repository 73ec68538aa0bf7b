#include "oal/perception.hpp"

#include <algorithm>
#include <cmath>

namespace oal {

bool PredicateModel::add_label(RegionId region, Label label) {
  auto [it, inserted] = labels.emplace(region, label);
  if (!inserted && it->second != label)
    throw ContractError("conflicting label for predicate '" + predicate + "' on region " +
                        std::to_string(region.value));
  return inserted;
}

std::size_t PredicateModel::positives() const {
  return static_cast<std::size_t>(std::count_if(
      labels.begin(), labels.end(), [](const auto& kv) { return kv.second == Label::Positive; }));
}

bool PredicateModel::trainable() const {
  const auto pos = positives();
  return pos >= 1 && pos < labels.size();
}

double linear_score(std::span<const double> weights, std::span<const double> x) {
  double s = weights[x.size()];
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

std::optional<std::vector<double>> fit_hinge(std::span<const std::pair<RegionId, Label>> examples,
                                             const Corpus& corpus, const ClassifierConfig& config) {
  std::size_t n_pos = 0;
  for (const auto& [id, y] : examples) n_pos += (y == Label::Positive);
  const std::size_t n = examples.size();
  if (n_pos == 0 || n_pos == n) return std::nullopt;

  const std::size_t d = corpus.dimension();
  const double nd = static_cast<double>(n);
  double c_pos = 1.0, c_neg = 1.0;
  if (config.balance_classes) {
    c_pos = nd / (2.0 * static_cast<double>(n_pos));
    c_neg = nd / (2.0 * static_cast<double>(n - n_pos));
  }

  std::vector<double> w(d + 1, 0.0);
  std::vector<double> grad(d + 1);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    for (std::size_t j = 0; j < d; ++j) grad[j] = config.l2 * w[j];
    grad[d] = 0.0;
    for (const auto& [id, label] : examples) {
      const auto x = corpus.features(id);
      const double y = to_int(label);
      if (y * linear_score(w, x) < 1.0) {
        const double c = (label == Label::Positive ? c_pos : c_neg) * y / nd;
        for (std::size_t j = 0; j < d; ++j) grad[j] -= c * x[j];
        grad[d] -= c;
      }
    }
    const double eta = config.step / std::sqrt(1.0 + static_cast<double>(t));
    for (std::size_t j = 0; j <= d; ++j) w[j] -= eta * grad[j];
  }
  return w;
}

void train_classifier(PredicateModel& model, const Corpus& corpus, const ClassifierConfig& config) {
  const std::vector<std::pair<RegionId, Label>> examples(model.labels.begin(), model.labels.end());
  model.weights = fit_hinge(examples, corpus, config);
  if (!model.weights) model.estimated_f1 = 0.0;
}

Label decide_with(const std::optional<std::vector<double>>& weights, std::span<const double> x) {
  if (!weights) return Label::Negative;
  return label_from_bool(linear_score(*weights, x) >= 0.0);
}

Label decide(const PredicateModel& model, std::span<const double> x) {
  return decide_with(model.weights, x);
}

double margin(const PredicateModel& model, std::span<const double> x) {
  if (!model.weights)
    throw ContractError("margin undefined: predicate '" + model.predicate + "' has no classifier");
  const auto& w = *model.weights;
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) norm += w[i] * w[i];
  norm = std::sqrt(norm);
  // A zero weight vector puts every point on the decision boundary.
  if (norm == 0.0) return 0.0;
  return std::abs(linear_score(w, x)) / norm;
}

double f1_score(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg) {
  const double tp = static_cast<double>(true_pos);
  const double precision = true_pos + false_pos == 0 ? 0.0 : tp / static_cast<double>(true_pos + false_pos);
  const double recall = true_pos + false_neg == 0 ? 0.0 : tp / static_cast<double>(true_pos + false_neg);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double estimate_f1(const PredicateModel& model, const Corpus& corpus, const ClassifierConfig& config) {
  if (model.labels.size() < 4) return 0.0;
  std::vector<RegionId> pos, neg;
  for (const auto& [id, y] : model.labels) (y == Label::Positive ? pos : neg).push_back(id);
  const std::size_t k = std::min({config.folds, pos.size(), neg.size()});
  if (k < 2) return 0.0;

  std::map<RegionId, std::size_t> fold_of;
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of.emplace(pos[i], i % k);
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of.emplace(neg[i], i % k);

  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<std::pair<RegionId, Label>> train;
  for (std::size_t f = 0; f < k; ++f) {
    train.clear();
    for (const auto& [id, y] : model.labels)
      if (fold_of.at(id) != f) train.emplace_back(id, y);
    const auto w = fit_hinge(train, corpus, config);
    for (const auto& [id, fold] : fold_of) {
      if (fold != f) continue;
      const bool predicted = decide_with(w, corpus.features(id)) == Label::Positive;
      const bool actual = model.labels.at(id) == Label::Positive;
      tp += predicted && actual;
      fp += predicted && !actual;
      fn += !predicted && actual;
    }
  }
  return f1_score(tp, fp, fn);
}

void refresh_model(PredicateModel& model, const Corpus& corpus, const ClassifierConfig& config) {
  train_classifier(model, corpus, config);
  model.estimated_f1 = model.weights ? estimate_f1(model, corpus, config) : 0.0;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cos = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return 1.0 - cos;
}

DensityStats density_stats(const DensityIndex& index, RegionId region, const PredicateModel* model) {
  if (region.value >= index.size())
    throw std::out_of_range("density index has no region " + std::to_string(region.value));
  DensityStats stats;
  stats.avg_cosine_distance = index.avg_cosine_distance[region.value];
  const auto& nn = index.neighbours[region.value];
  if (nn.empty() || model == nullptr) return stats;
  std::size_t unlabeled = 0;
  for (auto r : nn) unlabeled += !model->is_labeled(r);
  stats.knn_unlabeled_fraction = static_cast<double>(unlabeled) / static_cast<double>(nn.size());
  return stats;
}

}  // namespace oal
