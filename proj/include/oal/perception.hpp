#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oal/corpus.hpp"
#include "oal/types.hpp"

namespace oal {

struct ClassifierConfig {
  double l2 = 1e-3;             // regularization strength on the weight part
  std::size_t iterations = 150;  // full-batch subgradient steps
  double step = 0.5;             // step_t = step / sqrt(1 + t)
  bool balance_classes = true;   // weight each class by n / (2 n_class)
  std::size_t folds = 5;
};

// One concept: acquired labels plus the classifier trained on them.
struct PredicateModel {
  std::string predicate;
  // At most one label per region; ordered by id so every pass over the labels
  // is independent of acquisition order.
  std::map<RegionId, Label> labels;
  // d weights followed by the bias, present iff both classes are labeled.
  std::optional<std::vector<double>> weights;
  double estimated_f1 = 0.0;

  // Same label again is a no-op, a different label throws ContractError.
  // Returns true if the label was new.
  bool add_label(RegionId region, Label label);
  bool is_labeled(RegionId region) const { return labels.contains(region); }
  bool trainable() const;
  std::size_t positives() const;
};

// Fits weights on the model's own labels (full retrain, never warm-started).
// Leaves weights empty when the label set is untrainable.
void train_classifier(PredicateModel& model, const Corpus& corpus, const ClassifierConfig& config);

// Lower-level entry point shared with cross-validation: fit on an arbitrary
// labeled subset. Returns nullopt when the subset lacks a class.
std::optional<std::vector<double>> fit_hinge(std::span<const std::pair<RegionId, Label>> examples,
                                             const Corpus& corpus, const ClassifierConfig& config);

double linear_score(std::span<const double> weights, std::span<const double> x);

// Sign of the bias-augmented score; exact zero counts as +1; no weights -> -1.
Label decide(const PredicateModel& model, std::span<const double> x);
Label decide_with(const std::optional<std::vector<double>>& weights, std::span<const double> x);

// Geometric distance to the hyperplane. Throws ContractError without weights.
double margin(const PredicateModel& model, std::span<const double> x);

// Stratified k-fold cross-validated F1 of the positive class, 0 for fewer
// than 4 labels or a missing class. Fold membership comes from each label's
// rank (by region id) within its class.
double estimate_f1(const PredicateModel& model, const Corpus& corpus, const ClassifierConfig& config);

// F1 of the positive class from confusion counts; 0 when precision + recall
// is 0.
double f1_score(std::size_t true_pos, std::size_t false_pos, std::size_t false_neg);

// train_classifier followed by estimate_f1.
void refresh_model(PredicateModel& model, const Corpus& corpus, const ClassifierConfig& config);

struct DensityConfig {
  std::size_t k = 10;
  // 0 uses every other region for the average cosine distance; otherwise a
  // fixed reference sample of that many regions.
  std::size_t reference_sample = 0;
  std::uint64_t seed = 0;
};

// Average cosine distance of each region to the rest of the corpus and its
// k nearest neighbours (Euclidean, ties by lower id, self excluded).
struct DensityIndex {
  std::vector<double> avg_cosine_distance;
  std::vector<std::vector<RegionId>> neighbours;
  std::size_t k = 0;

  std::size_t size() const { return avg_cosine_distance.size(); }
};

struct DensityStats {
  double avg_cosine_distance = 0.0;
  double knn_unlabeled_fraction = 1.0;
};

// Throws std::out_of_range when the region is not indexed.
DensityStats density_stats(const DensityIndex& index, RegionId region, const PredicateModel* model);

double cosine_distance(std::span<const double> a, std::span<const double> b);

}  // namespace oal
