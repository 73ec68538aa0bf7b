#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oal/dialog.hpp"
#include "oal/perception.hpp"
#include "oal/rng.hpp"

namespace oal {

// ---------------------------------------------------------------------------
// Feature registry. Indices are stable: checkpoints, ablation configs and
// logged transcripts all refer to them.

enum class FeatureGroup {
  Shared,      // every action
  Guess,       // guess-success features, Guess action only
  Query,       // query-evaluation features, both query types
  LabelQuery,  // query-evaluation features, label queries only
};

struct FeatureSpec {
  std::string_view name;
  FeatureGroup group;
  std::string_view range;
  std::string_view description;
};

namespace feature {
enum Index : std::size_t {
  Turn,
  IsGuess,
  IsLabelQuery,
  IsExampleQuery,
  F1Min,
  F1Max,
  F1Second,
  F1Mean,
  ScoreTop,
  ScoreGapSecond,
  ScoreGapMean,
  DecisionSumTop,
  DecisionSumGapSecond,
  DecisionSumGapMean,
  BestTwoAgreeOnTop,
  BestDecisionTop,
  SecondDecisionTop,
  BestDecisionTopMinusMean,
  SecondDecisionTopMinusMean,
  BestSameOnTopTwo,
  NewPredicate,
  PredicateF1,
  UsageFrequency,
  UsageSuccessRate,
  Opportunistic,
  Margin,
  AvgCosineDistance,
  KnnUnlabeledFraction,
  Count
};
}  // namespace feature

inline constexpr std::size_t kFeatureCount = feature::Count;

const std::array<FeatureSpec, kFeatureCount>& feature_registry();
std::optional<std::size_t> feature_index(std::string_view name);
bool applies_to(FeatureGroup group, ActionKind kind);

// Resolves feature names and the group names "guess" and "query" to sorted
// unique indices. Throws ConfigError for unknown names.
std::vector<std::size_t> resolve_features(std::span<const std::string> names);

// Machine-readable registry table (index, name, group, action types, range).
std::string registry_csv();

// Zeroes selected indices in every feature vector.
class FeatureMask {
 public:
  FeatureMask() = default;
  explicit FeatureMask(std::span<const std::size_t> indices);
  void apply(FeatureVector& f) const;
  bool masked(std::size_t i) const { return masked_[i]; }
  bool empty() const;

 private:
  std::array<bool, kFeatureCount> masked_{};
};

struct FeatureContext {
  const Episode& episode;
  const DensityIndex& density;
  const FeatureMask* mask = nullptr;
};

FeatureVector featurize(const FeatureContext& ctx, const Action& action);
std::vector<FeatureVector> featurize_beam(const FeatureContext& ctx, std::span<const Action> beam);

// Margin feature squashing: m / (1 + m) maps [0, inf) onto [0, 1).
double squash_margin(double margin);

// ---------------------------------------------------------------------------
// Softmax policy over linear scores theta . f(s, a).

struct PolicyParams {
  std::vector<double> theta = std::vector<double>(kFeatureCount, 0.0);
  double alpha = 1e-3;
  // Linear decay of alpha to zero over this many updates; 0 disables.
  std::size_t alpha_decay_updates = 0;
  bool use_baseline = false;
  double baseline = 0.0;  // running mean of observed returns
  std::uint64_t baseline_count = 0;
  std::uint64_t updates = 0;

  double current_alpha() const;
};

std::vector<double> action_probabilities(std::span<const double> theta,
                                         std::span<const FeatureVector> beam);

// Inverse-CDF draw over the beam in its fixed order.
std::size_t sample_action(std::span<const double> probabilities, SeedStream& stream);

// f(s, a_chosen) - sum_a pi(a | s) f(s, a)
std::vector<double> grad_log_prob(std::span<const double> theta,
                                  std::span<const FeatureVector> beam, std::size_t chosen);

struct Trajectory {
  std::span<const TranscriptStep> steps;
  std::vector<double> returns;
};

struct UpdateRejected : Error {
  using Error::Error;
};

// theta += alpha * sum_episodes sum_t (G_t - b) grad_log_prob_t, evaluated at
// the pre-update theta. Throws UpdateRejected (theta untouched) when the
// accumulated step is not finite.
void reinforce_update(PolicyParams& params, std::span<const Trajectory> batch);

// ---------------------------------------------------------------------------
// Static baseline: alternates label and example queries (label first) for
// n_queries turns, then guesses.

struct StaticPolicyConfig {
  std::size_t n_queries = 15;
};

std::size_t static_policy_act(std::size_t turn, std::span<const Action> beam,
                              const StaticPolicyConfig& config, SeedStream& stream);

}  // namespace oal
