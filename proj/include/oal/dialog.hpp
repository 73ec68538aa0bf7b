#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oal/agent.hpp"
#include "oal/corpus.hpp"
#include "oal/querygen.hpp"

namespace oal {

struct RewardConfig {
  double correct_guess = 200.0;
  double incorrect_guess = -100.0;
  double per_query = -1.0;
  double gamma = 1.0;

  // correct > 0 > per_query > incorrect, gamma in (0, 1]. Throws ConfigError.
  void validate() const;
};

enum class ClassifierUpdate {
  BatchEnd,   // labels queue up, models refresh when the batch ends
  Immediate,  // the episode retrains the queried predicate right away
};

struct EnvConfig {
  RewardConfig reward;
  std::size_t t_max = 40;
  ClassifierUpdate update = ClassifierUpdate::BatchEnd;
  ClassifierConfig classifier;
  BeamConfig beam;
  TriangularWeights triangular;
};

struct AcquiredLabel {
  std::string predicate;
  RegionId region;
  Label label;
};

using FeatureVector = std::vector<double>;

struct TranscriptStep {
  std::size_t turn = 0;
  Action action;
  double reward = 0.0;
  // Features of every candidate in the beam the action was chosen from.
  std::vector<FeatureVector> beam_features;
  std::size_t chosen = 0;
};

struct StepResult {
  double reward = 0.0;
  bool terminated = false;
  std::optional<RegionId> example_answer;  // ExampleQuery only
};

// One interaction against a frozen agent snapshot. Construction is
// start_episode: it registers the description predicates into the
// episode's view of P, together with `registered` (predicates the batch has
// already registered). Nothing here mutates the snapshot; acquired labels
// are handed back through pending_labels() and merged by the caller.
class Episode {
 public:
  Episode(const Corpus& corpus, const AgentState& snapshot, Interaction interaction,
          const EnvConfig& config, std::uint64_t seed,
          std::span<const std::string> registered = {});

  const Interaction& interaction() const { return interaction_; }
  std::size_t turn() const { return turn_; }
  bool terminated() const { return terminated_; }
  bool succeeded() const { return success_; }
  std::size_t queries() const;
  const std::vector<std::string>& predicates() const { return predicates_; }
  const std::vector<AcquiredLabel>& pending_labels() const { return pending_; }
  const std::vector<TranscriptStep>& transcript() const { return transcript_; }
  const std::set<std::string>& asked_examples() const { return asked_examples_; }
  const Corpus& corpus() const { return *corpus_; }
  const AgentState& snapshot() const { return *snapshot_; }
  const EnvConfig& config() const { return *config_; }

  // Current model for a predicate: in-episode retrain when enabled, else
  // the snapshot's. nullptr when the agent has none.
  const PredicateModel* model(const std::string& predicate) const;
  ModelLookup models() const;
  bool is_labeled(const std::string& predicate, RegionId region) const;
  LabeledPair labeled_pairs() const;
  bool in_description(const std::string& predicate) const;

  // Throws ProtocolError for regions outside the active training set.
  Label answer_label_query(const std::string& predicate, RegionId region);
  std::optional<RegionId> answer_example_query(const std::string& predicate);

  std::vector<Action> beam();
  // Features, when given, are stored in the transcript with the action.
  StepResult step(const Action& action, std::vector<FeatureVector> beam_features = {},
                  std::size_t chosen = 0);

  // Per-step returns. Throws ContractError before termination.
  std::vector<double> returns() const;
  double total_reward() const;

 private:
  void record_label(const std::string& predicate, RegionId region, Label label);

  const Corpus* corpus_;
  const AgentState* snapshot_;
  const EnvConfig* config_;
  Interaction interaction_;
  std::vector<std::string> predicates_;
  std::map<std::string, PredicateModel> overlay_;
  std::set<std::pair<std::string, RegionId>> pending_pairs_;
  std::vector<AcquiredLabel> pending_;
  std::set<std::string> asked_examples_;
  std::vector<TranscriptStep> transcript_;
  SeedStream oracle_stream_;
  SeedStream beam_stream_;
  std::size_t turn_ = 0;
  bool terminated_ = false;
  bool success_ = false;
};

// G_t = sum_{u >= t} gamma^(u - t) r_u.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

}  // namespace oal
