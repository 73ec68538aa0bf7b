#include "oal/dialog.hpp"

#include <algorithm>

#include "oal/grounding.hpp"

namespace oal {

void RewardConfig::validate() const {
  if (!(correct_guess > 0.0)) throw ConfigError("reward: correct_guess must be positive");
  if (!(per_query < 0.0)) throw ConfigError("reward: per_query must be negative");
  if (!(incorrect_guess < per_query))
    throw ConfigError("reward: incorrect_guess must be below per_query");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("reward: gamma must lie in (0, 1]");
}

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Guess:
      return "guess";
    case ActionKind::LabelQuery:
      return "label";
    case ActionKind::ExampleQuery:
      return "example";
  }
  return "?";
}

std::string describe(const Action& action) {
  std::string s = to_string(action.kind);
  if (!action.predicate.empty()) s += ":" + action.predicate;
  if (action.region) s += "@" + std::to_string(action.region->value);
  return s;
}

Episode::Episode(const Corpus& corpus, const AgentState& snapshot, Interaction interaction,
                 const EnvConfig& config, std::uint64_t seed,
                 std::span<const std::string> registered)
    : corpus_(&corpus),
      snapshot_(&snapshot),
      config_(&config),
      interaction_(std::move(interaction)),
      oracle_stream_(derive_seed(seed, {1})),
      beam_stream_(derive_seed(seed, {2})) {
  if (interaction_.description.empty())
    throw ProtocolError("episode: interaction has no description predicates");
  predicates_ = snapshot.predicates();
  auto add = [this](const std::string& p) {
    if (!std::binary_search(predicates_.begin(), predicates_.end(), p))
      predicates_.insert(std::upper_bound(predicates_.begin(), predicates_.end(), p), p);
  };
  for (const auto& p : registered) add(p);
  for (const auto& p : interaction_.description) add(p);
}

std::size_t Episode::queries() const {
  return static_cast<std::size_t>(std::count_if(transcript_.begin(), transcript_.end(),
                                                 [](const auto& s) { return s.action.is_query(); }));
}

const PredicateModel* Episode::model(const std::string& predicate) const {
  if (const auto it = overlay_.find(predicate); it != overlay_.end()) return &it->second;
  return snapshot_->model(predicate);
}

ModelLookup Episode::models() const {
  return [this](const std::string& p) { return model(p); };
}

bool Episode::is_labeled(const std::string& predicate, RegionId region) const {
  if (pending_pairs_.contains({predicate, region})) return true;
  const PredicateModel* m = snapshot_->model(predicate);
  return m != nullptr && m->is_labeled(region);
}

LabeledPair Episode::labeled_pairs() const {
  return [this](const std::string& p, RegionId r) { return is_labeled(p, r); };
}

bool Episode::in_description(const std::string& predicate) const {
  const auto& d = interaction_.description;
  return std::find(d.begin(), d.end(), predicate) != d.end();
}

void Episode::record_label(const std::string& predicate, RegionId region, Label label) {
  pending_.push_back({predicate, region, label});
  pending_pairs_.emplace(predicate, region);
  if (config_->update != ClassifierUpdate::Immediate) return;
  auto it = overlay_.find(predicate);
  if (it == overlay_.end()) {
    PredicateModel copy;
    if (const PredicateModel* m = snapshot_->model(predicate)) copy = *m;
    copy.predicate = predicate;
    it = overlay_.emplace(predicate, std::move(copy)).first;
  }
  if (it->second.add_label(region, label)) refresh_model(it->second, *corpus_, config_->classifier);
}

Label Episode::answer_label_query(const std::string& predicate, RegionId region) {
  const auto& train = interaction_.active_train;
  if (std::find(train.begin(), train.end(), region) == train.end())
    throw ProtocolError("label query on region " + std::to_string(region.value) +
                        " outside the active training set");
  const Label label = label_from_bool((*corpus_)[region].has(predicate));
  record_label(predicate, region, label);
  return label;
}

std::optional<RegionId> Episode::answer_example_query(const std::string& predicate) {
  asked_examples_.insert(predicate);
  std::vector<RegionId> positives;
  for (auto r : interaction_.active_train)
    if ((*corpus_)[r].has(predicate)) positives.push_back(r);
  if (positives.empty()) {
    for (auto r : interaction_.active_train) record_label(predicate, r, Label::Negative);
    return std::nullopt;
  }
  const RegionId pick = positives[oracle_stream_.index(positives.size())];
  record_label(predicate, pick, Label::Positive);
  return pick;
}

std::vector<Action> Episode::beam() {
  BeamRequest request;
  request.turn = turn_;
  request.t_max = config_->t_max;
  request.predicates = predicates_;
  request.active_train = interaction_.active_train;
  request.asked_examples = &asked_examples_;
  return build_beam(request, models(), labeled_pairs(), *corpus_, config_->beam,
                    config_->triangular, beam_stream_);
}

StepResult Episode::step(const Action& action, std::vector<FeatureVector> beam_features,
                         std::size_t chosen) {
  if (terminated_) throw ProtocolError("step on a terminated episode");
  if (action.is_query() && turn_ >= config_->t_max)
    throw ProtocolError("turn cap reached: only the guess action is admissible");

  StepResult result;
  const auto& reward = config_->reward;
  switch (action.kind) {
    case ActionKind::LabelQuery:
      if (!action.region) throw ProtocolError("label query without a region");
      answer_label_query(action.predicate, *action.region);
      result.reward = reward.per_query;
      break;
    case ActionKind::ExampleQuery:
      result.example_answer = answer_example_query(action.predicate);
      result.reward = reward.per_query;
      break;
    case ActionKind::Guess: {
      const auto scores =
          score_objects(interaction_.description, models(), interaction_.active_test, *corpus_);
      success_ = best_guess(scores) == interaction_.target;
      result.reward = success_ ? reward.correct_guess : reward.incorrect_guess;
      result.terminated = true;
      terminated_ = true;
      break;
    }
  }
  transcript_.push_back({turn_, action, result.reward, std::move(beam_features), chosen});
  ++turn_;
  return result;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

std::vector<double> Episode::returns() const {
  if (!terminated_) throw ContractError("returns requested for an episode that has not terminated");
  std::vector<double> rewards;
  rewards.reserve(transcript_.size());
  for (const auto& s : transcript_) rewards.push_back(s.reward);
  return discounted_returns(rewards, config_->reward.gamma);
}

double Episode::total_reward() const {
  double total = 0.0;
  for (const auto& s : transcript_) total += s.reward;
  return total;
}

}  // namespace oal
