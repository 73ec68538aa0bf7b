#include "oal/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "oal/grounding.hpp"

namespace oal {

using G = FeatureGroup;

const std::array<FeatureSpec, kFeatureCount>& feature_registry() {
  static const std::array<FeatureSpec, kFeatureCount> registry{{
      {"turn", G::Shared, "[0,1]", "system turns used so far / turn cap"},
      {"is_guess", G::Shared, "{0,1}", "indicator for the guess action"},
      {"is_label_query", G::Shared, "{0,1}", "indicator for asking a label"},
      {"is_example_query", G::Shared, "{0,1}", "indicator for asking a positive example"},
      {"f1_min", G::Guess, "[0,1]", "lowest C(p) over description predicates"},
      {"f1_max", G::Guess, "[0,1]", "highest C(p) over description predicates"},
      {"f1_second", G::Guess, "[0,1]", "second highest C(p) (0 with one predicate)"},
      {"f1_mean", G::Guess, "[0,1]", "mean C(p) over description predicates"},
      {"score_top", G::Guess, "[-1,1]", "top weighted score / #predicates"},
      {"score_gap_second", G::Guess, "[0,2]", "(top - second weighted score) / #predicates"},
      {"score_gap_mean", G::Guess, "[0,2]", "(top - mean weighted score) / #predicates"},
      {"decision_sum_top", G::Guess, "[-1,1]", "top unweighted decision sum / #predicates"},
      {"decision_sum_gap_second", G::Guess, "[0,2]", "(top - second decision sum) / #predicates"},
      {"decision_sum_gap_mean", G::Guess, "[0,2]", "(top - mean decision sum) / #predicates"},
      {"best_two_agree_on_top", G::Guess, "{0,1}",
       "best and second-best classifiers give the top region the same decision"},
      {"best_decision_top", G::Guess, "{-1,1}", "decision of p_best for the top region"},
      {"second_decision_top", G::Guess, "{-1,0,1}", "decision of p_sec for the top region"},
      {"best_decision_top_minus_mean", G::Guess, "[-2,2]",
       "p_best decision on top region minus its mean decision over the active test set"},
      {"second_decision_top_minus_mean", G::Guess, "[-2,2]",
       "p_sec decision on top region minus its mean decision over the active test set"},
      {"best_same_on_top_two", G::Guess, "{0,1}",
       "p_best gives the two top-scoring regions the same decision"},
      {"new_predicate", G::Query, "{0,1}", "queried predicate has no classifier yet"},
      {"predicate_f1", G::Query, "[0,1]", "estimated F1 of the queried predicate"},
      {"usage_frequency", G::Query, "[0,1]", "dialogs that used the predicate / all dialogs"},
      {"usage_success_rate", G::Query, "[0,1]", "success rate of dialogs that used the predicate"},
      {"opportunistic", G::Query, "{0,1}", "queried predicate is not in the description"},
      {"margin", G::LabelQuery, "[0,1)", "m/(1+m) for the region's distance to the hyperplane"},
      {"avg_cosine_distance", G::LabelQuery, "[0,2]", "mean cosine distance to the corpus"},
      {"knn_unlabeled_fraction", G::LabelQuery, "[0,1]",
       "fraction of the k nearest neighbours unlabeled for the predicate"},
  }};
  return registry;
}

std::optional<std::size_t> feature_index(std::string_view name) {
  const auto& reg = feature_registry();
  for (std::size_t i = 0; i < reg.size(); ++i)
    if (reg[i].name == name) return i;
  return std::nullopt;
}

bool applies_to(FeatureGroup group, ActionKind kind) {
  switch (group) {
    case G::Shared:
      return true;
    case G::Guess:
      return kind == ActionKind::Guess;
    case G::Query:
      return kind != ActionKind::Guess;
    case G::LabelQuery:
      return kind == ActionKind::LabelQuery;
  }
  return false;
}

std::vector<std::size_t> resolve_features(std::span<const std::string> names) {
  const auto& reg = feature_registry();
  std::vector<std::size_t> out;
  for (const auto& name : names) {
    if (name == "guess" || name == "query") {
      for (std::size_t i = 0; i < reg.size(); ++i) {
        const bool in_group = name == "guess"
                                  ? reg[i].group == G::Guess
                                  : (reg[i].group == G::Query || reg[i].group == G::LabelQuery);
        if (in_group) out.push_back(i);
      }
      continue;
    }
    const auto idx = feature_index(name);
    if (!idx) throw ConfigError("unknown feature or group name '" + name + "'");
    out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string registry_csv() {
  std::ostringstream out;
  out << "index,name,group,actions,range,description\n";
  const auto& reg = feature_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    const auto& f = reg[i];
    const char* group = f.group == G::Shared ? "shared"
                        : f.group == G::Guess ? "guess"
                                              : "query";
    const char* actions = f.group == G::Shared       ? "guess|label|example"
                          : f.group == G::Guess      ? "guess"
                          : f.group == G::Query      ? "label|example"
                                                     : "label";
    out << i << ',' << f.name << ',' << group << ',' << actions << ',' << f.range << ",\""
        << f.description << "\"\n";
  }
  return out.str();
}

FeatureMask::FeatureMask(std::span<const std::size_t> indices) {
  for (auto i : indices) masked_.at(i) = true;
}

void FeatureMask::apply(FeatureVector& f) const {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (masked_[i]) f[i] = 0.0;
}

bool FeatureMask::empty() const {
  return std::none_of(masked_.begin(), masked_.end(), [](bool b) { return b; });
}

double squash_margin(double margin) { return margin / (1.0 + margin); }

namespace {

struct ValueSummary {
  double top = 0.0;
  double second = 0.0;
  double mean = 0.0;
};

ValueSummary summarize(std::span<const double> values, std::size_t top_index) {
  ValueSummary s;
  s.top = values[top_index];
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.second = s.top;
  bool found = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == top_index) continue;
    if (!found || values[i] > s.second) s.second = values[i];
    found = true;
  }
  return s;
}

void fill_guess_features(const Episode& ep, FeatureVector& f) {
  const auto& inter = ep.interaction();
  const auto& desc = inter.description;
  const auto& corpus = ep.corpus();
  const auto k = static_cast<double>(desc.size());

  std::vector<double> f1(desc.size());
  for (std::size_t i = 0; i < desc.size(); ++i) {
    const PredicateModel* m = ep.model(desc[i]);
    f1[i] = m ? m->estimated_f1 : 0.0;
  }
  std::vector<double> sorted = f1;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  f[feature::F1Min] = sorted.back();
  f[feature::F1Max] = sorted.front();
  f[feature::F1Second] = sorted.size() >= 2 ? sorted[1] : 0.0;
  f[feature::F1Mean] = std::accumulate(f1.begin(), f1.end(), 0.0) / k;

  const auto scores = score_objects(desc, ep.models(), inter.active_test, corpus);
  const std::size_t top = argmax_lowest_id(scores.weighted, scores.regions);
  const auto w = summarize(scores.weighted, top);
  f[feature::ScoreTop] = w.top / k;
  f[feature::ScoreGapSecond] = (w.top - w.second) / k;
  f[feature::ScoreGapMean] = (w.top - w.mean) / k;

  const auto u = summarize(scores.unweighted, argmax_lowest_id(scores.unweighted, scores.regions));
  f[feature::DecisionSumTop] = u.top / k;
  f[feature::DecisionSumGapSecond] = (u.top - u.second) / k;
  f[feature::DecisionSumGapMean] = (u.top - u.mean) / k;

  // Region ranked second by weighted score (ties to lowest id).
  std::optional<std::size_t> runner_up;
  for (std::size_t i = 0; i < scores.regions.size(); ++i) {
    if (i == top) continue;
    if (!runner_up || scores.weighted[i] > scores.weighted[*runner_up] ||
        (scores.weighted[i] == scores.weighted[*runner_up] &&
         scores.regions[i] < scores.regions[*runner_up]))
      runner_up = i;
  }

  // p_best / p_sec: highest estimated F1, ties to description order.
  const auto best = static_cast<std::size_t>(std::max_element(f1.begin(), f1.end()) - f1.begin());
  std::optional<std::size_t> second;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    if (i == best) continue;
    if (!second || f1[i] > f1[*second]) second = i;
  }

  auto decisions = [&](std::size_t pred) {
    const PredicateModel* m = ep.model(desc[pred]);
    std::vector<double> d(scores.regions.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = m ? to_int(decide(*m, corpus.features(scores.regions[i]))) : -1.0;
    return d;
  };
  auto mean_of = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };

  const auto d_best = decisions(best);
  f[feature::BestDecisionTop] = d_best[top];
  f[feature::BestDecisionTopMinusMean] = d_best[top] - mean_of(d_best);
  if (runner_up) f[feature::BestSameOnTopTwo] = d_best[top] == d_best[*runner_up] ? 1.0 : 0.0;
  if (second) {
    const auto d_sec = decisions(*second);
    f[feature::SecondDecisionTop] = d_sec[top];
    f[feature::SecondDecisionTopMinusMean] = d_sec[top] - mean_of(d_sec);
    f[feature::BestTwoAgreeOnTop] = d_best[top] == d_sec[top] ? 1.0 : 0.0;
  }
}

void fill_query_features(const FeatureContext& ctx, const Action& a, FeatureVector& f) {
  const Episode& ep = ctx.episode;
  const PredicateModel* m = ep.model(a.predicate);
  const bool trained = m != nullptr && m->weights.has_value();
  const auto& stats = ep.snapshot().stats;
  f[feature::NewPredicate] = trained ? 0.0 : 1.0;
  f[feature::PredicateF1] = m ? m->estimated_f1 : 0.0;
  f[feature::UsageFrequency] = stats.usage_fraction(a.predicate);
  f[feature::UsageSuccessRate] = stats.success_rate(a.predicate);
  f[feature::Opportunistic] = ep.in_description(a.predicate) ? 0.0 : 1.0;
  if (a.kind != ActionKind::LabelQuery) return;
  const RegionId r = *a.region;
  f[feature::Margin] = trained ? squash_margin(margin(*m, ep.corpus().features(r))) : 0.0;
  const auto density = density_stats(ctx.density, r, m);
  f[feature::AvgCosineDistance] = density.avg_cosine_distance;
  f[feature::KnnUnlabeledFraction] = density.knn_unlabeled_fraction;
}

}  // namespace

FeatureVector featurize(const FeatureContext& ctx, const Action& action) {
  FeatureVector f(kFeatureCount, 0.0);
  const Episode& ep = ctx.episode;
  f[feature::Turn] = static_cast<double>(ep.turn()) / static_cast<double>(ep.config().t_max);
  f[feature::IsGuess] = action.kind == ActionKind::Guess;
  f[feature::IsLabelQuery] = action.kind == ActionKind::LabelQuery;
  f[feature::IsExampleQuery] = action.kind == ActionKind::ExampleQuery;
  if (action.kind == ActionKind::Guess)
    fill_guess_features(ep, f);
  else
    fill_query_features(ctx, action, f);
  if (ctx.mask) ctx.mask->apply(f);
  return f;
}

std::vector<FeatureVector> featurize_beam(const FeatureContext& ctx, std::span<const Action> beam) {
  std::vector<FeatureVector> out;
  out.reserve(beam.size());
  for (const auto& a : beam) out.push_back(featurize(ctx, a));
  return out;
}

double PolicyParams::current_alpha() const {
  if (alpha_decay_updates == 0) return alpha;
  const double frac = 1.0 - static_cast<double>(updates) / static_cast<double>(alpha_decay_updates);
  return alpha * std::max(0.0, frac);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> action_probabilities(std::span<const double> theta,
                                         std::span<const FeatureVector> beam) {
  if (beam.empty()) throw ContractError("action_probabilities: empty beam");
  std::vector<double> logits(beam.size());
  for (std::size_t i = 0; i < beam.size(); ++i) logits[i] = dot(theta, beam[i]);
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  for (auto& l : logits) l /= total;
  return logits;
}

std::size_t sample_action(std::span<const double> probabilities, SeedStream& stream) {
  const double point = stream.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (point < cumulative) return i;
  }
  return probabilities.size() - 1;
}

std::vector<double> grad_log_prob(std::span<const double> theta,
                                  std::span<const FeatureVector> beam, std::size_t chosen) {
  if (chosen >= beam.size()) throw std::out_of_range("grad_log_prob: chosen index out of range");
  const auto pi = action_probabilities(theta, beam);
  std::vector<double> g(beam[chosen].begin(), beam[chosen].end());
  for (std::size_t a = 0; a < beam.size(); ++a)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= pi[a] * beam[a][i];
  return g;
}

void reinforce_update(PolicyParams& params, std::span<const Trajectory> batch) {
  const std::size_t n = params.theta.size();
  std::vector<double> step(n, 0.0);
  const double b = params.use_baseline ? params.baseline : 0.0;
  double return_sum = 0.0;
  std::uint64_t return_count = 0;
  for (const auto& traj : batch) {
    if (traj.returns.size() != traj.steps.size())
      throw ContractError("reinforce_update: returns and steps differ in length");
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& s = traj.steps[t];
      const auto g = grad_log_prob(params.theta, s.beam_features, s.chosen);
      const double advantage = traj.returns[t] - b;
      for (std::size_t i = 0; i < n; ++i) step[i] += advantage * g[i];
      return_sum += traj.returns[t];
      ++return_count;
    }
  }
  if (return_count == 0) return;

  const double alpha = params.current_alpha();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(alpha * step[i]) || !std::isfinite(params.theta[i] + alpha * step[i]))
      throw UpdateRejected("REINFORCE step is not finite at feature " +
                           std::string(feature_registry()[i].name) + " (alpha " +
                           std::to_string(alpha) + "); check the learning rate");
  }
  for (std::size_t i = 0; i < n; ++i) params.theta[i] += alpha * step[i];
  params.baseline_count += return_count;
  params.baseline += (return_sum - static_cast<double>(return_count) * params.baseline) /
                     static_cast<double>(params.baseline_count);
  ++params.updates;
}

std::size_t static_policy_act(std::size_t turn, std::span<const Action> beam,
                              const StaticPolicyConfig& config, SeedStream& stream) {
  std::size_t guess = 0;
  std::vector<std::size_t> labels, examples;
  for (std::size_t i = 0; i < beam.size(); ++i) {
    switch (beam[i].kind) {
      case ActionKind::Guess:
        guess = i;
        break;
      case ActionKind::LabelQuery:
        labels.push_back(i);
        break;
      case ActionKind::ExampleQuery:
        examples.push_back(i);
        break;
    }
  }
  if (turn >= config.n_queries) return guess;
  const auto& preferred = turn % 2 == 0 ? labels : examples;
  const auto& fallback = turn % 2 == 0 ? examples : labels;
  if (!preferred.empty()) return preferred[stream.index(preferred.size())];
  if (!fallback.empty()) return fallback[stream.index(fallback.size())];
  return guess;
}

}  // namespace oal
