#include "oal/grounding.hpp"

namespace oal {

std::size_t argmax_lowest_id(std::span<const double> values, std::span<const RegionId> ids) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best] || (values[i] == values[best] && ids[i] < ids[best])) best = i;
  return best;
}

GuessScores score_objects(std::span<const std::string> description, const ModelLookup& models,
                          std::span<const RegionId> active_test, const Corpus& corpus) {
  if (active_test.empty()) throw ContractError("score_objects: empty active test set");
  GuessScores s;
  s.regions.assign(active_test.begin(), active_test.end());
  s.weighted.assign(active_test.size(), 0.0);
  s.unweighted.assign(active_test.size(), 0.0);
  for (const auto& p : description) {
    const PredicateModel* m = models(p);
    const double c = m ? m->estimated_f1 : 0.0;
    for (std::size_t i = 0; i < active_test.size(); ++i) {
      const double d = m ? to_int(decide(*m, corpus.features(active_test[i]))) : -1.0;
      s.weighted[i] += d * c;
      s.unweighted[i] += d;
    }
  }
  s.best = best_guess(s);
  return s;
}

RegionId best_guess(const GuessScores& scores) {
  if (scores.regions.empty()) throw ContractError("best_guess: no scored regions");
  return scores.regions[argmax_lowest_id(scores.weighted, scores.regions)];
}

}  // namespace oal
