#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oal/corpus.hpp"
#include "oal/perception.hpp"

namespace oal {

// Resolves a predicate to its current model, or nullptr when the agent has
// no model for it (treated as untrained: decision -1, F1 0).
using ModelLookup = std::function<const PredicateModel*(const std::string&)>;

struct GuessScores {
  std::vector<RegionId> regions;   // active test set, in the order given
  std::vector<double> weighted;    // sum_i d(p_i, o) * C(p_i)
  std::vector<double> unweighted;  // sum_i d(p_i, o)
  RegionId best;                   // best_guess() at scoring time
};

GuessScores score_objects(std::span<const std::string> description, const ModelLookup& models,
                          std::span<const RegionId> active_test, const Corpus& corpus);

// Argmax of the weighted scores, ties to the lowest region id.
RegionId best_guess(const GuessScores& scores);

// Argmax over values with ties broken by the lowest region id.
std::size_t argmax_lowest_id(std::span<const double> values, std::span<const RegionId> ids);

}  // namespace oal
