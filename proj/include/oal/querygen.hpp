#pragma once

#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oal/grounding.hpp"
#include "oal/rng.hpp"
#include "oal/types.hpp"

namespace oal {

// Piecewise-linear predicate weight over estimated F1: w_min at C = 0,
// rising to w_max at C = c_max, falling back to w_min at C = 1.
struct TriangularWeights {
  double w_min = 0.1;
  double w_max = 1.0;
  double c_max = 0.6;

  void validate() const;  // throws ConfigError
};

double predicate_weight(double f1, const TriangularWeights& params);

// Draws `count` predicates without replacement, probability proportional to
// predicate_weight of each predicate's estimated F1 (renormalized after every
// draw). Returns all of them, in order, when there are no more than `count`.
std::vector<std::string> sample_predicates(std::span<const std::string> predicates,
                                           const ModelLookup& models, std::size_t count,
                                           const TriangularWeights& params, SeedStream& stream);

using LabeledPair = std::function<bool(const std::string&, RegionId)>;

struct ExhaustedError : Error {
  using Error::Error;
};

// Uncertainty sampling: the unlabeled active-train region closest to the
// predicate's hyperplane (ties to lowest id), or a uniform pick when the
// predicate has no classifier yet. Throws ExhaustedError when every region
// is already labeled for the predicate.
RegionId best_object_for_predicate(const std::string& predicate, const PredicateModel* model,
                                   std::span<const RegionId> active_train,
                                   const LabeledPair& labeled, const Corpus& corpus,
                                   SeedStream& stream);

struct BeamConfig {
  std::size_t n_label = 3;
  std::size_t n_example = 3;
};

struct BeamRequest {
  std::size_t turn = 0;
  std::size_t t_max = 40;
  std::span<const std::string> predicates;  // the agent's P
  std::span<const RegionId> active_train;
  const std::set<std::string>* asked_examples = nullptr;
};

// [Guess, label queries..., example queries...]. At the turn cap only Guess.
std::vector<Action> build_beam(const BeamRequest& request, const ModelLookup& models,
                               const LabeledPair& labeled, const Corpus& corpus,
                               const BeamConfig& config, const TriangularWeights& weights,
                               SeedStream& stream);

}  // namespace oal
