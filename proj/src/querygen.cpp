#include "oal/querygen.hpp"

#include <algorithm>
#include <limits>

namespace oal {

void TriangularWeights::validate() const {
  if (!(w_min > 0.0 && w_min < w_max))
    throw ConfigError("triangular weights need 0 < w_min < w_max");
  if (!(c_max > 0.0 && c_max < 1.0)) throw ConfigError("triangular c_max must lie in (0, 1)");
}

double predicate_weight(double f1, const TriangularWeights& params) {
  const double c = std::clamp(f1, 0.0, 1.0);
  const double rise = params.w_max - params.w_min;
  if (c == params.c_max) return params.w_max;
  if (c < params.c_max) return params.w_min + (c / params.c_max) * rise;
  return params.w_min + ((1.0 - c) / (1.0 - params.c_max)) * rise;
}

std::vector<std::string> sample_predicates(std::span<const std::string> predicates,
                                           const ModelLookup& models, std::size_t count,
                                           const TriangularWeights& params, SeedStream& stream) {
  if (predicates.size() <= count) return {predicates.begin(), predicates.end()};
  std::vector<std::string> pool(predicates.begin(), predicates.end());
  std::vector<double> weights;
  weights.reserve(pool.size());
  for (const auto& p : pool) {
    const PredicateModel* m = models(p);
    weights.push_back(predicate_weight(m ? m->estimated_f1 : 0.0, params));
  }
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t i = stream.weighted_index(weights);
    out.push_back(std::move(pool[i]));
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return out;
}

RegionId best_object_for_predicate(const std::string& predicate, const PredicateModel* model,
                                   std::span<const RegionId> active_train,
                                   const LabeledPair& labeled, const Corpus& corpus,
                                   SeedStream& stream) {
  std::vector<RegionId> open;
  for (auto r : active_train)
    if (!labeled(predicate, r)) open.push_back(r);
  if (open.empty())
    throw ExhaustedError("every active-train region is labeled for '" + predicate + "'");
  std::sort(open.begin(), open.end());
  if (model == nullptr || !model->weights) return open[stream.index(open.size())];

  RegionId best = open.front();
  double best_margin = std::numeric_limits<double>::infinity();
  for (auto r : open) {
    const double m = margin(*model, corpus.features(r));
    if (m < best_margin) {
      best_margin = m;
      best = r;
    }
  }
  return best;
}

std::vector<Action> build_beam(const BeamRequest& request, const ModelLookup& models,
                               const LabeledPair& labeled, const Corpus& corpus,
                               const BeamConfig& config, const TriangularWeights& weights,
                               SeedStream& stream) {
  std::vector<Action> beam{Action::guess()};
  if (request.turn >= request.t_max) return beam;

  // Exhausted predicates are dropped before sampling so that an exhausted
  // draw never costs a beam slot.
  std::vector<std::string> label_pool;
  for (const auto& p : request.predicates) {
    const bool open = std::any_of(request.active_train.begin(), request.active_train.end(),
                                  [&](RegionId r) { return !labeled(p, r); });
    if (open) label_pool.push_back(p);
  }
  for (const auto& p : sample_predicates(label_pool, models, config.n_label, weights, stream)) {
    const RegionId r =
        best_object_for_predicate(p, models(p), request.active_train, labeled, corpus, stream);
    beam.push_back(Action::label_query(p, r));
  }

  std::vector<std::string> example_pool;
  for (const auto& p : request.predicates)
    if (request.asked_examples == nullptr || !request.asked_examples->contains(p))
      example_pool.push_back(p);
  for (auto& p : sample_predicates(example_pool, models, config.n_example, weights, stream))
    beam.push_back(Action::example_query(std::move(p)));
  return beam;
}

}  // namespace oal
