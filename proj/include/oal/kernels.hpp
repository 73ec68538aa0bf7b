#pragma once

#include <map>
#include <span>
#include <string>

#include "oal/corpus.hpp"
#include "oal/perception.hpp"

// Data-parallel kernels. Each parallel kernel has a serial twin that is the
// reference in tests; both must produce bit-identical results because every
// output element is computed by exactly one iteration in a fixed order.
namespace oal::kernels {

enum class Execution { Serial, Parallel };

DensityIndex build_density_index(const Corpus& corpus, const DensityConfig& config);
DensityIndex build_density_index_serial(const Corpus& corpus, const DensityConfig& config);

// Retrains and re-estimates F1 for the named predicates.
void refresh_models(std::map<std::string, PredicateModel>& models,
                    std::span<const std::string> predicates, const Corpus& corpus,
                    const ClassifierConfig& config);
void refresh_models_serial(std::map<std::string, PredicateModel>& models,
                           std::span<const std::string> predicates, const Corpus& corpus,
                           const ClassifierConfig& config);

inline DensityIndex build_density_index(const Corpus& corpus, const DensityConfig& config,
                                        Execution exec) {
  return exec == Execution::Parallel ? build_density_index(corpus, config)
                                     : build_density_index_serial(corpus, config);
}

inline void refresh_models(std::map<std::string, PredicateModel>& models,
                           std::span<const std::string> predicates, const Corpus& corpus,
                           const ClassifierConfig& config, Execution exec) {
  if (exec == Execution::Parallel)
    refresh_models(models, predicates, corpus, config);
  else
    refresh_models_serial(models, predicates, corpus, config);
}

int max_threads();

}  // namespace oal::kernels
