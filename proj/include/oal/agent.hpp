#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oal/perception.hpp"

namespace oal {

struct PredicateUsage {
  std::uint64_t used = 0;       // dialogs whose description contained the predicate
  std::uint64_t succeeded = 0;  // ... and ended in a correct guess
};

// Cross-dialog counters, refreshed at batch boundaries.
struct AgentStats {
  std::map<std::string, PredicateUsage> usage;
  std::uint64_t dialogs = 0;

  double usage_fraction(const std::string& predicate) const;
  double success_rate(const std::string& predicate) const;
  void record_dialog(const std::vector<std::string>& description, bool success);
};

// Everything the agent learns about perception. The key set of `models` is
// the set P of predicates seen so far.
struct AgentState {
  std::map<std::string, PredicateModel> models;
  AgentStats stats;

  const PredicateModel* model(const std::string& predicate) const;
  std::vector<std::string> predicates() const;
  // Starts over with no predicates, no classifiers and no stats.
  void reset_perception();
  std::size_t trained_classifiers() const;
};

}  // namespace oal
