#include "oal/agent.hpp"

#include <algorithm>

namespace oal {

double AgentStats::usage_fraction(const std::string& predicate) const {
  if (dialogs == 0) return 0.0;
  const auto it = usage.find(predicate);
  if (it == usage.end()) return 0.0;
  return static_cast<double>(it->second.used) / static_cast<double>(dialogs);
}

double AgentStats::success_rate(const std::string& predicate) const {
  const auto it = usage.find(predicate);
  if (it == usage.end() || it->second.used == 0) return 0.0;
  return static_cast<double>(it->second.succeeded) / static_cast<double>(it->second.used);
}

void AgentStats::record_dialog(const std::vector<std::string>& description, bool success) {
  ++dialogs;
  for (const auto& p : description) {
    auto& u = usage[p];
    ++u.used;
    u.succeeded += success ? 1 : 0;
  }
}

const PredicateModel* AgentState::model(const std::string& predicate) const {
  const auto it = models.find(predicate);
  return it == models.end() ? nullptr : &it->second;
}

std::vector<std::string> AgentState::predicates() const {
  std::vector<std::string> out;
  out.reserve(models.size());
  for (const auto& [p, m] : models) out.push_back(p);
  return out;
}

void AgentState::reset_perception() {
  models.clear();
  stats = AgentStats{};
}

std::size_t AgentState::trained_classifiers() const {
  return static_cast<std::size_t>(std::count_if(
      models.begin(), models.end(), [](const auto& kv) { return kv.second.weights.has_value(); }));
}

}  // namespace oal
