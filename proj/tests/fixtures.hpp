#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "oal/corpus.hpp"
#include "oal/rng.hpp"

namespace oal::testing {

inline Region region(std::string id, std::vector<double> features,
                     std::vector<std::string> annotations,
                     std::vector<std::string> description = {}) {
  Region r;
  r.id = std::move(id);
  r.features = std::move(features);
  std::sort(annotations.begin(), annotations.end());
  r.annotations = std::move(annotations);
  r.description = std::move(description);
  return r;
}

// n regions in d dims with standard-normal features; predicate "a" holds
// where x0 >= 0 and "b" where x1 >= 0.5. Descriptions list every annotation.
inline Corpus two_predicate_corpus(std::size_t n, std::size_t d, std::uint64_t seed) {
  SeedStream s(seed);
  std::vector<Region> regions;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (auto& v : x) v = s.normal();
    std::vector<std::string> ann;
    if (x[0] >= 0.0) ann.push_back("a");
    if (d > 1 && x[1] >= 0.5) ann.push_back("b");
    if (ann.empty()) ann.push_back("c");
    regions.push_back(region("r" + std::to_string(i), x, ann, ann));
  }
  return Corpus(std::move(regions));
}

inline std::vector<RegionId> ids(std::initializer_list<std::uint32_t> v) {
  std::vector<RegionId> out;
  for (auto x : v) out.push_back(RegionId{x});
  return out;
}

}  // namespace oal::testing
