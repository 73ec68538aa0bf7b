#include <gtest/gtest.h>

#include <map>

#include "fixtures.hpp"
#include "oal/grounding.hpp"

using namespace oal;
using oal::testing::region;

namespace {

// Regions o1, o2, o3 at fixed points; p1 fires on x0 >= 0, p2 on x1 >= 0.
struct Worked {
  Corpus corpus{std::vector<Region>{region("o1", {1.0, -1.0}, {"x"}),
                                    region("o2", {-1.0, 1.0}, {"x"}),
                                    region("o3", {1.0, 1.0}, {"x"})}};
  std::map<std::string, PredicateModel> models;

  Worked() {
    models["p1"].weights = std::vector<double>{1.0, 0.0, 0.0};
    models["p1"].estimated_f1 = 0.9;
    models["p2"].weights = std::vector<double>{0.0, 1.0, 0.0};
    models["p2"].estimated_f1 = 0.4;
  }
  ModelLookup lookup() const {
    return [this](const std::string& p) -> const PredicateModel* {
      const auto it = models.find(p);
      return it == models.end() ? nullptr : &it->second;
    };
  }
};

}  // namespace

TEST(Score, WorkedInstance) {
  Worked w;
  const std::vector<std::string> desc{"p1", "p2"};
  const auto s = score_objects(desc, w.lookup(), oal::testing::ids({0, 1, 2}), w.corpus);
  EXPECT_NEAR(s.weighted[0], 0.5, 1e-12);
  EXPECT_NEAR(s.weighted[1], -0.5, 1e-12);
  EXPECT_NEAR(s.weighted[2], 1.3, 1e-12);
  EXPECT_EQ(s.unweighted, (std::vector<double>{0.0, 0.0, 2.0}));
  EXPECT_EQ(s.best, RegionId{2});
  EXPECT_EQ(best_guess(s), RegionId{2});
}

TEST(Score, AllUntrainedPicksLowestId) {
  Worked w;
  const std::vector<std::string> desc{"q", "r"};
  const auto s = score_objects(desc, w.lookup(), oal::testing::ids({2, 0, 1}), w.corpus);
  for (double v : s.weighted) EXPECT_EQ(v, 0.0);
  for (double v : s.unweighted) EXPECT_EQ(v, -2.0);
  EXPECT_EQ(best_guess(s), RegionId{0});
}

TEST(Score, SingleRegion) {
  Worked w;
  const std::vector<std::string> desc{"p2"};
  EXPECT_EQ(best_guess(score_objects(desc, w.lookup(), oal::testing::ids({1}), w.corpus)),
            RegionId{1});
}

TEST(Score, NegationMovesTheArgmax) {
  Worked w;
  const std::vector<std::string> desc{"p1", "p2"};
  auto s = score_objects(desc, w.lookup(), oal::testing::ids({0, 1, 2}), w.corpus);
  for (auto& v : s.weighted) v = -v;
  EXPECT_EQ(best_guess(s), RegionId{1});
}

TEST(Score, ZeroF1PredicateDoesNotMoveWeightedScores) {
  Worked w;
  w.models["p3"].weights = std::vector<double>{1.0, 1.0, 0.0};
  w.models["p3"].estimated_f1 = 0.0;
  const std::vector<std::string> with{"p1", "p2", "p3"}, without{"p1", "p2"};
  const auto a = score_objects(with, w.lookup(), oal::testing::ids({0, 1, 2}), w.corpus);
  const auto b = score_objects(without, w.lookup(), oal::testing::ids({0, 1, 2}), w.corpus);
  EXPECT_EQ(a.weighted, b.weighted);
}

TEST(Argmax, TiesToLowestIdRegardlessOfPosition) {
  const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax_lowest_id(v, oal::testing::ids({4, 9, 5, 1})), 2u);
  EXPECT_EQ(argmax_lowest_id(v, oal::testing::ids({4, 5, 9, 1})), 1u);
}
