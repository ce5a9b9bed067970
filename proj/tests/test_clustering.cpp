#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace iodetect;
using namespace testing_support;

TEST(Cluster, ChainIsOneCluster) {
  // a-b and b-c are close, a-c is not
  const auto m = matrix({{{1, -40}, {2, -50}, {3, -60}, {4, -70}},
                         {{1, -40}, {2, -50}, {3, -70}, {4, -60}},
                         {{1, -50}, {2, -40}, {3, -70}, {4, -60}}});
  const FingerprintIndex index(m);
  const double ab = index.distance(0, 1).value, bc = index.distance(1, 2).value, ac = index.distance(0, 2).value;
  ASSERT_LE(std::max(ab, bc), 0.22);
  ASSERT_GT(ac, 0.22);
  const auto a = cluster(m);
  EXPECT_EQ(a.cluster_count(), 1u);
  EXPECT_EQ(a.size(0), 3u);
}

TEST(Cluster, EmptyRunClustersTogether) {
  const auto a = cluster(matrix({{{1, -40}}, {}, {}, {}, {}, {{2, -40}}}));
  EXPECT_EQ(a.cluster_count(), 3u);
  EXPECT_EQ(a.members[1], (std::vector<FpIndex>{1, 2, 3, 4}));
}

TEST(Cluster, IdsFollowFirstMember) {
  const auto a = cluster(matrix({{{1, -40}}, {{2, -40}}, {{1, -50}}, {{3, -40}}}));
  EXPECT_EQ(a.cluster_of, (std::vector<ClusterId>{0, 1, 0, 2}));
}

TEST(Cluster, MatchesConnectedComponentsOracle) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto m = matrix(random_scans(2000, seed));
    const auto a = cluster(m);
    EXPECT_EQ(canonical(to_sizes(a.cluster_of)), canonical(components_oracle(m, 0.22)));
    std::size_t total = 0;
    for (const auto& mem : a.members) total += mem.size();
    EXPECT_EQ(total, m.scan_count());
  }
}

TEST(Cluster, ExpansionOrderDoesNotChangeMembership) {
  const auto m = matrix(random_scans(800, 6));
  const FingerprintIndex index(m);
  // depth-first, seeds in reverse order
  std::vector<std::size_t> label(m.scan_count(), SIZE_MAX);
  std::size_t next = 0;
  for (std::size_t s = m.scan_count(); s-- > 0;) {
    if (label[s] != SIZE_MAX) continue;
    std::vector<FpIndex> stack{static_cast<FpIndex>(s)};
    label[s] = next;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      auto hood = index.region_query(p, 0.22);
      std::reverse(hood.begin(), hood.end());
      for (auto q : hood)
        if (label[q] == SIZE_MAX) label[q] = next, stack.push_back(q);
    }
    ++next;
  }
  EXPECT_EQ(canonical(to_sizes(cluster(index).cluster_of)), canonical(label));
}

TEST(Cluster, MinPtsAboveOneKeepsEveryPoint) {
  const auto m = matrix(random_scans(600, 12));
  const auto a = cluster(m, {0.22, 3});
  std::size_t total = 0;
  for (const auto& mem : a.members) total += mem.size();
  EXPECT_EQ(total, m.scan_count());
  EXPECT_GE(a.cluster_count(), cluster(m).cluster_count());
}

TEST(Cluster, RejectsBadParameters) {
  const auto m = matrix({{{1, -40}}});
  EXPECT_THROW(cluster(m, {2.0, 1}), ConfigError);
  EXPECT_THROW(cluster(m, {-0.5, 1}), ConfigError);
  EXPECT_THROW(cluster(m, {0.22, 0}), ConfigError);
}

TEST(ClusterAssignment, RoundTripsThroughFile) {
  const auto a = cluster(matrix(random_scans(200, 4)));
  std::stringstream s;
  write_assignment(s, a);
  EXPECT_EQ(read_assignment(s), a);
}
