#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "pmcmc/balancer.hpp"
#include "pmcmc/errors.hpp"
#include "pmcmc/filter.hpp"
#include "pmcmc/random.hpp"

namespace pmcmc {
namespace {

TEST(BlockLocations, SpreadsTheRemainderOverLowRanks) {
  const auto loc = block_locations(10, 4);
  std::vector<std::size_t> load(4, 0);
  for (const auto& l : loc) ++load[l.worker];
  EXPECT_EQ(load, (std::vector<std::size_t>{3, 3, 2, 2}));
  EXPECT_EQ(loc[0].worker, 0u);
  EXPECT_EQ(loc[9].worker, 3u);
}

// p = 8 on W = 4, lineages 2w and 2w+1 on worker w; lineage 0 takes all
// copies. W_max = 2: worker 0 keeps two, workers 1, 2, 3 each receive two.
TEST(Routing, HandTracedSingleSurvivor) {
  const ResampleCounts counts{8, 0, 0, 0, 0, 0, 0, 0};
  const auto loc = block_locations(8, 4);
  const Routing r = compute_routing(counts, loc, 4);
  EXPECT_EQ(r.w_max, 2u);
  EXPECT_EQ(destination_loads(r), (std::vector<std::size_t>{2, 2, 2, 2}));
  const Traffic t = traffic_metrics(r);
  EXPECT_DOUBLE_EQ(t.move_fraction, 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(t.copy_fraction, 0.5);
  const auto slice = routing_slice(r, 1);
  ASSERT_EQ(slice.size(), 2u);
  for (const auto& e : slice) {
    EXPECT_EQ(e.lineage_id, 0u);
    EXPECT_EQ(e.source, 0u);
    EXPECT_EQ(e.destination, 1u);
  }
  for (std::size_t k = 0; k < r.entries.size(); ++k) EXPECT_EQ(r.entries[k].new_lineage_id, k);
  EXPECT_FALSE(check_routing(r, counts, loc));
}

TEST(Routing, IdentityResampleMovesNothing) {
  const auto loc = block_locations(9, 4);
  const ResampleCounts counts(9, 1);
  const Routing r = compute_routing(counts, loc, 4);
  EXPECT_EQ(traffic_metrics(r).move_fraction, 0.0);
  EXPECT_EQ(traffic_metrics(r).copy_fraction, 0.0);
  for (const auto& e : r.entries) {
    EXPECT_EQ(e.source, e.destination);
    EXPECT_EQ(e.lineage_id, e.new_lineage_id);
  }
}

TEST(Routing, NearestWorkerPreferredLowerRankOnTies) {
  // W = 3, p = 3, lineage 1 (on worker 1) takes all copies; worker 1 keeps
  // one, then distance 1 offers workers 0 and 2: lower rank first.
  const auto loc = block_locations(3, 3);
  const Routing r = compute_routing(ResampleCounts{0, 3, 0}, loc, 3);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.entries[0].destination, 0u);
  EXPECT_EQ(r.entries[1].destination, 1u);
  EXPECT_EQ(r.entries[2].destination, 2u);
}

TEST(Routing, RejectsInconsistentInput) {
  const auto loc = block_locations(4, 2);
  EXPECT_THROW((void)compute_routing(ResampleCounts{1, 1, 1}, loc, 2), PreconditionError);
  EXPECT_THROW((void)compute_routing(ResampleCounts{1, 1, 1, 0}, loc, 2), PreconditionError);
  EXPECT_THROW((void)compute_routing(ResampleCounts{1, 1, 1, 1}, loc, 0), PreconditionError);
}

TEST(Routing, PropertyBattery) {
  Rng rng(31337);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t p = 1 + rng.next() % 64;
    const std::size_t W = 1 + rng.next() % 16;
    const std::size_t w_max = (p + W - 1) / W;
    std::vector<ParticleLocation> loc;
    std::vector<std::size_t> load(W, 0);
    for (LineageId i = 0; i < p; ++i) {
      auto w = static_cast<WorkerRank>(rng.next() % W);
      while (load[w] >= w_max) w = static_cast<WorkerRank>((w + 1) % W);
      ++load[w];
      loc.push_back({i, w});
    }
    std::vector<double> weights(p);
    for (auto& x : weights) x = rng.bernoulli(0.5) ? 0.0 : rng.uniform();
    weights[rng.next() % p] = 1.0;
    const auto counts = resample_multinomial(normalize_weights(weights), p, rng.next());
    const Routing r = compute_routing(counts, loc, W);

    ASSERT_EQ(r.entries.size(), p);
    const auto loads = destination_loads(r);
    ASSERT_EQ(std::accumulate(loads.begin(), loads.end(), std::size_t{0}), p);
    for (auto l : loads) ASSERT_LE(l, w_max);
    // Local priority: a surviving lineage leaves its worker entirely only
    // if that worker ends up full.
    for (LineageId i = 0; i < p; ++i) {
      if (counts[i] == 0) continue;
      const bool kept = std::any_of(r.entries.begin(), r.entries.end(), [&](const RoutingEntry& e) {
        return e.lineage_id == i && e.destination == loc[i].worker;
      });
      if (!kept) ASSERT_EQ(loads[loc[i].worker], w_max);
    }
    ASSERT_FALSE(check_routing(r, counts, loc)) << *check_routing(r, counts, loc);
    const auto after = locations_after(r);
    ASSERT_EQ(after.size(), p);
    ASSERT_EQ(traffic_metrics(compute_routing(ResampleCounts(p, 1), after, W)).move_fraction, 0.0);
  }
}

TEST(CheckRouting, DetectsViolations) {
  const ResampleCounts counts{8, 0, 0, 0, 0, 0, 0, 0};
  const auto loc = block_locations(8, 4);
  Routing r = compute_routing(counts, loc, 4);
  Routing overloaded = r;
  overloaded.entries[2].destination = 0;
  EXPECT_TRUE(check_routing(overloaded, counts, loc));
  Routing dup = r;
  dup.entries[1].new_lineage_id = 0;
  EXPECT_TRUE(check_routing(dup, counts, loc));
  Routing wrong_source = r;
  wrong_source.entries[3].source = 2;
  EXPECT_TRUE(check_routing(wrong_source, counts, loc));
}

}  // namespace
}  // namespace pmcmc
