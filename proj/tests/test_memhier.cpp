#include "gpudse/memhier.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace gpudse;

namespace {

std::vector<std::uint64_t> lanes(std::uint64_t start, std::uint64_t stride) {
    std::vector<std::uint64_t> a;
    for (std::uint64_t i = 0; i < kWarpSize; ++i) a.push_back(start + i * stride);
    return a;
}

std::vector<std::uint64_t> random_trace(std::uint64_t seed, std::size_t n, std::uint64_t span) {
    std::mt19937_64 rng(seed);
    // Mix of a hot region and a uniform tail so both hits and misses occur.
    std::uniform_int_distribution<std::uint64_t> hot(0, span / 16), cold(0, span);
    std::bernoulli_distribution pick(0.6);
    std::vector<std::uint64_t> t(n);
    for (auto& a : t) a = pick(rng) ? hot(rng) : cold(rng);
    return t;
}

}  // namespace

TEST(Coalesce, ContiguousWordsTwoLines) {
    EXPECT_EQ(coalesce(lanes(0, 4), 64), (std::vector<std::uint64_t>{0, 64}));
}

TEST(Coalesce, ConvergentAccess) {
    EXPECT_EQ(coalesce(std::vector<std::uint64_t>(32, 4096), 64), (std::vector<std::uint64_t>{4096}));
}

TEST(Coalesce, LineStrideGivesOneLinePerLane) { EXPECT_EQ(coalesce(lanes(0, 64), 64).size(), 32u); }

TEST(Cache, ColdMissThenHit) {
    Cache c({1024, 2, 64, 1});
    EXPECT_FALSE(c.access(0, false).hit);
    EXPECT_TRUE(c.access(0, false).hit);
    EXPECT_TRUE(c.access(63, false).hit);
}

TEST(Cache, DirectMappedConflict) {
    Cache c({128, 1, 64, 1});  // 2 sets
    EXPECT_FALSE(c.access(0, false).hit);
    EXPECT_FALSE(c.access(128, false).hit);
    EXPECT_FALSE(c.access(0, false).hit);
    EXPECT_EQ(c.stats().misses, 3u);
}

TEST(Cache, LruOrderAndDirtyEviction) {
    Cache c({128, 2, 64, 1});  // one set, two ways
    c.access(0, true);
    c.access(64, false);
    c.access(0, false);  // 0 becomes MRU
    EXPECT_EQ(c.set_contents(0), (std::vector<std::uint64_t>{0, 64}));
    const AccessOutcome o = c.access(128, false);
    ASSERT_TRUE(o.evicted_line.has_value());
    EXPECT_EQ(*o.evicted_line, 64u);
    EXPECT_FALSE(o.evicted_dirty);
    const AccessOutcome o2 = c.access(192, false);
    EXPECT_EQ(*o2.evicted_line, 0u);
    EXPECT_TRUE(o2.evicted_dirty);
    EXPECT_EQ(c.stats().dirty_writebacks, 1u);
}

TEST(Cache, ProbeHasNoSideEffects) {
    Cache c({128, 2, 64, 1});
    c.access(0, false);
    c.access(64, false);
    EXPECT_TRUE(c.probe(0));
    EXPECT_FALSE(c.probe(128));
    const MemStats before = c.stats();
    c.access(128, false);  // evicts 0, the LRU line, because probe did not touch it
    EXPECT_FALSE(c.probe(0));
    EXPECT_EQ(c.stats().accesses, before.accesses + 1);
}

TEST(Cache, MatchesNaiveOracle) {
    for (std::uint32_t ways : {1u, 2u, 3u, 4u, 8u}) {
        const CacheGeometry g{ways * 64 * 32, ways, 64, 1};
        Cache c(g);
        oracle::NaiveLru ref(g.set_count(), ways, 64);
        for (std::uint64_t a : random_trace(ways, 20000, 64 * 1024)) {
            ASSERT_EQ(c.access(a, a % 3 == 0).hit, ref.access(a));
        }
    }
}

TEST(Cache, StackPropertyPerTrace) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto trace = random_trace(seed, 5000, 32 * 1024);
        std::uint64_t prev = ~0ULL;
        for (std::uint32_t ways : {1u, 2u, 4u, 8u}) {
            Cache c({64ULL * 16 * ways, ways, 64, 1});
            for (std::uint64_t a : trace) c.access(a, false);
            EXPECT_LE(c.stats().misses, prev);
            prev = c.stats().misses;
        }
    }
}

TEST(Cache, RejectsGeometryWithoutSets) { EXPECT_THROW(Cache({32, 1, 64, 1}), ConfigError); }

TEST(Dram, SingleRequestLatency) {
    DramConfig d{32.0, 220, 16};
    const std::vector<MemRequest> q{{0, false, 0, 0}};
    EXPECT_EQ(dram_service(q, d, 64), (std::vector<std::uint64_t>{220}));
}

TEST(Dram, TokenSpacing) {
    DramConfig d{32.0, 220, 16};
    const std::vector<MemRequest> q{{0, false, 0, 0}, {64, false, 0, 0}};
    const auto done = dram_service(q, d, 64);
    ASSERT_EQ(done.size(), 2u);
    EXPECT_EQ(done[1] - done[0], 2u);
}

TEST(Dram, EmptyQueue) { EXPECT_TRUE(dram_service({}, DramConfig{}, 64).empty()); }

TEST(Dram, FractionalSpacingAccumulates) {
    DramConfig d{48.0, 10, 16};  // 64 / 48 = 1.333 cycles per line
    std::vector<MemRequest> q(4);
    const auto done = dram_service(q, d, 64);
    EXPECT_EQ(done.front(), 10u);
    EXPECT_EQ(done.back(), 14u);  // 10 + 3 * 64/48
}

TEST(MemorySystem, DramBytesConservation) {
    GpuConfig c = preset(Platform::tx2);
    c.l2.size_bytes = 64 * 1024;
    MemorySystem m(c);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint64_t> addr(0, 4 << 20);
    for (std::uint64_t t = 0; t < 20000; ++t) {
        m.access(static_cast<std::uint32_t>(t % 2), addr(rng) & ~63ULL, t % 4 == 0, t);
    }
    const MemStats l2 = m.l2_stats();
    EXPECT_GT(l2.dirty_writebacks, 0u);
    EXPECT_EQ(l2.dram_bytes, (l2.misses + l2.dirty_writebacks) * 64);
}

TEST(MemorySystem, HitAfterFillWaitsForData) {
    MemorySystem m(preset(Platform::tx2));
    const LineTiming first = m.access(0, 0, false, 0);
    EXPECT_FALSE(first.l1_hit);
    const LineTiming second = m.access(0, 0, false, 1);
    EXPECT_TRUE(second.l1_hit);
    EXPECT_EQ(second.ready_cycle, first.ready_cycle);
    const LineTiming later = m.access(0, 0, false, first.ready_cycle + 100);
    EXPECT_EQ(later.ready_cycle, first.ready_cycle + 100 + kDefaultL1Latency);
}

TEST(MemorySystem, TraceFormat) {
    MemorySystem m(preset(Platform::tx2));
    std::ostringstream trace;
    m.set_trace(&trace);
    m.access(1, 128, false, 5);
    EXPECT_EQ(trace.str(), "5 1 L1 128 miss\n33 1 L2 128 miss\n");
}
