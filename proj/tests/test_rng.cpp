#include "pats/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace pats;

TEST(Rng, SubstreamsArePureFunctionsOfKey)
{
    const RngStream rng(42);
    const Substream a = rng.substream("layer", 3, Purpose::gauss);
    const Substream b = RngStream(42).substream("layer", 3, Purpose::gauss);
    for (std::uint64_t i = 0; i < 100; ++i) {
        EXPECT_EQ(a.bits(i), b.bits(i));
    }
}

TEST(Rng, DistinctLabelsIndicesAndPurposesDiffer)
{
    const RngStream rng(42);
    std::set<std::uint64_t> keys{
        rng.substream("layer", 3, Purpose::gauss).key(),   rng.substream("layer", 4, Purpose::gauss).key(),
        rng.substream("layer", 3, Purpose::bernoulli).key(), rng.substream("layer2", 3, Purpose::gauss).key(),
        RngStream(43).substream("layer", 3, Purpose::gauss).key(),
    };
    EXPECT_EQ(keys.size(), 5u);
}

TEST(Rng, UniformMoments)
{
    const Substream s = RngStream(1).substream("u", 0, Purpose::data);
    const int n = 200000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform(static_cast<std::uint64_t>(i));
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sum_sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 3 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(sum_sq / n - 0.25, 1.0 / 12, 0.002);
}

TEST(Rng, NormalMoments)
{
    const Substream s = RngStream(2).substream("n", 0, Purpose::data);
    const int n = 200000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal(static_cast<std::uint64_t>(i));
        sum += z;
        sum_sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 3 / std::sqrt(n));
    EXPECT_NEAR(sum_sq / n, 1.0, 0.02);
}

TEST(Rng, NextBelowCoversRangeUniformly)
{
    Draws d(RngStream(3).substream("below", 0, Purpose::shuffle));
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = d.next_below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) {
        EXPECT_NEAR(c, 10000, 400);
    }
}

TEST(Rng, HashLabelIsStable)
{
    // FNV-1a reference values.
    EXPECT_EQ(hash_label(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(hash_label("a"), 0xaf63dc4c8601ec8cULL);
}
