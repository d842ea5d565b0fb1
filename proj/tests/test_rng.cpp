#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "dyadic/rng.hpp"

using namespace dyadic;

TEST(Rng, SameSeedSameStream) {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, NamedStreamsDiffer) {
    EXPECT_NE(derive_seed(1, "init"), derive_seed(1, "shuffle"));
    EXPECT_NE(derive_seed(1, "shuffle", 0), derive_seed(1, "shuffle", 1));
    EXPECT_NE(derive_seed(1, "init"), derive_seed(2, "init"));
    EXPECT_EQ(derive_seed(9, "split", 3), derive_seed(9, "split", 3));
}

TEST(Rng, UniformInRange) {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        const double v = rng.uniform(-0.08, 0.08);
        EXPECT_GE(v, -0.08);
        EXPECT_LT(v, 0.08);
    }
}

TEST(Rng, IndexCoversRangeRoughlyUniformly) {
    Rng rng(4);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[rng.index(7)];
    for (int c : counts) EXPECT_NEAR(c, n / 7, 600);
}

TEST(Rng, ShuffleIsPermutation) {
    Rng rng(6);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}
