#include <gtest/gtest.h>

#include "jigsaw/prng.hpp"

using jigsaw::Prng;

TEST(Prng, SameSeedSameSequence) {
    Prng a(42), b(42);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Prng, DifferentSeedsDiverge) {
    Prng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 100; ++i) equal += (a.next() == b.next());
    EXPECT_LT(equal, 3);
}

TEST(Prng, BelowStaysInRange) {
    Prng rng(7);
    for (std::uint64_t n : {1ull, 2ull, 3ull, 10ull, 1000ull}) {
        for (int i = 0; i < 200; ++i) EXPECT_LT(rng.below(n), n);
    }
}

TEST(Prng, BelowRoughlyUniform) {
    Prng rng(123);
    constexpr int buckets = 10, draws = 100000;
    int counts[buckets] = {};
    for (int i = 0; i < draws; ++i) counts[rng.below(buckets)]++;
    for (int c : counts) {
        EXPECT_GT(c, draws / buckets * 0.9);
        EXPECT_LT(c, draws / buckets * 1.1);
    }
}

TEST(Prng, ShuffleIsPermutationAndDeterministic) {
    std::vector<int> v(100), w(100);
    for (int i = 0; i < 100; ++i) v[i] = w[i] = i;
    Prng a(5), b(5);
    a.shuffle(v);
    b.shuffle(w);
    EXPECT_EQ(v, w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_NE(v[0] * 100 + v[1], 0 * 100 + 1);  // actually shuffled
}

TEST(Prng, NormalMoments) {
    Prng rng(99);
    constexpr int n = 50000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Prng, Real01Range) {
    Prng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.real01();
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
}
