#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pnn/rng.hpp"

using namespace pnn;

TEST_CASE("identical seeds give identical mixed draw traces", "[rng]") {
    Rng a(987654321), b(987654321);
    std::vector<int> items_a(17), items_b(17);
    std::iota(items_a.begin(), items_a.end(), 0);
    std::iota(items_b.begin(), items_b.end(), 0);
    for (int i = 0; i < 200; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.gaussian(0.5, 2.0) == b.gaussian(0.5, 2.0));  // bit-exact
    }
    a.shuffle(items_a);
    b.shuffle(items_b);
    CHECK(items_a == items_b);
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("child streams derive as seed xor stream id", "[rng]") {
    const Rng base(0xabcdef12345678ULL);
    Rng child = base.child(3);
    Rng direct(0xabcdef12345678ULL ^ 3);
    for (int i = 0; i < 50; ++i) CHECK(child.next_u64() == direct.next_u64());
}

TEST_CASE("gaussian degenerate and error cases", "[rng]") {
    Rng rng(1);
    CHECK(rng.gaussian(0.0, 0.0) == 0.0);
    CHECK(rng.gaussian(-2.5, 0.0) == -2.5);
    CHECK_THROWS_AS(rng.gaussian(0.0, -1.0), ConfigError);
}

TEST_CASE("gaussian sample moments match N(0,1)", "[rng]") {
    Rng rng(20240601);
    const int n = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gaussian(0.0, 1.0);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(stddev - 1.0) < 0.01);
}

TEST_CASE("next_unit stays in [0,1)", "[rng]") {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("below is in range and rejects zero bound", "[rng]") {
    Rng rng(4);
    for (int i = 0; i < 10000; ++i) CHECK(rng.below(7) < 7);
    CHECK_THROWS_AS(rng.below(0), ConfigError);
}

TEST_CASE("shuffle edge cases and permutation property", "[rng]") {
    Rng rng(31337);

    std::vector<int> empty;
    rng.shuffle(empty);
    CHECK(empty.empty());

    std::vector<int> one{42};
    rng.shuffle(one);
    CHECK(one == std::vector<int>{42});

    std::vector<int> items(100);
    std::iota(items.begin(), items.end(), 1);
    for (int round = 0; round < 20; ++round) {
        auto shuffled = items;
        rng.shuffle(shuffled);
        auto sorted = shuffled;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == items);  // multiset equality
    }
}
