#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "uqscore/rng.hpp"

using namespace uqscore;

TEST_CASE("identical seeds give identical sequences") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("different seeds diverge immediately") {
    Rng a(1);
    Rng b(2);
    CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("derive_seed separates labeled streams") {
    const std::uint64_t base = 99;
    CHECK(derive_seed(base, "alpha") == derive_seed(base, "alpha"));
    CHECK(derive_seed(base, "alpha") != derive_seed(base, "beta"));
    CHECK(derive_seed(base, "alpha") != derive_seed(base + 1, "alpha"));
    CHECK(derive_seed(base, std::uint64_t{0}) != derive_seed(base, std::uint64_t{1}));
}

TEST_CASE("uniform stays in [0,1) with the right mean") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal has unit scale") {
    Rng rng(11);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.0).epsilon(1.0));
    CHECK(std::fabs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("bernoulli respects its probability") {
    Rng rng(13);
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
    CHECK(static_cast<double>(hits) / n == doctest::Approx(0.3).epsilon(0.03));
    CHECK_THROWS_AS(rng.bernoulli(1.5), InvalidParameterError);
    CHECK_THROWS_AS(rng.bernoulli(-0.1), InvalidParameterError);
}

TEST_CASE("below is bounded and close to uniform over residues") {
    Rng rng(17);
    const std::uint64_t bound = 7;
    std::vector<int> counts(bound, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const std::uint64_t v = rng.below(bound);
        REQUIRE(v < bound);
        ++counts[v];
    }
    for (std::uint64_t v = 0; v < bound; ++v) {
        CHECK(counts[v] == doctest::Approx(n / static_cast<double>(bound)).epsilon(0.05));
    }
    CHECK_THROWS_AS(rng.below(0), InvalidParameterError);
}

TEST_CASE("shuffle permutes and is seed-deterministic") {
    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<int> v2 = v1;
    Rng a(23);
    Rng b(23);
    a.shuffle(v1);
    b.shuffle(v2);
    CHECK(v1 == v2);
    std::multiset<int> content(v1.begin(), v1.end());
    CHECK(content == std::multiset<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
}

TEST_CASE("split yields independent child streams") {
    Rng base(31);
    Rng c1 = base.split("one");
    Rng c2 = base.split("two");
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) {
        if (c1.next_u64() != c2.next_u64()) all_equal = false;
    }
    CHECK_FALSE(all_equal);
}
