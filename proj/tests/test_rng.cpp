#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "idla/rng.hpp"
#include "idla/stats.hpp"

using namespace idla;

TEST_SUITE("rng") {

TEST_CASE("derive_seed is stable and separates tag words") {
    constexpr std::uint64_t a = derive_seed(42, 1, 2);
    static_assert(a == derive_seed(42, 1, 2));
    CHECK(a == derive_seed(42, 1, 2));

    // No collisions on a small grid of (master, t0, t1).
    std::set<std::uint64_t> seen;
    for (std::uint64_t m : {0ull, 1ull, 42ull})
        for (std::uint64_t t0 = 0; t0 < 8; ++t0)
            for (std::uint64_t t1 = 0; t1 < 8; ++t1) seen.insert(derive_seed(m, t0, t1));
    CHECK(seen.size() == 3u * 8u * 8u);

    CHECK(derive_seed(1) != derive_seed(2));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    // Tag positions are not interchangeable.
    CHECK(derive_seed(1, 0, 0, 0, 1) != derive_seed(1, 0, 0, 1, 0));
    CHECK(derive_seed(1, 5, 7) != derive_seed(1, 7, 5));
}

TEST_CASE("purpose tags are pairwise distinct") {
    std::set<std::uint64_t> tags;
    for (auto p : {StreamPurpose::walker, StreamPurpose::release, StreamPurpose::stacks,
                   StreamPurpose::drops, StreamPurpose::ff_resample, StreamPurpose::coupling,
                   StreamPurpose::glue, StreamPurpose::state_capture})
        tags.insert(purpose_tag(p));
    CHECK(tags.size() == 8u);
}

TEST_CASE("keyed prf is a pure function of key and counter") {
    KeyedPrf f(7);
    const std::uint64_t v = f(3, 1, 4);
    for (int i = 0; i < 5; ++i) CHECK(f(3, 1, 4) == v);  // no hidden state
    CHECK(f(3, 1, 5) != v);
    CHECK(f(4, 1, 4) != v);
    CHECK(KeyedPrf(8)(3, 1, 4) != v);
    // Counter words are positional.
    CHECK(f(1, 2, 0) != f(2, 1, 0));
    CHECK(f(0, 1, 0) != f(0, 0, 1));
}

TEST_CASE("sequential stream is reproducible and seed-sensitive") {
    Rng a(123), b(123), c(124);
    bool differ = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = a.u64();
        CHECK(x == b.u64());
        differ = differ || (x != c.u64());
    }
    CHECK(differ);
}

TEST_CASE("unit stays in [0, 1)") {
    Rng r(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("below is bounded and roughly uniform") {
    Rng r(5);
    std::vector<long long> counts(7, 0);
    const int m = 70000;
    for (int i = 0; i < m; ++i) {
        const auto x = r.below(7);
        REQUIRE(x < 7u);
        ++counts[x];
    }
    const Chi2Result c = chi2_goodness(counts, std::vector<double>(7, 1.0 / 7));
    CHECK(c.p_value > 1e-4);
}

TEST_CASE("bit is a fair coin, also when interleaved with word draws") {
    Rng r(11);
    long long ones = 0;
    const int m = 100000;
    for (int i = 0; i < m; ++i) {
        if (i % 977 == 0) (void)r.u64();  // force buffer refills mid-stream
        ones += r.bit() ? 1 : 0;
    }
    const double se = 0.5 * std::sqrt(static_cast<double>(m));
    CHECK(std::abs(static_cast<double>(ones) - m / 2.0) < 4 * se);
}

TEST_CASE("geometric_half matches P(g = j) = 2^-(j+1)") {
    Rng r(13);
    const int m = 200000, kmax = 12;
    std::vector<long long> counts(kmax + 1, 0);
    double acc = 0;
    for (int i = 0; i < m; ++i) {
        const std::uint64_t g = r.geometric_half();
        ++counts[g >= static_cast<std::uint64_t>(kmax) ? kmax : static_cast<int>(g)];
        acc += static_cast<double>(g);
    }
    std::vector<double> probs(kmax + 1);
    for (int j = 0; j < kmax; ++j) probs[j] = std::pow(0.5, j + 1);
    probs[kmax] = std::pow(0.5, kmax);  // tail cell P(g >= kmax)
    const Chi2Result c = chi2_goodness(counts, probs);
    CHECK(c.p_value > 1e-4);
    CHECK(acc / m == doctest::Approx(1.0).epsilon(0.02));  // E[g] = 1
}

TEST_CASE("discrete sampler cdf and boundary behaviour") {
    DiscreteSampler s({1.0, 0.0, 3.0});  // weights normalize to (1/4, 0, 3/4)
    REQUIRE(s.cdf().size() == 3u);
    CHECK(s.cdf()[0] == doctest::Approx(0.25));
    CHECK(s.cdf()[1] == doctest::Approx(0.25));
    CHECK(s.cdf()[2] == 1.0);

    CHECK(s.sample_unit(0.0) == 0);
    CHECK(s.sample_unit(0.2499) == 0);
    CHECK(s.sample_unit(0.25) == 2);  // zero-mass cell is never drawn
    CHECK(s.sample_unit(0.999999) == 2);

    CHECK_THROWS(DiscreteSampler(std::vector<double>{}));
    CHECK_THROWS(DiscreteSampler({1.0, -0.5}));
    CHECK_THROWS(DiscreteSampler({0.0, 0.0}));
}

TEST_CASE("discrete sampler draws follow the weights") {
    DiscreteSampler s({0.5, 0.2, 0.3});
    Rng r(17);
    std::vector<long long> counts(3, 0);
    const int m = 100000;
    for (int i = 0; i < m; ++i) ++counts[s.sample(r)];
    const Chi2Result c = chi2_goodness(counts, {0.5, 0.2, 0.3});
    CHECK(c.p_value > 1e-4);
}

TEST_CASE("sample_word is deterministic and agrees with sample_unit") {
    DiscreteSampler s({0.25, 0.25, 0.5});
    KeyedPrf f(3);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t w = f(i);
        const int a = s.sample_word(w);
        CHECK(a == s.sample_word(w));
        CHECK(a == s.sample_unit((w >> 11) * 0x1.0p-53));
    }
}

}  // TEST_SUITE rng
