#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "idla/base_graph.hpp"
#include "idla/cluster.hpp"
#include "idla/cylinder.hpp"
#include "idla/rng.hpp"
#include "idla/stats.hpp"

using namespace idla;

TEST_SUITE("cylinder") {

TEST_CASE("single step law: quarter up, quarter down, quarter stay") {
    const BaseGraph g = make_path(3);
    Rng rng(101);
    const CylinderSite from{1, 0};  // middle vertex, degree 2
    // Cells: up, down, stay, jump to 0, jump to 2.
    std::vector<long long> counts(5, 0);
    const int m = 400000;
    for (int i = 0; i < m; ++i) {
        const StepDraw d = step_once(g, from, rng);
        if (d.vertical) {
            CHECK(d.to.v == from.v);
            CHECK(std::abs(d.to.y - from.y) == 1);
            ++counts[d.to.y > from.y ? 0 : 1];
        } else if (d.stayed) {
            CHECK(d.to == from);
            ++counts[2];
        } else {
            CHECK(d.to.y == from.y);
            ++counts[d.to.v == 0 ? 3 : 4];
        }
    }
    const Chi2Result c = chi2_goodness(counts, {0.25, 0.25, 0.25, 0.125, 0.125});
    CHECK(c.p_value > 1e-4);
}

TEST_CASE("single step law on two vertices: switch probability 1/4") {
    const BaseGraph g = make_complete(2);
    Rng rng(102);
    std::vector<long long> counts(4, 0);  // up, down, stay, switch
    const int m = 200000;
    for (int i = 0; i < m; ++i) {
        const StepDraw d = step_once(g, {0, 5}, rng);
        if (d.vertical)
            ++counts[d.to.y == 6 ? 0 : 1];
        else
            ++counts[d.stayed ? 2 : 3];
    }
    const Chi2Result c = chi2_goodness(counts, {0.25, 0.25, 0.25, 0.25});
    CHECK(c.p_value > 1e-4);
}

TEST_CASE("step_in_place keeps the step counters consistent") {
    const BaseGraph g = make_cycle(5);
    Rng rng(103);
    WalkState st;
    st.pos = {2, 0};
    for (int i = 0; i < 5000; ++i) step_in_place(g, st, rng);
    CHECK(st.steps_total == 5000u);
    CHECK(st.steps_vertical + st.steps_horizontal == st.steps_total);
    CHECK(st.steps_vertical > 1000u);  // each type has rate 1/2
    CHECK(st.steps_horizontal > 1000u);
    CHECK(!st.aborted);
}

TEST_CASE("hit_level arrives exactly at the target level") {
    const BaseGraph g = make_cycle(4);
    Rng rng(104);
    WalkConfig cfg;
    for (int i = 0; i < 200; ++i) {
        const HitResult hr = hit_level(g, {static_cast<int>(rng.below(4)), 0}, 3, cfg, rng);
        REQUIRE(!hr.state.aborted);
        CHECK(hr.arrival.y == 3);
        CHECK(hr.state.steps_total >= 3u);
    }
}

TEST_CASE("hit_level honors the step cap") {
    const BaseGraph g = make_complete(2);
    Rng rng(105);
    WalkConfig cfg;
    cfg.step_cap = 100;
    const HitResult hr = hit_level(g, {0, 0}, 1'000'000, cfg, rng);
    CHECK(hr.state.aborted);
    CHECK(hr.state.steps_total == 100u);
}

TEST_CASE("first-return excursion length law") {
    // Lengths count vertical moves only, initial descent included, so they
    // are even, with P(2) = 1/2, P(4) = 1/8, P(6) = 1/16, P(8) = 5/128.
    Rng rng(106);
    const int m = 100000;
    std::map<std::uint64_t, long long> hist;
    for (int i = 0; i < m; ++i) {
        const FirstReturnDraw d = sample_first_return_length(rng, 1u << 20);
        // P(length > c) ~ 0.8/sqrt(c): a few draws per hundred thousand do
        // exceed 2^20 moves; they belong to the pooled tail cell.
        if (!d.capped) REQUIRE(d.length % 2 == 0);
        ++hist[d.length >= 10 ? 10 : d.length];
    }
    const std::vector<long long> counts = {hist[2], hist[4], hist[6], hist[8], hist[10]};
    const double tail = 1.0 - 0.5 - 0.125 - 0.0625 - 5.0 / 128;
    const Chi2Result c = chi2_goodness(counts, {0.5, 0.125, 0.0625, 5.0 / 128, tail});
    CHECK(c.p_value > 1e-4);
}

TEST_CASE("first-return sampling reports when the cap bites") {
    Rng rng(107);
    int capped = 0;
    for (int i = 0; i < 2000; ++i) {
        const FirstReturnDraw d = sample_first_return_length(rng, 4);
        capped += d.capped ? 1 : 0;
        CHECK(d.length <= 4u);
    }
    CHECK(capped > 0);  // P(length > 4) = 3/8, so the cap must fire
}

TEST_CASE("fast-forward excursion contract") {
    const BaseGraph g = make_complete(4);
    const DiscreteSampler pi(stationary_distribution(g).values());
    Rng rng(108);
    WalkConfig cfg;
    cfg.mode = WalkMode::fast_forward;
    cfg.epsilon = 0.25;
    cfg.tau_eps = 2;
    unsigned long long shortcuts = 0;
    for (int i = 0; i < 3000; ++i) {
        WalkState st;
        st.pos = {static_cast<int>(rng.below(4)), 7};
        fast_forward_excursion(g, pi, st, 7, cfg, rng);
        REQUIRE(!st.aborted);
        CHECK(st.pos.y == 7);  // always surfaces back at the floor
        shortcuts += st.ff_shortcuts;
    }
    CHECK(shortcuts > 0);  // tau_eps = 2 truncates often

    WalkState debt;
    debt.ff_shortcuts = 3;
    debt.ff_epsilon = 0.01;
    CHECK(debt.tv_debt() == doctest::Approx(0.03));

    WalkState off_floor;
    off_floor.pos = {0, 5};
    CHECK_THROWS_AS(fast_forward_excursion(g, pi, off_floor, 7, cfg, rng), std::logic_error);
    WalkConfig no_tau;
    no_tau.mode = WalkMode::fast_forward;
    WalkState at_floor;
    at_floor.pos = {0, 7};
    CHECK_THROWS_AS(fast_forward_excursion(g, pi, at_floor, 7, no_tau, rng), std::invalid_argument);
}

TEST_CASE("fast-forward first-hit law stays within epsilon of the exact one") {
    // From a fixed vertex at the floor, hit level 1; dips below the floor are
    // the only difference between the modes, and each truncation costs at
    // most epsilon in total variation.
    const BaseGraph g = make_complete(4);
    const double eps = 1.0 / 64;
    const long long tau_eps = 4;  // (1/3)^4 < 1/64 on four vertices
    const int m = 20000;

    auto arrival_hist = [&](WalkMode mode, std::uint64_t seed, long long& aborted) {
        WalkConfig cfg;
        cfg.mode = mode;
        cfg.epsilon = eps;
        cfg.tau_eps = tau_eps;
        cfg.step_cap = 1'000'000;  // heavy-tailed exact dips: censor and count
        Rng rng(seed);
        std::map<std::uint64_t, long long> hist;
        for (int i = 0; i < m; ++i) {
            const HitResult hr = hit_level(g, {0, 0}, 1, cfg, rng, 0);
            if (hr.state.aborted) {
                ++aborted;
                continue;
            }
            ++hist[static_cast<std::uint64_t>(hr.arrival.v)];
        }
        return hist;
    };

    long long aborted_exact = 0, aborted_ff = 0;
    const auto exact = arrival_hist(WalkMode::exact, 109, aborted_exact);
    const auto ff = arrival_hist(WalkMode::fast_forward, 110, aborted_ff);
    CHECK(aborted_ff == 0);  // truncation bounds every ff walk
    CHECK(static_cast<double>(aborted_exact) / m < 0.01);
    const EmpiricalTv tv = empirical_tv(exact, ff);
    CHECK(tv.tv <= eps + 3.0 * tv.se);
}

TEST_CASE("walk from a flat cluster exits at level one") {
    auto g = std::make_shared<BaseGraph>(make_complete(2));
    const ClusterState flat(g);
    const DiscreteSampler pi(stationary_distribution(*g).values());
    Rng rng(111);
    WalkConfig cfg;
    std::vector<long long> counts(2, 0);
    for (int i = 0; i < 20000; ++i) {
        const ExitResult er = walk_until_exit(*g, flat, {pi.sample(rng), 0}, cfg, pi, rng);
        REQUIRE(!er.state.aborted);
        CHECK(er.exit.y == 1);
        ++counts[er.exit.v];
    }
    // Stationary start on a symmetric base: the exit vertex is uniform.
    const Chi2Result c = chi2_goodness(counts, {0.5, 0.5});
    CHECK(c.p_value > 1e-4);
}

TEST_CASE("walkers can exit through a hole below them") {
    // Level 1 full, level 2 holds vertices 0..2, level 3 holds 2 and 3; the
    // hole (3,2) sits directly below the occupied (3,3), so a pure down-move
    // can be the exiting step. Any occupancy slip here would misplace exits.
    auto g = std::make_shared<BaseGraph>(make_complete(4));
    std::vector<CylinderSite> above;
    for (int v = 0; v < 4; ++v) above.push_back({v, 1});
    for (int v = 0; v < 3; ++v) above.push_back({v, 2});
    above.push_back({2, 3});
    above.push_back({3, 3});
    const ClusterState cl = ClusterState::from_sites(g, above);
    REQUIRE(cl.occupied({3, 3}));
    REQUIRE(!cl.occupied({3, 2}));

    const DiscreteSampler pi(stationary_distribution(*g).values());
    Rng rng(112);
    WalkConfig cfg;
    long long through_hole = 0;
    for (int i = 0; i < 3000; ++i) {
        const ExitResult er = walk_until_exit(*g, cl, {3, 3}, cfg, pi, rng);
        REQUIRE(!er.state.aborted);
        CHECK(!cl.occupied(er.exit));
        if (er.exit == CylinderSite{3, 2}) ++through_hole;
    }
    // The very first step is "down" with probability 1/4 and exits there.
    CHECK(through_hole > 3000 / 8);
    CHECK_THROWS(walk_until_exit(*g, cl, {3, 2}, cfg, pi, rng));  // start outside
}

TEST_CASE("fast-forward configuration is validated") {
    const BaseGraph g = make_complete(3);
    Rng rng(113);
    WalkConfig cfg;
    cfg.mode = WalkMode::fast_forward;  // tau_eps left unset
    CHECK_THROWS_AS(hit_level(g, {0, 0}, 2, cfg, rng, 0), std::invalid_argument);
    cfg.tau_eps = 3;
    CHECK_THROWS_AS(hit_level(g, {0, 0}, -1, cfg, rng, 0), std::invalid_argument);
}

}  // TEST_SUITE cylinder
