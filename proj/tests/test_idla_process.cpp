#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "idla/base_graph.hpp"
#include "idla/cluster.hpp"
#include "idla/cylinder.hpp"
#include "idla/idla_process.hpp"
#include "idla/mixing.hpp"
#include "idla/rng.hpp"
#include "idla/stats.hpp"

using namespace idla;

namespace {

// Order-insensitive fingerprint of the occupied set above the rectangle.
std::uint64_t shape_key(const ClusterState& c) {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(c.k()) ^ 0x5bf03635u);
    for (const CylinderSite& s : c.sites_above())
        h = mix64(h ^ mix64(static_cast<std::uint64_t>(s.y) * 131 +
                            static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.v))));
    return h;
}

}  // namespace

TEST_SUITE("idla_process") {

TEST_CASE("each release settles exactly one new site") {
    auto g = std::make_shared<BaseGraph>(make_complete(4));
    WalkContext ctx(g);
    ClusterState c(g);
    Rng rng(201);
    for (long long t = 1; t <= 200; ++t) {
        const long long before = c.size_above();
        const StepRecord r = idla_step(c, ctx, rng);
        REQUIRE(!r.aborted);
        CHECK(r.shift_applied == 0);
        CHECK(c.size_above() == before + 1);  // |A(t)| = |A(0)| + t
        CHECK(c.occupied(r.settled));
        CHECK(r.walk_steps > 0u);
        CHECK(r.tv_debt == 0.0);  // exact mode
        // After t releases from flat the rectangle holds at most t sites.
        CHECK(c.k() * g->n() <= t);
        CHECK(c.stats().excess >= 0.0);
    }
    c.validate_cache();
}

TEST_CASE("shifted step renormalizes after every settle") {
    auto g = std::make_shared<BaseGraph>(make_complete(2));
    WalkContext ctx(g);
    ClusterState c(g);
    Rng rng(202);
    long long shift_sum = 0;
    for (int t = 0; t < 300; ++t) {
        const StepRecord r = shifted_step(c, ctx, rng);
        REQUIRE(!r.aborted);
        CHECK(c.k() == 0);
        shift_sum += r.shift_applied;
    }
    CHECK(c.cumulative_shift() == shift_sum);
    // 300 releases on two columns: the rectangle must have risen.
    CHECK(shift_sum >= 100);
    CHECK(c.cumulative_shift() * g->n() + c.size_above() == 300);
}

TEST_CASE("run_process records at the requested times") {
    auto g = std::make_shared<BaseGraph>(make_cycle(4));
    WalkContext ctx(g);
    Rng rng(203);
    const ProcessResult res = run_process(ClusterState(g), 50, ctx, {0, 10, 25, 50}, rng);
    REQUIRE(res.records.size() == 4u);
    CHECK(res.records[0].t == 0);
    CHECK(res.records[0].stats.size_above == 0);
    CHECK(res.records[3].t == 50);
    CHECK(res.aborted_walkers == 0);
    for (std::size_t i = 1; i < res.records.size(); ++i) {
        const auto& prev = res.records[i - 1];
        const auto& cur = res.records[i];
        // Shifted bookkeeping: shift * N + size_above recovers the count.
        CHECK(cur.cumulative_shift * 4 + cur.stats.size_above == cur.t);
        CHECK(cur.cumulative_shift >= prev.cumulative_shift);
    }
    CHECK(res.final_state.size_above() ==
          res.records.back().stats.size_above);
}

TEST_CASE("unshifted run keeps absolute coordinates") {
    auto g = std::make_shared<BaseGraph>(make_complete(3));
    WalkContext ctx(g);
    Rng rng(204);
    const ProcessResult res = run_process(ClusterState(g), 30, ctx, {30}, rng, false);
    CHECK(res.records[0].cumulative_shift == 0);
    CHECK(res.records[0].stats.size_above == 30);
    CHECK(res.final_state.cumulative_shift() == 0);
}

TEST_CASE("same seed, same process; different seed, different process") {
    auto g = std::make_shared<BaseGraph>(make_cycle(5));
    WalkContext ctx(g);
    // Hash every intermediate shape: final states alone can coincide by
    // chance (the stationary shape distribution is concentrated), whole
    // trajectories cannot.
    auto trajectory_hash = [&](std::uint64_t seed) {
        Rng rng(seed);
        ClusterState c(g);
        std::uint64_t h = 0;
        for (int t = 0; t < 120; ++t) {
            shifted_step(c, ctx, rng);
            h = mix64(h ^ shape_key(c) ^ static_cast<std::uint64_t>(c.cumulative_shift()));
        }
        return h;
    };
    CHECK(trajectory_hash(205) == trajectory_hash(205));
    CHECK(trajectory_hash(205) != trajectory_hash(206));
}

TEST_CASE("fast-forward growth matches exact growth in distribution") {
    // Small clusters on two vertices: compare the law of the shape after
    // three releases. Every truncated dive costs at most epsilon, so the
    // histogram distance must stay within the accumulated debt plus noise.
    auto g = std::make_shared<BaseGraph>(make_complete(2));
    const int m = 20000, steps = 3;

    auto histogram = [&](WalkMode mode, std::uint64_t seed, double& debt) {
        WalkConfig wc;
        wc.mode = mode;
        wc.epsilon = 1e-3;
        wc.tau_eps = 1;  // two-vertex chain mixes in one step
        wc.step_cap = 1'000'000;
        WalkContext ctx(g, wc);
        Rng rng(seed);
        std::map<std::uint64_t, long long> hist;
        for (int i = 0; i < m; ++i) {
            ProcessResult r = run_process(ClusterState(g), steps, ctx, {steps}, rng, false);
            if (r.aborted_walkers > 0) continue;
            debt += r.tv_debt;
            ++hist[shape_key(r.final_state)];
        }
        return hist;
    };

    double debt_exact = 0.0, debt_ff = 0.0;
    const auto exact = histogram(WalkMode::exact, 207, debt_exact);
    const auto ff = histogram(WalkMode::fast_forward, 208, debt_ff);
    CHECK(debt_exact == 0.0);
    const double mean_debt = debt_ff / m;
    const EmpiricalTv tv = empirical_tv(exact, ff);
    CHECK(tv.tv <= mean_debt + 0.01 + 3.0 * tv.se);
}

TEST_CASE("release vertex is stationary at every level: exit laws agree") {
    // The vertex chain never feels the vertical moves, so releasing at the
    // stationary distribution and first-hitting a level reproduces a
    // stationary release at that level. This is what lets floor drops stand
    // in for top-level drops.
    const BaseGraph g = make_path(3);  // irregular: pi = (1/4, 1/2, 1/4)
    const DiscreteSampler pi(stationary_distribution(g).values());
    WalkConfig cfg;
    // Upward hitting times have infinite mean; cap and censor the stragglers
    // (a per-mille of the sample, far below the chi-square resolution).
    cfg.step_cap = 1'000'000;
    const int m = 40000;
    long long censored = 0;

    Rng rng(209);
    std::vector<long long> from_floor(3, 0);
    for (int i = 0; i < m; ++i) {
        const HitResult hr = hit_level(g, {pi.sample(rng), 0}, 3, cfg, rng);
        if (hr.state.aborted) {
            ++censored;
            continue;
        }
        ++from_floor[static_cast<std::size_t>(hr.arrival.v)];
    }
    std::vector<long long> from_mid(3, 0);
    for (int i = 0; i < m; ++i) {
        const HitResult hr = hit_level(g, {pi.sample(rng), 2}, 3, cfg, rng);
        if (hr.state.aborted) {
            ++censored;
            continue;
        }
        ++from_mid[static_cast<std::size_t>(hr.arrival.v)];
    }
    CHECK(static_cast<double>(censored) / (2.0 * m) < 0.01);

    // Both arrival laws equal pi itself.
    const std::vector<double> pi_probs = {0.25, 0.5, 0.25};
    CHECK(chi2_goodness(from_floor, pi_probs).p_value > 1e-4);
    CHECK(chi2_goodness(from_mid, pi_probs).p_value > 1e-4);
    CHECK(chi2_two_sample(from_floor, from_mid).p_value > 1e-4);
}

TEST_CASE("walk context demands a positive-size graph and valid config") {
    auto g = std::make_shared<BaseGraph>(make_complete(3));
    WalkConfig wc;
    wc.mode = WalkMode::fast_forward;  // tau_eps missing
    WalkContext ctx(g, wc);
    ClusterState c(g);
    Rng rng(210);
    CHECK_THROWS(idla_step(c, ctx, rng));
}

}  // TEST_SUITE idla_process
