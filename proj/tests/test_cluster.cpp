#include <doctest.h>

#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "idla/base_graph.hpp"
#include "idla/cluster.hpp"

using namespace idla;

namespace {

std::shared_ptr<BaseGraph> k4() { return std::make_shared<BaseGraph>(make_complete(4)); }

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("level mask set, count and idempotence") {
    LevelMask m(70);  // spans two words
    CHECK(m.count() == 0);
    m.set(3);
    m.set(69);
    m.set(3);  // second set is a no-op
    CHECK(m.count() == 2);
    CHECK(m.test(3));
    CHECK(m.test(69));
    CHECK(!m.test(4));
    CHECK(!m.full());
    for (int v = 0; v < 70; ++v) m.set(v);
    CHECK(m.full());
    CHECK(LevelMask(3) == LevelMask(3));
}

TEST_CASE("flat cluster: everything at or below zero, nothing above") {
    const ClusterState c(k4());
    CHECK(c.k() == 0);
    CHECK(c.h() == 0);
    CHECK(c.size_above() == 0);
    CHECK(c.cumulative_shift() == 0);
    CHECK(c.occupied({2, 0}));
    CHECK(c.occupied({1, -5}));
    CHECK(!c.occupied({0, 1}));
    const ClusterStats s = c.stats();
    CHECK(s.excess == 0.0);
    CHECK(s.level_counts.empty());
    c.validate_cache();
}

TEST_CASE("one site above the rectangle") {
    const ClusterState c = ClusterState::from_sites(k4(), {{0, 1}});
    CHECK(c.k() == 0);
    CHECK(c.h() == 1);
    CHECK(c.size_above() == 1);
    CHECK(c.occupied({0, 1}));
    CHECK(!c.occupied({1, 1}));
    const ClusterStats s = c.stats();
    // excess = h - size/N = 1 - 1/4
    CHECK(s.excess == doctest::Approx(0.75));
    REQUIRE(s.level_counts.size() == 1u);
    CHECK(s.level_counts[0] == 1);
}

TEST_CASE("settle promotes the full rectangle") {
    ClusterState c(k4());
    for (int v = 0; v < 4; ++v) {
        CHECK(c.k() == 0);
        c.settle({v, 1});
    }
    CHECK(c.k() == 1);  // level 1 completed
    CHECK(c.h() == 1);
    CHECK(c.size_above() == 4);
    CHECK(c.stats().excess == doctest::Approx(0.0));
    c.settle({2, 2});
    CHECK(c.k() == 1);
    CHECK(c.h() == 2);
    c.validate_cache();

    CHECK_THROWS_AS(c.settle({2, 2}), std::logic_error);   // already occupied
    CHECK_THROWS_AS(c.settle({0, 0}), std::logic_error);   // inside the rectangle
    CHECK_THROWS_AS(c.settle({9, 3}), std::invalid_argument);
}

TEST_CASE("multi-level promotion when a hole closes") {
    // Levels 1 and 2 complete except (3,1); level 3 partial. Filling the one
    // hole must promote k straight from 0 to 2.
    auto g = k4();
    std::vector<CylinderSite> above;
    for (int v = 0; v < 3; ++v) above.push_back({v, 1});
    for (int v = 0; v < 4; ++v) above.push_back({v, 2});
    above.push_back({1, 3});
    ClusterState c = ClusterState::from_sites(g, above);
    CHECK(c.k() == 0);
    CHECK(c.h() == 3);
    c.settle({3, 1});
    CHECK(c.k() == 2);
    CHECK(c.h() == 3);
    c.validate_cache();
}

TEST_CASE("downshift renormalizes and accrues the cumulative shift") {
    ClusterState c(k4());
    for (int v = 0; v < 4; ++v) c.settle({v, 1});
    c.settle({1, 2});
    const long long applied = c.downshift();
    CHECK(applied == 1);
    CHECK(c.k() == 0);
    CHECK(c.h() == 1);
    CHECK(c.cumulative_shift() == 1);
    CHECK(c.occupied({1, 1}));   // the old (1,2) in shifted coordinates
    CHECK(!c.occupied({0, 1}));
    CHECK(c.downshift() == 0);   // k already 0: a no-op
    CHECK(c.cumulative_shift() == 1);
    c.validate_cache();
}

TEST_CASE("shape comparison ignores the shift history") {
    ClusterState a(k4());
    for (int v = 0; v < 4; ++v) a.settle({v, 1});
    a.settle({2, 2});
    a.downshift();

    ClusterState b = ClusterState::from_sites(k4(), {{2, 1}});
    CHECK(a.same_shape(b));
    CHECK(a.cumulative_shift() != b.cumulative_shift());

    b.settle({0, 1});
    CHECK(!a.same_shape(b));
}

TEST_CASE("sites_above lists the partial levels in (y, v) order") {
    const ClusterState c = ClusterState::from_sites(k4(), {{3, 1}, {0, 1}, {0, 2}});
    const std::vector<CylinderSite> sites = c.sites_above();
    REQUIRE(sites.size() == 3u);
    CHECK(sites[0] == CylinderSite{0, 1});
    CHECK(sites[1] == CylinderSite{3, 1});
    CHECK(sites[2] == CylinderSite{0, 2});
}

TEST_CASE("from_sites validates its input") {
    CHECK_THROWS_AS(ClusterState::from_sites(k4(), {{0, 1}, {0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(ClusterState::from_sites(k4(), {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(ClusterState::from_sites(k4(), {{7, 1}}), std::invalid_argument);
    // A site at level 2 with nothing beneath floats free of the cluster.
    CHECK_THROWS_AS(ClusterState::from_sites(k4(), {{0, 2}}), std::invalid_argument);
    // Horizontal support also counts as connected.
    CHECK_NOTHROW(ClusterState::from_sites(k4(), {{0, 1}, {1, 1}, {1, 2}}));
}

TEST_CASE("json snapshot round-trip") {
    auto g = k4();
    ClusterState c(g);
    for (int v = 0; v < 4; ++v) c.settle({v, 1});
    c.settle({0, 2});
    c.settle({3, 2});
    c.downshift();
    const nlohmann::json j = c.to_json();
    const ClusterState back = ClusterState::from_json(g, j);
    CHECK(back.same_shape(c));
    CHECK(back.cumulative_shift() == c.cumulative_shift());
    CHECK(back.k() == c.k());
    CHECK(back.h() == c.h());
    CHECK(back.size_above() == c.size_above());
    back.validate_cache();

    // Loading against a mismatched base graph is refused.
    auto g2 = std::make_shared<BaseGraph>(make_complete(5));
    CHECK_THROWS_AS(ClusterState::from_json(g2, j), std::invalid_argument);
}

TEST_CASE("snapshot of the flat cluster is loadable") {
    auto g = k4();
    const ClusterState flat(g);
    const ClusterState back = ClusterState::from_json(g, flat.to_json());
    CHECK(back.same_shape(flat));
    CHECK(back.size_above() == 0);
}

}  // TEST_SUITE cluster
