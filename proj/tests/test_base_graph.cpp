#include <doctest.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "idla/base_graph.hpp"

using namespace idla;

namespace {

double row_sum(const ProbabilityVector& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i];
    return s;
}

}  // namespace

TEST_SUITE("base_graph") {

TEST_CASE("family builders produce the expected degree structure") {
    const BaseGraph c8 = make_cycle(8);
    CHECK(c8.n() == 8);
    CHECK(c8.edge_count() == 8);
    CHECK(c8.regular());
    CHECK(c8.degree(0) == 2);
    CHECK(c8.family() == "cycle");

    const BaseGraph k4 = make_complete(4);
    CHECK(k4.edge_count() == 6);
    CHECK(k4.degree(2) == 3);
    CHECK(k4.regular());

    const BaseGraph t33 = make_torus(3, 3);
    CHECK(t33.n() == 9);
    CHECK(t33.edge_count() == 18);
    CHECK(t33.regular());
    CHECK(t33.degree(4) == 4);

    const BaseGraph t48 = make_torus(4, 8);
    CHECK(t48.n() == 32);
    CHECK(t48.regular());
    CHECK(t48.degree(0) == 4);

    const BaseGraph h3 = make_hypercube(3);
    CHECK(h3.n() == 8);
    CHECK(h3.edge_count() == 12);
    CHECK(h3.regular());
    CHECK(h3.degree(5) == 3);
    // Hypercube neighbors differ in exactly one bit.
    for (int w : h3.neighbors(5)) CHECK(std::popcount(static_cast<unsigned>(5 ^ w)) == 1);

    const BaseGraph p3 = make_path(3);
    CHECK(p3.degree(0) == 1);
    CHECK(p3.degree(1) == 2);
    CHECK(p3.degree(2) == 1);
    CHECK(!p3.regular());

    // Hypercube of dimension 1 is an edge, same graph as complete(2).
    CHECK(make_hypercube(1).n() == 2);
}

TEST_CASE("builders reject degenerate parameters") {
    CHECK_THROWS(make_cycle(2));
    CHECK_THROWS(make_torus(2, 3));
    CHECK_THROWS(make_torus(3, 2));
    CHECK_THROWS(make_complete(1));
    CHECK_THROWS(make_hypercube(0));
    CHECK_THROWS(make_path(1));
}

TEST_CASE("constructor validates simplicity and connectivity") {
    CHECK_THROWS(make_custom(3, {{0, 1}, {1, 0}}));          // duplicate edge
    CHECK_THROWS(make_custom(3, {{0, 0}, {1, 2}}));          // self loop
    CHECK_THROWS(make_custom(4, {{0, 1}, {2, 3}}));          // disconnected
    CHECK_THROWS(make_custom(3, {{0, 5}}));                  // endpoint out of range
    CHECK_THROWS(make_custom(1, {}));                        // too small
    CHECK_NOTHROW(make_custom(3, {{0, 1}, {1, 2}, {2, 0}}));
}

TEST_CASE("stationary distribution is degree-proportional") {
    // Path on 3 vertices: degrees 1,2,1 and 2|E| = 4.
    const ProbabilityVector pi = stationary_distribution(make_path(3));
    CHECK(pi[0] == doctest::Approx(0.25));
    CHECK(pi[1] == doctest::Approx(0.5));
    CHECK(pi[2] == doctest::Approx(0.25));

    // Regular graphs are uniform.
    const ProbabilityVector pu = stationary_distribution(make_cycle(5));
    for (std::size_t v = 0; v < pu.size(); ++v) CHECK(pu[v] == doctest::Approx(0.2));

    CHECK(row_sum(stationary_distribution(make_hypercube(4))) == doctest::Approx(1.0));
}

TEST_CASE("quasi-regularity constants") {
    const QuasiRegularity qr = quasi_regularity(make_path(3));
    CHECK(qr.delta == doctest::Approx(0.75));        // 3 * 1/4
    CHECK(qr.delta_prime == doctest::Approx(1.5));   // 3 * 1/2

    const QuasiRegularity reg = quasi_regularity(make_torus(4, 4));
    CHECK(reg.delta == doctest::Approx(1.0));
    CHECK(reg.delta_prime == doctest::Approx(1.0));
    CHECK(reg.delta <= reg.delta_prime);
}

TEST_CASE("lazy transition row: half stay, half spread over neighbors") {
    const BaseGraph g = make_path(3);
    const ProbabilityVector mid = lazy_transition_row(g, 1);
    CHECK(mid[1] == doctest::Approx(0.5));
    CHECK(mid[0] == doctest::Approx(0.25));
    CHECK(mid[2] == doctest::Approx(0.25));

    const ProbabilityVector end = lazy_transition_row(g, 0);
    CHECK(end[0] == doctest::Approx(0.5));
    CHECK(end[1] == doctest::Approx(0.5));
    CHECK(end[2] == doctest::Approx(0.0));

    // On two vertices the lazy row is uniform from either start: the chain
    // mixes perfectly in one step.
    const BaseGraph k2 = make_complete(2);
    const ProbabilityVector r0 = lazy_transition_row(k2, 0);
    CHECK(r0[0] == doctest::Approx(0.5));
    CHECK(r0[1] == doctest::Approx(0.5));

    for (int v = 0; v < 3; ++v) CHECK(row_sum(lazy_transition_row(g, v)) == doctest::Approx(1.0));
}

TEST_CASE("dense transition matrix matches the rows and fixes pi") {
    const BaseGraph g = make_path(5);
    const int n = g.n();
    const std::vector<double> P = lazy_transition_matrix(g);
    REQUIRE(P.size() == static_cast<std::size_t>(n * n));
    for (int v = 0; v < n; ++v) {
        const ProbabilityVector row = lazy_transition_row(g, v);
        for (int w = 0; w < n; ++w) CHECK(P[v * n + w] == doctest::Approx(row[w]));
    }
    // pi P = pi (stationarity of the degree-biased distribution).
    const ProbabilityVector pi = stationary_distribution(g);
    for (int w = 0; w < n; ++w) {
        double mass = 0.0;
        for (int v = 0; v < n; ++v) mass += pi[v] * P[v * n + w];
        CHECK(mass == doctest::Approx(pi[w]).epsilon(1e-12));
    }
}

TEST_CASE("total variation distance") {
    CHECK(tv_distance({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));
    CHECK(tv_distance({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0));
    CHECK(tv_distance({0.75, 0.25}, {0.25, 0.75}) == doctest::Approx(0.5));
    CHECK(tv_distance({0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}) ==
          doctest::Approx(tv_distance({0.2, 0.3, 0.5}, {0.5, 0.3, 0.2})));
    CHECK_THROWS(tv_distance(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}));
}

TEST_CASE("probability vector validation") {
    CHECK_NOTHROW(ProbabilityVector({0.25, 0.75}));
    CHECK_THROWS(ProbabilityVector({0.5, 0.6}));
    CHECK_THROWS(ProbabilityVector({1.5, -0.5}));
}

TEST_CASE("build_graph dispatch and parameter arity") {
    CHECK(build_graph("cycle", {8}).family() == "cycle");
    CHECK(build_graph("torus", {4, 8}).n() == 32);
    CHECK(build_graph("hypercube", {5}).n() == 32);
    CHECK(build_graph("path", {7}).edge_count() == 6);
    CHECK_THROWS(build_graph("cycle", {8, 9}));
    CHECK_THROWS(build_graph("torus", {4}));
    CHECK_THROWS(build_graph("pentagon", {5}));
}

TEST_CASE("edge list files round-trip through load_edge_list") {
    const char* path = "test_edges.tmp";
    {
        std::ofstream f(path);
        f << "# triangle with a tail\n";
        f << "0 1\n1 2\n2 0\n\n2 3\n";
    }
    const BaseGraph g = load_edge_list(path);
    CHECK(g.n() == 4);
    CHECK(g.edge_count() == 4);
    CHECK(g.degree(2) == 3);
    CHECK(g.degree(3) == 1);
    std::remove(path);
    CHECK_THROWS(load_edge_list("definitely_missing_file.tmp"));
}

}  // TEST_SUITE base_graph
