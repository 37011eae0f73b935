#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "arw/graph.hpp"

using namespace arw;

namespace {

int64_t tree_ball_oracle(int d, int L) {
    // 1 + sum_{n=1..L} d(d-1)^{n-1}, evaluated directly
    int64_t total = 1, sphere = d;
    for (int n = 1; n <= L; ++n) {
        total += sphere;
        sphere *= d - 1;
    }
    return total;
}

}  // namespace

TEST_CASE("line ball: 7 vertices for radius 3, origin at 0") {
    const Graph g = build_graph({GraphFamily::Line, 1, 3, 3});
    CHECK(g.vertex_count() == 7);
    CHECK(g.distance(g.origin()) == 0);
    CHECK(g.label(g.origin()) == "0");
    CHECK(g.degree() == 2);
    // endpoints have an exterior neighbor
    CHECK(g.neighbor(0, 0) == kExterior);
    CHECK(g.neighbor(6, 1) == kExterior);
}

TEST_CASE("tree ball sizes match the closed form") {
    const Graph g = build_graph({GraphFamily::RegularTree, 1, 3, 2});
    CHECK(g.vertex_count() == 10);  // 1 + 3 + 6
    for (int d = 3; d <= 5; ++d) {
        for (int L = 1; L <= 4; ++L) {
            const Graph t = build_graph({GraphFamily::RegularTree, 1, d, L});
            CHECK(t.vertex_count() == tree_ball_oracle(d, L));
        }
    }
}

TEST_CASE("2d lattice ball of radius 1 is the origin plus 4 neighbors") {
    const Graph g = build_graph({GraphFamily::Lattice, 2, 3, 1});
    CHECK(g.vertex_count() == 5);
    int exterior_slots = 0;
    for (int s = 0; s < g.degree(); ++s) {
        CHECK(g.neighbor(g.origin(), s) != kExterior);
        for (VertexId v : g.sphere(1))
            exterior_slots += g.neighbor(v, s) == kExterior ? 1 : 0;
    }
    CHECK(exterior_slots == 4 * 3);  // each boundary vertex keeps one inward edge
}

TEST_CASE("spheres partition the ball") {
    const GraphSpec specs[] = {
        {GraphFamily::Line, 1, 3, 5},
        {GraphFamily::Lattice, 2, 3, 4},
        {GraphFamily::Lattice, 3, 3, 3},
        {GraphFamily::RegularTree, 1, 3, 4},
        {GraphFamily::RegularTree, 1, 4, 3},
    };
    for (const GraphSpec& spec : specs) {
        const Graph g = build_graph(spec);
        std::set<VertexId> seen;
        int64_t total = 0;
        for (int n = 0; n <= spec.radius; ++n) {
            for (VertexId v : g.sphere(n)) {
                CHECK(g.distance(v) == n);
                seen.insert(v);
                ++total;
            }
        }
        CHECK(total == g.vertex_count());
        CHECK(static_cast<int64_t>(seen.size()) == g.vertex_count());
    }
}

TEST_CASE("tree sphere sizes are d(d-1)^(n-1)") {
    const Graph g = build_graph({GraphFamily::RegularTree, 1, 3, 4});
    CHECK(g.sphere(0).size() == 1);
    CHECK(g.sphere(1).size() == 3);
    CHECK(g.sphere(2).size() == 6);
    CHECK(g.sphere(3).size() == 12);
    CHECK(g.sphere(4).size() == 24);

    const Graph line = build_graph({GraphFamily::Line, 1, 3, 4});
    CHECK(line.sphere(2).size() == 2);  // {-2, +2}
    CHECK_THROWS_AS((void)line.sphere(5), std::out_of_range);
}

TEST_CASE("interior vertices have full degree; neighbor distances step by one") {
    const GraphSpec specs[] = {
        {GraphFamily::Lattice, 2, 3, 3},
        {GraphFamily::RegularTree, 1, 3, 3},
        {GraphFamily::RegularTree, 1, 5, 3},
    };
    for (const GraphSpec& spec : specs) {
        const Graph g = build_graph(spec);
        for (VertexId v = 0; v < g.vertex_count(); ++v) {
            int real = 0;
            for (int s = 0; s < g.degree(); ++s) {
                const VertexId u = g.neighbor(v, s);
                if (u == kExterior) {
                    CHECK(g.distance(v) == spec.radius);
                    continue;
                }
                ++real;
                const int diff = g.distance(u) - g.distance(v);
                if (spec.family == GraphFamily::RegularTree)
                    CHECK(std::abs(diff) == 1);
                else
                    CHECK((diff >= -1 && diff <= 1));
            }
            if (g.distance(v) < spec.radius) CHECK(real == g.degree());
        }
    }
}

TEST_CASE("tree adjacency is symmetric") {
    const Graph g = build_graph({GraphFamily::RegularTree, 1, 4, 3});
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        for (int s = 0; s < g.degree(); ++s) {
            const VertexId u = g.neighbor(v, s);
            if (u == kExterior) continue;
            bool back = false;
            for (int s2 = 0; s2 < g.degree(); ++s2) back |= g.neighbor(u, s2) == v;
            CHECK(back);
        }
    }
}

TEST_CASE("build rejects bad specs") {
    CHECK_THROWS_AS(build_graph({GraphFamily::RegularTree, 1, 2, 3}), GraphBuildError);
    CHECK_THROWS_AS(build_graph({GraphFamily::Lattice, 0, 3, 3}), GraphBuildError);
    CHECK_THROWS_AS(build_graph({GraphFamily::Line, 1, 3, 0}), GraphBuildError);
    GraphSpec ta{GraphFamily::Lattice, 2, 3, 2};
    ta.jump_kind = JumpKind::TotallyAsymmetric;
    CHECK_THROWS_AS(build_graph(ta), GraphBuildError);
    GraphSpec big{GraphFamily::RegularTree, 1, 3, 30};
    CHECK_THROWS_AS(build_graph(big), GraphBuildError);  // 3*2^29 vertices, over budget
}

TEST_CASE("totally asymmetric jumps always move right") {
    GraphSpec spec{GraphFamily::Line, 1, 3, 4};
    spec.jump_kind = JumpKind::TotallyAsymmetric;
    const Graph g = build_graph(spec);
    CHECK(g.jump_slots() == 1);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        const VertexId t = g.jump_target(v, 0);
        if (t == kExterior)
            CHECK(g.label(v) == "4");
        else
            CHECK(g.distance(t) - g.distance(v) == (g.label(v)[0] == '-' ? -1 : 1));
    }
}

TEST_CASE("transience classification") {
    CHECK(is_transient_family({GraphFamily::RegularTree, 1, 3, 2}));
    CHECK(is_transient_family({GraphFamily::Lattice, 3, 3, 2}));
    CHECK_FALSE(is_transient_family({GraphFamily::Lattice, 2, 3, 2}));
    CHECK_FALSE(is_transient_family({GraphFamily::Line, 1, 3, 2}));
}
