#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unordered_set>
#include <vector>

#include "fpp/disjoint_paths.hpp"
#include "fpp/lattice.hpp"

using namespace fpp;

namespace {

// in-test re-verification of the whole contract, independent of the shipped
// checker: count, endpoints, length cap, pairwise edge-disjointness, box
void verify_contract(const Pt& x, int dim) {
    auto paths = disjoint_paths(x, dim);
    REQUIRE((int)paths.size() == 2 * dim);

    std::unordered_set<Edge, EdgeHash> used;
    int64_t cap = l1_norm(x, dim) + 8;
    for (const auto& p : paths) {
        REQUIRE(!p.vertices.empty());
        CHECK(p.vertices.front() == origin_pt());
        CHECK(p.vertices.back() == x);
        CHECK((int64_t)p.edge_count() <= cap);
        for (size_t i = 0; i + 1 < p.vertices.size(); ++i) {
            CHECK(l1_dist(p.vertices[i], p.vertices[i + 1], dim) == 1);
            Edge e = edge_between(p.vertices[i], p.vertices[i + 1], dim);
            CHECK(used.insert(e).second);  // nobody used this edge before
        }
        for (const Pt& v : p.vertices)
            for (int i = 0; i < dim; ++i) {
                CHECK(v.c[i] >= std::min(0, x.c[i]) - 2);
                CHECK(v.c[i] <= std::max(0, x.c[i]) + 2);
            }
    }
    check_disjoint_paths(paths, x, dim);  // shipped checker agrees
}

} // namespace

TEST_CASE("four edge-disjoint paths for every small planar target") {
    for (int32_t x = -4; x <= 4; ++x)
        for (int32_t y = -4; y <= 4; ++y) verify_contract(make_pt({x, y}), 2);
}

TEST_CASE("four edge-disjoint paths for far and skewed planar targets") {
    for (auto [x, y] : std::vector<std::pair<int32_t, int32_t>>{
             {40, 0}, {0, -37}, {25, 25}, {-18, 31}, {-50, -1}, {7, -28}, {-33, 0}, {1, 1}})
        verify_contract(make_pt({x, y}), 2);
}

TEST_CASE("six edge-disjoint paths for every small spatial target") {
    for (int32_t x = -2; x <= 2; ++x)
        for (int32_t y = -2; y <= 2; ++y)
            for (int32_t z = -2; z <= 2; ++z) verify_contract(make_pt({x, y, z}), 3);
}

TEST_CASE("six edge-disjoint paths for far and degenerate spatial targets") {
    for (auto t : std::vector<std::array<int32_t, 3>>{{20, 0, 0},
                                                      {0, 0, -15},
                                                      {10, 10, 10},
                                                      {-7, 13, -2},
                                                      {5, 0, 5},
                                                      {0, -9, 1},
                                                      {-12, -12, 0},
                                                      {1, 2, 30}})
        verify_contract(make_pt({t[0], t[1], t[2]}), 3);
}

TEST_CASE("origin target yields trivial edgeless paths") {
    auto p2 = disjoint_paths(origin_pt(), 2);
    REQUIRE(p2.size() == 4);
    for (const auto& p : p2) {
        CHECK(p.vertices.size() == 1);
        CHECK(p.vertices.front() == origin_pt());
        CHECK(p.edge_count() == 0);
    }
    auto p3 = disjoint_paths(origin_pt(), 3);
    CHECK(p3.size() == 6);
}

TEST_CASE("unsupported dimensions are rejected") {
    CHECK_THROWS_AS(disjoint_paths(make_pt({1, 0, 0, 0}), 4), UnsupportedError);
}
