#pragma once
#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "fpp/lattice.hpp"
#include "fpp/path.hpp"

namespace fpp {

// 2d edge-disjoint lattice paths from the origin to x, each using at most
// |x|_1 + 8 edges. Construction: solve for the sign/permutation-canonical
// target (a >= b >= c >= 0), then map back. Supported for d in {2,3}.
//
// All vertices stay within the componentwise box [min(0,x)-2, max(0,x)+2].
namespace detail {

inline void run_along(std::vector<Pt>& v, int axis, int32_t to) {
    Pt cur = v.back();
    while (cur.c[axis] != to) {
        cur.c[axis] += (to > cur.c[axis]) ? 1 : -1;
        v.push_back(cur);
    }
}

inline std::vector<std::vector<Pt>> canonical_paths_2d(int32_t a, int32_t b) {
    std::vector<std::vector<Pt>> out;
    auto fresh = [] { return std::vector<Pt>{Pt{}}; };
    if (b >= 1) {
        {   // east then north
            auto p = fresh();
            run_along(p, 0, a);
            run_along(p, 1, b);
            out.push_back(std::move(p));
        }
        {   // north then east
            auto p = fresh();
            run_along(p, 1, b);
            run_along(p, 0, a);
            out.push_back(std::move(p));
        }
        {   // around the north-west
            auto p = fresh();
            run_along(p, 0, -1);
            run_along(p, 1, b + 1);
            run_along(p, 0, a);
            run_along(p, 1, b);
            out.push_back(std::move(p));
        }
        {   // around the south-east
            auto p = fresh();
            run_along(p, 1, -1);
            run_along(p, 0, a + 1);
            run_along(p, 1, b);
            run_along(p, 0, a);
            out.push_back(std::move(p));
        }
    } else {
        {   // straight
            auto p = fresh();
            run_along(p, 0, a);
            out.push_back(std::move(p));
        }
        {   // lane y=+1
            auto p = fresh();
            run_along(p, 1, 1);
            run_along(p, 0, a);
            run_along(p, 1, 0);
            out.push_back(std::move(p));
        }
        {   // wide detour over y=+2 via x=-1 and x=a+1
            auto p = fresh();
            run_along(p, 0, -1);
            run_along(p, 1, 2);
            run_along(p, 0, a + 1);
            run_along(p, 1, 0);
            run_along(p, 0, a);
            out.push_back(std::move(p));
        }
        {   // lane y=-1
            auto p = fresh();
            run_along(p, 1, -1);
            run_along(p, 0, a);
            run_along(p, 1, 0);
            out.push_back(std::move(p));
        }
    }
    return out;
}

inline std::vector<std::vector<Pt>> canonical_paths_3d(int32_t a, int32_t b, int32_t c) {
    std::vector<std::vector<Pt>> out;
    auto fresh = [] { return std::vector<Pt>{Pt{}}; };
    auto runs = [&](std::initializer_list<std::pair<int, int32_t>> rs) {
        auto p = fresh();
        for (auto [axis, to] : rs) run_along(p, axis, to);
        out.push_back(std::move(p));
    };
    if (c >= 1) {
        runs({{0, a}, {1, b}, {2, c}});                          // monotone x,y,z
        runs({{1, b}, {2, c}, {0, a}});                          // monotone y,z,x
        runs({{2, c}, {0, a}, {1, b}});                          // monotone z,x,y
        runs({{0, -1}, {1, -1}, {0, 0}, {0, a + 1}, {1, b}, {2, c}, {0, a}});  // west detour
        runs({{1, -1}, {2, c + 1}, {0, a}, {1, b}, {2, c}});     // south detour, arrive from above
        runs({{2, -1}, {0, a}, {1, b + 1}, {2, c}, {1, b}});     // below detour, arrive from north
    } else if (b >= 1) {
        // planar four in the z=0 plane plus two z-lanes
        for (auto& p : canonical_paths_2d(a, b)) out.push_back(std::move(p));
        runs({{2, 1}, {0, a}, {1, b}, {2, 0}});
        runs({{2, -1}, {0, a}, {1, b}, {2, 0}});
    } else {
        runs({{0, a}});                                          // straight
        runs({{1, 1}, {0, a}, {1, 0}});                          // lane y=+1
        runs({{1, -1}, {0, a}, {1, 0}});                         // lane y=-1
        runs({{2, 1}, {0, a}, {2, 0}});                          // lane z=+1
        runs({{2, -1}, {0, a}, {2, 0}});                         // lane z=-1
        runs({{0, -1}, {1, 1}, {2, 1}, {0, a + 1}, {1, 0}, {2, 0}, {0, a}});  // wide detour
    }
    return out;
}

} // namespace detail

inline std::vector<LatticePath> disjoint_paths(const Pt& x, int dim) {
    if (dim != 2 && dim != 3)
        throw UnsupportedError("edge-disjoint path construction is implemented for d in {2,3}");
    if (x == Pt{}) {
        // trivial edgeless paths
        return std::vector<LatticePath>((size_t)(2 * dim), LatticePath{{Pt{}}});
    }
    // canonicalize: axis permutation sorted by |x_i| descending, signs flipped
    std::array<int, kMaxDim> perm{0, 1, 2, 3};
    std::stable_sort(perm.begin(), perm.begin() + dim, [&](int i, int j) {
        return std::abs((int64_t)x.c[i]) > std::abs((int64_t)x.c[j]);
    });
    std::array<int32_t, kMaxDim> mag{};
    std::array<int32_t, kMaxDim> sgn{};
    for (int j = 0; j < dim; ++j) {
        int axis = perm[j];
        mag[j] = (int32_t)std::abs((int64_t)x.c[axis]);
        sgn[axis] = (x.c[axis] < 0) ? -1 : 1;
    }
    auto canon = (dim == 2) ? detail::canonical_paths_2d(mag[0], mag[1])
                            : detail::canonical_paths_3d(mag[0], mag[1], mag[2]);
    std::vector<LatticePath> out;
    out.reserve(canon.size());
    for (auto& cp : canon) {
        LatticePath lp;
        lp.vertices.reserve(cp.size());
        for (const Pt& q : cp) {
            Pt m;
            for (int j = 0; j < dim; ++j) m.c[perm[j]] = sgn[perm[j]] * q.c[j];
            lp.vertices.push_back(m);
        }
        out.push_back(std::move(lp));
    }
    return out;
}

// test/debug helper: verify the construction's contract for a given target
inline void check_disjoint_paths(const std::vector<LatticePath>& paths, const Pt& x, int dim) {
    if ((int)paths.size() != 2 * dim) throw Error("expected 2*d paths");
    std::unordered_set<Edge, EdgeHash> seen;
    int64_t bound = l1_norm(x, dim) + 8;
    for (const auto& p : paths) {
        if (p.vertices.empty() || !(p.vertices.front() == Pt{}) || !(p.vertices.back() == x))
            throw Error("path endpoints wrong");
        if ((int64_t)p.edge_count() > bound) throw Error("path too long");
        for (size_t i = 0; i + 1 < p.vertices.size(); ++i) {
            Edge e = edge_between(p.vertices[i], p.vertices[i + 1], dim);
            if (!seen.insert(e).second) throw Error("paths share an edge");
        }
    }
}

} // namespace fpp
