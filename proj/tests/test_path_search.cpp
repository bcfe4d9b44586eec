#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fpp/field.hpp"
#include "fpp/path.hpp"
#include "fpp/search.hpp"

using namespace fpp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PassageTimeField make_field(int dim, int64_t radius, const char* dist, uint64_t seed) {
    LatticeConfig cfg;
    cfg.dim = dim;
    cfg.bounding_box = centered_box(origin_pt(), radius, dim);
    return PassageTimeField(cfg, parse_distribution(dist), seed);
}

// Exhaustive minimum over simple paths v -> w inside `box` (and `domain` if
// set). Weights are >= 0, so some optimal path is simple and this is an
// independent oracle for the search engine. `floor_per_edge` is an admissible
// lower bound on any edge weight, used only to prune.
struct PathOracle {
    const PassageTimeField* field = nullptr;
    Box box{};
    int dim = 2;
    std::function<bool(const Pt&)> domain;
    double floor_per_edge = 0;

    Pt target{};
    double best = kInf;
    std::unordered_set<Pt, PtHash> on_path;

    double run(const Pt& v, const Pt& w) {
        target = w;
        best = kInf;
        on_path.clear();
        seed_with_monotone_path(v, w);
        dfs(v, 0.0);
        return best;
    }

    void seed_with_monotone_path(const Pt& v, const Pt& w) {
        std::vector<Pt> verts{v};
        Pt cur = v;
        for (int axis = 0; axis < dim; ++axis)
            while (cur.c[axis] != w.c[axis]) {
                cur.c[axis] += (w.c[axis] > cur.c[axis]) ? 1 : -1;
                verts.push_back(cur);
            }
        double acc = 0;
        for (size_t i = 0; i < verts.size(); ++i) {
            if (!box.contains(verts[i], dim)) return;
            if (domain && !domain(verts[i])) return;
            if (i > 0) acc += field->weight(verts[i - 1], verts[i]);
        }
        best = acc;
    }

    void dfs(const Pt& cur, double acc) {
        if (acc + floor_per_edge * (double)l1_dist(cur, target, dim) >= best) return;
        if (cur == target) {
            best = acc;
            return;
        }
        on_path.insert(cur);
        for (int axis = 0; axis < dim; ++axis)
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                Pt n = cur;
                n.c[axis] += sgn;
                if (!box.contains(n, dim)) continue;
                if (domain && !domain(n)) continue;
                if (on_path.count(n)) continue;
                dfs(n, acc + field->weight(cur, n));
            }
        on_path.erase(cur);
    }
};

Pt random_pt_in(SeqRng& rng, const Box& box, int dim) {
    Pt p;
    for (int i = 0; i < dim; ++i)
        p.c[i] = (int32_t)(box.lo.c[i] + (int64_t)rng.next_below((uint64_t)(box.hi.c[i] - box.lo.c[i] + 1)));
    return p;
}

struct WetSnapshot {
    std::unordered_map<Pt, double, PtHash> times;
    Box bbox{};
    bool any = false;
};

WetSnapshot snapshot(const WetRegion& r) {
    WetSnapshot s;
    r.for_each_wet([&](const Pt& p, double t) {
        s.times[p] = t;
        if (!s.any) {
            s.bbox = Box{p, p};
            s.any = true;
        } else {
            for (int i = 0; i < r.dim; ++i) {
                s.bbox.lo.c[i] = std::min(s.bbox.lo.c[i], p.c[i]);
                s.bbox.hi.c[i] = std::max(s.bbox.hi.c[i], p.c[i]);
            }
        }
    });
    return s;
}

} // namespace

TEST_CASE("uniform fill turns passage time into a scaled l1 distance") {
    auto field = make_field(2, 40, "uniform(0.5,1.5)", 11).with_fill(centered_box(origin_pt(), 40, 2), 0.25);
    for (auto [x, y] : std::vector<std::pair<int, int>>{{3, 0}, {-2, 5}, {4, 4}, {0, -6}, {-3, -1}}) {
        Pt w = make_pt({x, y});
        double got = first_passage_time(field, origin_pt(), w);
        CHECK(got == doctest::Approx(0.25 * (double)l1_norm(w, 2)).epsilon(1e-12));
    }
    // fill value 1: plain l1 distance between two off-origin points
    auto unit = make_field(2, 40, "exponential(1)", 3).with_fill(centered_box(origin_pt(), 40, 2), 1.0);
    CHECK(first_passage_time(unit, make_pt({-3, 2}), make_pt({4, -1})) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("edge overrides win over the fill and create cheap highways") {
    auto base = make_field(2, 30, "uniform(0.5,1.5)", 5).with_fill(centered_box(origin_pt(), 30, 2), 1.0);
    std::unordered_map<Edge, double, EdgeHash> hw;
    for (int i = 0; i < 10; ++i) hw[Edge{make_pt({i, 0}), 0}] = 0.05;
    auto field = base.with_overrides(hw);

    CHECK(field.weight(make_pt({3, 0}), make_pt({4, 0})) == 0.05);
    CHECK(field.weight(make_pt({3, 1}), make_pt({4, 1})) == 1.0);

    CHECK(first_passage_time(field, origin_pt(), make_pt({10, 0})) == doctest::Approx(0.5).epsilon(1e-12));
    // reach (10,1): ride the highway, hop off at the end
    CHECK(first_passage_time(field, origin_pt(), make_pt({10, 1})) == doctest::Approx(1.5).epsilon(1e-12));
    // short diagonal: highway + one unit edge beats two unit edges
    CHECK(first_passage_time(field, origin_pt(), make_pt({1, 1})) == doctest::Approx(1.05).epsilon(1e-12));
}

TEST_CASE("box-restricted search matches the exhaustive oracle, zero-atom weights d=2") {
    Box box = centered_box(origin_pt(), 2, 2);
    for (uint64_t seed : {101ull, 202ull}) {
        auto field = make_field(2, 50, "bernoulli(0,1,0.4)", seed);
        PathOracle oracle{&field, box, 2, nullptr, 0.0};
        SeqRng rng(derive_seed(seed, "pairs"));
        for (int k = 0; k < 30; ++k) {
            Pt v = random_pt_in(rng, box, 2);
            Pt w = random_pt_in(rng, box, 2);
            auto got = restricted_fpt(field, v, w, {}, box);
            REQUIRE(got.has_value());
            CHECK(*got == doctest::Approx(oracle.run(v, w)).epsilon(1e-9));
        }
    }
}

TEST_CASE("box-restricted search matches the exhaustive oracle, positive weights d=2") {
    Box box = centered_box(origin_pt(), 3, 2);
    auto field = make_field(2, 50, "uniform(0.5,1.5)", 77);
    PathOracle oracle{&field, box, 2, nullptr, 0.5};
    SeqRng rng(9001);
    for (int k = 0; k < 20; ++k) {
        Pt v = random_pt_in(rng, box, 2);
        Pt w = random_pt_in(rng, box, 2);
        auto got = restricted_fpt(field, v, w, {}, box);
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(oracle.run(v, w)).epsilon(1e-9));
    }
}

TEST_CASE("box-restricted search matches the exhaustive oracle, d=3") {
    LatticeConfig cfg;
    cfg.dim = 3;
    cfg.bounding_box = centered_box(origin_pt(), 50, 3);
    PassageTimeField field(cfg, parse_distribution("uniform(0.5,1.5)"), 31);
    Box box = centered_box(origin_pt(), 2, 3);
    PathOracle oracle{&field, box, 3, nullptr, 0.5};
    SeqRng rng(4242);
    // one corner-to-corner pair plus random ones
    std::vector<std::pair<Pt, Pt>> pairs{{make_pt({-2, -2, -2}), make_pt({2, 2, 2})}};
    for (int k = 0; k < 8; ++k) pairs.emplace_back(random_pt_in(rng, box, 3), random_pt_in(rng, box, 3));
    for (auto& [v, w] : pairs) {
        auto got = restricted_fpt(field, v, w, {}, box);
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(oracle.run(v, w)).epsilon(1e-9));
    }
}

TEST_CASE("domain-restricted search honors the vertex predicate") {
    auto field = make_field(2, 50, "uniform(0.5,1.5)", 13);
    Box box = centered_box(origin_pt(), 5, 2);
    auto ball = [](const Pt& p) { return l1_norm(p, 2) <= 3; };

    PathOracle oracle{&field, box, 2, ball, 0.5};
    SeqRng rng(777);
    int done = 0;
    while (done < 12) {
        Pt v = random_pt_in(rng, box, 2);
        Pt w = random_pt_in(rng, box, 2);
        if (!ball(v) || !ball(w)) continue;
        auto got = restricted_fpt(field, v, w, ball, box);
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(oracle.run(v, w)).epsilon(1e-9));
        ++done;
    }

    // endpoint violating the domain is a precondition failure
    CHECK_THROWS_AS(restricted_fpt(field, origin_pt(), make_pt({4, 0}), ball, box), PreconditionError);
    // disconnected domain: both endpoints legal, no path between them
    auto gap = [](const Pt& p) { return p.c[1] == 0 && (p.c[0] <= 1 || p.c[0] >= 4); };
    auto none = restricted_fpt(field, origin_pt(), make_pt({5, 0}), gap, box);
    CHECK(!none.has_value());
}

TEST_CASE("wet region growth agrees with the per-target oracle") {
    auto field = make_field(2, 2000, "bernoulli(0,1,0.4)", 2024);
    const double t = 2.0;
    WetRegion region = grow_wet_region(field, t);
    CHECK(region.mode == WetRegion::Mode::U16);
    CHECK(region.scale == 1);

    auto snap = snapshot(region);
    REQUIRE(snap.any);
    CHECK(region.wet_count == snap.times.size());
    CHECK(region.wet_bbox == snap.bbox);
    CHECK(snap.times.count(origin_pt()) == 1);
    CHECK(snap.times.at(origin_pt()) == 0.0);

    // every reported wet point carries the true passage time
    for (const auto& [p, tp] : snap.times) {
        CHECK(tp <= t);
        CHECK(first_passage_time(field, origin_pt(), p) == doctest::Approx(tp).epsilon(1e-12));
        CHECK(region.contains(p));
        CHECK(region.time(p) == tp);
    }
    // ...and everything else near the region is genuinely dry
    Box shell = snap.bbox;
    for (int i = 0; i < 2; ++i) {
        shell.lo.c[i] -= 1;
        shell.hi.c[i] += 1;
    }
    for (int32_t x = shell.lo.c[0]; x <= shell.hi.c[0]; ++x)
        for (int32_t y = shell.lo.c[1]; y <= shell.hi.c[1]; ++y) {
            Pt p = make_pt({x, y});
            if (snap.times.count(p)) continue;
            CHECK(!region.contains(p));
            CHECK(first_passage_time(field, origin_pt(), p) > t);
        }
}

TEST_CASE("budget views equal freshly grown regions") {
    auto field = make_field(2, 4000, "bernoulli(0,1,0.4)", 555);
    WetRegion full = grow_wet_region(field, 5.0);
    WetRegion view = full.view(2.0);
    WetRegion fresh = grow_wet_region(field, 2.0);

    auto sv = snapshot(view);
    auto sf = snapshot(fresh);
    CHECK(view.wet_count == fresh.wet_count);
    CHECK(view.wet_count == sv.times.size());
    CHECK(view.wet_bbox == fresh.wet_bbox);
    REQUIRE(sv.times.size() == sf.times.size());
    for (const auto& [p, tp] : sf.times) {
        REQUIRE(sv.times.count(p) == 1);
        CHECK(sv.times.at(p) == tp);
    }
    // dry probe behaves the same through the view
    Pt far = make_pt({fresh.wet_bbox.hi.c[0] + 1, 0});
    CHECK(!view.contains(far));
    CHECK(view.time(far) == kInf);

    CHECK_THROWS_AS(full.view(6.0), PreconditionError);

    // double-resolution case as well
    auto cont = make_field(2, 4000, "uniform(0.5,1.5)", 556);
    WetRegion cf = grow_wet_region(cont, 3.0);
    WetRegion cv = cf.view(1.5);
    WetRegion cg = grow_wet_region(cont, 1.5);
    auto scv = snapshot(cv);
    auto scg = snapshot(cg);
    CHECK(cv.wet_count == cg.wet_count);
    CHECK(cv.wet_bbox == cg.wet_bbox);
    REQUIRE(scv.times.size() == scg.times.size());
    for (const auto& [p, tp] : scg.times) {
        REQUIRE(scv.times.count(p) == 1);
        CHECK(scv.times.at(p) == doctest::Approx(tp).epsilon(1e-12));
    }
}

TEST_CASE("undersized explicit boxes raise truncation errors") {
    auto field = make_field(2, 2000, "uniform(0.5,1.5)", 99);
    GrowOptions opts;
    opts.box = centered_box(origin_pt(), 3, 2);
    CHECK_THROWS_AS(grow_wet_region(field, 10.0, opts), TruncationError);

    // point-to-point: the certificate fails when a rim vertex settles early
    auto unit = make_field(2, 2000, "uniform(0.5,1.5)", 98).with_fill(centered_box(origin_pt(), 2000, 2), 1.0);
    FptOptions tight;
    tight.box = Box{make_pt({-1, -1}), make_pt({2, 1})};
    CHECK_THROWS_AS(first_passage_time(unit, origin_pt(), make_pt({2, 0}), tight), TruncationError);
    FptOptions roomy;
    roomy.box = Box{make_pt({-3, -3}), make_pt({5, 3})};
    CHECK(first_passage_time(unit, origin_pt(), make_pt({2, 0}), roomy) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("point-to-point basics: identity, symmetry, triangle inequality, domain checks") {
    auto field = make_field(2, 60, "bernoulli(0,1,0.4)", 30);
    CHECK(first_passage_time(field, make_pt({3, -2}), make_pt({3, -2})) == 0.0);
    CHECK_THROWS_AS(first_passage_time(field, origin_pt(), make_pt({100, 0})), OutOfDomainError);
    CHECK_THROWS_AS(first_passage_time(field, make_pt({0, -70}), origin_pt()), OutOfDomainError);

    SeqRng rng(808);
    Box window = centered_box(origin_pt(), 6, 2);
    for (int k = 0; k < 8; ++k) {
        Pt u = random_pt_in(rng, window, 2);
        Pt v = random_pt_in(rng, window, 2);
        Pt w = random_pt_in(rng, window, 2);
        double tuv = first_passage_time(field, u, v);
        double tvu = first_passage_time(field, v, u);
        CHECK(tuv == doctest::Approx(tvu).epsilon(1e-12));
        double tuw = first_passage_time(field, u, w);
        double tvw = first_passage_time(field, v, w);
        CHECK(tuw <= tuv + tvw + 1e-9);
    }
}

TEST_CASE("certified automatic boxes agree with a large explicit box") {
    auto field = make_field(2, 2000, "uniform(0.5,1.5)", 64);
    Box big = centered_box(origin_pt(), 15, 2);
    SeqRng rng(11);
    for (int k = 0; k < 10; ++k) {
        Pt v = random_pt_in(rng, centered_box(origin_pt(), 2, 2), 2);
        Pt w = random_pt_in(rng, centered_box(origin_pt(), 2, 2), 2);
        auto restricted = restricted_fpt(field, v, w, {}, big);
        REQUIRE(restricted.has_value());
        CHECK(first_passage_time(field, v, w) == doctest::Approx(*restricted).epsilon(1e-12));
    }
}

TEST_CASE("growing to explicit targets reports certified times") {
    auto field = make_field(2, 2000, "uniform(0.5,1.5)", 19);
    Pt src = make_pt({1, 1});
    std::vector<Pt> targets{make_pt({3, 0}), make_pt({-2, 2}), make_pt({0, 0}), src};
    auto res = grow_to_targets(field, src, targets, centered_box(src, 15, 2));
    REQUIRE(res.times.size() == targets.size());
    double max_t = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
        CHECK(res.times[i] == doctest::Approx(first_passage_time(field, src, targets[i])).epsilon(1e-12));
        max_t = std::max(max_t, res.times[i]);
    }
    CHECK(res.times.back() == 0.0);
    CHECK(res.region.reliable_up_to == doctest::Approx(max_t).epsilon(1e-12));
    for (size_t i = 0; i < targets.size(); ++i)
        CHECK(res.region.time(targets[i]) == doctest::Approx(res.times[i]).epsilon(1e-12));
}

TEST_CASE("optimal path reconstruction is valid, tight, and deterministic") {
    auto field = make_field(2, 2000, "bernoulli(0,1,0.4)", 333);
    WetRegion region = grow_wet_region(field, 3.0);
    auto snap = snapshot(region);

    // probe the farthest-in-time wet points
    std::vector<Pt> picks;
    for (const auto& [p, tp] : snap.times)
        if (tp == 3.0) picks.push_back(p);
    std::sort(picks.begin(), picks.end());
    if (picks.size() > 5) picks.resize(5);
    REQUIRE(!picks.empty());

    for (const Pt& target : picks) {
        LatticePath path = trace_optimal_path(field, region, target);
        REQUIRE(!path.vertices.empty());
        CHECK(path.vertices.front() == region.source);
        CHECK(path.vertices.back() == target);
        path.validate(field.config());
        CHECK(path_time(field, path) == doctest::Approx(region.time(target)).epsilon(1e-9));
        LatticePath again = trace_optimal_path(field, region, target);
        CHECK(again.vertices == path.vertices);
    }

    // dry targets are rejected
    Pt outside = make_pt({region.wet_bbox.hi.c[0] + 1, 0});
    CHECK_THROWS_AS(trace_optimal_path(field, region, outside), PreconditionError);

    // continuous-weight region too
    auto cont = make_field(2, 2000, "exponential(1)", 21);
    WetRegion creg = grow_wet_region(cont, 1.5);
    auto csnap = snapshot(creg);
    Pt far = origin_pt();
    double far_t = -1;
    for (const auto& [p, tp] : csnap.times)
        if (tp > far_t) {
            far_t = tp;
            far = p;
        }
    LatticePath cpath = trace_optimal_path(cont, creg, far);
    CHECK(cpath.vertices.front() == creg.source);
    CHECK(cpath.vertices.back() == far);
    CHECK(path_time(cont, cpath) == doctest::Approx(creg.time(far)).epsilon(1e-9));
}

TEST_CASE("field layering: fills, overrides, replicates, star stream") {
    auto base = make_field(2, 40, "bernoulli(0,1,0.4)", 7);
    Box patch = Box{make_pt({0, 0}), make_pt({3, 3})};
    auto filled = base.with_fill(patch, 0.7);
    CHECK(filled.weight(make_pt({1, 1}), make_pt({2, 1})) == 0.7);
    // edge leaving the patch keeps the base draw
    CHECK(filled.weight(make_pt({3, 1}), make_pt({4, 1})) == base.weight(make_pt({3, 1}), make_pt({4, 1})));

    auto overridden = filled.with_overrides({{Edge{make_pt({1, 1}), 0}, 0.2}});
    CHECK(overridden.weight(make_pt({1, 1}), make_pt({2, 1})) == 0.2);
    CHECK(overridden.weight(make_pt({2, 1}), make_pt({3, 1})) == 0.7);

    CHECK(base.integer_scale().has_value());
    CHECK(*base.integer_scale() == 1);
    CHECK(!filled.integer_scale().has_value());  // 0.7 breaks the unit scale

    auto r0 = base.replicate(0);
    auto r0b = base.replicate(0);
    auto r1 = base.replicate(1);
    bool differs = false;
    for (int i = -10; i < 10 && !differs; ++i) {
        Edge e{make_pt({i, 0}), 0};
        CHECK(r0.weight(e) == r0b.weight(e));
        if (r0.weight(e) != r1.weight(e)) differs = true;
    }
    CHECK(differs);
    bool star_differs = false;
    for (int i = -10; i < 10 && !star_differs; ++i)
        if (base.star_field().weight(Edge{make_pt({i, 0}), 0}) != base.weight(Edge{make_pt({i, 0}), 0}))
            star_differs = true;
    CHECK(star_differs);

    // growth needs the origin inside the configured box
    LatticeConfig off;
    off.dim = 2;
    off.bounding_box = Box{make_pt({5, 5}), make_pt({9, 9})};
    PassageTimeField shifted(off, parse_distribution("constant(1)"), 1);
    CHECK_THROWS_AS(grow_wet_region(shifted, 2.0), OutOfDomainError);
}
