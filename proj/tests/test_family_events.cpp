#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fpp/field.hpp"
#include "fpp/resampling.hpp"
#include "fpp/search.hpp"

using namespace fpp;

namespace {

PassageTimeField make_field(int dim, int64_t radius, const char* dist, uint64_t seed) {
    LatticeConfig cfg;
    cfg.dim = dim;
    cfg.bounding_box = centered_box(origin_pt(), radius, dim);
    return PassageTimeField(cfg, parse_distribution(dist), seed);
}

Pt pt2(int64_t x, int64_t y) {
    Pt p = origin_pt();
    p.c[0] = x;
    p.c[1] = y;
    return p;
}

// signed euclidean facet distance to the l1 ball of the given radius in d=2;
// positive outside, negative inside (exact away from the four corners)
double l1_ball_signed_dist(const Pt& p, double radius) {
    double worst = -1e300;
    for (int mask = 0; mask < 4; ++mask) {
        double s = ((mask & 1) ? 1.0 : -1.0) * (double)p.c[0] +
                   ((mask & 2) ? 1.0 : -1.0) * (double)p.c[1];
        worst = std::max(worst, (s - radius) / std::sqrt(2.0));
    }
    return worst;
}

std::unordered_set<Pt, PtHash> as_set(const std::vector<Pt>& pts) {
    return {pts.begin(), pts.end()};
}

// standard exact-shape scene: pseudorandom base overridden by a uniform fill
// of 0.6 on every edge, so the t=12 wet region is exactly the l1 ball of
// radius 20 and every fluctuation against that body vanishes
PassageTimeField fill_scene(uint64_t seed, double value) {
    auto base = make_field(2, 48, "bernoulli(0,1,0.4)", seed);
    return base.with_fill(base.config().bounding_box, value);
}

}  // namespace

TEST_CASE("direction family geometry is pinned and separated") {
    Vec e1 = make_vec({1.0, 0.0});
    DirectionFamilyParams fp;  // eps=0.25, c=0.5
    auto famA = build_direction_family(l1_ball_body(2, 20.0), e1, 2.0, 12.0, fp);

    const double lg = std::log(12.0);
    CHECK(famA.dim == 2);
    CHECK(famA.dirs.size() == 2);
    CHECK(famA.patch_radius == doctest::Approx(lg * lg));
    CHECK(famA.black_radius == doctest::Approx(4.0 * lg * lg));
    CHECK(famA.required_separation == doctest::Approx(std::pow(12.0, 0.25)));
    CHECK(famA.separation == doctest::Approx(13.6373).epsilon(1e-3));
    CHECK(famA.separation >= famA.required_separation);

    // frozen directions: the sweep starts at the low edge of the quarter cone
    CHECK(famA.dirs[0].alpha[0] == doctest::Approx(std::sqrt(3.0) / 2.0));
    CHECK(famA.dirs[0].alpha[1] == doctest::Approx(-0.5));
    CHECK(famA.dirs[1].alpha[0] == doctest::Approx(0.909390).epsilon(1e-5));
    CHECK(famA.dirs[1].alpha[1] == doctest::Approx(0.415944).epsilon(1e-5));
    CHECK(famA.dirs[0].y == pt2(12, -7));
    CHECK(famA.dirs[1].y == pt2(13, 6));
    CHECK(famA.dirs[0].patch.size() == 26);
    CHECK(famA.dirs[1].patch.size() == 26);
    CHECK(famA.dirs[0].patch_boundary.size() == 18);
    CHECK(famA.dirs[1].patch_boundary.size() == 18);

    for (size_t i = 0; i < famA.dirs.size(); ++i) {
        const auto& de = famA.dirs[i];
        CHECK(l2_norm(de.alpha, 2) == doctest::Approx(1.0));
        CHECK(famA.cone.contains(de.alpha));
        // boundary point really sits on the body surface
        CHECK(std::abs(de.boundary[0]) + std::abs(de.boundary[1]) == doctest::Approx(20.0));
        // y is the floored ray intersection with the c^2 log t erosion
        double s = famA.gamma_minus_y->ray_scale(de.alpha);
        Vec exact = scale_vec(de.alpha, s);
        CHECK(l2_dist(to_vec(de.y), exact, 2) <= std::sqrt(2.0) + 1e-9);
        CHECK(famA.in_patch((int)i, de.y));
    }

    // membership oracle from raw sign arithmetic: the patch is the band of
    // euclidean half-width (c log t) around the surface, cut to the ball
    // around y; lattice points never land exactly on the irrational cuts
    const double band = 0.5 * lg;
    for (size_t i = 0; i < famA.dirs.size(); ++i) {
        const auto& de = famA.dirs[i];
        auto patch_set = as_set(de.patch);
        Box probe = centered_box(de.y, 9, 2);
        Pt p = probe.lo;
        bool more = true;
        while (more) {
            double sd = l1_ball_signed_dist(p, 20.0);
            bool oracle = sd <= band && sd > -band && l2_dist(p, de.y, 2) <= famA.patch_radius;
            CHECK(famA.in_patch((int)i, p) == oracle);
            CHECK((patch_set.count(p) != 0) == oracle);
            more = false;
            for (int ax = 0; ax < 2; ++ax) {
                if (++p.c[ax] <= probe.hi.c[ax]) {
                    more = true;
                    break;
                }
                p.c[ax] = probe.lo.c[ax];
            }
        }

        // inner boundary oracle: a patch point with some lattice neighbor
        // outside the patch
        std::vector<Pt> bd;
        for (const auto& q : de.patch) {
            bool edge = false;
            for (int ax = 0; ax < 2 && !edge; ++ax) {
                for (int sg = -1; sg <= 1; sg += 2) {
                    Pt nb = q;
                    nb.c[ax] += sg;
                    if (!patch_set.count(nb)) {
                        edge = true;
                        break;
                    }
                }
            }
            if (edge) bd.push_back(q);
        }
        std::sort(bd.begin(), bd.end());
        CHECK(bd == de.patch_boundary);
    }

    // bigger body, narrower cone
    auto famB = build_direction_family(l1_ball_body(2, 100.0), e1, 1.0, 60.0, fp);
    CHECK(famB.dirs.size() == 2);
    CHECK(famB.dirs[0].y == pt2(78, -21));
    CHECK(famB.dirs[1].y == pt2(86, 12));
    CHECK(famB.dirs[0].patch.size() == 118);
    CHECK(famB.dirs[1].patch.size() == 117);
    CHECK(famB.separation == doctest::Approx(33.7468).epsilon(1e-3));

    // wide cone past the t^eps >= 3 threshold: three directions fit
    auto famK = build_direction_family(l1_ball_body(2, 150.0), e1, 2.8, 100.0, fp);
    CHECK(famK.dirs.size() == 3);
    CHECK(famK.dirs[0].y == pt2(74, -74));
    CHECK(famK.dirs[1].y == pt2(104, -44));
    CHECK(famK.dirs[2].y == pt2(134, -14));
    CHECK(famK.dirs[0].patch.size() == 207);
    CHECK(famK.dirs[2].patch.size() == 221);

    // family size never exceeds the t^eps cap (floored, min two)
    for (const auto* fam : {&famA, &famB, &famK}) {
        double cap = std::max(2.0, std::floor(std::pow(fam->t, fam->eps)));
        CHECK((double)fam->dirs.size() <= cap);
    }

    // patch disjointness is the binding constraint: pairwise y distances
    // clear twice the patch radius, and the patch sets never intersect
    for (const auto* fam : {&famA, &famB, &famK}) {
        for (size_t i = 0; i < fam->dirs.size(); ++i) {
            for (size_t j = i + 1; j < fam->dirs.size(); ++j) {
                CHECK(l2_dist(fam->dirs[i].y, fam->dirs[j].y, 2) > 2.0 * fam->patch_radius);
                auto si = as_set(fam->dirs[i].patch);
                for (const auto& q : fam->dirs[j].patch) CHECK(!si.count(q));
            }
        }
    }
}

TEST_CASE("direction families extend to d=3") {
    Vec e1 = make_vec({1.0, 0.0, 0.0});
    DirectionFamilyParams fp;
    auto fam = build_direction_family(l1_ball_body(3, 30.0), e1, 2.0, 12.0, fp);
    CHECK(fam.dirs.size() == 2);
    Pt y0 = origin_pt();
    y0.c[0] = 18;
    y0.c[1] = -1;
    y0.c[2] = 10;
    Pt y1 = origin_pt();
    y1.c[0] = 17;
    y1.c[1] = 9;
    y1.c[2] = 2;
    CHECK(fam.dirs[0].y == y0);
    CHECK(fam.dirs[1].y == y1);
    CHECK(fam.dirs[0].patch.size() == 377);
    CHECK(fam.dirs[1].patch.size() == 388);
    CHECK(fam.in_patch(0, fam.dirs[0].y));
    CHECK(fam.in_patch(1, fam.dirs[1].y));
    CHECK(l2_dist(fam.dirs[0].y, fam.dirs[1].y, 3) > 2.0 * fam.patch_radius);
    for (const auto& de : fam.dirs) {
        CHECK(l2_norm(de.alpha, 3) == doctest::Approx(1.0));
        CHECK(fam.cone.contains(de.alpha));
    }
}

TEST_CASE("family construction rejects what it cannot honor") {
    Vec e1 = make_vec({1.0, 0.0});
    DirectionFamilyParams fp;

    // erosion swallows the body outright
    DirectionFamilyParams huge_c = fp;
    huge_c.c = 20.0;
    CHECK_THROWS_AS(build_direction_family(l1_ball_body(2, 100.0), e1, 1.0, 60.0, huge_c),
                    InfeasibleFamilyError);
    // cone too narrow for two separated directions
    CHECK_THROWS_AS(build_direction_family(l1_ball_body(2, 100.0), e1, 1e-3, 60.0, fp),
                    InfeasibleFamilyError);
    // body too small to contain the t/3 ball piece of the half cone
    CHECK_THROWS_AS(build_direction_family(l1_ball_body(2, 12.0), e1, 1.0, 100.0, fp),
                    PreconditionError);

    DirectionFamilyParams bad = fp;
    bad.eps = 0.6;
    CHECK_THROWS_AS(build_direction_family(l1_ball_body(2, 20.0), e1, 2.0, 12.0, bad),
                    ConfigError);
    bad = fp;
    bad.c = 0.0;
    CHECK_THROWS_AS(build_direction_family(l1_ball_body(2, 20.0), e1, 2.0, 12.0, bad),
                    ConfigError);
    CHECK_THROWS_AS(build_direction_family(l1_ball_body(2, 20.0), e1, 2.0, 1.0, fp), ConfigError);
    CHECK_THROWS_AS(build_direction_family(nullptr, e1, 2.0, 12.0, fp), ConfigError);

    Vec e1_4 = make_vec({1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(build_direction_family(ball_body(4, 20.0), e1_4, 2.0, 12.0, fp),
                    UnsupportedError);
}

TEST_CASE("window events on the exact-shape fill scene") {
    Vec e1 = make_vec({1.0, 0.0});
    auto fam = build_direction_family(l1_ball_body(2, 20.0), e1, 2.0, 12.0, {});
    auto field = fill_scene(7, 0.6);
    auto bt = grow_wet_region(field, 12.0);
    REQUIRE(bt.reliable_up_to >= 12.0 - 1e-9);

    EventParams ep;
    ep.delta = 0.05;
    ep.good_cone_radius = 6.0;
    ep.seed = 5;
    auto ev = evaluate_events(field, bt, fam, ep);

    // wet region == body exactly: no fluctuation anywhere, so no direction is
    // good, while uniform 0.6 edges make every ball black and every window
    // pair obey the linear speed bound
    CHECK(ev.good_threshold == doctest::Approx(0.25 * std::log(12.0)));
    CHECK(ev.fluct_values.size() == 2);
    CHECK(ev.fluct_values[0] == 0.0);
    CHECK(ev.fluct_values[1] == 0.0);
    CHECK(!ev.good[0]);
    CHECK(!ev.good[1]);
    CHECK(ev.good_set.empty());
    CHECK(ev.black[0]);
    CHECK(ev.black[1]);
    CHECK(ev.black_count == 2);
    CHECK(ev.w1.holds);
    CHECK(ev.w1.mode == W1Mode::sampled);  // window volume 97^2 over the cap
    CHECK(ev.w1.window_radius == 48);      // t^2 clamped to the bounding box
    CHECK(!ev.w1.violation.has_value());
    CHECK(ev.w2);
    CHECK(ev.w);

    // bit-identical on a rerun
    auto ev2 = evaluate_events(field, bt, fam, ep);
    CHECK(ev2.good == ev.good);
    CHECK(ev2.black == ev.black);
    CHECK(ev2.fluct_values == ev.fluct_values);
    CHECK(ev2.w1.pairs_checked == ev.w1.pairs_checked);
    CHECK(ev2.w == ev.w);

    // under-grown region is refused
    auto low = grow_wet_region(field, 8.0);
    CHECK_THROWS_AS(evaluate_events(field, low, fam, ep), PreconditionError);

    // dimension mismatch is refused
    auto f3 = make_field(3, 6, "constant(1)", 1);
    auto bt3 = grow_wet_region(f3, 2.0);
    CHECK_THROWS_AS(evaluate_events(f3, bt3, fam, ep), ConfigError);
}

TEST_CASE("a cheap corridor flips exactly the directions whose cone sees it") {
    Vec e1 = make_vec({1.0, 0.0});
    auto fam = build_direction_family(l1_ball_body(2, 20.0), e1, 2.0, 12.0, {});
    auto field = fill_scene(7, 0.6);

    // five zero edges straight out of the body surface at (20,0): the wet
    // region grows a spike to (25,0), five units outside the body
    std::unordered_map<Edge, double, EdgeHash> zeros;
    for (int k = 0; k < 5; ++k) {
        Edge e;
        e.a = pt2(20 + k, 0);
        e.axis = 0;
        zeros[e] = 0.0;
    }
    auto corr = field.with_overrides(zeros);
    auto bt = grow_wet_region(corr, 12.0);

    EventParams ep;
    ep.delta = 0.05;
    ep.good_cone_radius = 6.5;
    ep.seed = 5;
    auto ev = evaluate_events(corr, bt, fam, ep);

    // the spike tip is 6.996 off the dir-0 axis ray but exactly 6.0 off the
    // dir-1 axis: with radius 6.5 only dir 1 sees it
    CHECK(!ev.good[0]);
    CHECK(ev.good[1]);
    CHECK(ev.good_set == std::vector<int>{1});
    CHECK(ev.fluct_values[0] == 0.0);
    CHECK(ev.fluct_values[1] == doctest::Approx(5.0));

    // side effect: the corridor lies inside both black balls and is itself a
    // violating pair (zero passage time at l1 distance two), so neither ball
    // is black any more
    CHECK(!ev.black[0]);
    CHECK(!ev.black[1]);
    auto rep = is_black(corr, fam.dirs[0].y, 12.0, 0.05);
    REQUIRE(!rep.black);
    REQUIRE(rep.slow_pair.has_value());
    CHECK(rep.slow_pair->time == 0.0);
    CHECK(rep.slow_pair->v.c[1] == 0);
    CHECK(rep.slow_pair->w.c[1] == 0);
    CHECK(ev.w2 == false);
    CHECK(ev.w1.holds);  // two zero edges cannot beat the speed line at t^2 scale
    CHECK(!ev.w);
}

TEST_CASE("window pair speed check: exhaustive vs sampled") {
    Vec e1 = make_vec({1.0, 0.0});
    auto fam = build_direction_family(l1_ball_body(2, 5.0), e1, 2.0, 3.0, {});
    CHECK(fam.dirs.size() == 2);
    CHECK(fam.dirs[0].y == pt2(2, -2));
    CHECK(fam.dirs[1].y == pt2(4, 0));

    auto base = make_field(2, 24, "bernoulli(0,1,0.4)", 11);
    auto field = base.with_fill(base.config().bounding_box, 1.0);
    auto bt = grow_wet_region(field, 3.0);

    EventParams ep;
    ep.delta = 0.05;
    ep.good_cone_radius = 3.0;
    ep.seed = 9;
    auto ev = evaluate_events(field, bt, fam, ep);

    // window [-9,9]^2, all pairs at l1 distance >= t^{eps/2}: count them
    // independently with a double loop
    int64_t expect = 0;
    const double l1_min = std::pow(3.0, 0.125);
    std::vector<Pt> window;
    for (int64_t x = -9; x <= 9; ++x)
        for (int64_t y = -9; y <= 9; ++y) window.push_back(pt2(x, y));
    for (size_t a = 0; a < window.size(); ++a)
        for (size_t b = a + 1; b < window.size(); ++b)
            if ((double)l1_dist(window[a], window[b], 2) >= l1_min - 1e-12) ++expect;

    CHECK(ev.w1.mode == W1Mode::exhaustive);
    CHECK(ev.w1.window_radius == 9);
    CHECK(ev.w1.pairs_checked == expect);
    CHECK(ev.w1.pairs_checked == 64296);  // C(361,2) minus the 684 adjacent pairs
    CHECK(ev.w1.holds);
    CHECK(ev.w2);

    // same scene through the sampled path
    EventParams eps = ep;
    eps.w1_exhaustive_volume_cap = 0;
    auto evs = evaluate_events(field, bt, fam, eps);
    CHECK(evs.w1.mode == W1Mode::sampled);
    CHECK(evs.w1.holds);
    CHECK(evs.w1.pairs_checked > 0);
    CHECK(evs.w1.pairs_checked <= 100 * 100);

    // a planted two-edge zero chain is a genuine violation and the exhaustive
    // scan pins the exact pair
    std::unordered_map<Edge, double, EdgeHash> chain;
    for (int k = 0; k < 2; ++k) {
        Edge e;
        e.a = pt2(4 + k, 4);
        e.axis = 0;
        chain[e] = 0.0;
    }
    auto planted = field.with_overrides(chain);
    auto btp = grow_wet_region(planted, 3.0);
    auto evp = evaluate_events(planted, btp, fam, ep);
    CHECK(!evp.w1.holds);
    REQUIRE(evp.w1.violation.has_value());
    CHECK(evp.w1.violation->v == pt2(4, 4));
    CHECK(evp.w1.violation->w == pt2(6, 4));
    CHECK(evp.w1.violation->time == 0.0);
    CHECK(evp.w1.violation->required == doctest::Approx(0.1));
    CHECK(!evp.w);
}
