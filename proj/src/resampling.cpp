#include "fpp/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fpp {

namespace {

// lattice points of the closed euclidean ball B(center, radius), odometer
// order (axis 0 fastest), plus per-sign-pattern maxima of sigma.w used to
// bound L1 displacements: |v - w|_1 = max_sigma sigma.(w - v)
struct BallPoints {
    Box bbox;
    std::vector<Pt> pts;
    std::array<int64_t, 1 << kMaxDim> sigma_max{};
};

BallPoints enumerate_ball(const Pt& center, double radius, int dim) {
    BallPoints b;
    b.bbox = centered_box(center, (int64_t)std::ceil(radius), dim);
    for (auto& m : b.sigma_max) m = std::numeric_limits<int64_t>::min();
    Pt p = b.bbox.lo;
    bool more = true;
    while (more) {
        if (l2_dist(p, center, dim) <= radius + 1e-12) {
            b.pts.push_back(p);
            for (int s = 0; s < (1 << dim); ++s) {
                int64_t v = 0;
                for (int i = 0; i < dim; ++i) v += ((s >> i) & 1 ? 1 : -1) * (int64_t)p.c[i];
                b.sigma_max[(size_t)s] = std::max(b.sigma_max[(size_t)s], v);
            }
        }
        more = false;
        for (int i = 0; i < dim; ++i) {
            if (++p.c[i] <= b.bbox.hi.c[i]) {
                more = true;
                break;
            }
            p.c[i] = b.bbox.lo.c[i];
        }
    }
    return b;
}

int64_t max_l1_disp(const BallPoints& b, const Pt& v, int dim) {
    int64_t best = 0;
    for (int s = 0; s < (1 << dim); ++s) {
        int64_t sv = 0;
        for (int i = 0; i < dim; ++i) sv += ((s >> i) & 1 ? 1 : -1) * (int64_t)v.c[i];
        best = std::max(best, b.sigma_max[(size_t)s] - sv);
    }
    return best;
}

// unit directions inside the cone L(theta, r_param), deterministic order:
// d=2 sweeps the cap in ascending angle, d=3 walks a golden-angle spiral
// filtered by the cone
std::vector<Vec> cone_unit_dirs(const Vec& theta, double r_param, int dim, int count) {
    std::vector<Vec> out;
    const double tn = l2_norm(theta, dim);
    if (dim == 2) {
        double base = std::atan2(theta.c[1], theta.c[0]);
        double beta = std::asin(std::min(1.0, r_param / tn));
        for (int k = 0; k < count; ++k) {
            double a = base - beta + 2.0 * beta * ((double)k / (double)(count - 1));
            out.push_back(make_vec({std::cos(a), std::sin(a)}));
        }
    } else if (dim == 3) {
        Cone cap = Cone::around(theta, r_param, dim);
        const double ga = std::acos(-1.0) * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            double z = 1.0 - 2.0 * ((double)k + 0.5) / (double)count;
            double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            double phi = ga * (double)k;
            Vec u = make_vec({rho * std::cos(phi), rho * std::sin(phi), z});
            if (cap.contains(u)) out.push_back(u);
        }
    } else {
        throw UnsupportedError("direction sampling needs d = 2 or 3");
    }
    return out;
}

// per-direction cone fluctuations of `region` against the family body,
// batched to respect the multi-cone call limit
std::vector<FluctuationResult> cone_fluctuations(const WetRegion& region,
                                                 const DirectionFamily& family,
                                                 double cone_radius) {
    std::vector<FluctuationResult> out;
    const size_t m = family.dirs.size();
    for (size_t base = 0; base < m; base += 64) {
        const size_t hi = std::min(m, base + 64);
        std::vector<Cone> cones;
        for (size_t k = base; k < hi; ++k)
            cones.push_back(Cone::around(to_vec(family.dirs[k].y), cone_radius, family.dim));
        auto res = fluctuation_multi(region, *family.gamma, cones);
        out.insert(out.end(), res.begin(), res.end());
    }
    return out;
}

// box covering the origin and the patch of direction i with margin, clamped
// to the field's bounding box
Box escape_box(const PassageTimeField& field, const DirectionFamily& family, int i) {
    const int dim = family.dim;
    const auto& de = family.dirs[(size_t)i];
    int64_t rr = l1_norm(de.y, dim) + (int64_t)std::ceil(family.patch_radius);
    int64_t margin = std::max<int64_t>(64, rr / 4);
    Box box = centered_box(origin_pt(), rr + margin, dim);
    const Box& bb = field.config().bounding_box;
    for (int a = 0; a < dim; ++a) {
        box.lo.c[a] = std::max(box.lo.c[a], bb.lo.c[a]);
        box.hi.c[a] = std::min(box.hi.c[a], bb.hi.c[a]);
    }
    return box;
}

}  // namespace

const CriticalProbabilityTable& CriticalProbabilityTable::standard() {
    static const CriticalProbabilityTable table = [] {
        CriticalProbabilityTable t;
        t.bond_[2] = {0.5, "square lattice bond threshold (exact, self-duality)"};
        t.bond_[3] = {0.2488, "cubic lattice bond threshold (numerical estimate)"};
        t.oriented_[2] = {0.6447, "oriented square lattice bond threshold (numerical estimate)"};
        t.oriented_[3] = {0.2873, "oriented cubic lattice bond threshold (numerical estimate)"};
        for (auto* m : {&t.bond_, &t.oriented_}) {
            double prev = 1.0;
            for (const auto& [d, e] : *m) {
                (void)d;
                if (!(e.value > 0.0 && e.value < 1.0 && e.value <= prev))
                    throw Error("critical probability table breaks its invariants");
                prev = e.value;
            }
        }
        return t;
    }();
    return table;
}

const CriticalEntry& CriticalProbabilityTable::bond(int d) const {
    auto it = bond_.find(d);
    if (it == bond_.end())
        throw UnsupportedError("no bond percolation threshold on file for d=" + std::to_string(d));
    return it->second;
}

const CriticalEntry& CriticalProbabilityTable::oriented(int d) const {
    auto it = oriented_.find(d);
    if (it == oriented_.end())
        throw UnsupportedError("no oriented percolation threshold on file for d=" +
                               std::to_string(d));
    return it->second;
}

UsefulVerdict classify_useful(const WeightDistribution& dist, int d,
                              const CriticalProbabilityTable& table) {
    if (d < 2 || d > kMaxDim) throw ConfigError("dimension out of range");
    UsefulVerdict v;
    v.f_minus = dist.support_min();
    v.atom_at_min = dist.atom_at_min();
    if (v.f_minus <= 0.0) {
        v.used = UsefulThreshold::bond;
        v.threshold = table.bond(d).value;
    } else {
        v.used = UsefulThreshold::oriented;
        v.threshold = table.oriented(d).value;
    }
    v.is_useful = v.atom_at_min < v.threshold;
    return v;
}

DecayReport estimate_useful_lemma_decay(const WeightDistribution& dist, int d, double delta,
                                        const std::vector<int64_t>& distances, int replicates,
                                        uint64_t seed) {
    if (!(delta > 0)) throw ConfigError("delta must be > 0");
    if (replicates < 1) throw ConfigError("need at least one replicate");
    if (distances.size() < 2) throw ConfigError("need at least two distances for a slope");
    for (int64_t l : distances)
        if (l < 1) throw ConfigError("distances must be >= 1");
    auto verdict = classify_useful(dist, d);
    if (!verdict.is_useful)
        throw PreconditionError("speed-decay estimate needs a useful distribution");

    DecayReport rep;
    rep.delta = delta;
    rep.f_minus = verdict.f_minus;
    uint64_t idx = 0;
    for (int64_t l : distances) {
        DecayPoint pt;
        pt.distance = l;
        pt.n = replicates;
        const double thr = (verdict.f_minus + delta) * (double)l;
        Pt target = origin_pt();
        target.c[0] = (int32_t)l;
        LatticeConfig cfg{d, centered_box(origin_pt(), 8 * l + 64, d)};
        for (int r = 0; r < replicates; ++r) {
            PassageTimeField field(cfg, dist, derive_seed(seed, "decay", idx++));
            GrowOptions go;
            go.initial_radius = l + 8;
            WetRegion region = grow_wet_region(field, thr, go);
            double tt = region.in_grid(target) ? region.time(target)
                                               : std::numeric_limits<double>::infinity();
            if (tt < thr - 1e-12 * std::max(1.0, thr)) ++pt.hits;
        }
        pt.p_hat = (double)pt.hits / (double)pt.n;
        pt.log_p_adj = std::log(std::max((double)pt.hits, 0.5) / (double)pt.n);
        rep.points.push_back(pt);
    }
    double n = (double)rep.points.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& pt : rep.points) {
        double x = (double)pt.distance;
        sx += x;
        sy += pt.log_p_adj;
        sxx += x * x;
        sxy += x * pt.log_p_adj;
    }
    double den = n * sxx - sx * sx;
    if (den <= 0) throw ConfigError("distances must not all coincide");
    rep.slope = (n * sxy - sx * sy) / den;
    rep.decays = rep.slope < 0;
    return rep;
}

BlackReport is_black(const PassageTimeField& field, const Pt& y, double t, double delta) {
    const auto& cfg = field.config();
    const int dim = cfg.dim;
    if (!(t > 1.0)) throw PreconditionError("black test needs t > 1");
    if (!(delta > 0)) throw ConfigError("delta must be > 0");
    const double lg = std::log(t);
    const double fmin = field.distribution().support_min();

    BlackReport rep;
    rep.ball_radius = 2.0 * dim * lg * lg;
    rep.weight_cap = std::pow(lg, 2.0 * dim);
    rep.pair_threshold = std::sqrt(lg);

    BallPoints ball = enumerate_ball(y, rep.ball_radius, dim);
    if (!cfg.bounding_box.contains(ball.bbox.lo, dim) ||
        !cfg.bounding_box.contains(ball.bbox.hi, dim))
        throw TruncationError("black-test ball sticks out of the bounding box");
    rep.ball_points = (int64_t)ball.pts.size();

    DenseGrid<uint8_t> member(ball.bbox, dim, 0, (int64_t)1 << 28);
    for (const auto& p : ball.pts) member.cells[(size_t)member.index(p)] = 1;

    // weight cap first: deterministic edge scan (point order, then axis)
    double wmin = std::numeric_limits<double>::infinity();
    for (const auto& p : ball.pts) {
        for (int axis = 0; axis < dim; ++axis) {
            Pt q = p;
            q.c[axis] += 1;
            if (!member.in_box(q) || !member.cells[(size_t)member.index(q)]) continue;
            Edge e;
            e.a = p;
            e.axis = (int8_t)axis;
            double w = field.weight(e);
            if (w > rep.weight_cap + 1e-12) {
                rep.black = false;
                rep.heavy_edge = e;
                return rep;
            }
            wmin = std::min(wmin, w);
        }
    }

    // Every in-ball path costs at least wmin per L1 step, so when wmin clears
    // the speed bound no pair can violate it and the per-source searches are
    // skipped. Only the all-pass case takes this exit; any potential
    // violation falls through to the scan below, witnesses unchanged.
    if (wmin >= fmin + delta - 1e-12) return rep;

    // pair speed: per source, settle everything the budget allows inside the
    // ball; any violating pair must fall under the cap, so nothing is missed
    auto domain = [&](const Pt& p) {
        return member.in_box(p) && member.cells[(size_t)member.index(p)] != 0;
    };
    for (const auto& v : ball.pts) {
        const double budget = (fmin + delta) * (double)max_l1_disp(ball, v, dim) + 1e-9;
        WetRegion reg = grow_restricted(field, v, budget, domain, ball.bbox);
        bool bad = false;
        SlowPairWitness wit;
        reg.for_each_wet([&](const Pt& w, double tw) {
            if (bad) return;
            int64_t l1 = l1_dist(v, w, dim);
            if ((double)l1 < rep.pair_threshold - 1e-12) return;
            double required = (fmin + delta) * (double)l1;
            if (tw < required * (1.0 - 1e-12)) {
                bad = true;
                wit = SlowPairWitness{v, w, tw, required};
            }
        });
        if (bad) {
            rep.black = false;
            rep.slow_pair = wit;
            return rep;
        }
    }
    return rep;
}

BlackProbabilityReport estimate_black_probability(const WeightDistribution& dist, int d,
                                                  double delta, const std::vector<double>& t_list,
                                                  int replicates, uint64_t seed) {
    if (t_list.empty()) throw ConfigError("need at least one t");
    if (replicates < 1) throw ConfigError("need at least one replicate");
    auto verdict = classify_useful(dist, d);
    if (!verdict.is_useful)
        throw PreconditionError("black-probability estimate needs a useful distribution");

    BlackProbabilityReport rep;
    rep.delta = delta;
    uint64_t idx = 0;
    for (double t : t_list) {
        if (!(t > 1.0)) throw ConfigError("every t must be > 1");
        BlackProbabilityPoint pt;
        pt.t = t;
        pt.n = replicates;
        double lg = std::log(t);
        int64_t br = (int64_t)std::ceil(2.0 * d * lg * lg) + 2;
        LatticeConfig cfg{d, centered_box(origin_pt(), br, d)};
        for (int r = 0; r < replicates; ++r) {
            // the field law is translation invariant, so center the ball at 0
            PassageTimeField field(cfg, dist, derive_seed(seed, "black", idx++));
            if (is_black(field, origin_pt(), t, delta).black) ++pt.black_count;
        }
        pt.p_hat = (double)pt.black_count / (double)pt.n;
        rep.points.push_back(pt);
    }
    rep.non_decreasing = true;
    for (size_t i = 1; i < rep.points.size(); ++i)
        if (rep.points[i].p_hat < rep.points[i - 1].p_hat) rep.non_decreasing = false;
    return rep;
}

bool DirectionFamily::in_patch(int i, const Pt& p) const {
    const auto& de = dirs.at((size_t)i);
    if (l2_dist(p, de.y, dim) > patch_radius + 1e-9) return false;
    Vec x = to_vec(p);
    return gamma_plus->contains(x) && !gamma_minus->contains(x);
}

DirectionFamily build_direction_family(const BodyPtr& gamma, const Vec& theta, double r, double t,
                                       const DirectionFamilyParams& params) {
    if (!gamma) throw ConfigError("null body");
    const int dim = gamma->dim();
    if (dim != 2 && dim != 3) throw UnsupportedError("direction family needs d = 2 or 3");
    if (!(params.eps > 0) || !(params.eps < 0.5)) throw ConfigError("eps must be in (0, 1/2)");
    if (!(params.c > 0)) throw ConfigError("c must be > 0");
    if (!(t > 1.0)) throw ConfigError("t must be > 1");
    if (!(r > 0)) throw ConfigError("cone radius must be > 0");
    if (gamma->is_empty()) throw PreconditionError("family needs a nonempty body");

    const double lg = std::log(t);
    DirectionFamily fam;
    fam.dim = dim;
    fam.t = t;
    fam.eps = params.eps;
    fam.c = params.c;
    fam.cone = Cone::around(theta, r, dim);
    fam.gamma = gamma;
    fam.gamma_plus = dilate(gamma, params.c * lg);
    fam.gamma_minus = erode(gamma, params.c * lg);
    fam.gamma_minus_y = erode(gamma, params.c * params.c * lg);
    fam.gamma_plus_end = dilate(gamma, params.c * params.c * lg);
    fam.patch_radius = lg * lg;
    fam.black_radius = 2.0 * dim * lg * lg;
    fam.required_separation = std::pow(t, params.eps);
    if (fam.gamma_minus->is_empty() || fam.gamma_minus_y->is_empty())
        throw InfeasibleFamilyError("erosion swallowed the body; t is too small for this c");

    // the reduction this family relies on: the t/3 ball piece of the half
    // cone sits inside the body (checked on a probe fan of directions)
    for (const auto& u : cone_unit_dirs(theta, r / 2.0, dim, 65)) {
        if (!gamma->contains(scale_vec(u, t / 3.0)))
            throw PreconditionError("body must contain the t/3 ball inside the half cone");
    }

    const int64_t cap = std::max<int64_t>(2, (int64_t)std::floor(fam.required_separation));
    const int count = dim == 2 ? 4096 : 8192;
    for (const auto& u : cone_unit_dirs(theta, r / 4.0, dim, count)) {
        if ((int64_t)fam.dirs.size() >= cap) break;
        double sg, sy;
        try {
            sg = gamma->ray_scale(u);
            sy = fam.gamma_minus_y->ray_scale(u);
        } catch (const PreconditionError&) {
            continue;  // ray never leaves (or never enters) along u
        }
        Vec b = scale_vec(u, sg);
        Pt y = floor_pt(scale_vec(u, sy), dim);
        if (l2_norm(y, dim) <= 0) continue;  // degenerate center
        bool ok = true;
        for (const auto& de : fam.dirs) {
            if (l2_dist(b, de.boundary, dim) < fam.required_separation ||
                l2_dist(y, de.y, dim) <= 2.0 * fam.patch_radius + 1e-9) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        DirectionEntry de;
        de.alpha = u;
        de.boundary = b;
        de.y = y;
        Box pb = centered_box(y, (int64_t)std::ceil(fam.patch_radius) + 1, dim);
        Pt p = pb.lo;
        bool more = true;
        while (more) {
            if (l2_dist(p, y, dim) <= fam.patch_radius + 1e-9) {
                Vec x = to_vec(p);
                if (fam.gamma_plus->contains(x) && !fam.gamma_minus->contains(x))
                    de.patch.push_back(p);
            }
            more = false;
            for (int i = 0; i < dim; ++i) {
                if (++p.c[i] <= pb.hi.c[i]) {
                    more = true;
                    break;
                }
                p.c[i] = pb.lo.c[i];
            }
        }
        std::sort(de.patch.begin(), de.patch.end());
        de.patch_boundary = inner_boundary(de.patch, dim);
        std::sort(de.patch_boundary.begin(), de.patch_boundary.end());
        if (de.patch.empty() || de.patch_boundary.empty()) continue;
        fam.dirs.push_back(std::move(de));
    }
    if ((int64_t)fam.dirs.size() < 2)
        throw InfeasibleFamilyError("fewer than two separated directions fit the cone");

    fam.separation = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < fam.dirs.size(); ++i)
        for (size_t j = i + 1; j < fam.dirs.size(); ++j)
            fam.separation =
                std::min(fam.separation, l2_dist(fam.dirs[i].boundary, fam.dirs[j].boundary, dim));
    return fam;
}

EventReport evaluate_events(const PassageTimeField& field, const WetRegion& bt,
                            const DirectionFamily& family, const EventParams& params) {
    const auto& cfg = field.config();
    const int dim = cfg.dim;
    if (dim != family.dim) throw ConfigError("field and family dimensions differ");
    if (!(bt.source == origin_pt())) throw PreconditionError("region must be grown from the origin");
    const double t = family.t;
    if (bt.reliable_up_to + 1e-9 < t) throw PreconditionError("region not grown out to t");
    if (!(params.delta > 0)) throw ConfigError("delta must be > 0");

    EventReport rep;
    rep.t = t;
    rep.delta = params.delta;
    rep.eps = family.eps;
    rep.c = family.c;
    const double lg = std::log(t);
    rep.good_threshold = family.c * family.c * lg;
    rep.good_cone_radius = params.good_cone_radius > 0 ? params.good_cone_radius : std::pow(lg, 4.0);

    const WetRegion* head = &bt;
    WetRegion trimmed;
    if (bt.budget > t * (1.0 + 1e-12)) {
        trimmed = bt.view(t);
        head = &trimmed;
    }

    const size_t m = family.dirs.size();
    auto fl = cone_fluctuations(*head, family, rep.good_cone_radius);
    rep.fluct_values.resize(m);
    rep.good.assign(m, false);
    for (size_t i = 0; i < m; ++i) {
        rep.fluct_values[i] = fl[i].value;
        rep.good[i] = fl[i].value > rep.good_threshold;
        if (rep.good[i]) rep.good_set.push_back((int)i);
    }

    rep.black.assign(m, false);
    for (size_t i = 0; i < m; ++i) {
        rep.black[i] = is_black(field, family.dirs[i].y, t, params.delta).black;
        if (rep.black[i]) ++rep.black_count;
    }
    rep.w2 = (double)rep.black_count >= std::pow(t, family.eps) / 2.0;

    // pair-speed window check
    const double fmin = field.distribution().support_min();
    const double l1_min = std::pow(t, family.eps / 2.0);
    const int64_t wr = (int64_t)std::floor(t * t);
    Box window;
    for (int i = 0; i < dim; ++i) {
        window.lo.c[i] = (int32_t)std::max<int64_t>(-wr, (int64_t)cfg.bounding_box.lo.c[i]);
        window.hi.c[i] = (int32_t)std::min<int64_t>(wr, (int64_t)cfg.bounding_box.hi.c[i]);
    }
    rep.w1.window_radius = std::numeric_limits<int64_t>::max();
    for (int i = 0; i < dim; ++i)
        rep.w1.window_radius = std::min({rep.w1.window_radius, -(int64_t)window.lo.c[i],
                                         (int64_t)window.hi.c[i]});

    auto check_source = [&](const Pt& v, const std::vector<Pt>& targets) {
        int64_t lmax = 0;
        for (const auto& w : targets) lmax = std::max(lmax, l1_dist(v, w, dim));
        if (lmax == 0) return;
        GrowOptions go;
        go.initial_radius = std::max<int64_t>(32, lmax / 4);
        WetRegion reg = grow_wet_region_from(field, v, (fmin + params.delta) * (double)lmax + 1e-9, go);
        for (const auto& w : targets) {
            if (!rep.w1.holds) return;
            int64_t l1 = l1_dist(v, w, dim);
            double required = (fmin + params.delta) * (double)l1;
            double tw = reg.in_grid(w) ? reg.time(w) : std::numeric_limits<double>::infinity();
            ++rep.w1.pairs_checked;
            if (tw < required * (1.0 - 1e-12)) {
                rep.w1.holds = false;
                rep.w1.violation = SlowPairWitness{v, w, tw, required};
            }
        }
    };

    int64_t wvol = 1;
    for (int i = 0; i < dim && wvol <= params.w1_exhaustive_volume_cap; ++i)
        wvol *= (int64_t)window.hi.c[i] - window.lo.c[i] + 1;
    if (wvol <= params.w1_exhaustive_volume_cap) {
        rep.w1.mode = W1Mode::exhaustive;
        rep.w1.pair_cap = 0;
        std::vector<Pt> pts;
        pts.reserve((size_t)wvol);
        Pt p = window.lo;
        bool more = true;
        while (more) {
            pts.push_back(p);
            more = false;
            for (int i = 0; i < dim; ++i) {
                if (++p.c[i] <= window.hi.c[i]) {
                    more = true;
                    break;
                }
                p.c[i] = window.lo.c[i];
            }
        }
        for (size_t a = 0; a < pts.size() && rep.w1.holds; ++a) {
            std::vector<Pt> targets;
            for (size_t b = a + 1; b < pts.size(); ++b)
                if ((double)l1_dist(pts[a], pts[b], dim) >= l1_min - 1e-12)
                    targets.push_back(pts[b]);
            if (!targets.empty()) check_source(pts[a], targets);
        }
    } else {
        rep.w1.mode = W1Mode::sampled;
        const int64_t rho = std::min<int64_t>((int64_t)std::llround(t), 160);
        rep.w1.pair_cap = rho;
        SeqRng rng(derive_seed(params.seed, "w1"));
        for (int64_t s = 0; s < params.w1_sources && rep.w1.holds; ++s) {
            Pt v;
            for (int i = 0; i < dim; ++i) {
                int64_t span = (int64_t)window.hi.c[i] - window.lo.c[i] + 1;
                v.c[i] = (int32_t)((int64_t)window.lo.c[i] + (int64_t)rng.next_below((uint64_t)span));
            }
            std::vector<Pt> targets;
            for (int64_t k = 0; k < params.w1_targets; ++k) {
                Pt w = v;
                for (int i = 0; i < dim; ++i) {
                    int64_t x = (int64_t)v.c[i] + (int64_t)rng.next_below((uint64_t)(2 * rho + 1)) - rho;
                    x = std::max<int64_t>(window.lo.c[i], std::min<int64_t>(window.hi.c[i], x));
                    w.c[i] = (int32_t)x;
                }
                if ((double)l1_dist(v, w, dim) >= l1_min - 1e-12) targets.push_back(w);
            }
            if (!targets.empty()) check_source(v, targets);
        }
    }

    rep.w = rep.w1.holds && rep.w2;
    return rep;
}

EscapeOutcome find_escape_witness(const PassageTimeField& field, const DirectionFamily& family,
                                  int i, const EventReport& report, double delta) {
    if (i < 0 || i >= (int)family.dirs.size()) throw ConfigError("direction index out of range");
    if (report.good.at((size_t)i)) throw PreconditionError("escape needs a bad direction");
    if (!report.black.at((size_t)i)) throw PreconditionError("escape needs a black direction");
    const int dim = family.dim;
    const auto& de = family.dirs[(size_t)i];
    const double fmin = field.distribution().support_min();

    EscapeOutcome out;
    // certified optimal path to y_i
    int64_t rr = l1_norm(de.y, dim);
    int64_t margin = std::max<int64_t>(64, rr / 4);
    TargetGrowResult tg;
    for (int attempt = 0;; ++attempt) {
        Box box = centered_box(origin_pt(), rr + margin, dim);
        const Box& bb = field.config().bounding_box;
        for (int a = 0; a < dim; ++a) {
            box.lo.c[a] = std::max(box.lo.c[a], bb.lo.c[a]);
            box.hi.c[a] = std::min(box.hi.c[a], bb.hi.c[a]);
        }
        bool truncated = false;
        try {
            tg = grow_to_targets(field, origin_pt(), {de.y}, box);
            if (tg.region.min_rim_settled >= tg.times[0]) break;
            truncated = true;
        } catch (const TruncationError&) {
            truncated = true;
        }
        if (truncated && attempt >= 6)
            throw TruncationError("optimal path to the patch center not certified");
        margin *= 2;
    }
    LatticePath path = trace_optimal_path(field, tg.region, de.y);

    std::unordered_set<Pt, PtHash> ib(de.patch_boundary.begin(), de.patch_boundary.end());
    const Pt* x = nullptr;
    for (const auto& v : path.vertices) {
        if (ib.count(v)) {
            x = &v;
            break;
        }
    }
    if (!x) {
        out.diagnostic = "optimal path never meets the patch inner boundary";
        return out;
    }
    out.x = *x;
    out.bound = family.t - (double)l1_dist(*x, de.y, dim) * (fmin + delta);

    auto domain = [&](const Pt& p) { return p == *x || !family.in_patch(i, p); };
    auto rt = restricted_fpt(field, origin_pt(), *x, domain, escape_box(field, family, i));
    if (!rt) {
        out.diagnostic = "origin cannot reach the escape point outside the patch";
        return out;
    }
    out.restricted_time = *rt;
    out.holds = *rt <= out.bound + 1e-9;
    if (!out.holds) out.diagnostic = "restricted passage time exceeds the bound";
    return out;
}

ResamplePlan make_resample_plan(const DirectionFamily& family, int i, const Pt& z) {
    if (i < 0 || i >= (int)family.dirs.size()) throw ConfigError("direction index out of range");
    const int dim = family.dim;
    const auto& de = family.dirs[(size_t)i];
    std::unordered_set<Pt, PtHash> patch_set(de.patch.begin(), de.patch.end());
    if (!patch_set.count(z)) throw ConfigError("resample start must lie in the patch");

    ResamplePlan plan;
    plan.i = i;
    plan.z = z;
    const double lg = std::log(family.t);
    plan.length_cap = (int64_t)std::floor(
        std::min((double)l1_dist(de.y, z, dim) + 2.0 * dim * family.c * family.c * lg,
                 2.0 * dim * family.c * lg));

    // exit point: first lattice point along the outward alpha ray from y_i
    // that is in the patch, outside the inner dilation and inside the cone;
    // cell corners probed in a fixed order, so the choice is deterministic
    std::optional<Pt> endp;
    const double s_max = 4.0 * (family.c * lg + family.patch_radius) + 8.0;
    for (double s = 0.5; s <= s_max && !endp; s += 0.5) {
        Pt base = floor_pt(add_vec(to_vec(de.y), scale_vec(de.alpha, s)), dim);
        for (int mask = 0; mask < (1 << dim) && !endp; ++mask) {
            Pt cand = base;
            for (int b = 0; b < dim; ++b)
                if ((mask >> b) & 1) cand.c[b] += 1;
            if (!patch_set.count(cand)) continue;
            if (family.gamma_plus_end->contains(cand)) continue;
            if (!family.cone.contains(cand)) continue;
            endp = cand;
        }
    }
    if (!endp) {
        plan.diagnostic = "no exit point along the outward ray";
        return plan;
    }
    plan.end = *endp;

    // shortest z -> exit path inside the patch (BFS, fixed neighbor order)
    std::unordered_map<Pt, Pt, PtHash> parent;
    std::deque<Pt> queue;
    parent.emplace(z, z);
    queue.push_back(z);
    bool reached = (z == plan.end);
    while (!queue.empty() && !reached) {
        Pt cur = queue.front();
        queue.pop_front();
        for (int axis = 0; axis < dim && !reached; ++axis) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                Pt n = cur;
                n.c[axis] += sgn;
                if (!patch_set.count(n) || parent.count(n)) continue;
                parent.emplace(n, cur);
                if (n == plan.end) {
                    reached = true;
                    break;
                }
                queue.push_back(n);
            }
        }
    }
    if (!reached) {
        plan.diagnostic = "exit point unreachable inside the patch";
        return plan;
    }
    std::vector<Pt> rev;
    for (Pt p = plan.end;; p = parent.at(p)) {
        rev.push_back(p);
        if (p == z) break;
    }
    plan.path.assign(rev.rbegin(), rev.rend());
    if ((int64_t)plan.path.size() - 1 > plan.length_cap) {
        plan.diagnostic = "patch path exceeds the length cap";
        plan.path.clear();
        return plan;
    }
    plan.feasible = true;
    return plan;
}

ResamplePlan draw_resample_plan(const DirectionFamily& family, int i, SeqRng& rng) {
    if (i < 0 || i >= (int)family.dirs.size()) throw ConfigError("direction index out of range");
    const auto& de = family.dirs[(size_t)i];
    if (de.patch_boundary.empty()) throw PreconditionError("patch has no inner boundary");
    const Pt& z = de.patch_boundary[(size_t)rng.next_below((uint64_t)de.patch_boundary.size())];
    return make_resample_plan(family, i, z);
}

PassageTimeField resample(const PassageTimeField& field, const PassageTimeField& star,
                          const ResamplePlan& plan) {
    if (!plan.feasible) throw PreconditionError("cannot resample an infeasible plan");
    std::unordered_map<Edge, double, EdgeHash> over;
    for (size_t k = 0; k + 1 < plan.path.size(); ++k) {
        Edge e = edge_between(plan.path[k], plan.path[k + 1], field.config().dim);
        over[e] = star.weight(e);
    }
    return field.with_overrides(std::move(over));
}

CrucialVerdict check_crucial_implication(const PassageTimeField& field,
                                         const PassageTimeField& star,
                                         const DirectionFamily& family, const WetRegion& bt,
                                         const EventReport& report, const EventParams& params,
                                         SeqRng& rng) {
    CrucialVerdict v;
    v.good_before = report.good;
    const int dim = family.dim;
    const double fmin = field.distribution().support_min();
    const double t = family.t;
    if (!(bt.source == origin_pt()) || bt.reliable_up_to + 1e-9 < t)
        throw PreconditionError("region must be grown from the origin out to t");
    if (!report.w) {
        v.blocked_on = "window events fail";
        return v;
    }

    for (size_t i = 0; i < family.dirs.size(); ++i) {
        if (report.good[i] || !report.black[i]) continue;
        ResamplePlan plan = draw_resample_plan(family, (int)i, rng);
        if (!plan.feasible) {
            if (v.blocked_on.empty()) v.blocked_on = "plan infeasible: " + plan.diagnostic;
            continue;
        }
        bool cheap = true;
        for (size_t k = 0; k + 1 < plan.path.size() && cheap; ++k) {
            Edge e = edge_between(plan.path[k], plan.path[k + 1], dim);
            if (star.weight(e) > fmin + params.delta / 2.0 + 1e-12) cheap = false;
        }
        if (!cheap) {
            if (v.blocked_on.empty()) v.blocked_on = "star copy not cheap along the patch path";
            continue;
        }
        const auto& de = family.dirs[i];
        auto domain = [&](const Pt& p) { return p == plan.z || !family.in_patch((int)i, p); };
        auto rt = restricted_fpt(field, origin_pt(), plan.z, domain,
                                 escape_box(field, family, (int)i));
        double bound = t - (double)l1_dist(plan.z, de.y, dim) * (fmin + params.delta);
        if (!rt || *rt > bound + 1e-9) {
            if (v.blocked_on.empty()) v.blocked_on = "escape inequality fails at the drawn point";
            continue;
        }

        v.applicable = true;
        v.i = (int)i;
        v.plan = plan;
        PassageTimeField resampled = resample(field, star, plan);
        WetRegion bt2 = grow_wet_region(resampled, t);
        double cone_r = params.good_cone_radius > 0 ? params.good_cone_radius
                                                    : std::pow(std::log(t), 4.0);
        double threshold = family.c * family.c * std::log(t);
        auto fl = cone_fluctuations(bt2, family, cone_r);
        v.good_after.assign(family.dirs.size(), false);
        for (size_t j = 0; j < family.dirs.size(); ++j) v.good_after[j] = fl[j].value > threshold;

        bool ok = v.good_after[i];
        for (size_t j = 0; j < family.dirs.size(); ++j)
            if (j != i && v.good_after[j] != report.good[j]) ok = false;
        v.pass = ok;
        if (!ok) {
            std::ostringstream d;
            d << "implication violated: t=" << t << " delta=" << params.delta
              << " eps=" << family.eps << " c=" << family.c << " seed=" << field.seed()
              << " star_seed=" << star.seed() << " i=" << v.i << " z=" << plan.z
              << " end=" << plan.end << " y=" << de.y << "\npath:";
            for (const auto& pv : plan.path) d << ' ' << pv;
            d << "\nedges (weight -> star):";
            for (size_t k = 0; k + 1 < plan.path.size(); ++k) {
                Edge e = edge_between(plan.path[k], plan.path[k + 1], dim);
                d << ' ' << field.weight(e) << "->" << star.weight(e);
            }
            d << "\nrestricted_time=" << *rt << " bound=" << bound << "\nflags before:";
            for (bool g : report.good) d << ' ' << g;
            d << "\nflags after:";
            for (bool g : v.good_after) d << ' ' << g;
            d << "\nvalues after:";
            for (const auto& f : fl) d << ' ' << f.value;
            v.scene_dump = d.str();
        }
        return v;
    }
    if (v.blocked_on.empty()) v.blocked_on = "no bad black direction";
    return v;
}

BodyPtr make_gamma(GammaMode mode, int d, double t, double mu1) {
    if (!(mu1 > 0)) throw ConfigError("time constant must be > 0");
    if (!(t > 0)) throw ConfigError("t must be > 0");
    switch (mode) {
        case GammaMode::l1_hat: return l1_ball_body(d, t / mu1);
        case GammaMode::euclid_hat: return ball_body(d, t / mu1);
        case GammaMode::l1_half: return l1_ball_body(d, t / (2.0 * mu1));
    }
    throw ConfigError("unknown body mode");
}

LadderReport estimate_event_ladder(const WeightDistribution& dist, int d, GammaMode mode, double t,
                                   int replicates, const LadderParams& params, uint64_t seed) {
    if (replicates < 1) throw ConfigError("need at least one replicate");
    if (!(t > 1.0)) throw ConfigError("t must be > 1");

    LadderReport rep;
    rep.t = t;
    rep.replicates = replicates;

    double mu = params.mu1;
    if (mu <= 0) {
        // quick e1 time-constant estimate on a few replicates
        const int64_t L = std::max<int64_t>(32, (int64_t)std::llround(t));
        LatticeConfig mcfg{d, centered_box(origin_pt(), 2 * L + 64, d)};
        Pt tgt = origin_pt();
        tgt.c[0] = (int32_t)L;
        double acc = 0;
        for (int k = 0; k < 4; ++k) {
            PassageTimeField f(mcfg, dist, derive_seed(seed, "mu", (uint64_t)k));
            acc += first_passage_time(f, origin_pt(), tgt) / (double)L;
        }
        mu = acc / 4.0;
        if (!(mu > 0)) throw PreconditionError("measured time constant is zero");
    }
    rep.mu1_used = mu;

    BodyPtr gamma = make_gamma(mode, d, t, mu);
    Vec theta = params.theta;
    if (l2_norm(theta, d) <= 0) theta = make_vec({1.0});
    DirectionFamilyParams fp;
    fp.eps = params.eps;
    fp.c = params.c;
    DirectionFamily family = build_direction_family(gamma, theta, params.cone_r, t, fp);
    rep.family_size = (int64_t)family.dirs.size();
    rep.counts.assign(family.dirs.size() + 1, 0);

    const int64_t bb_r = (int64_t)std::ceil(2.5 * t / mu) + 64;
    LatticeConfig cfg{d, centered_box(origin_pt(), bb_r, d)};
    EventParams ep;
    ep.delta = params.delta;
    ep.good_cone_radius = params.good_cone_radius;
    for (int k = 0; k < replicates; ++k) {
        PassageTimeField field(cfg, dist, derive_seed(seed, "ladder", (uint64_t)k));
        ep.seed = derive_seed(seed, "ladder-w1", (uint64_t)k);
        WetRegion bt = grow_wet_region(field, t);
        EventReport er = evaluate_events(field, bt, family, ep);
        ++rep.counts[er.good_set.size()];
        if (!er.w) ++rep.wc_count;
    }
    for (int64_t c : rep.counts) rep.p_a_k.push_back((double)c / (double)replicates);
    rep.p_w_complement = (double)rep.wc_count / (double)replicates;
    return rep;
}

}  // namespace fpp
