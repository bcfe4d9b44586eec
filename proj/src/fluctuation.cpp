#include "fpp/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace fpp {

namespace {

// iterate the (d-1)-dimensional rows of a box (coordinates 1..d-1)
template <typename Fn>
void for_each_row(const Box& b, int dim, Fn&& fn) {
    for (int i = 1; i < dim; ++i)
        if (b.lo.c[i] > b.hi.c[i]) return;
    Pt p = b.lo;
    while (true) {
        fn(p);
        int i = 1;
        for (; i < dim; ++i) {
            if (p.c[i] < b.hi.c[i]) {
                ++p.c[i];
                break;
            }
            p.c[i] = b.lo.c[i];
        }
        if (i == dim) break;
    }
}

struct SideState {
    std::vector<double> best_lb;  // pass 1: sup of lower bounds per cone
    std::vector<double> val;      // pass 2: exact maxima
    std::vector<std::optional<Pt>> wit;
};

// visitor contract: called once per candidate lattice point, deterministic
// order; pass 1 accumulates bounds, pass 2 resolves exact values lazily
template <typename Scan, typename Bounds, typename Exact>
void two_pass(size_t nc, SideState& st, const Scan& scan, const Bounds& bounds,
              const Exact& exact) {
    st.best_lb.assign(nc, 0.0);
    st.val.assign(nc, 0.0);
    st.wit.assign(nc, std::nullopt);
    scan([&](const Pt&, const Vec& v, uint64_t mask) {
        DistBounds b = bounds(v);
        if (b.ub <= 0) return;
        for (size_t k = 0; k < nc; ++k)
            if (mask >> k & 1) st.best_lb[k] = std::max(st.best_lb[k], b.lb);
    });
    scan([&](const Pt& p, const Vec& v, uint64_t mask) {
        DistBounds b = bounds(v);
        if (b.ub <= 0) return;
        bool need = false;
        for (size_t k = 0; k < nc && !need; ++k)
            if ((mask >> k & 1) && b.ub >= st.best_lb[k] - 1e-12 && b.ub > st.val[k])
                need = true;
        if (!need) return;
        double d = exact(v);
        for (size_t k = 0; k < nc; ++k) {
            if ((mask >> k & 1) && d > st.val[k]) {
                st.val[k] = d;
                st.wit[k] = p;
            }
        }
    });
}

}  // namespace

std::vector<FluctuationResult> fluctuation_multi(const WetRegion& A, const ConvexBody& G,
                                                 const std::vector<Cone>& cones) {
    int d = A.dim;
    if (G.is_empty()) throw PreconditionError("fluctuation needs a nonempty reference body");
    if (G.dim() != d) throw ConfigError("body dimension mismatch");
    size_t nc = cones.size();
    if (nc == 0) return {};
    if (nc > 64) throw ConfigError("at most 64 cones per pass");
    for (const auto& c : cones)
        if (c.dim != d) throw ConfigError("cone dimension mismatch");

    auto cone_mask = [&](const Vec& v) {
        uint64_t mask = 0;
        for (size_t k = 0; k < nc; ++k)
            if (cones[k].contains(v)) mask |= 1ull << k;
        return mask;
    };

    // outward: wet points in a cone but outside G
    SideState out_st;
    {
        auto scan = [&](const std::function<void(const Pt&, const Vec&, uint64_t)>& visit) {
            if (A.wet_count == 0) return;
            Box wb = A.wet_bbox;
            for_each_row(wb, d, [&](const Pt& row) {
                Vec rest = to_vec(row);
                int32_t gx0 = 0, gx1 = -1;
                bool has = interval_lattice_range(G.x_interval(rest), gx0, gx1);
                for (int32_t x = wb.lo.c[0]; x <= wb.hi.c[0]; ++x) {
                    if (has && x >= gx0 && x <= gx1) continue;  // inside G
                    Pt p = row;
                    p.c[0] = x;
                    if (!A.contains(p)) continue;
                    Vec v = to_vec(p);
                    uint64_t mask = cone_mask(v);
                    if (mask) visit(p, v, mask);
                }
            });
        };
        two_pass(
            nc, out_st, scan, [&](const Vec& v) { return G.dist_outside_bounds(v); },
            [&](const Vec& v) { return G.dist_outside(v); });
    }

    // inward: lattice points of G in a cone that are not wet
    SideState in_st;
    {
        Box gb = G.lattice_bbox();
        if (gb.volume(d) > (int64_t)1 << 31)
            throw ConfigError("reference body too large to scan");
        auto scan = [&](const std::function<void(const Pt&, const Vec&, uint64_t)>& visit) {
            for_each_row(gb, d, [&](const Pt& row) {
                Vec rest = to_vec(row);
                int32_t x0 = 0, x1 = -1;
                if (!interval_lattice_range(G.x_interval(rest), x0, x1)) return;
                for (int32_t x = x0; x <= x1; ++x) {
                    Pt p = row;
                    p.c[0] = x;
                    if (A.contains(p)) continue;
                    Vec v = to_vec(p);
                    uint64_t mask = cone_mask(v);
                    if (mask) visit(p, v, mask);
                }
            });
        };
        two_pass(
            nc, in_st, scan, [&](const Vec& v) { return G.dist_inside_bounds(v); },
            [&](const Vec& v) { return G.dist_inside(v); });
    }

    std::vector<FluctuationResult> res(nc);
    for (size_t k = 0; k < nc; ++k) {
        res[k].outward = out_st.val[k];
        res[k].inward = in_st.val[k];
        res[k].outward_witness = out_st.wit[k];
        res[k].inward_witness = in_st.wit[k];
        res[k].value = std::max(res[k].outward, res[k].inward);
    }
    return res;
}

FluctuationResult fluctuation(const WetRegion& A, const ConvexBody& G, const Cone& C) {
    return fluctuation_multi(A, G, {C}).front();
}

FluctuationResult fluctuation_set(const std::vector<Pt>& A, const ConvexBody& G, const Cone& C,
                                  int dim) {
    if (G.is_empty()) throw PreconditionError("fluctuation needs a nonempty reference body");
    if (G.dim() != dim || C.dim != dim) throw ConfigError("dimension mismatch");
    std::unordered_set<Pt, PtHash> in(A.begin(), A.end());
    FluctuationResult r;
    for (const Pt& p : A) {
        Vec v = to_vec(p);
        if (!C.contains(v)) continue;
        double d = G.dist_outside(v);
        if (d > r.outward) {
            r.outward = d;
            r.outward_witness = p;
        }
    }
    Box gb = G.lattice_bbox();
    if (gb.volume(dim) > (int64_t)1 << 31)
        throw ConfigError("reference body too large to scan");
    for_each_row(gb, dim, [&](const Pt& row) {
        Vec rest = to_vec(row);
        int32_t x0 = 0, x1 = -1;
        if (!interval_lattice_range(G.x_interval(rest), x0, x1)) return;
        for (int32_t x = x0; x <= x1; ++x) {
            Pt p = row;
            p.c[0] = x;
            if (in.count(p)) continue;
            Vec v = to_vec(p);
            if (!C.contains(v)) continue;
            double d = G.dist_inside(v);
            if (d > r.inward) {
                r.inward = d;
                r.inward_witness = p;
            }
        }
    });
    r.value = std::max(r.outward, r.inward);
    return r;
}

double hausdorff(const std::vector<Pt>& A, const std::vector<Pt>& B, const Cone& C, int dim) {
    std::vector<Pt> a, b;
    for (const Pt& p : A)
        if (C.contains(to_vec(p))) a.push_back(p);
    for (const Pt& p : B)
        if (C.contains(to_vec(p))) b.push_back(p);
    if (a.empty() || b.empty())
        throw EmptySetError("hausdorff: a set does not meet the cone");
    auto one_sided = [&](const std::vector<Pt>& from, const std::vector<Pt>& to) {
        double sup = 0.0;
        for (const Pt& p : from) {
            double inf = std::numeric_limits<double>::infinity();
            for (const Pt& q : to) {
                inf = std::min(inf, l2_dist(p, q, dim));
                if (inf <= sup) break;  // cannot raise the sup
            }
            sup = std::max(sup, inf);
        }
        return sup;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace fpp
