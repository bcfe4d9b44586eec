#include "fpp/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace fpp {

namespace {

// faces of the search box that are artificial (strictly inside the field's
// bounding box); settling there within budget means the box clipped the region
struct RimInfo {
    int dim;
    Box box;
    std::array<bool, kMaxDim> lo_artificial{};
    std::array<bool, kMaxDim> hi_artificial{};

    RimInfo(const Box& search, const Box& domain, int d) : dim(d), box(search) {
        for (int i = 0; i < d; ++i) {
            lo_artificial[i] = search.lo.c[i] > domain.lo.c[i];
            hi_artificial[i] = search.hi.c[i] < domain.hi.c[i];
        }
    }
    bool on_artificial_rim(const Pt& p) const {
        for (int i = 0; i < dim; ++i) {
            if (lo_artificial[i] && p.c[i] == box.lo.c[i]) return true;
            if (hi_artificial[i] && p.c[i] == box.hi.c[i]) return true;
        }
        return false;
    }
};

struct RunStats {
    uint64_t wet_count = 0;
    Box wet_bbox;
    bool any_wet = false;
    double min_rim_settled = std::numeric_limits<double>::infinity();
    double last_settled = 0;
    bool all_targets_settled = false;
};

template <class CellT>
struct ScaledRun {
    DenseGrid<CellT> grid;
    RunStats stats;
    std::vector<int64_t> target_scaled; // -1 while unsettled
};

// Dial (bucket ring) Dijkstra over scale-multiplied integer weights.
// budget_scaled < 0 means unbounded (run until targets settle / exhausted).
template <class CellT>
ScaledRun<CellT> run_scaled(const PassageTimeField& field, const Pt& src, const Box& box,
                            int64_t q, int64_t budget_scaled, const std::vector<Pt>& targets,
                            const std::function<bool(const Pt&)>& domain, int64_t cell_cap) {
    const int dim = field.config().dim;
    constexpr CellT kUnset = std::numeric_limits<CellT>::max();
    ScaledRun<CellT> run{DenseGrid<CellT>(box, dim, kUnset, cell_cap), {}, {}};
    auto& grid = run.grid;
    auto& st = run.stats;
    RimInfo rim(box, field.config().bounding_box, dim);

    int64_t max_w = (int64_t)std::llround(field.max_possible_weight() * (double)q);
    if (max_w < 0) throw Error("negative edge weight");
    const int64_t ring_n = max_w + 1;
    std::vector<std::vector<int64_t>> ring((size_t)ring_n);
    uint64_t live = 0;

    DenseGrid<uint8_t>* target_mark = nullptr;
    DenseGrid<uint8_t> tm;
    size_t targets_left = targets.size();
    if (!targets.empty()) {
        tm = DenseGrid<uint8_t>(box, dim, 0, cell_cap);
        for (const auto& tp : targets) {
            if (!box.contains(tp, dim)) throw OutOfDomainError("target outside search box");
            tm.cells[(size_t)tm.index(tp)] += 1;
        }
        target_mark = &tm;
        run.target_scaled.assign(targets.size(), -1);
    }

    if (!box.contains(src, dim)) throw OutOfDomainError("source outside search box");
    if (domain && !domain(src)) throw PreconditionError("source outside restricted domain");
    grid.cells[(size_t)grid.index(src)] = 0;
    ring[0].push_back(grid.index(src));
    live = 1;

    std::vector<int64_t> bucket;
    for (int64_t cur = 0; live > 0; ++cur) {
        if (budget_scaled >= 0 && cur > budget_scaled) break;
        auto& slot = ring[(size_t)(cur % ring_n)];
        // drain until empty: zero-weight relaxations re-enter this very slot
        while (!slot.empty()) {
            bucket.clear();
            bucket.swap(slot);
            live -= bucket.size();
            for (int64_t ix : bucket) {
                if ((int64_t)grid.cells[(size_t)ix] != cur) continue; // stale
                Pt p = grid.point_at(ix);
                st.last_settled = (double)cur / (double)q;
                if (!st.any_wet) {
                    st.any_wet = true;
                    st.wet_bbox.lo = st.wet_bbox.hi = p;
                } else {
                    for (int i = 0; i < dim; ++i) {
                        st.wet_bbox.lo.c[i] = std::min(st.wet_bbox.lo.c[i], p.c[i]);
                        st.wet_bbox.hi.c[i] = std::max(st.wet_bbox.hi.c[i], p.c[i]);
                    }
                }
                ++st.wet_count;
                if (rim.on_artificial_rim(p))
                    st.min_rim_settled = std::min(st.min_rim_settled, (double)cur / (double)q);
                if (target_mark) {
                    size_t tix = (size_t)target_mark->index(p);
                    if (target_mark->cells[tix]) {
                        for (size_t k = 0; k < targets.size(); ++k)
                            if (targets[k] == p && run.target_scaled[k] < 0) run.target_scaled[k] = cur;
                        targets_left -= target_mark->cells[tix];
                        target_mark->cells[tix] = 0;
                        if (targets_left == 0) {
                            st.all_targets_settled = true;
                            return run;
                        }
                    }
                }
                // relax
                for (int axis = 0; axis < dim; ++axis) {
                    for (int sgn = -1; sgn <= 1; sgn += 2) {
                        Pt n = p;
                        n.c[axis] += sgn;
                        if (!box.contains(n, dim)) continue;
                        if (domain && !domain(n)) continue;
                        size_t nix = (size_t)(ix + sgn * grid.stride[axis]);
                        Edge e;
                        e.axis = (int8_t)axis;
                        e.a = (sgn > 0) ? p : n;
                        int64_t nd = cur + field.scaled_weight(e, q);
                        if (budget_scaled >= 0 && nd > budget_scaled) continue;
                        if (nd >= (int64_t)kUnset) throw Error("scaled distance overflow");
                        if (nd < (int64_t)grid.cells[nix]) {
                            grid.cells[nix] = (CellT)nd;
                            ring[(size_t)(nd % ring_n)].push_back((int64_t)nix);
                            ++live;
                        }
                    }
                }
            }
        }
    }
    return run;
}

struct DoubleRun {
    DenseGrid<double> grid;
    RunStats stats;
    std::vector<double> target_times;
};

DoubleRun run_double(const PassageTimeField& field, const Pt& src, const Box& box,
                     double budget, const std::vector<Pt>& targets,
                     const std::function<bool(const Pt&)>& domain, int64_t cell_cap) {
    const int dim = field.config().dim;
    const double kInf = std::numeric_limits<double>::infinity();
    DoubleRun run{DenseGrid<double>(box, dim, kInf, cell_cap), {}, {}};
    auto& grid = run.grid;
    auto& st = run.stats;
    RimInfo rim(box, field.config().bounding_box, dim);

    DenseGrid<uint8_t> tm;
    DenseGrid<uint8_t>* target_mark = nullptr;
    size_t targets_left = targets.size();
    if (!targets.empty()) {
        tm = DenseGrid<uint8_t>(box, dim, 0, cell_cap);
        for (const auto& tp : targets) {
            if (!box.contains(tp, dim)) throw OutOfDomainError("target outside search box");
            tm.cells[(size_t)tm.index(tp)] += 1;
        }
        target_mark = &tm;
        run.target_times.assign(targets.size(), kInf);
    }

    if (!box.contains(src, dim)) throw OutOfDomainError("source outside search box");
    if (domain && !domain(src)) throw PreconditionError("source outside restricted domain");

    using QE = std::pair<double, int64_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    grid.cells[(size_t)grid.index(src)] = 0;
    pq.push({0.0, grid.index(src)});

    while (!pq.empty()) {
        auto [cur, ix] = pq.top();
        pq.pop();
        if (grid.cells[(size_t)ix] != cur) continue; // stale
        if (budget >= 0 && cur > budget + 1e-12) break;
        Pt p = grid.point_at(ix);
        st.last_settled = cur;
        if (!st.any_wet) {
            st.any_wet = true;
            st.wet_bbox.lo = st.wet_bbox.hi = p;
        } else {
            for (int i = 0; i < dim; ++i) {
                st.wet_bbox.lo.c[i] = std::min(st.wet_bbox.lo.c[i], p.c[i]);
                st.wet_bbox.hi.c[i] = std::max(st.wet_bbox.hi.c[i], p.c[i]);
            }
        }
        ++st.wet_count;
        if (rim.on_artificial_rim(p)) st.min_rim_settled = std::min(st.min_rim_settled, cur);
        if (target_mark) {
            size_t tix = (size_t)target_mark->index(p);
            if (target_mark->cells[tix]) {
                for (size_t k = 0; k < targets.size(); ++k)
                    if (targets[k] == p && run.target_times[k] == kInf) run.target_times[k] = cur;
                targets_left -= target_mark->cells[tix];
                target_mark->cells[tix] = 0;
                if (targets_left == 0) {
                    st.all_targets_settled = true;
                    return run;
                }
            }
        }
        for (int axis = 0; axis < dim; ++axis) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                Pt n = p;
                n.c[axis] += sgn;
                if (!box.contains(n, dim)) continue;
                if (domain && !domain(n)) continue;
                size_t nix = (size_t)(ix + sgn * grid.stride[axis]);
                Edge e;
                e.axis = (int8_t)axis;
                e.a = (sgn > 0) ? p : n;
                double nd = cur + field.weight(e);
                if (budget >= 0 && nd > budget + 1e-12) continue;
                if (nd < grid.cells[nix]) {
                    grid.cells[nix] = nd;
                    pq.push({nd, (int64_t)nix});
                }
            }
        }
    }
    return run;
}

Box intersect_boxes(const Box& a, const Box& b, int dim) {
    Box r;
    for (int i = 0; i < dim; ++i) {
        r.lo.c[i] = std::max(a.lo.c[i], b.lo.c[i]);
        r.hi.c[i] = std::min(a.hi.c[i], b.hi.c[i]);
        if (r.lo.c[i] > r.hi.c[i]) throw ConfigError("search box does not meet bounding box");
    }
    for (int i = dim; i < kMaxDim; ++i) r.lo.c[i] = r.hi.c[i] = 0;
    return r;
}

int64_t clamped_radius_for_cap(int64_t cell_cap, int dim) {
    // largest r with (2r+1)^dim <= cell_cap
    int64_t r = 1;
    while (true) {
        int64_t side = 2 * (r + 1) + 1, vol = 1;
        bool over = false;
        for (int i = 0; i < dim; ++i) {
            vol *= side;
            if (vol > cell_cap) {
                over = true;
                break;
            }
        }
        if (over) return r;
        ++r;
    }
}

WetRegion finish_region(const PassageTimeField& field, double t, const Box& box,
                        std::shared_ptr<DenseGrid<uint16_t>> g16,
                        std::shared_ptr<DenseGrid<uint32_t>> g32,
                        std::shared_ptr<DenseGrid<double>> g64, int64_t q, const RunStats& st,
                        const Pt& src) {
    WetRegion r;
    r.dim = field.config().dim;
    r.source = src;
    r.budget = t;
    r.scale = q;
    r.grid_box = box;
    r.reliable_up_to = t;
    r.support_min = field.distribution().support_min();
    r.g16 = std::move(g16);
    r.g32 = std::move(g32);
    r.g64 = std::move(g64);
    r.mode = r.g16 ? WetRegion::Mode::U16 : (r.g32 ? WetRegion::Mode::U32 : WetRegion::Mode::F64);
    if (q > 0) r.budget_scaled = WetRegion::scaled_budget(t, q);
    r.wet_count = st.wet_count;
    r.wet_bbox = st.any_wet ? st.wet_bbox : Box{src, src};
    r.min_rim_settled = st.min_rim_settled;
    return r;
}

} // namespace

void WetRegion::for_each_wet(const std::function<void(const Pt&, double)>& fn) const {
    Pt p = grid_box.lo;
    const int64_t n = (mode == Mode::U16) ? g16->size() : (mode == Mode::U32) ? g32->size() : g64->size();
    for (int64_t ix = 0; ix < n; ++ix) {
        double t = std::numeric_limits<double>::infinity();
        switch (mode) {
            case Mode::U16: {
                uint16_t v = g16->cells[(size_t)ix];
                if (v != kUnset16 && (int64_t)v <= budget_scaled) t = (double)v / (double)scale;
                break;
            }
            case Mode::U32: {
                uint32_t v = g32->cells[(size_t)ix];
                if (v != kUnset32 && (int64_t)v <= budget_scaled) t = (double)v / (double)scale;
                break;
            }
            default: {
                double v = g64->cells[(size_t)ix];
                if (v <= budget) t = v;
                break;
            }
        }
        if (t <= reliable_up_to + 1e-12 && t != std::numeric_limits<double>::infinity()) fn(p, t);
        // odometer increment, axis 0 fastest
        for (int i = 0; i < dim; ++i) {
            if (++p.c[i] <= grid_box.hi.c[i]) break;
            p.c[i] = grid_box.lo.c[i];
        }
    }
}

WetRegion WetRegion::view(double smaller_budget) const {
    if (smaller_budget > budget + 1e-12)
        throw PreconditionError("view budget exceeds grown budget");
    WetRegion v = *this;
    v.budget = smaller_budget;
    if (mode != Mode::F64) v.budget_scaled = scaled_budget(smaller_budget, scale);
    v.reliable_up_to = smaller_budget;
    // scan box: parent tight bbox clipped by the support-infimum L1 ball
    Box scan = wet_bbox;
    if (support_min > 0) {
        int64_t r = (int64_t)std::floor(smaller_budget / support_min + 1e-9);
        for (int i = 0; i < dim; ++i) {
            scan.lo.c[i] = (int32_t)std::max<int64_t>(scan.lo.c[i], (int64_t)source.c[i] - r);
            scan.hi.c[i] = (int32_t)std::min<int64_t>(scan.hi.c[i], (int64_t)source.c[i] + r);
        }
    }
    // recompute honest wet stats over the clipped box (source is always wet,
    // always inside `scan`, so the loop body runs at least once)
    v.wet_count = 0;
    bool any = false;
    Box tight{source, source};
    Pt p = scan.lo;
    bool more = true;
    while (more) {
        if (v.contains(p)) {
            ++v.wet_count;
            if (!any) {
                tight = Box{p, p};
                any = true;
            } else {
                for (int i = 0; i < dim; ++i) {
                    tight.lo.c[i] = std::min(tight.lo.c[i], p.c[i]);
                    tight.hi.c[i] = std::max(tight.hi.c[i], p.c[i]);
                }
            }
        }
        more = false;
        for (int i = 0; i < dim; ++i) {
            if (++p.c[i] <= scan.hi.c[i]) {
                more = true;
                break;
            }
            p.c[i] = scan.lo.c[i];
        }
    }
    v.wet_bbox = tight;
    return v;
}

WetRegion grow_wet_region(const PassageTimeField& field, double t, const GrowOptions& opts) {
    return grow_wet_region_from(field, origin_pt(), t, opts);
}

WetRegion grow_wet_region_from(const PassageTimeField& field, const Pt& src, double t,
                               const GrowOptions& opts) {
    if (!(t >= 0) || !std::isfinite(t)) throw ConfigError("growth budget must be finite and >= 0");
    const auto& cfg = field.config();
    if (!cfg.bounding_box.contains(src, cfg.dim))
        throw OutOfDomainError("source outside bounding box");
    auto q = field.integer_scale();

    auto run_once = [&](const Box& box) -> WetRegion {
        if (q) {
            int64_t bs = WetRegion::scaled_budget(t, *q);
            if (bs <= 0xfffe) {
                auto run = run_scaled<uint16_t>(field, src, box, *q, bs, {}, nullptr, opts.cell_cap);
                return finish_region(field, t, box,
                                     std::make_shared<DenseGrid<uint16_t>>(std::move(run.grid)),
                                     nullptr, nullptr, *q, run.stats, src);
            }
            if (bs <= (int64_t)0xfffffffe) {
                auto run = run_scaled<uint32_t>(field, src, box, *q, bs, {}, nullptr, opts.cell_cap);
                return finish_region(field, t, box, nullptr,
                                     std::make_shared<DenseGrid<uint32_t>>(std::move(run.grid)),
                                     nullptr, *q, run.stats, src);
            }
        }
        auto run = run_double(field, src, box, t, {}, nullptr, opts.cell_cap);
        return finish_region(field, t, box, nullptr, nullptr,
                             std::make_shared<DenseGrid<double>>(std::move(run.grid)), 0, run.stats,
                             src);
    };

    if (opts.box) {
        Box box = intersect_boxes(*opts.box, cfg.bounding_box, cfg.dim);
        if (!box.contains(src, cfg.dim)) throw OutOfDomainError("source outside search box");
        WetRegion r = run_once(box);
        if (r.min_rim_settled <= t)
            throw TruncationError("wet region reached the search box rim; enlarge the box");
        return r;
    }

    // auto sizing
    int64_t cap_r = clamped_radius_for_cap(opts.cell_cap, cfg.dim);
    int64_t r;
    double fmin = field.distribution().support_min();
    if (fmin > 0) {
        r = (int64_t)std::floor(t / fmin + 1e-9) + 1; // wet set provably inside
        if (r > cap_r)
            throw ConfigError("growth box for this budget would exceed the memory cap");
    } else {
        r = opts.initial_radius.value_or(std::max<int64_t>(32, (int64_t)std::ceil(t)));
    }
    while (true) {
        r = std::min(r, cap_r);
        Box box = intersect_boxes(centered_box(src, r, cfg.dim), cfg.bounding_box, cfg.dim);
        WetRegion reg = run_once(box);
        if (reg.min_rim_settled > t) return reg;
        if (!opts.auto_retry || r >= cap_r)
            throw TruncationError("wet region truncated at radius " + std::to_string(r));
        r *= 2;
    }
}

TargetGrowResult grow_to_targets(const PassageTimeField& field, const Pt& src,
                                 const std::vector<Pt>& targets, const Box& box) {
    const auto& cfg = field.config();
    Box eff = intersect_boxes(box, cfg.bounding_box, cfg.dim);
    auto q = field.integer_scale();
    TargetGrowResult out;
    RunStats st;
    if (q) {
        auto run = run_scaled<uint32_t>(field, src, eff, *q, -1, targets, nullptr, (int64_t)1 << 28);
        st = run.stats;
        out.region = finish_region(field, st.last_settled, eff, nullptr,
                                   std::make_shared<DenseGrid<uint32_t>>(std::move(run.grid)),
                                   nullptr, *q, st, src);
        for (int64_t s : run.target_scaled)
            out.times.push_back(s < 0 ? std::numeric_limits<double>::infinity()
                                      : (double)s / (double)*q);
    } else {
        auto run = run_double(field, src, eff, -1, targets, nullptr, (int64_t)1 << 28);
        st = run.stats;
        out.region = finish_region(field, st.last_settled, eff, nullptr, nullptr,
                                   std::make_shared<DenseGrid<double>>(std::move(run.grid)), 0, st,
                                   src);
        out.times = run.target_times;
    }
    if (!st.all_targets_settled) throw TruncationError("targets not reachable inside the box");
    out.region.budget = st.last_settled;
    out.region.reliable_up_to = st.last_settled;
    if (out.region.scale > 0)
        out.region.budget_scaled = WetRegion::scaled_budget(st.last_settled, out.region.scale);
    out.region.wet_count = st.wet_count;
    return out;
}

WetRegion grow_restricted(const PassageTimeField& field, const Pt& src, double t,
                          const std::function<bool(const Pt&)>& domain, const Box& box,
                          int64_t cell_cap) {
    if (!(t >= 0) || !std::isfinite(t)) throw ConfigError("growth budget must be finite and >= 0");
    const auto& cfg = field.config();
    Box eff = intersect_boxes(box, cfg.bounding_box, cfg.dim);
    auto q = field.integer_scale();
    if (q) {
        int64_t bs = WetRegion::scaled_budget(t, *q);
        if (bs <= 0xfffe) {
            auto run = run_scaled<uint16_t>(field, src, eff, *q, bs, {}, domain, cell_cap);
            return finish_region(field, t, eff,
                                 std::make_shared<DenseGrid<uint16_t>>(std::move(run.grid)),
                                 nullptr, nullptr, *q, run.stats, src);
        }
        if (bs <= (int64_t)0xfffffffe) {
            auto run = run_scaled<uint32_t>(field, src, eff, *q, bs, {}, domain, cell_cap);
            return finish_region(field, t, eff, nullptr,
                                 std::make_shared<DenseGrid<uint32_t>>(std::move(run.grid)),
                                 nullptr, *q, run.stats, src);
        }
    }
    auto run = run_double(field, src, eff, t, {}, domain, cell_cap);
    return finish_region(field, t, eff, nullptr, nullptr,
                         std::make_shared<DenseGrid<double>>(std::move(run.grid)), 0, run.stats,
                         src);
}

double first_passage_time(const PassageTimeField& field, const Pt& v, const Pt& w,
                          const FptOptions& opts) {
    const auto& cfg = field.config();
    if (!cfg.bounding_box.contains(v, cfg.dim) || !cfg.bounding_box.contains(w, cfg.dim))
        throw OutOfDomainError("endpoint outside bounding box");
    if (v == w) return 0;

    int64_t r0 = std::max<int64_t>(16, (3 * l1_dist(v, w, cfg.dim)) / 4 + 8);
    Pt mid;
    for (int i = 0; i < cfg.dim; ++i)
        mid.c[i] = (int32_t)(((int64_t)v.c[i] + w.c[i]) / 2);

    int64_t r = r0;
    if (opts.box) {
        auto res = grow_to_targets(field, v, {w}, *opts.box);
        if (res.region.min_rim_settled < res.times[0])
            throw TruncationError("passage time not certified inside the given box");
        return res.times[0];
    }
    for (int attempt = 0; attempt < opts.max_retries; ++attempt) {
        int64_t cap_r = clamped_radius_for_cap(opts.cell_cap, cfg.dim);
        r = std::min(r, cap_r);
        Box box = centered_box(mid, r, cfg.dim);
        // make sure both endpoints fit
        for (int i = 0; i < cfg.dim; ++i) {
            box.lo.c[i] = std::min({box.lo.c[i], v.c[i], w.c[i]});
            box.hi.c[i] = std::max({box.hi.c[i], v.c[i], w.c[i]});
        }
        try {
            auto res = grow_to_targets(field, v, {w}, box);
            if (res.region.min_rim_settled >= res.times[0]) return res.times[0];
        } catch (const TruncationError&) {
            // fall through to enlarge
        }
        if (r >= cap_r) break;
        r = (int64_t)(r * 1.6) + 8;
    }
    throw TruncationError("could not certify passage time within retry budget");
}

std::optional<double> restricted_fpt(const PassageTimeField& field, const Pt& v, const Pt& w,
                                     const std::function<bool(const Pt&)>& domain, const Box& box) {
    const auto& cfg = field.config();
    Box eff = intersect_boxes(box, cfg.bounding_box, cfg.dim);
    if (!eff.contains(v, cfg.dim) || !eff.contains(w, cfg.dim))
        throw OutOfDomainError("endpoint outside restricted box");
    if (domain && (!domain(v) || !domain(w)))
        throw PreconditionError("endpoint outside restricted domain");
    auto q = field.integer_scale();
    if (q) {
        auto run = run_scaled<uint32_t>(field, v, eff, *q, -1, {w}, domain, (int64_t)1 << 28);
        if (!run.stats.all_targets_settled) return std::nullopt;
        return (double)run.target_scaled[0] / (double)*q;
    }
    auto run = run_double(field, v, eff, -1, {w}, domain, (int64_t)1 << 28);
    if (!run.stats.all_targets_settled) return std::nullopt;
    return run.target_times[0];
}

LatticePath trace_optimal_path(const PassageTimeField& field, const WetRegion& region,
                               const Pt& target) {
    const int dim = region.dim;
    double tt = region.time(target);
    if (!std::isfinite(tt)) throw PreconditionError("target not settled in the distance field");

    auto raw_time = [&](const Pt& p) -> double {
        if (!region.in_grid(p)) return std::numeric_limits<double>::infinity();
        switch (region.mode) {
            case WetRegion::Mode::U16: {
                uint16_t v = region.g16->cells[(size_t)region.g16->index(p)];
                return v == WetRegion::kUnset16 ? std::numeric_limits<double>::infinity()
                                                : (double)v / (double)region.scale;
            }
            case WetRegion::Mode::U32: {
                uint32_t v = region.g32->cells[(size_t)region.g32->index(p)];
                return v == WetRegion::kUnset32 ? std::numeric_limits<double>::infinity()
                                                : (double)v / (double)region.scale;
            }
            default: return region.g64->cells[(size_t)region.g64->index(p)];
        }
    };

    // Backward BFS over tight edges (dn + w == dc up to eps).  A greedy
    // predecessor walk can ping-pong forever on zero-weight plateaus where two
    // equal-time cells are mutually tight; BFS visits each cell once, so it
    // always terminates, and the fixed expansion order keeps it deterministic.
    const double eps = 1e-9;
    std::unordered_map<Pt, Pt, PtHash> parent;
    std::deque<Pt> queue;
    parent.emplace(target, target);
    queue.push_back(target);
    bool reached = (target == region.source);
    while (!queue.empty() && !reached) {
        Pt cur = queue.front();
        queue.pop_front();
        double dc = raw_time(cur);
        for (int axis = 0; axis < dim && !reached; ++axis) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                Pt n = cur;
                n.c[axis] += sgn;
                if (!region.in_grid(n)) continue;
                if (parent.count(n)) continue;
                double dn = raw_time(n);
                if (!std::isfinite(dn)) continue;
                double wt = field.weight(n, cur);
                if (std::abs(dn + wt - dc) > eps * std::max(1.0, dc)) continue;
                parent.emplace(n, cur);
                if (n == region.source) { reached = true; break; }
                queue.push_back(n);
            }
        }
    }
    if (!reached) throw Error("optimal path trace failed (inconsistent distance field)");
    std::vector<Pt> path;
    for (Pt p = region.source;; p = parent.at(p)) {
        path.push_back(p);
        if (p == target) break;
    }
    return LatticePath{std::move(path)};
}

} // namespace fpp
