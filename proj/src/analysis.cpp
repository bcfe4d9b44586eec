#include "fpp/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <thread>

namespace fpp {
namespace {

int env_threads() {
    const char* s = std::getenv("FPP_THREADS");
    if (!s || !*s) return 1;
    int v = std::atoi(s);
    return v < 1 ? 1 : v;
}

// Run fn(k) for k in [0,n). Results must be written into slot k by the caller,
// so the assembled output never depends on scheduling; the replicate fields
// are seeded by k, so the run is bit-identical at any worker count.
void for_each_replicate(int64_t n, const std::function<void(int64_t)>& fn) {
    int workers = env_threads();
    if (workers <= 1 || n <= 1) {
        for (int64_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<int64_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::exception_ptr> errs((size_t)workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            int64_t k;
            while (!failed.load(std::memory_order_relaxed) && (k = next.fetch_add(1)) < n) {
                try {
                    fn(k);
                } catch (...) {
                    errs[(size_t)w] = std::current_exception();
                    failed.store(true);
                    break;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

struct MeanSe {
    double mean = 0, se = 0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    if (v.empty()) return r;
    double s = 0;
    for (double x : v) s += x;
    r.mean = s / (double)v.size();
    if (v.size() < 2) return r;
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / ((double)(v.size() - 1) * (double)v.size()));
    return r;
}

// linear-interpolation quantile of a sorted sample
double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) return 0;
    double pos = q * (double)(s.size() - 1);
    size_t lo = (size_t)std::floor(pos);
    if (lo + 1 >= s.size()) return s.back();
    double frac = pos - (double)lo;
    return s[lo] * (1 - frac) + s[lo + 1] * frac;
}

// nearest lattice point (half away from zero, so the snap commutes with the
// lattice symmetries: negation, axis swaps)
Pt nearest_pt(const Vec& v, int dim) {
    Pt p;
    for (int i = 0; i < dim; ++i) {
        double c = v.c[i];
        if (c < (double)INT32_MIN || c > (double)INT32_MAX)
            throw ConfigError("lattice target exceeds int32 range");
        p.c[i] = (int32_t)std::llround(c);
    }
    return p;
}

// generous field domain so search-box retries are never clipped by it
LatticeConfig roomy_config(int dim, int64_t radius) {
    LatticeConfig cfg;
    cfg.dim = dim;
    cfg.bounding_box = centered_box(origin_pt(), std::min<int64_t>(radius, (int64_t)1 << 30), dim);
    return cfg;
}

std::vector<Vec> shape_directions(int dim, int n) {
    std::vector<Vec> out;
    if (dim == 2) {
        for (int k = 0; k < n; ++k) {
            double phi = 2.0 * M_PI * (double)k / (double)n;
            out.push_back(make_vec({std::cos(phi), std::sin(phi)}));
        }
        return out;
    }
    // d = 3: the six signed axes, then a golden-angle spiral
    for (int axis = 0; axis < 3; ++axis)
        for (int sign : {1, -1}) {
            Vec v;
            v.c[axis] = sign;
            out.push_back(v);
        }
    int m = n - 6;
    constexpr double kGolden = 2.399963229728653;
    for (int j = 0; j < m; ++j) {
        double z = -1.0 + 2.0 * ((double)j + 0.5) / (double)m;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double az = kGolden * (double)j;
        out.push_back(make_vec({rho * std::cos(az), rho * std::sin(az), z}));
    }
    return out;
}

Vec normalized(const Vec& v, int dim) {
    double n = l2_norm(v, dim);
    if (!(n > 0)) throw ConfigError("direction must be nonzero");
    return scale_vec(v, 1.0 / n);
}

const Polytope& hull_poly(const LimitShapeEstimate& shape) {
    auto p = std::dynamic_pointer_cast<const Polytope>(shape.hull);
    if (!p) throw PreconditionError("shape estimate has no fitted hull");
    return *p;
}

// worst-direction wet-radius guess from a fitted shape, for presizing boxes
int64_t radius_guess(const LimitShapeEstimate& shape, double t) {
    double gmin = std::numeric_limits<double>::infinity();
    for (double g : shape.radial_times) gmin = std::min(gmin, g);
    if (!(gmin > 0) || !std::isfinite(gmin)) return 0;
    return (int64_t)std::ceil(1.2 * t / gmin) + 8;
}

// largest centered-box radius the target search will accept (cell cap 1<<28)
int64_t cap_radius(int dim) {
    int64_t r = 1;
    while (true) {
        int64_t side = 2 * (r + 1) + 1, vol = 1;
        bool over = false;
        for (int i = 0; i < dim; ++i) {
            vol *= side;
            if (vol > (int64_t)1 << 28) {
                over = true;
                break;
            }
        }
        if (over) return r;
        ++r;
    }
}

// radial rates at explicit lattice targets: per-target mean/se over
// replicates plus the reciprocal-point hull; shared by the public shape fit
// and the per-scale refits of the divergence run
LimitShapeEstimate radial_fit(const WeightDistribution& dist, int dim, double t,
                              const std::vector<Pt>& targets, int64_t replicates, uint64_t seed,
                              const char* tag) {
    int64_t max_inf = 0;
    for (const auto& p : targets)
        for (int i = 0; i < dim; ++i) max_inf = std::max<int64_t>(max_inf, std::abs((int64_t)p.c[i]));
    const int64_t rcap = cap_radius(dim);
    if (max_inf >= rcap)
        throw ConfigError("radial targets sit beyond the search memory cap");

    LatticeConfig cfg = roomy_config(dim, max_inf * 64 + 256);
    std::vector<std::vector<double>> times(targets.size(),
                                           std::vector<double>((size_t)replicates, 0.0));
    for_each_replicate(replicates, [&](int64_t k) {
        PassageTimeField field(cfg, dist, derive_seed(seed, tag, (uint64_t)k));
        int64_t r = std::min((max_inf * 9) / 8 + 8, rcap);
        for (int attempt = 0;; ++attempt) {
            auto res = grow_to_targets(field, origin_pt(), targets,
                                       centered_box(origin_pt(), r, dim));
            double worst = 0;
            bool all = true;
            for (double v : res.times) {
                if (!std::isfinite(v)) all = false;
                worst = std::max(worst, v);
            }
            if (all && res.region.min_rim_settled >= worst) {
                for (size_t i = 0; i < targets.size(); ++i) times[i][(size_t)k] = res.times[i];
                return;
            }
            if (attempt >= 8 || r >= rcap)
                throw TruncationError("radial growth kept hitting the search box");
            r = std::min((r * 3) / 2 + 8, rcap);
        }
    });

    LimitShapeEstimate shape;
    shape.dim = dim;
    shape.t = t;
    shape.replicates = replicates;
    std::vector<Vec> cloud;
    for (size_t i = 0; i < targets.size(); ++i) {
        auto ms = mean_se(times[i]);
        double len = l2_norm(to_vec(targets[i]), dim);
        if (!(ms.mean > 1e-9))
            throw ConfigError("zero passage time along a direction; the shape is unbounded");
        shape.directions.push_back(normalized(to_vec(targets[i]), dim));
        shape.radial_times.push_back(ms.mean / len);
        shape.radial_errors.push_back(ms.se / len);
        // direction / ghat, computed as target/meantime so deterministic
        // fields give exact reciprocal points
        cloud.push_back(scale_vec(to_vec(targets[i]), 1.0 / ms.mean));
    }
    shape.hull = Polytope::from_points(dim, cloud);
    if (!shape.hull || shape.hull->is_empty())
        throw ConfigError("reciprocal radial points do not span a solid hull");
    if (!shape.hull->contains(Vec{}))
        throw ConfigError("fitted hull does not contain the origin");

    // spread of ghat within classes of lattice-symmetric targets
    std::map<std::array<int32_t, kMaxDim>, std::vector<double>> classes;
    for (size_t i = 0; i < targets.size(); ++i) {
        std::array<int32_t, kMaxDim> key{0, 0, 0, 0};
        for (int j = 0; j < dim; ++j) key[(size_t)j] = std::abs(targets[i].c[j]);
        std::sort(key.begin(), key.begin() + dim);
        classes[key].push_back(shape.radial_times[i]);
    }
    for (const auto& [key, vals] : classes) {
        (void)key;
        if (vals.size() < 2) continue;
        double lo = *std::min_element(vals.begin(), vals.end());
        double hi = *std::max_element(vals.begin(), vals.end());
        double mid = (lo + hi) / 2;
        if (mid > 0) shape.symmetry_spread = std::max(shape.symmetry_spread, (hi - lo) / mid);
    }
    return shape;
}

}  // namespace

TimeConstantEstimate estimate_time_constant(const WeightDistribution& dist, int dim, const Vec& x,
                                            double t, int64_t replicates, uint64_t seed) {
    if (dim < 2 || dim > kMaxDim) throw ConfigError("dimension must be in [2,4]");
    if (!(t >= 1)) throw ConfigError("scale t must be >= 1");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    Vec unit = normalized(x, dim);
    (void)unit;

    Pt target = nearest_pt(scale_vec(x, t), dim);
    if (target == origin_pt()) throw ResolutionError("t*x rounds to the origin; increase t");
    Pt unit_target = nearest_pt(x, dim);

    LatticeConfig cfg = roomy_config(dim, l1_norm(target, dim) * 16 + 64);
    std::vector<double> scaled((size_t)replicates), unit_times((size_t)replicates);
    for_each_replicate(replicates, [&](int64_t k) {
        PassageTimeField field(cfg, dist, derive_seed(seed, "timeconst", (uint64_t)k));
        scaled[(size_t)k] = first_passage_time(field, origin_pt(), target) / t;
        unit_times[(size_t)k] = first_passage_time(field, origin_pt(), unit_target);
    });

    TimeConstantEstimate est;
    est.dim = dim;
    est.x = x;
    est.t = t;
    est.replicates = replicates;
    auto ms = mean_se(scaled);
    est.mean = ms.mean;
    est.std_error = ms.se;
    auto mu = mean_se(unit_times);
    est.crude_bound = mu.mean + 2.0 * (double)dim * dist.mean();
    est.crude_bound_error = mu.se;
    est.crude_bound_holds = est.mean <= est.crude_bound + 3.0 * (est.std_error + mu.se) + 1e-12;
    return est;
}

double LimitShapeEstimate::gauge(const Vec& v) const {
    auto p = std::dynamic_pointer_cast<const Polytope>(hull);
    if (!p) throw PreconditionError("shape estimate has no fitted hull");
    return p->gauge(v);
}

LimitShapeEstimate estimate_limit_shape(const WeightDistribution& dist, int dim, double t,
                                        int n_directions, int64_t replicates, uint64_t seed) {
    if (dim < 2 || dim > kMaxDim) throw ConfigError("dimension must be in [2,4]");
    if (dim > 3) throw UnsupportedError("direction grids are built for d in {2,3}");
    if (!(t >= 1)) throw ConfigError("scale t must be >= 1");
    if (n_directions < 2 * dim) throw ConfigError("need at least 2d directions");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");

    auto dirs = shape_directions(dim, n_directions);
    std::vector<Pt> targets;
    for (const auto& a : dirs) {
        Pt p = nearest_pt(scale_vec(a, t), dim);
        if (p == origin_pt()) throw ResolutionError("direction target rounds to the origin");
        targets.push_back(p);
    }
    return radial_fit(dist, dim, t, targets, replicates, seed, "shape");
}

ContainmentEstimate containment_check(const WeightDistribution& dist,
                                      const LimitShapeEstimate& shape, double t,
                                      int64_t replicates, uint64_t seed) {
    if (t < 8) throw ResolutionError("t below hull resolution (need t >= 8)");
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    const Polytope& poly = hull_poly(shape);
    (void)poly;

    double margin = 0;
    for (size_t i = 0; i < shape.radial_times.size(); ++i)
        if (shape.radial_times[i] > 0)
            margin = std::max(margin, 3.0 * shape.radial_errors[i] / shape.radial_times[i]);
    double shrink = std::min(margin, 0.5);
    BodyPtr body = shape.hull->scaled((t / 2.0) * (1.0 - shrink));

    std::vector<Pt> pts;
    Box bb = body->lattice_bbox();
    if (bb.volume(shape.dim) > (int64_t)1 << 26)
        throw ConfigError("half-scale body has too many lattice points to scan");
    std::vector<int32_t> cur((size_t)shape.dim);
    std::function<void(int)> rec = [&](int axis) {
        if (axis == shape.dim) {
            Pt p;
            for (int i = 0; i < shape.dim; ++i) p.c[i] = cur[(size_t)i];
            if (body->contains(p)) pts.push_back(p);
            return;
        }
        for (int32_t v = bb.lo.c[axis]; v <= bb.hi.c[axis]; ++v) {
            cur[(size_t)axis] = v;
            rec(axis + 1);
        }
    };
    rec(0);
    if (pts.empty()) throw ResolutionError("shrunken body contains no lattice points");

    int64_t guess = radius_guess(shape, t);
    LatticeConfig cfg = roomy_config(shape.dim, std::max<int64_t>(guess, (int64_t)t) * 64 + 256);
    std::vector<char> ok((size_t)replicates, 0);
    for_each_replicate(replicates, [&](int64_t k) {
        PassageTimeField field(cfg, dist, derive_seed(seed, "containment", (uint64_t)k));
        GrowOptions go;
        if (guess > 0) go.initial_radius = guess;
        WetRegion region = grow_wet_region(field, t, go);
        bool all = true;
        for (const auto& p : pts)
            if (!region.contains(p)) {
                all = false;
                break;
            }
        ok[(size_t)k] = all ? 1 : 0;
    });

    ContainmentEstimate est;
    est.t = t;
    est.n = replicates;
    est.shrink = shrink;
    for (char c : ok) est.contained += c;
    est.p_hat = (double)est.contained / (double)replicates;
    return est;
}

DivergenceTable run_divergence_experiment(const WeightDistribution& dist, int dim,
                                          const GammaSpec& gamma, const Vec& theta, double r,
                                          double c, const std::vector<double>& t_list,
                                          int64_t replicates, uint64_t seed,
                                          const DivergenceOptions& opts) {
    if (dim < 2 || dim > kMaxDim) throw ConfigError("dimension must be in [2,4]");
    if (t_list.empty()) throw ConfigError("t list must be nonempty");
    for (size_t i = 0; i < t_list.size(); ++i) {
        if (!(t_list[i] > 1)) throw ConfigError("every t must be > 1 so log t > 0");
        if (i && !(t_list[i] > t_list[i - 1])) throw ConfigError("t list must be increasing");
    }
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (!(c > 0)) throw ConfigError("threshold coefficient c must be > 0");
    if (!(r > 0)) throw ConfigError("cone radius must be > 0");
    Vec theta_unit = normalized(theta, dim);

    DivergenceTable table;
    table.dim = dim;
    table.source = gamma.mode;
    table.theta = theta;
    table.r = r;
    table.c = c;
    table.shrinking_cone = opts.shrinking_cone;

    bool need_fit = gamma.mode != GammaSource::fixed_body;
    LimitShapeEstimate pilot;
    if (need_fit) {
        double st = opts.shape_t > 0 ? opts.shape_t : t_list.back();
        pilot = estimate_limit_shape(dist, dim, st, std::max(opts.shape_directions, 2 * dim),
                                     opts.shape_replicates, derive_seed(seed, "shapefit"));
        table.shape = pilot;
    } else {
        if (!gamma.unit_body) throw ConfigError("fixed-body mode needs a unit body");
        if (gamma.unit_body->dim() != dim) throw ConfigError("unit body dimension mismatch");
        if (!gamma.unit_body->contains(Vec{}))
            throw ConfigError("the reference body must contain the origin");
    }

    int64_t guess = need_fit ? radius_guess(pilot, t_list.back()) : 0;
    LatticeConfig cfg =
        roomy_config(dim, std::max<int64_t>(guess, (int64_t)t_list.back()) * 64 + 256);

    for (size_t ti = 0; ti < t_list.size(); ++ti) {
        double t = t_list[ti];

        // The radial rate drifts with distance, and the budget-t region's
        // boundary sits near radius t/ghat per direction, so a rate fitted at
        // distance t would be systematically off out there (the mismatch
        // scales with t and would drown the fluctuation). Refit each scale at
        // the distances it actually probes; the pilot only chooses them.
        LimitShapeEstimate fit;
        if (need_fit) {
            std::vector<Pt> targets;
            for (size_t i = 0; i < pilot.directions.size(); ++i) {
                double reach = t / pilot.radial_times[i];
                Pt p = nearest_pt(scale_vec(pilot.directions[i], reach), dim);
                if (p == origin_pt())
                    throw ResolutionError("matched-distance target rounds to the origin");
                targets.push_back(p);
            }
            fit = radial_fit(dist, dim, t, targets, opts.shape_replicates,
                             derive_seed(seed, "refit", (uint64_t)ti), "refit");
            table.shape = fit;  // ends as the largest-scale refit
        }

        BodyPtr G;
        switch (gamma.mode) {
            case GammaSource::fitted_shape: G = fit.hull->scaled(t); break;
            case GammaSource::euclid_matched:
                G = ball_body(dim, t * fit.hull->ray_scale(theta_unit));
                break;
            case GammaSource::half_scale: G = fit.hull->scaled(t / 2.0); break;
            case GammaSource::fixed_body: G = gamma.unit_body->scaled(t); break;
        }
        Cone cone = opts.shrinking_cone ? Cone::around(theta_unit, 1.0 / std::sqrt(t), dim)
                                        : Cone::around(theta, r, dim);

        DivergenceRow row;
        row.t = t;
        row.n = replicates;
        row.cone_r = cone.r;
        row.threshold = opts.shrinking_cone ? c * std::log(std::sqrt(t)) : c * std::log(t);
        row.kesten_threshold = 2.0 * std::sqrt(t * std::log(t));

        std::vector<double> samples((size_t)replicates, 0.0);
        int64_t t_guess = need_fit ? radius_guess(fit, t) : 0;
        for_each_replicate(replicates, [&](int64_t k) {
            uint64_t flat = (uint64_t)ti * (uint64_t)replicates + (uint64_t)k;
            PassageTimeField field(cfg, dist, derive_seed(seed, "divergence", flat));
            GrowOptions go;
            if (t_guess > 0) go.initial_radius = t_guess;
            WetRegion region = grow_wet_region(field, t, go);
            samples[(size_t)k] = fluctuation(region, *G, cone).value;
        });
        std::sort(samples.begin(), samples.end());

        row.f_min = samples.front();
        row.f_q25 = quantile_sorted(samples, 0.25);
        row.f_median = quantile_sorted(samples, 0.5);
        row.f_q75 = quantile_sorted(samples, 0.75);
        row.f_max = samples.back();
        double s = 0;
        for (double v : samples) s += v;
        row.f_mean = s / (double)replicates;
        int64_t le = 0;
        for (double v : samples)
            if (v <= row.threshold + 1e-12) ++le;
        row.p_le = (double)le / (double)replicates;
        row.kesten_ok = true;
        if (t >= 100)
            for (double v : samples)
                if (v > row.kesten_threshold + 1e-9) row.kesten_ok = false;
        row.samples = std::move(samples);
        table.rows.push_back(std::move(row));
    }

    for (size_t i = 1; i < table.rows.size(); ++i) {
        if (table.rows[i].f_median < table.rows[i - 1].f_median - 1e-12)
            table.median_non_decreasing = false;
        if (table.rows[i].p_le > table.rows[i - 1].p_le + 1e-12) table.p_non_increasing = false;
    }
    for (const auto& row : table.rows)
        if (!row.kesten_ok) table.kesten_all = false;
    return table;
}

}  // namespace fpp
