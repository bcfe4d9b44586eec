#include "fpp/convex.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_set>

namespace fpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int32_t sat32(double v) {
    if (v < (double)INT32_MIN) return INT32_MIN;
    if (v > (double)INT32_MAX) return INT32_MAX;
    return (int32_t)v;
}

Box box_from_real(const Vec& lo, const Vec& hi, int dim) {
    Box b;
    for (int i = 0; i < dim; ++i) {
        b.lo.c[i] = sat32(std::floor(lo[i] - 1e-9));
        b.hi.c[i] = sat32(std::ceil(hi[i] + 1e-9));
    }
    return b;
}

double dist_point_segment(const Vec& x, const Vec& p, const Vec& q, int dim) {
    Vec pq = sub_vec(q, p);
    double len2 = dot(pq, pq, dim);
    double s = 0.0;
    if (len2 > 0) s = std::clamp(dot(sub_vec(x, p), pq, dim) / len2, 0.0, 1.0);
    return l2_dist(x, add_vec(p, scale_vec(pq, s)), dim);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

// ---- ConvexBody defaults ----------------------------------------------------

BodyPtr ConvexBody::dilate(double l) const {
    if (l < 0) throw ConfigError("dilation amount must be >= 0");
    if (l == 0) return shared_from_this();
    return std::make_shared<Dilation>(shared_from_this(), l);
}

BodyPtr ConvexBody::scaled(double) const {
    throw UnsupportedError("scaling not supported for " + describe());
}

Interval ConvexBody::x_interval(const Vec& rest) const {
    // dist_outside is convex along the row; locate the sublevel {dist = 0} by
    // ternary search for the minimum, then bisect each side of the boundary
    Box bb = lattice_bbox();
    double lo = (double)bb.lo.c[0] - 1.0, hi = (double)bb.hi.c[0] + 1.0;
    auto f = [&](double x) {
        Vec v = rest;
        v.c[0] = x;
        return dist_outside(v);
    };
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
        double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (f(m1) <= f(m2))
            b = m2;
        else
            a = m1;
    }
    double xm = 0.5 * (a + b);
    if (f(xm) > kMemberTol) return {};
    auto edge = [&](double in, double out) {
        // boundary of {f <= tol} between a member and a non-member point
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (in + out);
            (f(mid) <= kMemberTol ? in : out) = mid;
        }
        return in;
    };
    return {edge(xm, lo), edge(xm, hi)};
}

double ConvexBody::ray_scale(const Vec& unit_dir, double tol) const {
    Vec zero{};
    if (!contains(zero)) throw PreconditionError("ray_scale requires a body containing 0");
    double n = l2_norm(unit_dir, dim());
    if (n <= 0) throw ConfigError("ray_scale: zero direction");
    double lo = 0.0, hi = circumradius() / n + 1.0;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        (contains(scale_vec(unit_dir, mid)) ? lo : hi) = mid;
    }
    return lo;
}

// ---- EuclideanBall ----------------------------------------------------------

Box EuclideanBall::lattice_bbox() const {
    Box b;
    for (int i = 0; i < d_; ++i) {
        b.lo.c[i] = sat32(-std::floor(r_ + 1e-9));
        b.hi.c[i] = sat32(std::floor(r_ + 1e-9));
    }
    return b;
}

BodyPtr EuclideanBall::dilate(double l) const {
    if (l < 0) throw ConfigError("dilation amount must be >= 0");
    return std::make_shared<EuclideanBall>(d_, r_ + l);
}

BodyPtr EuclideanBall::erode(double l) const {
    if (l < 0) throw ConfigError("erosion amount must be >= 0");
    if (l > r_) return std::make_shared<EmptyBody>(d_);
    return std::make_shared<EuclideanBall>(d_, r_ - l);
}

BodyPtr EuclideanBall::scaled(double f) const {
    if (!(f > 0)) throw ConfigError("scale factor must be > 0");
    return std::make_shared<EuclideanBall>(d_, r_ * f);
}

std::string EuclideanBall::describe() const {
    return "ball(r=" + fmt(r_) + ",d=" + std::to_string(d_) + ")";
}

// ---- Polytope ---------------------------------------------------------------

std::shared_ptr<const Polytope> Polytope::finish(int dim, std::vector<Halfspace> raw,
                                                 bool require_origin, bool sg, double sg_scale) {
    if (dim < 2 || dim > 3)
        throw UnsupportedError("polytope bodies support d in {2,3}");
    std::vector<Halfspace> hs;
    for (auto& h : raw) {
        double n = l2_norm(h.a, dim);
        if (n <= 1e-12) {
            if (h.b < -1e-12) return nullptr;  // 0.x <= b < 0: infeasible
            continue;                          // trivially true
        }
        hs.push_back({scale_vec(h.a, 1.0 / n), h.b / n});
    }
    if (hs.empty()) throw ConfigError("polytope needs at least one half-space");
    if (require_origin) {
        for (auto& h : hs) {
            if (h.b < -1e-9) throw ConfigError("polytope must contain the origin (b >= 0)");
            h.b = std::max(h.b, 0.0);
        }
    }
    // drop duplicate normals, keeping the tightest offset
    std::vector<Halfspace> ded;
    for (const auto& h : hs) {
        bool merged = false;
        for (auto& g : ded) {
            if (l2_dist(g.a, h.a, dim) < 1e-12) {
                g.b = std::min(g.b, h.b);
                merged = true;
                break;
            }
        }
        if (!merged) ded.push_back(h);
    }
    hs = std::move(ded);
    int m = (int)hs.size();

    // boundedness: the recession cone {u : a_i.u <= 0} must be {0}
    if (m < dim + 1) throw ConfigError("polytope is unbounded");
    if (dim == 2) {
        std::vector<double> ang;
        for (const auto& h : hs) ang.push_back(std::atan2(h.a[1], h.a[0]));
        std::sort(ang.begin(), ang.end());
        double gap = ang.front() + 2 * M_PI - ang.back();
        for (size_t i = 1; i < ang.size(); ++i) gap = std::max(gap, ang[i] - ang[i - 1]);
        if (gap >= M_PI - 1e-9) throw ConfigError("polytope is unbounded");
    } else {
        // any nontrivial recession direction can be found among +/- pairwise
        // cross products of the normals (extreme rays / coplanar-normal case)
        bool any_cross = false;
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                Vec u;
                u.c[0] = hs[i].a[1] * hs[j].a[2] - hs[i].a[2] * hs[j].a[1];
                u.c[1] = hs[i].a[2] * hs[j].a[0] - hs[i].a[0] * hs[j].a[2];
                u.c[2] = hs[i].a[0] * hs[j].a[1] - hs[i].a[1] * hs[j].a[0];
                double n = l2_norm(u, 3);
                if (n < 1e-12) continue;
                any_cross = true;
                u = scale_vec(u, 1.0 / n);
                for (int sgn = 0; sgn < 2; ++sgn) {
                    double worst = -kInf;
                    for (const auto& h : hs) worst = std::max(worst, dot(h.a, u, 3));
                    if (worst <= 1e-9) throw ConfigError("polytope is unbounded");
                    u = scale_vec(u, -1.0);
                }
            }
        }
        if (!any_cross) throw ConfigError("polytope is unbounded");
    }

    // vertex enumeration: all maximal-rank active subsets of size dim
    auto feasible = [&](const Vec& p) {
        for (const auto& h : hs)
            if (dot(h.a, p, dim) > h.b + 1e-7) return false;
        return true;
    };
    std::vector<Vec> verts;
    auto push_vert = [&](const Vec& p) {
        if (!feasible(p)) return;
        for (const auto& v : verts)
            if (l2_dist(v, p, dim) < 1e-7) return;
        verts.push_back(p);
    };
    if (dim == 2) {
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                double det = hs[i].a[0] * hs[j].a[1] - hs[i].a[1] * hs[j].a[0];
                if (std::fabs(det) < 1e-10) continue;
                Vec p;
                p.c[0] = (hs[i].b * hs[j].a[1] - hs[j].b * hs[i].a[1]) / det;
                p.c[1] = (hs[i].a[0] * hs[j].b - hs[j].a[0] * hs[i].b) / det;
                push_vert(p);
            }
        }
    } else {
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                for (int k = j + 1; k < m; ++k) {
                    const Vec &A = hs[i].a, &B = hs[j].a, &C = hs[k].a;
                    double det = A[0] * (B[1] * C[2] - B[2] * C[1]) -
                                 A[1] * (B[0] * C[2] - B[2] * C[0]) +
                                 A[2] * (B[0] * C[1] - B[1] * C[0]);
                    if (std::fabs(det) < 1e-10) continue;
                    double b0 = hs[i].b, b1 = hs[j].b, b2 = hs[k].b;
                    Vec p;
                    p.c[0] = (b0 * (B[1] * C[2] - B[2] * C[1]) - A[1] * (b1 * C[2] - B[2] * b2) +
                              A[2] * (b1 * C[1] - B[1] * b2)) /
                             det;
                    p.c[1] = (A[0] * (b1 * C[2] - B[2] * b2) - b0 * (B[0] * C[2] - B[2] * C[0]) +
                              A[2] * (B[0] * b2 - b1 * C[0])) /
                             det;
                    p.c[2] = (A[0] * (B[1] * b2 - b1 * C[1]) - A[1] * (B[0] * b2 - b1 * C[0]) +
                              b0 * (B[0] * C[1] - B[1] * C[0])) /
                             det;
                    push_vert(p);
                }
            }
        }
    }
    if (verts.empty()) return nullptr;  // bounded and vertex-free: empty set

    Vec centroid{};
    for (const auto& v : verts) centroid = add_vec(centroid, v);
    centroid = scale_vec(centroid, 1.0 / (double)verts.size());
    if (dim == 2) {
        // order vertices around the centroid so edge-walk distance works
        std::sort(verts.begin(), verts.end(), [&](const Vec& p, const Vec& q) {
            return std::atan2(p[1] - centroid[1], p[0] - centroid[0]) <
                   std::atan2(q[1] - centroid[1], q[0] - centroid[0]);
        });
    }

    auto poly = std::shared_ptr<Polytope>(new Polytope());
    poly->d_ = dim;
    poly->hs_ = std::move(hs);
    poly->verts_ = std::move(verts);
    poly->feas_ = centroid;
    poly->sg_ = sg;
    poly->sg_scale_ = sg_scale;
    for (const auto& v : poly->verts_)
        poly->circum_ = std::max(poly->circum_, l2_norm(v, dim));
    return poly;
}

std::shared_ptr<const Polytope> Polytope::from_halfspaces(int dim, std::vector<Halfspace> hs) {
    auto p = finish(dim, std::move(hs), /*require_origin=*/true, /*sg=*/false, 1.0);
    if (!p) throw ConfigError("polytope is empty");
    return p;
}

std::shared_ptr<const Polytope> Polytope::l1_ball(int dim, double radius) {
    if (!(radius >= 0)) throw ConfigError("l1 ball radius must be >= 0");
    std::vector<Halfspace> hs;
    for (int mask = 0; mask < (1 << dim); ++mask) {
        Vec a{};
        for (int i = 0; i < dim; ++i) a.c[i] = (mask >> i & 1) ? 1.0 : -1.0;
        hs.push_back({a, radius});  // sign.x <= radius; finish normalizes
    }
    return from_halfspaces(dim, std::move(hs));
}

std::shared_ptr<const Polytope> Polytope::from_points(int dim, const std::vector<Vec>& cloud,
                                                      double scale) {
    if (!(scale > 0)) throw ConfigError("scaled_gauge scale must be > 0");
    std::vector<Halfspace> hs;
    if (dim == 2) {
        auto hull = convex_hull_2d(cloud);
        if (hull.size() < 3) throw ConfigError("point cloud is degenerate (flat hull)");
        for (size_t i = 0; i < hull.size(); ++i) {
            const Vec &p = hull[i], &q = hull[(i + 1) % hull.size()];
            Vec a = make_vec({q[1] - p[1], -(q[0] - p[0])});  // outward for CCW
            hs.push_back({a, dot(a, p, 2)});
        }
    } else if (dim == 3) {
        auto faces = convex_hull_3d(cloud);
        for (const auto& f : faces) {
            const Vec &p = cloud[f[0]], &q = cloud[f[1]], &r = cloud[f[2]];
            Vec u = sub_vec(q, p), v = sub_vec(r, p);
            Vec a;
            a.c[0] = u[1] * v[2] - u[2] * v[1];
            a.c[1] = u[2] * v[0] - u[0] * v[2];
            a.c[2] = u[0] * v[1] - u[1] * v[0];
            hs.push_back({a, dot(a, p, 3)});
        }
    } else {
        throw UnsupportedError("scaled_gauge bodies support d in {2,3}");
    }
    for (auto& h : hs) h.b *= scale;
    auto p = finish(dim, std::move(hs), /*require_origin=*/true, /*sg=*/true, scale);
    if (!p) throw ConfigError("hull body is empty");
    return p;
}

double Polytope::gauge(const Vec& x) const {
    double g = 0.0;
    for (const auto& h : hs_) {
        double num = dot(h.a, x, d_);
        if (h.b > 1e-12)
            g = std::max(g, num / h.b);
        else if (num > 1e-12)
            return kInf;  // escapes through a face touching the origin
    }
    return g;
}

double Polytope::dist_outside(const Vec& x) const {
    double worst = -kInf;
    for (const auto& h : hs_) worst = std::max(worst, dot(h.a, x, d_) - h.b);
    if (worst <= 0) return 0.0;
    if (d_ == 2) {
        // exact: nearest point lies on some edge of the ordered polygon
        double best = kInf;
        size_t k = verts_.size();
        if (k == 1) return l2_dist(x, verts_[0], 2);
        for (size_t i = 0; i < k; ++i)
            best = std::min(best, dist_point_segment(x, verts_[i], verts_[(i + 1) % k], 2));
        return best;
    }
    // d=3: the projection's active set has size 1..3; try them all
    int m = (int)hs_.size();
    auto feasible = [&](const Vec& p) {
        for (const auto& h : hs_)
            if (dot(h.a, p, 3) > h.b + 1e-9) return false;
        return true;
    };
    double best = kInf;
    for (int i = 0; i < m; ++i) {
        double s = dot(hs_[i].a, x, 3) - hs_[i].b;
        if (s <= 0) continue;
        Vec p = sub_vec(x, scale_vec(hs_[i].a, s));
        if (feasible(p)) best = std::min(best, s);
    }
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            double c = dot(hs_[i].a, hs_[j].a, 3);
            double det = 1.0 - c * c;
            if (det < 1e-12) continue;
            double ri = dot(hs_[i].a, x, 3) - hs_[i].b;
            double rj = dot(hs_[j].a, x, 3) - hs_[j].b;
            double mi = (ri - c * rj) / det, mj = (rj - c * ri) / det;
            Vec p = sub_vec(x, add_vec(scale_vec(hs_[i].a, mi), scale_vec(hs_[j].a, mj)));
            if (feasible(p)) best = std::min(best, l2_dist(x, p, 3));
        }
    }
    for (const auto& v : verts_)
        if (feasible(v)) best = std::min(best, l2_dist(x, v, 3));
    return best;
}

DistBounds Polytope::dist_outside_bounds(const Vec& x) const {
    double lb = 0.0;
    for (const auto& h : hs_) lb = std::max(lb, dot(h.a, x, d_) - h.b);
    if (lb <= 0) return {0.0, 0.0};
    // upper bound: walk toward the reference interior point until feasible
    double smax = 0.0;
    bool ok = true;
    for (const auto& h : hs_) {
        double ax = dot(h.a, x, d_) - h.b;
        if (ax <= 0) continue;
        double af = dot(h.a, feas_, d_) - h.b;
        double den = ax - af;
        if (den <= 1e-15) {
            ok = false;
            break;
        }
        smax = std::max(smax, ax / den);
    }
    double ub = kInf;
    if (ok && smax <= 1.0) ub = smax * l2_dist(x, feas_, d_);
    for (const auto& v : verts_) ub = std::min(ub, l2_dist(x, v, d_));
    return {lb, ub};
}

Box Polytope::lattice_bbox() const {
    Vec lo, hi;
    for (int i = 0; i < d_; ++i) {
        lo.c[i] = kInf;
        hi.c[i] = -kInf;
    }
    for (const auto& v : verts_) {
        for (int i = 0; i < d_; ++i) {
            lo.c[i] = std::min(lo.c[i], v[i]);
            hi.c[i] = std::max(hi.c[i], v[i]);
        }
    }
    return box_from_real(lo, hi, d_);
}

BodyPtr Polytope::erode(double l) const {
    if (l < 0) throw ConfigError("erosion amount must be >= 0");
    std::vector<Halfspace> hs = hs_;
    for (auto& h : hs) h.b -= l;
    auto p = finish(d_, std::move(hs), /*require_origin=*/false, /*sg=*/false, 1.0);
    if (!p) return std::make_shared<EmptyBody>(d_);
    return p;
}

BodyPtr Polytope::scaled(double f) const {
    if (!(f > 0)) throw ConfigError("scale factor must be > 0");
    std::vector<Halfspace> hs = hs_;
    for (auto& h : hs) h.b *= f;
    auto p = finish(d_, std::move(hs), /*require_origin=*/false, sg_, sg_scale_ * f);
    if (!p) throw ConfigError("scaled body is empty");
    return p;
}

Interval Polytope::x_interval(const Vec& rest) const {
    double lo = -1e18, hi = 1e18;
    for (const auto& h : hs_) {
        double rhs = h.b;
        for (int i = 1; i < d_; ++i) rhs -= h.a[i] * rest[i];
        double c = h.a[0];
        if (c > 1e-12)
            hi = std::min(hi, rhs / c);
        else if (c < -1e-12)
            lo = std::max(lo, rhs / c);
        else if (rhs < -1e-9)
            return {};
    }
    if (lo > hi) return {};
    return {lo, hi};
}

std::string Polytope::describe() const {
    std::string k = sg_ ? "scaled_gauge" : "polytope";
    std::string s = k + "(m=" + std::to_string(hs_.size()) + ",d=" + std::to_string(d_);
    if (sg_) s += ",scale=" + fmt(sg_scale_);
    return s + ")";
}

// ---- Dilation ---------------------------------------------------------------

Box Dilation::lattice_bbox() const {
    Box b = base_->lattice_bbox();
    int32_t pad = sat32(std::ceil(l_ + 1e-9));
    for (int i = 0; i < dim(); ++i) {
        b.lo.c[i] = sat32((double)b.lo.c[i] - pad);
        b.hi.c[i] = sat32((double)b.hi.c[i] + pad);
    }
    return b;
}

// ---- lattice helpers --------------------------------------------------------

std::vector<Pt> inner_boundary(const std::vector<Pt>& set, int dim) {
    std::unordered_set<Pt, PtHash> in(set.begin(), set.end());
    std::vector<Pt> out;
    for (const Pt& v : in) {
        bool edge = false;
        for (int i = 0; i < dim && !edge; ++i) {
            for (int s = -1; s <= 1 && !edge; s += 2) {
                Pt w = v;
                w.c[i] += s;
                if (!in.count(w)) edge = true;
            }
        }
        if (edge) out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- convex hulls -----------------------------------------------------------

std::vector<Vec> convex_hull_2d(std::vector<Vec> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
        return std::tie(a.c[0], a.c[1]) < std::tie(b.c[0], b.c[1]);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec& a, const Vec& b) { return l2_dist(a, b, 2) < 1e-12; }),
              pts.end());
    size_t n = pts.size();
    if (n < 3) return pts;
    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vec> h(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 1e-12) --k;
        h[k++] = pts[i];
    }
    for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper chain
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 1e-12) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

std::vector<std::array<int, 3>> convex_hull_3d(const std::vector<Vec>& pts) {
    int n = (int)pts.size();
    if (n < 4) throw ConfigError("3-d hull needs at least 4 points");
    auto cross3 = [](const Vec& u, const Vec& v) {
        Vec w;
        w.c[0] = u[1] * v[2] - u[2] * v[1];
        w.c[1] = u[2] * v[0] - u[0] * v[2];
        w.c[2] = u[0] * v[1] - u[1] * v[0];
        return w;
    };
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max(scale, l2_norm(p, 3));
    double eps = std::max(1e-12, 1e-10 * scale);

    // seed tetrahedron: spread points of maximal rank
    int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
    double best = -1;
    for (int i = 0; i < n; ++i) {
        double d = l2_dist(pts[i], pts[i0], 3);
        if (d > best) best = d, i1 = i;
    }
    if (best < eps) throw ConfigError("degenerate 3-d cloud");
    best = -1;
    for (int i = 0; i < n; ++i) {
        Vec c = cross3(sub_vec(pts[i1], pts[i0]), sub_vec(pts[i], pts[i0]));
        double d = l2_norm(c, 3);
        if (d > best) best = d, i2 = i;
    }
    if (best < eps) throw ConfigError("degenerate 3-d cloud (collinear)");
    Vec nrm = cross3(sub_vec(pts[i1], pts[i0]), sub_vec(pts[i2], pts[i0]));
    best = -1;
    for (int i = 0; i < n; ++i) {
        double d = std::fabs(dot(nrm, sub_vec(pts[i], pts[i0]), 3));
        if (d > best) best = d, i3 = i;
    }
    if (best < eps) throw ConfigError("degenerate 3-d cloud (coplanar)");

    struct Face {
        std::array<int, 3> v;
        Vec n;  // outward, unnormalized
        double off;
        bool dead = false;
    };
    std::vector<Face> faces;
    auto add_face = [&](int a, int b, int c, const Vec& inside) {
        Face f;
        f.v = {a, b, c};
        f.n = cross3(sub_vec(pts[b], pts[a]), sub_vec(pts[c], pts[a]));
        f.off = dot(f.n, pts[a], 3);
        if (dot(f.n, inside, 3) > f.off) {  // flip to keep the interior below
            std::swap(f.v[1], f.v[2]);
            f.n = scale_vec(f.n, -1.0);
            f.off = -f.off;
        }
        faces.push_back(f);
    };
    Vec inside{};
    for (int i : {i0, i1, i2, i3}) inside = add_vec(inside, pts[i]);
    inside = scale_vec(inside, 0.25);
    add_face(i0, i1, i2, inside);
    add_face(i0, i1, i3, inside);
    add_face(i0, i2, i3, inside);
    add_face(i1, i2, i3, inside);

    for (int p = 0; p < n; ++p) {
        if (p == i0 || p == i1 || p == i2 || p == i3) continue;
        std::vector<int> visible;
        for (int fi = 0; fi < (int)faces.size(); ++fi) {
            if (faces[fi].dead) continue;
            double nn = l2_norm(faces[fi].n, 3);
            if (dot(faces[fi].n, pts[p], 3) - faces[fi].off > eps * std::max(1.0, nn))
                visible.push_back(fi);
        }
        if (visible.empty()) continue;
        // horizon = directed edges of visible faces whose reverse is not visible
        std::map<std::pair<int, int>, int> edge_count;
        for (int fi : visible) {
            const auto& v = faces[fi].v;
            for (int e = 0; e < 3; ++e) {
                int a = v[e], b = v[(e + 1) % 3];
                edge_count[{a, b}]++;
            }
        }
        std::vector<std::pair<int, int>> horizon;
        for (const auto& [e, cnt] : edge_count) {
            (void)cnt;
            if (!edge_count.count({e.second, e.first})) horizon.push_back(e);
        }
        for (int fi : visible) faces[fi].dead = true;
        for (const auto& [a, b] : horizon) add_face(a, b, p, inside);
    }
    std::vector<std::array<int, 3>> out;
    for (const auto& f : faces)
        if (!f.dead) out.push_back(f.v);
    return out;
}

// ---- convex identity check --------------------------------------------------

namespace {

// Felzenszwalb-Huttenlocher 1-d squared distance transform (in cell units)
void dt_1d(std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
           std::vector<double>& z) {
    int n = (int)f.size();
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (f[v[0]] == kInf) {
            v[0] = q;
            continue;
        }
        double s;
        while (true) {
            s = ((f[q] + q * (double)q) - (f[v[k]] + v[k] * (double)v[k])) / (2.0 * (q - v[k]));
            if (s <= z[k])
                --k;
            else
                break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (f[v[0]] == kInf) {  // no feature in this scanline
        std::fill(out.begin(), out.end(), kInf);
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double d = q - (double)v[k];
        out[q] = d * d + f[v[k]];
    }
}

// squared distance (cell units) to the nearest feature cell, 2-d grid
void dt_2d(std::vector<double>& g, int nx, int ny) {
    std::vector<double> f(std::max(nx, ny)), out(std::max(nx, ny)), z(std::max(nx, ny) + 1);
    std::vector<int> v(std::max(nx, ny));
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) f[x] = g[(size_t)y * nx + x];
        f.resize(nx);
        out.resize(nx);
        dt_1d(f, out, v, z);
        for (int x = 0; x < nx; ++x) g[(size_t)y * nx + x] = out[x];
    }
    for (int x = 0; x < nx; ++x) {
        f.resize(ny);
        out.resize(ny);
        for (int y = 0; y < ny; ++y) f[y] = g[(size_t)y * nx + x];
        dt_1d(f, out, v, z);
        for (int y = 0; y < ny; ++y) g[(size_t)y * nx + x] = out[y];
    }
}

}  // namespace

bool convex_identity_check(const std::function<bool(const Vec&)>& member, int dim,
                           const Vec& box_lo, const Vec& box_hi, double delta, double grid_step,
                           double shell) {
    if (dim != 2)
        throw UnsupportedError("identity check is grid-based and supports d=2 only");
    if (!(delta > 0)) throw ConfigError("identity check needs delta > 0");
    double h = grid_step / 4.0;
    double margin = delta + shell + 8 * h;
    double x0 = box_lo[0] - margin, y0 = box_lo[1] - margin;
    int nx = (int)std::ceil((box_hi[0] + margin - x0) / h) + 1;
    int ny = (int)std::ceil((box_hi[1] + margin - y0) / h) + 1;
    if ((int64_t)nx * ny > (int64_t)1 << 26) throw ConfigError("identity check grid too large");

    auto at = [&](int x, int y) { return (size_t)y * nx + x; };
    std::vector<uint8_t> inside((size_t)nx * ny);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
            inside[at(x, y)] = member(make_vec({x0 + x * h, y0 + y * h})) ? 1 : 0;

    // d(x, G) and d(x, G^c) sampled on the fine grid
    std::vector<double> d_out((size_t)nx * ny), d_in((size_t)nx * ny);
    for (size_t i = 0; i < inside.size(); ++i) {
        d_out[i] = inside[i] ? 0.0 : kInf;
        d_in[i] = inside[i] ? kInf : 0.0;
    }
    dt_2d(d_out, nx, ny);
    dt_2d(d_in, nx, ny);

    // dilate by delta, then distance to the dilated set's complement
    std::vector<double> d_in_dil((size_t)nx * ny);
    double dd = (delta / h) * (delta / h);
    for (size_t i = 0; i < d_out.size(); ++i) d_in_dil[i] = d_out[i] <= dd ? kInf : 0.0;
    dt_2d(d_in_dil, nx, ny);

    // compare (G+_d)-_d with G on the coarse grid, off the boundary shell
    double err = 3.0 * h * M_SQRT2;
    double skip = shell + err;
    int stride = std::max(1, (int)std::llround(grid_step / h));
    for (int y = 0; y < ny; y += stride) {
        for (int x = 0; x < nx; x += stride) {
            size_t i = at(x, y);
            double bd = inside[i] ? std::sqrt(d_in[i]) * h : std::sqrt(d_out[i]) * h;
            if (bd <= skip) continue;
            bool eroded = std::sqrt(d_in_dil[i]) * h >= delta;
            if (eroded != (inside[i] != 0)) return false;
        }
    }
    return true;
}

bool convex_identity_check(const ConvexBody& g, double delta, double grid_step, double shell) {
    if (g.is_empty()) return true;
    Box bb = g.lattice_bbox();
    Vec lo = make_vec({(double)bb.lo.c[0] - 1, (double)bb.lo.c[1] - 1});
    Vec hi = make_vec({(double)bb.hi.c[0] + 1, (double)bb.hi.c[1] + 1});
    auto member = [&g](const Vec& x) { return g.contains(x); };
    return convex_identity_check(member, g.dim(), lo, hi, delta, grid_step, shell);
}

std::function<bool(const Vec&)> l_shaped_fixture(Vec* box_lo, Vec* box_hi) {
    if (box_lo) *box_lo = make_vec({-5.0, -5.0});
    if (box_hi) *box_hi = make_vec({5.0, 5.0});
    return [](const Vec& x) {
        bool square = std::fabs(x[0]) <= 5.0 && std::fabs(x[1]) <= 5.0;
        bool notch = std::fabs(x[0]) <= 0.35 && x[1] >= 2.0;
        return square && !notch;
    };
}

}  // namespace fpp
