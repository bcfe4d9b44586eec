#pragma once
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpp/errors.hpp"
#include "fpp/lattice.hpp"

namespace fpp {

// Convex reference bodies: closed convex sets in R^d, queried through exact
// distance oracles. User-facing bodies contain the origin; derived bodies
// (erosions) may not, and may be empty (flagged, never silently degenerate).

enum class BodyKind { ball, polytope, scaled_gauge, dilation, empty };

// closed real interval; empty() when lo > hi
struct Interval {
    double lo = 0.0, hi = -1.0;
    bool empty() const { return lo > hi; }
};

// cheap bracket lb <= d <= ub used to avoid exact distance work in bulk scans
struct DistBounds {
    double lb = 0.0, ub = 0.0;
};

class ConvexBody;
using BodyPtr = std::shared_ptr<const ConvexBody>;

// Bodies are immutable and always held by shared_ptr (the factories below
// enforce this); the default dilate() hands the pointer to a Dilation wrapper.
class ConvexBody : public std::enable_shared_from_this<ConvexBody> {
  public:
    virtual ~ConvexBody() = default;
    virtual int dim() const = 0;
    virtual BodyKind kind() const = 0;
    virtual bool is_empty() const { return false; }

    // d(x, G): 0 iff x in G.  d(x, G^c): 0 iff x outside (or on the boundary).
    // Both are exact; consistency x in G <=> dist_outside(x)=0 is a class
    // invariant checked by the test suite.
    virtual double dist_outside(const Vec& x) const = 0;
    virtual double dist_inside(const Vec& x) const = 0;
    virtual bool contains(const Vec& x) const { return dist_outside(x) <= kMemberTol; }
    bool contains(const Pt& p) const { return contains(to_vec(p)); }

    // cheap brackets; default falls back to the exact value
    virtual DistBounds dist_outside_bounds(const Vec& x) const {
        double d = dist_outside(x);
        return {d, d};
    }
    virtual DistBounds dist_inside_bounds(const Vec& x) const {
        double d = dist_inside(x);
        return {d, d};
    }

    // box containing every lattice point of the body (may be slightly larger)
    virtual Box lattice_bbox() const = 0;
    virtual double circumradius() const = 0;

    virtual BodyPtr dilate(double l) const;   // default: Dilation wrapper
    virtual BodyPtr erode(double l) const = 0;
    virtual BodyPtr scaled(double f) const;   // default: unsupported

    // {x : (x, rest[1..d-1]) in G} along axis 0 (rest[0] ignored); exact up to
    // 1e-9 for bodies without a closed form (convex bisection fallback)
    virtual Interval x_interval(const Vec& rest) const;

    // largest s >= 0 with s*unit_dir in G; requires 0 in G
    virtual double ray_scale(const Vec& unit_dir, double tol = 1e-9) const;

    virtual std::string describe() const = 0;

    static constexpr double kMemberTol = 1e-9;
};

class EmptyBody final : public ConvexBody {
  public:
    explicit EmptyBody(int d) : d_(d) {}
    int dim() const override { return d_; }
    BodyKind kind() const override { return BodyKind::empty; }
    bool is_empty() const override { return true; }
    double dist_outside(const Vec&) const override {
        return std::numeric_limits<double>::infinity();
    }
    double dist_inside(const Vec&) const override { return 0.0; }
    bool contains(const Vec&) const override { return false; }
    Box lattice_bbox() const override {
        Box b;
        b.lo = make_pt({1});
        b.hi = make_pt({0});
        return b;  // empty along axis 0
    }
    double circumradius() const override { return 0.0; }
    BodyPtr dilate(double) const override { return std::make_shared<EmptyBody>(d_); }
    BodyPtr erode(double) const override { return std::make_shared<EmptyBody>(d_); }
    Interval x_interval(const Vec&) const override { return {}; }
    double ray_scale(const Vec&, double) const override {
        throw PreconditionError("ray_scale on empty body");
    }
    std::string describe() const override { return "empty"; }

  private:
    int d_;
};

// Euclidean ball centered at the origin.
class EuclideanBall final : public ConvexBody {
  public:
    EuclideanBall(int d, double radius) : d_(d), r_(radius) {
        if (d < 2 || d > kMaxDim) throw ConfigError("ball dimension out of range");
        if (!(radius >= 0)) throw ConfigError("ball radius must be >= 0");
    }
    int dim() const override { return d_; }
    BodyKind kind() const override { return BodyKind::ball; }
    double radius() const { return r_; }
    double dist_outside(const Vec& x) const override {
        return std::max(0.0, l2_norm(x, d_) - r_);
    }
    double dist_inside(const Vec& x) const override {
        return std::max(0.0, r_ - l2_norm(x, d_));
    }
    bool contains(const Vec& x) const override { return l2_norm(x, d_) <= r_ + kMemberTol; }
    Box lattice_bbox() const override;
    double circumradius() const override { return r_; }
    BodyPtr dilate(double l) const override;
    BodyPtr erode(double l) const override;
    BodyPtr scaled(double f) const override;
    Interval x_interval(const Vec& rest) const override {
        double s = r_ * r_;
        for (int i = 1; i < d_; ++i) s -= rest[i] * rest[i];
        if (s < 0) return {};
        double w = std::sqrt(s);
        return {-w, w};
    }
    double ray_scale(const Vec& u, double) const override { return r_ / l2_norm(u, d_); }
    std::string describe() const override;

  private:
    int d_;
    double r_;
};

// Bounded intersection of half-spaces a_i . x <= b_i with |a_i| = 1. The
// scaled-gauge representation (hull of a point cloud times a scale factor) is
// the same object with the gauge kept exactly homogeneous by construction.
class Polytope final : public ConvexBody {
  public:
    struct Halfspace {
        Vec a;     // unit normal
        double b;  // offset
    };

    // user-facing: requires 0 in the body (all b >= 0) and boundedness
    static std::shared_ptr<const Polytope> from_halfspaces(
        int dim, std::vector<Halfspace> hs);
    // hull of a finite cloud, scaled; kind() reports scaled_gauge
    static std::shared_ptr<const Polytope> from_points(int dim, const std::vector<Vec>& cloud,
                                                       double scale = 1.0);
    // the L1 ball |x|_1 <= radius as an exact polytope
    static std::shared_ptr<const Polytope> l1_ball(int dim, double radius);

    int dim() const override { return d_; }
    BodyKind kind() const override { return sg_ ? BodyKind::scaled_gauge : BodyKind::polytope; }
    const std::vector<Halfspace>& halfspaces() const { return hs_; }
    const std::vector<Vec>& vertices() const { return verts_; }
    double scale_factor() const { return sg_scale_; }

    // Minkowski gauge inf{t>0 : x/t in G}; exactly homogeneous. +inf when x
    // escapes through a face touching the origin.
    double gauge(const Vec& x) const;

    double dist_outside(const Vec& x) const override;
    double dist_inside(const Vec& x) const override {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& h : hs_) m = std::min(m, h.b - dot(h.a, x, d_));
        return std::max(0.0, m);
    }
    bool contains(const Vec& x) const override {
        for (const auto& h : hs_)
            if (dot(h.a, x, d_) > h.b + kMemberTol) return false;
        return true;
    }
    DistBounds dist_outside_bounds(const Vec& x) const override;
    Box lattice_bbox() const override;
    double circumradius() const override { return circum_; }
    BodyPtr erode(double l) const override;
    BodyPtr scaled(double f) const override;
    Interval x_interval(const Vec& rest) const override;
    double ray_scale(const Vec& u, double) const override {
        double g = gauge(u);
        if (g <= 0) throw PreconditionError("ray_scale: direction has nonpositive gauge");
        return 1.0 / g;
    }
    std::string describe() const override;

  private:
    Polytope() = default;
    // shared finishing step: dedup, vertex enumeration, bbox; returns nullptr
    // (caller maps to EmptyBody) when the constraint set is infeasible
    static std::shared_ptr<const Polytope> finish(int dim, std::vector<Halfspace> hs,
                                                  bool require_origin, bool sg, double sg_scale);

    int d_ = 2;
    std::vector<Halfspace> hs_;
    std::vector<Vec> verts_;
    Vec feas_;  // interior-ish reference point (vertex centroid)
    double circum_ = 0.0;
    bool sg_ = false;
    double sg_scale_ = 1.0;
};

// Outward dilation G+_l carried lazily: distances reduce to the base body's
// oracles through exact convex-geometry identities.
class Dilation final : public ConvexBody {
  public:
    Dilation(BodyPtr base, double l) : base_(std::move(base)), l_(l) {
        if (!(l > 0)) throw ConfigError("dilation amount must be > 0");
        if (base_->is_empty()) throw ConfigError("dilation of empty body");
    }
    int dim() const override { return base_->dim(); }
    BodyKind kind() const override { return BodyKind::dilation; }
    const BodyPtr& base() const { return base_; }
    double amount() const { return l_; }

    double dist_outside(const Vec& x) const override {
        return std::max(0.0, base_->dist_outside(x) - l_);
    }
    double dist_inside(const Vec& x) const override {
        double s = base_->dist_outside(x);
        if (s > 0) return s >= l_ ? 0.0 : l_ - s;
        return l_ + base_->dist_inside(x);
    }
    bool contains(const Vec& x) const override {
        return base_->dist_outside_bounds(x).lb <= l_ + kMemberTol &&
               base_->dist_outside(x) <= l_ + kMemberTol;
    }
    DistBounds dist_outside_bounds(const Vec& x) const override {
        DistBounds b = base_->dist_outside_bounds(x);
        return {std::max(0.0, b.lb - l_), std::max(0.0, b.ub - l_)};
    }
    DistBounds dist_inside_bounds(const Vec& x) const override {
        DistBounds b = base_->dist_outside_bounds(x);
        if (b.lb > 0) return {std::max(0.0, l_ - b.ub), std::max(0.0, l_ - b.lb)};
        double d = dist_inside(x);
        return {d, d};
    }
    Box lattice_bbox() const override;
    double circumradius() const override { return base_->circumradius() + l_; }
    BodyPtr dilate(double l) const override { return std::make_shared<Dilation>(base_, l_ + l); }
    BodyPtr erode(double l) const override {
        if (l <= 0) throw ConfigError("erosion amount must be >= 0");
        if (l < l_ - 1e-12) return std::make_shared<Dilation>(base_, l_ - l);
        if (l <= l_ + 1e-12) return base_;
        return base_->erode(l - l_);
    }
    std::string describe() const override {
        return "dilate(" + base_->describe() + "," + std::to_string(l_) + ")";
    }

  private:
    BodyPtr base_;
    double l_;
};

inline BodyPtr ball_body(int dim, double radius) {
    return std::make_shared<EuclideanBall>(dim, radius);
}
inline BodyPtr l1_ball_body(int dim, double radius) { return Polytope::l1_ball(dim, radius); }
inline BodyPtr polytope_body(int dim, std::vector<Polytope::Halfspace> hs) {
    return Polytope::from_halfspaces(dim, std::move(hs));
}
inline BodyPtr scaled_gauge_body(int dim, const std::vector<Vec>& cloud, double scale) {
    return Polytope::from_points(dim, cloud, scale);
}
inline BodyPtr empty_body(int dim) { return std::make_shared<EmptyBody>(dim); }

inline BodyPtr dilate(const BodyPtr& g, double l) {
    if (l < 0) throw ConfigError("dilation amount must be >= 0");
    return l == 0 ? g : g->dilate(l);
}
inline BodyPtr erode(const BodyPtr& g, double l) {
    if (l < 0) throw ConfigError("erosion amount must be >= 0");
    return l == 0 ? g : g->erode(l);
}

// Cone L(theta, r): all nonnegative multiples of the ball B(theta, r).
// Membership of x != 0 <=> the ray through x meets the ball <=> the distance
// from theta to that ray is <= r. r >= |theta| makes it the whole space.
struct Cone {
    int dim = 2;
    Vec theta;
    double r = 1.0;

    static Cone around(const Vec& theta, double r, int dim) {
        if (dim < 2 || dim > kMaxDim) throw ConfigError("cone dimension out of range");
        if (!(r > 0)) throw ConfigError("cone radius must be > 0");
        if (l2_norm(theta, dim) <= 0) throw ConfigError("cone direction must be nonzero");
        Cone c;
        c.dim = dim;
        c.theta = theta;
        c.r = r;
        return c;
    }
    static Cone whole_space(int dim) {
        Vec e1 = make_vec({1.0});
        return around(e1, 2.5, dim);
    }
    bool is_whole() const { return r >= l2_norm(theta, dim) - 1e-15; }

    bool contains(const Vec& x) const {
        double xx = dot(x, x, dim);
        if (xx == 0) return true;
        double tx = dot(theta, x, dim);
        double s = tx > 0 ? tx / xx : 0.0;  // ray parameter of the projection
        double dist2 = dot(theta, theta, dim) - 2 * s * tx + s * s * xx;
        return dist2 <= r * r + 1e-12;
    }
    bool contains(const Pt& p) const { return contains(to_vec(p)); }
};

// {v in D : some lattice neighbor of v is outside D}
std::vector<Pt> inner_boundary(const std::vector<Pt>& set, int dim);

// Verifies erode(dilate(G, delta), delta) == G through an independent
// fine-grid distance-transform pipeline (never through the in-family
// dilate/erode shortcuts), comparing membership on a coarse test grid and
// skipping a boundary shell. d=2 only; the generic overload also accepts
// non-convex membership functions (for which the identity must fail).
bool convex_identity_check(const ConvexBody& g, double delta, double grid_step = 0.05,
                           double shell = 0.05);
bool convex_identity_check(const std::function<bool(const Vec&)>& member, int dim,
                           const Vec& box_lo, const Vec& box_hi, double delta,
                           double grid_step = 0.05, double shell = 0.05);

// the checker-internal non-convex fixture (square with a thin notch)
std::function<bool(const Vec&)> l_shaped_fixture(Vec* box_lo = nullptr, Vec* box_hi = nullptr);

// counterclockwise hull vertices of a 2-d cloud (collinear points dropped)
std::vector<Vec> convex_hull_2d(std::vector<Vec> pts);
// triangular faces (indices into pts) of a 3-d hull, outward-oriented
std::vector<std::array<int, 3>> convex_hull_3d(const std::vector<Vec>& pts);

// integer xs covered by the interval, with membership tolerance; false = none
inline bool interval_lattice_range(const Interval& iv, int32_t& x0, int32_t& x1) {
    if (iv.empty()) return false;
    double lo = std::ceil(iv.lo - 1e-9), hi = std::floor(iv.hi + 1e-9);
    if (lo > hi) return false;
    if (lo < (double)INT32_MIN || hi > (double)INT32_MAX)
        throw ConfigError("interval exceeds int32 range");
    x0 = (int32_t)lo;
    x1 = (int32_t)hi;
    return true;
}

}  // namespace fpp
