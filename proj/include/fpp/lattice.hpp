#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "fpp/errors.hpp"

namespace fpp {

// Lattice points live in Z^d with d in [2, kMaxDim]. Coordinates beyond the
// active dimension are kept at 0 so hashing/comparison never see junk.
inline constexpr int kMaxDim = 4;

struct Pt {
    std::array<int32_t, kMaxDim> c{0, 0, 0, 0};

    int32_t& operator[](int i) { return c[i]; }
    int32_t operator[](int i) const { return c[i]; }
    bool operator==(const Pt&) const = default;
    // lexicographic order; doubles as the deterministic tie-break everywhere
    bool operator<(const Pt& o) const { return c < o.c; }
};

inline Pt make_pt(std::initializer_list<int32_t> v) {
    Pt p;
    int i = 0;
    for (int32_t x : v) p.c[i++] = x;
    return p;
}

inline Pt origin_pt() { return Pt{}; }

inline int64_t l1_norm(const Pt& p, int dim) {
    int64_t s = 0;
    for (int i = 0; i < dim; ++i) s += std::abs((int64_t)p.c[i]);
    return s;
}

inline int64_t l1_dist(const Pt& a, const Pt& b, int dim) {
    int64_t s = 0;
    for (int i = 0; i < dim; ++i) s += std::abs((int64_t)a.c[i] - b.c[i]);
    return s;
}

inline double l2_norm(const Pt& p, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += (double)p.c[i] * p.c[i];
    return std::sqrt(s);
}

inline double l2_dist(const Pt& a, const Pt& b, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) {
        double d = (double)a.c[i] - b.c[i];
        s += d * d;
    }
    return std::sqrt(s);
}

struct PtHash {
    size_t operator()(const Pt& p) const {
        // splitmix-style scramble of the packed coords
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (int i = 0; i < kMaxDim; ++i) {
            h ^= (uint64_t)(uint32_t)p.c[i] + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return (size_t)h;
    }
};

inline std::ostream& operator<<(std::ostream& os, const Pt& p) {
    os << '(';
    for (int i = 0; i < kMaxDim; ++i) {
        if (i) os << ',';
        os << p.c[i];
    }
    return os << ')';
}

// Real-valued points (directions, body queries). Same fixed-size layout.
struct Vec {
    std::array<double, kMaxDim> c{0, 0, 0, 0};

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }
    bool operator==(const Vec&) const = default;
};

inline Vec make_vec(std::initializer_list<double> v) {
    Vec p;
    int i = 0;
    for (double x : v) p.c[i++] = x;
    return p;
}

inline Vec to_vec(const Pt& p) {
    Vec v;
    for (int i = 0; i < kMaxDim; ++i) v.c[i] = p.c[i];
    return v;
}

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += a.c[i] * b.c[i];
    return s;
}

inline double l2_norm(const Vec& v, int dim) { return std::sqrt(dot(v, v, dim)); }

inline double l2_dist(const Vec& a, const Vec& b, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) {
        double d = a.c[i] - b.c[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline Vec scale_vec(const Vec& v, double f) {
    Vec r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = v.c[i] * f;
    return r;
}

inline Vec add_vec(const Vec& a, const Vec& b) {
    Vec r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
}

inline Vec sub_vec(const Vec& a, const Vec& b) {
    Vec r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
}

// componentwise floor of a real point, i.e. the lattice cell corner
inline Pt floor_pt(const Vec& v, int dim) {
    Pt p;
    for (int i = 0; i < dim; ++i) p.c[i] = (int32_t)std::floor(v.c[i]);
    return p;
}

// Axis-aligned integer box [lo, hi], inclusive on both ends.
struct Box {
    Pt lo, hi;

    bool contains(const Pt& p, int dim) const {
        for (int i = 0; i < dim; ++i)
            if (p.c[i] < lo.c[i] || p.c[i] > hi.c[i]) return false;
        return true;
    }
    int64_t extent(int i) const { return (int64_t)hi.c[i] - lo.c[i] + 1; }
    int64_t volume(int dim) const {
        int64_t v = 1;
        for (int i = 0; i < dim; ++i) v *= extent(i);
        return v;
    }
    bool on_rim(const Pt& p, int dim) const {
        for (int i = 0; i < dim; ++i)
            if (p.c[i] == lo.c[i] || p.c[i] == hi.c[i]) return true;
        return false;
    }
    bool operator==(const Box&) const = default;
};

inline Box centered_box(const Pt& center, int64_t radius, int dim) {
    if (radius < 0) throw ConfigError("box radius must be >= 0");
    Box b;
    for (int i = 0; i < dim; ++i) {
        int64_t lo = (int64_t)center.c[i] - radius;
        int64_t hi = (int64_t)center.c[i] + radius;
        if (lo < INT32_MIN || hi > INT32_MAX) throw ConfigError("box exceeds int32 range");
        b.lo.c[i] = (int32_t)lo;
        b.hi.c[i] = (int32_t)hi;
    }
    return b;
}

struct LatticeConfig {
    int dim = 2;
    Box bounding_box;

    void validate() const {
        if (dim < 2 || dim > kMaxDim)
            throw ConfigError("dimension must be in [2," + std::to_string(kMaxDim) + "], got " +
                              std::to_string(dim));
        for (int i = 0; i < dim; ++i)
            if (bounding_box.lo.c[i] > bounding_box.hi.c[i])
                throw ConfigError("bounding box is empty along axis " + std::to_string(i));
    }
};

// Undirected nearest-neighbor edge, stored canonically as (lower endpoint,
// axis): the edge connects a and a+e_axis.
struct Edge {
    Pt a;
    int8_t axis = 0;

    bool operator==(const Edge&) const = default;
    bool operator<(const Edge& e) const { return std::tie(a, axis) < std::tie(e.a, e.axis); }
};

struct EdgeHash {
    size_t operator()(const Edge& e) const {
        return PtHash{}(e.a) * 1315423911u ^ (size_t)(e.axis + 1);
    }
};

// canonical form of the edge {u, u +/- e_axis}; dir=+1 means u->u+e_axis
inline Edge edge_between(const Pt& u, const Pt& v, int dim) {
    int axis = -1;
    for (int i = 0; i < dim; ++i) {
        if (u.c[i] != v.c[i]) {
            if (axis != -1 || std::abs((int64_t)u.c[i] - v.c[i]) != 1)
                throw MalformedPathError("vertices are not lattice-adjacent");
            axis = i;
        }
    }
    if (axis == -1) throw MalformedPathError("vertices are not lattice-adjacent");
    Edge e;
    e.axis = (int8_t)axis;
    e.a = (u.c[axis] < v.c[axis]) ? u : v;
    return e;
}

} // namespace fpp
