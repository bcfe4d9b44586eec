#pragma once
#include <vector>

#include "fpp/field.hpp"
#include "fpp/lattice.hpp"

namespace fpp {

// Finite lattice path = vertex sequence, consecutive vertices adjacent.
// A single vertex is a valid (edgeless) path; an empty sequence is not.
struct LatticePath {
    std::vector<Pt> vertices;

    size_t vertex_count() const { return vertices.size(); }
    size_t edge_count() const { return vertices.empty() ? 0 : vertices.size() - 1; }

    void validate(const LatticeConfig& config) const {
        if (vertices.empty()) throw MalformedPathError("path has no vertices");
        for (const Pt& v : vertices)
            if (!config.bounding_box.contains(v, config.dim))
                throw MalformedPathError("path vertex outside bounding box");
        for (size_t i = 0; i + 1 < vertices.size(); ++i)
            edge_between(vertices[i], vertices[i + 1], config.dim); // throws if not adjacent
    }

    std::vector<Edge> edges(int dim) const {
        std::vector<Edge> out;
        out.reserve(edge_count());
        for (size_t i = 0; i + 1 < vertices.size(); ++i)
            out.push_back(edge_between(vertices[i], vertices[i + 1], dim));
        return out;
    }
};

// total weight along the path; validates first
inline double path_time(const PassageTimeField& field, const LatticePath& path) {
    path.validate(field.config());
    double t = 0;
    for (size_t i = 0; i + 1 < path.vertices.size(); ++i)
        t += field.weight(path.vertices[i], path.vertices[i + 1]);
    return t;
}

} // namespace fpp
