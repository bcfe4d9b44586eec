#pragma once
#include <memory>
#include <vector>

#include "fpp/convex.hpp"
#include "fpp/rng.hpp"

namespace fpp::testutil {

// uniform direction on the unit sphere (rejection from the cube)
inline Vec random_dir(SeqRng& rng, int dim) {
    for (;;) {
        Vec v;
        for (int i = 0; i < dim; ++i) v[i] = 2.0 * rng.next_unit() - 1.0;
        double n = l2_norm(v, dim);
        if (n < 0.1 || n > 1.0) continue;
        for (int i = 0; i < dim; ++i) v[i] /= n;
        return v;
    }
}

// random bounded polytope with the origin comfortably inside: hull of a
// radial point cloud, retried until no face passes near the origin
inline std::shared_ptr<const Polytope> random_polytope(SeqRng& rng, int dim, int n_points) {
    for (;;) {
        std::vector<Vec> cloud;
        cloud.reserve((size_t)n_points);
        for (int k = 0; k < n_points; ++k) {
            Vec u = random_dir(rng, dim);
            double r = 1.5 + 4.5 * rng.next_unit();
            for (int i = 0; i < dim; ++i) u[i] *= r;
            cloud.push_back(u);
        }
        try {
            auto body = Polytope::from_points(dim, cloud);
            double b_min = std::numeric_limits<double>::infinity();
            for (const auto& h : body->halfspaces()) b_min = std::min(b_min, h.b);
            if (b_min > 0.05) return body;
        } catch (const ConfigError&) {
            // degenerate cloud; draw again
        }
    }
}

} // namespace fpp::testutil
