#pragma once
#include <optional>
#include <vector>

#include "fpp/convex.hpp"
#include "fpp/search.hpp"

namespace fpp {

// F_C(A, G) evaluated on the lattice: the max of the outward excess
// max d(v, G) over wet v in C outside G, and the inward deficit
// max d(v, G^c) over lattice v in G and C that are not wet. Either maximum
// over an empty set is 0. This closed form equals the inf-delta definition
// (the test suite cross-checks it against a direct delta-scan).
struct FluctuationResult {
    double value = 0.0;
    double outward = 0.0;
    double inward = 0.0;
    std::optional<Pt> outward_witness, inward_witness;
};

FluctuationResult fluctuation(const WetRegion& A, const ConvexBody& G, const Cone& C);

// same evaluation against many cones in one pass over the lattice
std::vector<FluctuationResult> fluctuation_multi(const WetRegion& A, const ConvexBody& G,
                                                 const std::vector<Cone>& cones);

// explicit-set variant for small scenes and oracles
FluctuationResult fluctuation_set(const std::vector<Pt>& A, const ConvexBody& G, const Cone& C,
                                  int dim);

// Hausdorff distance of A and B restricted to the cone
double hausdorff(const std::vector<Pt>& A, const std::vector<Pt>& B, const Cone& C, int dim);

}  // namespace fpp
