#pragma once
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "fpp/field.hpp"
#include "fpp/lattice.hpp"
#include "fpp/path.hpp"

namespace fpp {

// Dense row-major grid over an integer box, axis 0 fastest.
template <class T>
struct DenseGrid {
    Box box;
    int dim = 2;
    std::array<int64_t, kMaxDim> stride{1, 0, 0, 0};
    std::vector<T> cells;

    DenseGrid() = default;
    DenseGrid(const Box& b, int d, T init, int64_t cell_cap) : box(b), dim(d) {
        int64_t vol = 1;
        for (int i = 0; i < d; ++i) {
            stride[i] = vol;
            vol *= b.extent(i);
        }
        if (vol > cell_cap)
            throw ConfigError("grid of " + std::to_string(vol) + " cells exceeds cap " +
                              std::to_string(cell_cap));
        cells.assign((size_t)vol, init);
    }

    int64_t index(const Pt& p) const {
        int64_t ix = 0;
        for (int i = 0; i < dim; ++i) ix += ((int64_t)p.c[i] - box.lo.c[i]) * stride[i];
        return ix;
    }
    Pt point_at(int64_t ix) const {
        Pt p;
        for (int i = dim - 1; i >= 0; --i) {
            p.c[i] = (int32_t)(box.lo.c[i] + ix / stride[i]);
            ix %= stride[i];
        }
        return p;
    }
    bool in_box(const Pt& p) const { return box.contains(p, dim); }
    int64_t size() const { return (int64_t)cells.size(); }
};

// Distance field produced by region growth. Cells are stored either as
// scale-multiplied integers (exact, u16/u32 picked by budget) or doubles.
// `reliable_up_to` bounds the distances that are certified final: any cell
// with value <= reliable_up_to is an exact passage time from the source.
class WetRegion {
  public:
    enum class Mode { U16, U32, F64 };

    Mode mode = Mode::F64;
    int dim = 2;
    Pt source{};
    double budget = 0;          // wet <=> time <= budget
    int64_t scale = 0;          // 0 in F64 mode
    int64_t budget_scaled = 0;  // floor(budget*scale + eps) in scaled modes
    double reliable_up_to = 0;  // distances <= this are certified exact
    Box grid_box;               // search box the grid covers
    Box wet_bbox;               // tight bounding box of the wet set
    uint64_t wet_count = 0;
    double min_rim_settled = std::numeric_limits<double>::infinity();
    double support_min = 0;  // infimum of edge weights; gives wet-set L1 bound

    std::shared_ptr<DenseGrid<uint16_t>> g16;
    std::shared_ptr<DenseGrid<uint32_t>> g32;
    std::shared_ptr<DenseGrid<double>> g64;

    static constexpr uint16_t kUnset16 = 0xffff;
    static constexpr uint32_t kUnset32 = 0xffffffffu;

    bool in_grid(const Pt& p) const { return grid_box.contains(p, dim); }

    // passage time if settled within reliable range, +inf otherwise
    double time(const Pt& p) const {
        if (!in_grid(p)) throw OutOfDomainError("point outside grown box");
        double t;
        switch (mode) {
            case Mode::U16: {
                uint16_t v = g16->cells[(size_t)g16->index(p)];
                if (v == kUnset16) return std::numeric_limits<double>::infinity();
                t = (double)v / (double)scale;
                break;
            }
            case Mode::U32: {
                uint32_t v = g32->cells[(size_t)g32->index(p)];
                if (v == kUnset32) return std::numeric_limits<double>::infinity();
                t = (double)v / (double)scale;
                break;
            }
            default: {
                double v = g64->cells[(size_t)g64->index(p)];
                t = v;
                break;
            }
        }
        if (t > reliable_up_to + 1e-12) return std::numeric_limits<double>::infinity();
        return t;
    }

    bool contains(const Pt& p) const {
        if (!in_grid(p)) return false;
        switch (mode) {
            case Mode::U16: {
                uint16_t v = g16->cells[(size_t)g16->index(p)];
                return v != kUnset16 && (int64_t)v <= budget_scaled;
            }
            case Mode::U32: {
                uint32_t v = g32->cells[(size_t)g32->index(p)];
                return v != kUnset32 && (int64_t)v <= budget_scaled;
            }
            default: return g64->cells[(size_t)g64->index(p)] <= budget;
        }
    }

    uint64_t size() const { return wet_count; }

    // View with a smaller budget sharing the same grids; wet stats (count and
    // tight bbox) are recomputed so the view is a first-class region.
    WetRegion view(double smaller_budget) const;

    // box certain to contain the wet set (not necessarily tight for views)
    const Box& bound_box() const { return wet_bbox; }

    void for_each_wet(const std::function<void(const Pt&, double)>& fn) const;

    static int64_t scaled_budget(double t, int64_t q) {
        return (int64_t)std::floor(t * (double)q + 1e-9);
    }
};

struct GrowOptions {
    std::optional<Box> box;               // explicit search box (else auto)
    std::optional<int64_t> initial_radius;// starting radius for auto sizing
    int64_t cell_cap = (int64_t)1 << 28;  // memory guard
    bool auto_retry = true;               // retry with larger box in auto mode
};

// Grow the wet region B(t) = {v : T(source, v) <= t} from the origin.
// Throws TruncationError if the (explicit) box clipped the region.
WetRegion grow_wet_region(const PassageTimeField& field, double t, const GrowOptions& opts = {});

// Same growth and certification from an arbitrary source.
WetRegion grow_wet_region_from(const PassageTimeField& field, const Pt& src, double t,
                               const GrowOptions& opts = {});

// Budget growth restricted to `domain` inside `box`. No rim certification:
// the domain, not the box, is what confines the paths, so the caller must
// pass a box covering the whole domain piece it cares about. Settled values
// <= budget are exact domain-restricted passage times from src.
WetRegion grow_restricted(const PassageTimeField& field, const Pt& src, double t,
                          const std::function<bool(const Pt&)>& domain, const Box& box,
                          int64_t cell_cap = (int64_t)1 << 28);

// Same engine, growing from an arbitrary source until all targets settle.
struct TargetGrowResult {
    WetRegion region;            // reliable_up_to = time of last settled target
    std::vector<double> times;   // passage times to the targets
};
TargetGrowResult grow_to_targets(const PassageTimeField& field, const Pt& src,
                                 const std::vector<Pt>& targets, const Box& box);

struct FptOptions {
    std::optional<Box> box;
    int max_retries = 6;
    int64_t cell_cap = (int64_t)1 << 28;
};

// Point-to-point passage time with box-independence certification: the box
// is enlarged until no path leaving it could possibly be cheaper.
double first_passage_time(const PassageTimeField& field, const Pt& v, const Pt& w,
                          const FptOptions& opts = {});

// Passage time restricted to paths whose vertices satisfy `domain` (source
// and target must satisfy it too); the box is part of the domain. Returns
// nullopt when the target is unreachable.
std::optional<double> restricted_fpt(const PassageTimeField& field, const Pt& v, const Pt& w,
                                     const std::function<bool(const Pt&)>& domain, const Box& box);

// Reconstruct an optimal path source -> target from a grown distance field
// (target must be settled within the reliable range). Ties are broken by
// picking the lexicographically smallest predecessor, so the result is
// deterministic.
LatticePath trace_optimal_path(const PassageTimeField& field, const WetRegion& region,
                               const Pt& target);

} // namespace fpp
