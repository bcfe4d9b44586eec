#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpp/convex.hpp"
#include "fpp/field.hpp"
#include "fpp/fluctuation.hpp"
#include "fpp/search.hpp"

namespace fpp {

// Embedded percolation thresholds. d=2 bond is the exact self-duality value;
// the others are rounded numerical literature estimates. They gate the
// useful-distribution classification only and never enter any numerics.
struct CriticalEntry {
    double value;
    const char* provenance;
};

class CriticalProbabilityTable {
  public:
    static const CriticalProbabilityTable& standard();

    // nearest-neighbor bond percolation threshold p_c(d)
    const CriticalEntry& bond(int d) const;
    // oriented (directed) bond percolation threshold
    const CriticalEntry& oriented(int d) const;
    bool has_bond(int d) const { return bond_.count(d) != 0; }
    bool has_oriented(int d) const { return oriented_.count(d) != 0; }

  private:
    std::map<int, CriticalEntry> bond_, oriented_;
};

// A distribution is useful when the atom at the support infimum F^- stays
// below the percolation threshold: bond p_c when F^- = 0, oriented when
// F^- > 0. Continuous distributions (atom 0) are always useful.
enum class UsefulThreshold { bond, oriented };

struct UsefulVerdict {
    bool is_useful = false;
    double atom_at_min = 0;  // P(tau = F^-)
    double f_minus = 0;
    UsefulThreshold used = UsefulThreshold::bond;
    double threshold = 0;  // critical value compared against
};

UsefulVerdict classify_useful(const WeightDistribution& dist, int d,
                              const CriticalProbabilityTable& table =
                                  CriticalProbabilityTable::standard());

// Monte Carlo check that P(T(0, l*e1) < (F^- + delta) * l) decays in l.
// Requires a useful distribution. Counts are floored at 0.5 before taking
// logs so that empty cells keep the regression finite.
struct DecayPoint {
    int64_t distance = 0;
    int64_t hits = 0;
    int64_t n = 0;
    double p_hat = 0;
    double log_p_adj = 0;  // log(max(hits, 0.5) / n)
};

struct DecayReport {
    double delta = 0;
    double f_minus = 0;
    std::vector<DecayPoint> points;
    double slope = 0;  // least-squares slope of log_p_adj against distance
    bool decays = false;  // slope < 0
};

DecayReport estimate_useful_lemma_decay(const WeightDistribution& dist, int d, double delta,
                                        const std::vector<int64_t>& distances, int replicates,
                                        uint64_t seed);

// Black test around a center y at scale t: inside the Euclidean ball
// B(y, 2d(log t)^2) every edge weight must stay <= (log t)^(2d), and every
// vertex pair at L1 distance >= sqrt(log t) must satisfy
// T_ball(v, w) >= (F^- + delta)|v - w|_1, where T_ball is the minimum over
// paths confined to the ball (checked exactly by per-source searches capped
// at the largest possible violating time). First violation found in the
// deterministic scan order is returned as the witness.
struct SlowPairWitness {
    Pt v, w;
    double time = 0;      // in-ball passage time
    double required = 0;  // (F^- + delta)|v - w|_1
};

struct BlackReport {
    bool black = true;
    std::optional<Edge> heavy_edge;            // weight-cap violation
    std::optional<SlowPairWitness> slow_pair;  // pair-speed violation
    double ball_radius = 0;                    // 2d(log t)^2
    double weight_cap = 0;                     // (log t)^(2d)
    double pair_threshold = 0;                 // sqrt(log t)
    int64_t ball_points = 0;
};

BlackReport is_black(const PassageTimeField& field, const Pt& y, double t, double delta);

// Empirical P(black) per t for a fresh field per replicate (center 0; the
// field is translation invariant so the center does not matter).
struct BlackProbabilityPoint {
    double t = 0;
    int64_t black_count = 0;
    int64_t n = 0;
    double p_hat = 0;
};

struct BlackProbabilityReport {
    double delta = 0;
    std::vector<BlackProbabilityPoint> points;
    bool non_decreasing = false;
};

BlackProbabilityReport estimate_black_probability(const WeightDistribution& dist, int d,
                                                  double delta, const std::vector<double>& t_list,
                                                  int replicates, uint64_t seed);

// Separated direction family inside the cone: unit directions alpha_i whose
// boundary points on dGamma are pairwise >= t^eps apart and whose y_i are
// far enough apart that the patches are disjoint (> 2 (log t)^2, the binding
// constraint at desk scales; the larger black balls may overlap),
// y_i = floored intersection of the alpha_i ray with the boundary of the
// c^2 log t erosion, and patches
// K_i = (Gamma^+_{c log t} \ Gamma^-_{c log t}) cap B(y_i, (log t)^2).
struct DirectionFamilyParams {
    double eps = 0.25;  // must be < 1/2
    double c = 0.5;
};

struct DirectionEntry {
    Vec alpha;      // unit direction
    Vec boundary;   // dGamma cap the alpha ray
    Pt y;           // floored boundary point of the c^2 log t erosion
    std::vector<Pt> patch;           // K_i cap Z^d, lex sorted
    std::vector<Pt> patch_boundary;  // inner boundary of K_i cap Z^d, lex sorted
};

struct DirectionFamily {
    int dim = 2;
    double t = 0, eps = 0, c = 0;
    Cone cone;             // ambient cone L(theta, r)
    BodyPtr gamma;
    BodyPtr gamma_plus;    // Gamma^+_{c log t}
    BodyPtr gamma_minus;   // Gamma^-_{c log t}
    BodyPtr gamma_minus_y;    // Gamma^-_{c^2 log t}; y_i sit on its boundary
    BodyPtr gamma_plus_end;   // Gamma^+_{c^2 log t}; End(z) lies outside it
    double patch_radius = 0;  // (log t)^2
    double black_radius = 0;  // 2d(log t)^2
    double separation = 0;    // achieved min pairwise boundary distance
    double required_separation = 0;  // t^eps
    std::vector<DirectionEntry> dirs;

    bool in_patch(int i, const Pt& p) const;  // geometric K_i membership
};

DirectionFamily build_direction_family(const BodyPtr& gamma, const Vec& theta, double r, double t,
                                       const DirectionFamilyParams& params = {});

// W1: no sampled/enumerated pair v,w with |v - w|_1 >= t^(eps/2) in the
// window [-t^2, t^2]^d (clamped to the bounding box) beats the linear speed
// bound (F^- + delta)|v - w|_1. Exhaustive mode covers every pair but is
// only feasible when the window volume is tiny; sampled mode draws source
// points with a cloud of targets each (cloud L-inf radius recorded as
// pair_cap). W2: at least t^eps / 2 directions are black.
enum class W1Mode { exhaustive, sampled };

struct W1Report {
    bool holds = true;
    W1Mode mode = W1Mode::sampled;
    int64_t pairs_checked = 0;
    int64_t window_radius = 0;
    int64_t pair_cap = 0;  // sampled mode: L-inf radius of the target cloud
    std::optional<SlowPairWitness> violation;
};

struct EventParams {
    double delta = 0.05;
    double good_cone_radius = 0;  // <= 0: default (log t)^4
    int64_t w1_sources = 100;
    int64_t w1_targets = 100;
    int64_t w1_exhaustive_volume_cap = 4096;
    uint64_t seed = 0;  // drives the sampled W1 pairs
};

struct EventReport {
    double t = 0, delta = 0, eps = 0, c = 0;
    std::vector<bool> black, good;
    std::vector<double> fluct_values;  // per-direction cone fluctuation
    double good_threshold = 0;         // c^2 log t
    double good_cone_radius = 0;
    int64_t black_count = 0;
    W1Report w1;
    bool w2 = false;
    bool w = false;              // w1 and w2
    std::vector<int> good_set;   // I, ascending
};

EventReport evaluate_events(const PassageTimeField& field, const WetRegion& bt,
                            const DirectionFamily& family, const EventParams& params);

// Escape point for a bad black direction i: trace an optimal 0 -> y_i path
// and take its first vertex x on the inner boundary of K_i; report whether
// T_{K_i^c + x}(0, x) <= t - |x - y_i|_1 (F^- + delta). holds=false comes
// with a diagnostic instead of a throw (the inequality is a lemma, not an
// input contract).
struct EscapeOutcome {
    std::optional<Pt> x;
    double restricted_time = 0;
    double bound = 0;
    bool holds = false;
    std::string diagnostic;
};

EscapeOutcome find_escape_witness(const PassageTimeField& field, const DirectionFamily& family,
                                  int i, const EventReport& report, double delta);

// Resample plan: a uniformly drawn inner-boundary point z of K_i, the exit
// point End(z) (first lattice point along the outward alpha_i ray from y_i
// that lies in the patch, outside Gamma^+_{c^2 log t} and inside the cone;
// cell corners probed in lex order), and the lattice path gamma_z from z to
// End(z) inside K_i (shortest by BFS, deterministic neighbor order), capped
// at (|y_i - z|_1 + 2dc^2 log t) min 2dc log t vertices.
struct ResamplePlan {
    int i = -1;
    Pt z;
    Pt end;
    std::vector<Pt> path;  // z .. End(z); empty when infeasible
    int64_t length_cap = 0;
    bool feasible = false;
    std::string diagnostic;
};

ResamplePlan make_resample_plan(const DirectionFamily& family, int i, const Pt& z);
ResamplePlan draw_resample_plan(const DirectionFamily& family, int i, SeqRng& rng);

// tau^(gamma): the field reading the star copy on gamma's edges and the
// original everywhere else; both inputs stay untouched.
PassageTimeField resample(const PassageTimeField& field, const PassageTimeField& star,
                          const ResamplePlan& plan);

// Per-sample deterministic implication check: when some bad black direction
// i admits a feasible plan whose escape event G(z) holds for tau and whose
// edge event S(z) holds for the star copy, and W holds, then after
// resampling gamma_z the direction i must turn good and every other
// direction must keep its goodness flag. A violation is reported with a
// full scene dump; unmet preconditions make the sample not applicable.
struct CrucialVerdict {
    bool applicable = false;
    bool pass = false;
    int i = -1;
    ResamplePlan plan;
    std::vector<bool> good_before, good_after;
    std::string blocked_on;   // first unmet precondition when not applicable
    std::string scene_dump;   // populated on violation
};

CrucialVerdict check_crucial_implication(const PassageTimeField& field,
                                         const PassageTimeField& star,
                                         const DirectionFamily& family, const WetRegion& bt,
                                         const EventReport& report, const EventParams& params,
                                         SeqRng& rng);

// Ladder of events A^k = {exactly k directions good} plus P(W^c), reported
// as plain frequencies (the lemma behind them is asymptotic; nothing is
// asserted here). Gamma is built from the requested mode: an L1 ball or a
// Euclidean ball scaled to t over the e1 time constant, or the half-scale
// L1 ball negative control.
enum class GammaMode { l1_hat, euclid_hat, l1_half };

struct LadderParams {
    double delta = 0.05;
    double eps = 0.25;
    double c = 0.5;
    double good_cone_radius = 0;
    double mu1 = 0;  // e1 time constant; <= 0 measures it on 4 replicates
    Vec theta;       // cone axis; zero vector -> e1
    double cone_r = 1.0;
};

struct LadderReport {
    double t = 0;
    int64_t replicates = 0;
    int64_t family_size = 0;
    double mu1_used = 0;
    std::vector<int64_t> counts;  // counts[k] = samples with #good == k
    std::vector<double> p_a_k;
    int64_t wc_count = 0;
    double p_w_complement = 0;
};

LadderReport estimate_event_ladder(const WeightDistribution& dist, int d, GammaMode mode, double t,
                                   int replicates, const LadderParams& params, uint64_t seed);

// Gamma for a ladder/divergence run: mode shape scaled by t / mu1
BodyPtr make_gamma(GammaMode mode, int d, double t, double mu1);

}  // namespace fpp
