#pragma once
#include <memory>
#include <optional>
#include <unordered_map>

#include "fpp/distribution.hpp"
#include "fpp/lattice.hpp"
#include "fpp/rng.hpp"

namespace fpp {

// Edge-weight field over the configured box: deterministic pure function of
// (seed, edge), with optional overrides layered on top. A fill override
// replaces every edge inside a sub-box; the map override replaces single
// edges (and wins over the fill). Fields are immutable; resampling and
// planting build new fields via with_overrides / with_fill.
class PassageTimeField {
  public:
    PassageTimeField(LatticeConfig config, WeightDistribution dist, uint64_t seed)
        : config_(config), dist_(std::move(dist)), seed_(seed) {
        config_.validate();
    }

    const LatticeConfig& config() const { return config_; }
    const WeightDistribution& distribution() const { return dist_; }
    uint64_t seed() const { return seed_; }

    bool edge_in_domain(const Edge& e) const {
        Pt b = e.a;
        b.c[e.axis] += 1;
        return config_.bounding_box.contains(e.a, config_.dim) &&
               config_.bounding_box.contains(b, config_.dim);
    }

    double weight(const Edge& e) const {
        if (e.axis < 0 || e.axis >= config_.dim) throw OutOfDomainError("edge axis outside dimension");
        if (!edge_in_domain(e)) throw OutOfDomainError("edge outside bounding box");
        if (!overrides_.empty()) {
            auto it = overrides_.find(e);
            if (it != overrides_.end()) return it->second;
        }
        if (fill_ && fill_->box.contains(e.a, config_.dim)) {
            Pt b = e.a;
            b.c[e.axis] += 1;
            if (fill_->box.contains(b, config_.dim)) return fill_->value;
        }
        return dist_.sample(edge_uniform(seed_, e));
    }

    double weight(const Pt& u, const Pt& v) const { return weight(edge_between(u, v, config_.dim)); }

    // Integer scale valid for every edge of this field (base distribution and
    // all overrides); nullopt if any value breaks it.
    std::optional<int64_t> integer_scale() const {
        auto q = dist_.integer_scale();
        if (!q) return std::nullopt;
        auto fits = [&](double v) { return std::abs(v * (double)*q - std::round(v * (double)*q)) <= 1e-9 * (double)*q; };
        if (fill_ && !fits(fill_->value)) return std::nullopt;
        for (const auto& [e, v] : overrides_) {
            (void)e;
            if (!fits(v)) return std::nullopt;
        }
        return q;
    }

    int64_t scaled_weight(const Edge& e, int64_t scale) const {
        return (int64_t)std::llround(weight(e) * (double)scale);
    }

    // upper bound over every edge this field can produce (base + overrides)
    double max_possible_weight() const {
        double m = dist_.support_max();
        if (fill_) m = std::max(m, fill_->value);
        for (const auto& [e, v] : overrides_) {
            (void)e;
            m = std::max(m, v);
        }
        return m;
    }

    // independent replicate stream
    PassageTimeField replicate(uint64_t index) const {
        PassageTimeField f = *this;
        f.seed_ = derive_seed(seed_, "replicate", index);
        return f;
    }

    // the independent star field used by resampling
    PassageTimeField star_field() const {
        PassageTimeField f = *this;
        f.seed_ = derive_seed(seed_, "star");
        return f;
    }

    PassageTimeField with_overrides(std::unordered_map<Edge, double, EdgeHash> extra) const {
        PassageTimeField f = *this;
        for (auto& [e, v] : extra) {
            check_override_value(v);
            f.overrides_[e] = v;
        }
        return f;
    }

    PassageTimeField with_fill(const Box& box, double value) const {
        check_override_value(value);
        PassageTimeField f = *this;
        f.fill_ = Fill{box, value};
        return f;
    }

    size_t override_count() const { return overrides_.size(); }
    bool has_fill() const { return fill_.has_value(); }

  private:
    static void check_override_value(double v) {
        if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("override weights must be finite and >= 0");
    }

    struct Fill {
        Box box;
        double value;
    };

    LatticeConfig config_;
    WeightDistribution dist_;
    uint64_t seed_;
    std::optional<Fill> fill_;
    std::unordered_map<Edge, double, EdgeHash> overrides_;
};

} // namespace fpp
