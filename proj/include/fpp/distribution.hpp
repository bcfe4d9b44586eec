#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpp/errors.hpp"
#include "fpp/rng.hpp"

namespace fpp {

enum class DistKind { Constant, Bernoulli, Exponential, Uniform, Discrete };

// Edge-weight distribution: nonnegative support, queried both for exact
// lattice facts (infimum of support, atom mass there) and for sampling.
class WeightDistribution {
  public:
    static WeightDistribution constant(double a) {
        WeightDistribution d(DistKind::Constant);
        if (!(a >= 0) || !std::isfinite(a)) throw ConfigError("constant weight must be finite and >= 0");
        d.values_ = {a};
        d.probs_ = {1.0};
        d.init_discrete_facts();
        return d;
    }
    static WeightDistribution bernoulli(double a, double b, double p) {
        WeightDistribution d(DistKind::Bernoulli);
        if (!(a >= 0) || !(b > a)) throw ConfigError("bernoulli needs 0 <= a < b");
        if (!(p > 0) || !(p < 1)) throw ConfigError("bernoulli needs p in (0,1)");
        d.values_ = {a, b};
        d.probs_ = {p, 1 - p};
        d.init_discrete_facts();
        return d;
    }
    static WeightDistribution exponential(double rate) {
        WeightDistribution d(DistKind::Exponential);
        if (!(rate > 0) || !std::isfinite(rate)) throw ConfigError("exponential rate must be > 0");
        d.rate_ = rate;
        d.f_minus_ = 0;
        d.f_plus_ = std::numeric_limits<double>::infinity();
        d.atom_at_min_ = 0;
        d.mean_ = 1 / rate;
        return d;
    }
    static WeightDistribution uniform(double a, double b) {
        WeightDistribution d(DistKind::Uniform);
        if (!(a >= 0) || !(b > a)) throw ConfigError("uniform needs 0 <= a < b");
        d.lo_ = a;
        d.hi_ = b;
        d.f_minus_ = a;
        d.f_plus_ = b;
        d.atom_at_min_ = 0;
        d.mean_ = (a + b) / 2;
        return d;
    }
    static WeightDistribution discrete(std::vector<double> values, std::vector<double> probs) {
        WeightDistribution d(DistKind::Discrete);
        if (values.empty() || values.size() != probs.size())
            throw ConfigError("discrete needs matching nonempty value/probability lists");
        for (size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0) || !std::isfinite(values[i]))
                throw ConfigError("discrete values must be finite and >= 0");
            if (i && !(values[i] > values[i - 1]))
                throw ConfigError("discrete values must be strictly increasing");
            if (!(probs[i] > 0)) throw ConfigError("discrete probabilities must be > 0");
        }
        double s = std::accumulate(probs.begin(), probs.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9) throw ConfigError("discrete probabilities must sum to 1");
        for (double& p : probs) p /= s;
        d.values_ = std::move(values);
        d.probs_ = std::move(probs);
        d.init_discrete_facts();
        return d;
    }

    DistKind kind() const { return kind_; }
    bool is_continuous() const { return kind_ == DistKind::Exponential || kind_ == DistKind::Uniform; }
    // infimum of the support, F^- in the usual shorthand
    double support_min() const { return f_minus_; }
    // supremum of the support (+inf for exponential)
    double support_max() const { return f_plus_; }
    // P(tau = support_min)
    double atom_at_min() const { return atom_at_min_; }
    double mean() const { return mean_; }

    // map a uniform [0,1) variate to a weight
    double sample(double u) const {
        switch (kind_) {
            case DistKind::Constant: return values_[0];
            case DistKind::Bernoulli: return u < probs_[0] ? values_[0] : values_[1];
            case DistKind::Exponential: return -std::log1p(-u) / rate_;
            case DistKind::Uniform: return lo_ + (hi_ - lo_) * u;
            case DistKind::Discrete: {
                double acc = 0;
                for (size_t i = 0; i + 1 < values_.size(); ++i) {
                    acc += probs_[i];
                    if (u < acc) return values_[i];
                }
                return values_.back();
            }
        }
        return 0; // unreachable
    }

    // Smallest q <= 10^4 making every support value an integer multiple of
    // 1/q (within 1e-9 relative slack); nullopt for continuous families or
    // when no such q exists. Lets search engines run in exact integers.
    std::optional<int64_t> integer_scale() const {
        if (is_continuous()) return std::nullopt;
        for (int64_t q = 1; q <= 10000; ++q) {
            bool ok = true;
            for (double v : values_) {
                double s = v * (double)q;
                if (std::abs(s - std::round(s)) > 1e-9 * (double)q) {
                    ok = false;
                    break;
                }
            }
            if (ok) return q;
        }
        return std::nullopt;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(12);
        switch (kind_) {
            case DistKind::Constant: os << "constant(" << values_[0] << ")"; break;
            case DistKind::Bernoulli:
                os << "bernoulli(" << values_[0] << "," << values_[1] << "," << probs_[0] << ")";
                break;
            case DistKind::Exponential: os << "exponential(" << rate_ << ")"; break;
            case DistKind::Uniform: os << "uniform(" << lo_ << "," << hi_ << ")"; break;
            case DistKind::Discrete: {
                os << "discrete(";
                for (size_t i = 0; i < values_.size(); ++i) {
                    if (i) os << ",";
                    os << values_[i] << ":" << probs_[i];
                }
                os << ")";
                break;
            }
        }
        return os.str();
    }

  private:
    explicit WeightDistribution(DistKind k) : kind_(k) {}

    void init_discrete_facts() {
        f_minus_ = values_.front();
        f_plus_ = values_.back();
        atom_at_min_ = probs_.front();
        mean_ = 0;
        for (size_t i = 0; i < values_.size(); ++i) mean_ += values_[i] * probs_[i];
    }

    DistKind kind_;
    std::vector<double> values_; // discrete-type families, ascending
    std::vector<double> probs_;
    double rate_ = 0, lo_ = 0, hi_ = 0;
    double f_minus_ = 0, f_plus_ = 0, atom_at_min_ = 0, mean_ = 0;
};

// Parse "constant(1)", "bernoulli(0,1,0.4)", "exponential(1)",
// "uniform(0.5,1.5)", "discrete(1:0.55,2:0.45)".
inline WeightDistribution parse_distribution(const std::string& raw) {
    auto first = raw.find_first_not_of(" \t");
    auto last = raw.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError("bad distribution syntax: " + raw);
    std::string text = raw.substr(first, last - first + 1);
    auto open = text.find('(');
    if (open == std::string::npos || text.back() != ')')
        throw ConfigError("bad distribution syntax: " + text);
    std::string name = text.substr(0, open);
    while (!name.empty() && isspace((unsigned char)name.back())) name.pop_back();
    std::string args = text.substr(open + 1, text.size() - open - 2);
    std::vector<std::string> parts;
    {
        std::string cur;
        for (char ch : args) {
            if (ch == ',') {
                parts.push_back(cur);
                cur.clear();
            } else if (!isspace((unsigned char)ch)) {
                cur += ch;
            }
        }
        if (!cur.empty()) parts.push_back(cur);
    }
    auto num = [&](const std::string& s) {
        size_t pos = 0;
        double v;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + s + "' in distribution: " + text);
        }
        if (pos != s.size()) throw ConfigError("bad number '" + s + "' in distribution: " + text);
        return v;
    };
    if (name == "constant") {
        if (parts.size() != 1) throw ConfigError("constant takes 1 argument");
        return WeightDistribution::constant(num(parts[0]));
    }
    if (name == "bernoulli") {
        if (parts.size() != 3) throw ConfigError("bernoulli takes 3 arguments");
        return WeightDistribution::bernoulli(num(parts[0]), num(parts[1]), num(parts[2]));
    }
    if (name == "exponential") {
        if (parts.size() != 1) throw ConfigError("exponential takes 1 argument");
        return WeightDistribution::exponential(num(parts[0]));
    }
    if (name == "uniform") {
        if (parts.size() != 2) throw ConfigError("uniform takes 2 arguments");
        return WeightDistribution::uniform(num(parts[0]), num(parts[1]));
    }
    if (name == "discrete") {
        std::vector<double> vals, probs;
        for (const auto& p : parts) {
            auto colon = p.find(':');
            if (colon == std::string::npos) throw ConfigError("discrete entries are value:prob");
            vals.push_back(num(p.substr(0, colon)));
            probs.push_back(num(p.substr(colon + 1)));
        }
        return WeightDistribution::discrete(std::move(vals), std::move(probs));
    }
    throw ConfigError("unknown distribution family: " + name);
}

} // namespace fpp
