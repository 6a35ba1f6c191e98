#include "cbbl/grid.hpp"

#include "cbbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cbbl {

std::string_view to_string(GridMode mode) {
    switch (mode) {
    case GridMode::Uniform: return "uniform";
    case GridMode::IntervalNonUniform: return "interval-non-uniform";
    }
    return "unknown";
}

GridMode grid_mode_from_string(std::string_view name) {
    if (name == "uniform") return GridMode::Uniform;
    if (name == "interval-non-uniform" || name == "in") return GridMode::IntervalNonUniform;
    throw ConfigError("unknown grid mode '" + std::string(name) +
                      "' (expected uniform or interval-non-uniform)");
}

GridSpec::GridSpec(double alpha, int n, GridMode mode, double in_beta, bool paper_literal)
    : alpha_(alpha), n_(n), mode_(mode), in_beta_(in_beta), paper_literal_(paper_literal) {
    if (!std::isfinite(alpha) || alpha <= 0.0)
        throw ConfigError("grid alpha must be positive and finite, got " + std::to_string(alpha));
    if (n < 1) throw ConfigError("grid n must be >= 1, got " + std::to_string(n));
    if (mode == GridMode::IntervalNonUniform) {
        if (!std::isfinite(in_beta) || in_beta <= 0.0)
            throw ConfigError("grid in_beta must be positive in interval-non-uniform mode, got " +
                              std::to_string(in_beta));
        // e^{alpha*beta} must stay representable.
        if (alpha * in_beta > 700.0)
            throw ConfigError("grid alpha * in_beta too large (> 700)");
    }

    values_.resize(static_cast<std::size_t>(n) + 1);
    const double steps = paper_literal ? static_cast<double>(n + 1) : static_cast<double>(n);
    for (int i = 0; i <= n; ++i) {
        // alpha * (2i - steps) / steps: exact endpoints and exact odd symmetry.
        values_[i] = alpha * (2.0 * i - steps) / steps;
    }

    if (mode == GridMode::IntervalNonUniform) {
        const double scale = alpha / std::expm1(alpha * in_beta);
        for (double& y : values_) {
            const double warped = scale * std::expm1(in_beta * std::abs(y));
            y = y < 0.0 ? -warped : warped;
        }
        // Pin endpoints against rounding in expm1.
        values_.front() = -alpha;
        if (!paper_literal) values_.back() = alpha;
    }
}

double GridSpec::value(int i) const {
    if (i < 0 || i > n_)
        throw RangeError("grid index " + std::to_string(i) + " outside [0, " +
                         std::to_string(n_) + "]");
    return values_[static_cast<std::size_t>(i)];
}

std::vector<double> TwoHotLabel::dense(std::size_t size) const {
    if (i_left < 0 || i_right < 0 || static_cast<std::size_t>(std::max(i_left, i_right)) >= size)
        throw RangeError("two-hot indices (" + std::to_string(i_left) + ", " + std::to_string(i_right) +
                         ") do not fit " + std::to_string(size) + " grid points");
    std::vector<double> out(size, 0.0);
    out[i_left] = p_left;
    out[i_right] = p_right;
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

ConfidenceDistribution ConfidenceDistribution::from_logits(std::span<const double> logits) {
    if (logits.empty()) throw ConfigError("confidence distribution needs at least one logit");
    for (double l : logits)
        if (!std::isfinite(l)) throw ConfigError("logits must be finite");

    ConfidenceDistribution d;
    d.logits_.assign(logits.begin(), logits.end());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    d.probs_.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        d.probs_[i] = std::exp(logits[i] - mx);
        sum += d.probs_[i];
    }
    const double log_sum = mx + std::log(sum);
    d.log_probs_.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        d.probs_[i] /= sum;
        d.log_probs_[i] = logits[i] - log_sum;
    }
    return d;
}

ConfidenceDistribution ConfidenceDistribution::from_probabilities(std::span<const double> probs) {
    if (probs.empty()) throw ConfigError("confidence distribution needs at least one entry");
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
            throw ConfigError("probabilities must lie in [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("probabilities must sum to 1, got " + std::to_string(sum));

    ConfidenceDistribution d;
    d.probs_.assign(probs.begin(), probs.end());
    d.log_probs_.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        d.log_probs_[i] = probs[i] > 0.0 ? std::log(probs[i])
                                         : -std::numeric_limits<double>::infinity();
    d.logits_ = d.log_probs_;
    return d;
}

double ConfidenceDistribution::entropy() const { return cbbl::entropy(probs_); }

TwoHotLabel quantize(const GridSpec& spec, double t_star) {
    const auto ys = spec.values();
    if (!std::isfinite(t_star) || t_star < ys.front() || t_star > ys.back())
        throw RangeError("target " + std::to_string(t_star) + " outside grid range [" +
                         std::to_string(ys.front()) + ", " + std::to_string(ys.back()) + "]");

    // First grid value strictly above t, minus one; the top endpoint folds
    // into the last interval.
    const auto above = std::upper_bound(ys.begin(), ys.end(), t_star);
    int left = static_cast<int>(above - ys.begin()) - 1;
    left = std::clamp(left, 0, spec.n() - 1);

    const double y_left = ys[left];
    const double y_right = ys[left + 1];
    const double interval = y_right - y_left;

    TwoHotLabel label;
    label.i_left = left;
    label.i_right = left + 1;
    label.p_left = (y_right - t_star) / interval;
    label.p_right = (t_star - y_left) / interval;
    return label;
}

double clamp_to_grid(const GridSpec& spec, double t) {
    return std::clamp(t, spec.lower(), spec.upper());
}

double restore_full_band(const GridSpec& spec, std::span<const double> probs) {
    if (probs.size() != spec.size())
        throw ConfigError("distribution length " + std::to_string(probs.size()) +
                          " does not match grid size " + std::to_string(spec.size()));
    const auto ys = spec.values();
    return std::inner_product(probs.begin(), probs.end(), ys.begin(), 0.0);
}

double restore_full_band(const GridSpec& spec, const ConfidenceDistribution& dist) {
    return restore_full_band(spec, dist.probs());
}

double restore_top2(const GridSpec& spec, std::span<const double> probs) {
    if (probs.size() != spec.size())
        throw ConfigError("distribution length " + std::to_string(probs.size()) +
                          " does not match grid size " + std::to_string(spec.size()));
    // Strict comparisons keep the lower index on ties.
    std::size_t first = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[first]) first = i;
    std::size_t second = first == 0 ? 1 : 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (i != first && probs[i] > probs[second]) second = i;

    const auto ys = spec.values();
    const double mass = probs[first] + probs[second];
    return (ys[first] * probs[first] + ys[second] * probs[second]) / mass;
}

double restore_top2(const GridSpec& spec, const ConfidenceDistribution& dist) {
    return restore_top2(spec, dist.probs());
}

} // namespace cbbl
