#ifndef CBBL_GRID_HPP
#define CBBL_GRID_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cbbl {

enum class GridMode {
    Uniform,
    IntervalNonUniform, // exponential warp, denser near zero
};

std::string_view to_string(GridMode mode);
// Accepts "uniform" and "interval-non-uniform" (alias "in"). Throws ConfigError.
GridMode grid_mode_from_string(std::string_view name);

// Quantization grid over [-alpha, alpha] with n + 1 points, indices 0..n.
//
// Uniform points are y_i = alpha * (2i - n) / n, so the endpoints are exactly
// -alpha and +alpha and the grid is odd-symmetric. Interval non-uniform mode
// warps each uniform point through
//   y' = sign(y) * alpha / (e^{alpha*beta} - 1) * (e^{beta*|y|} - 1),
// which keeps 0 and +-alpha fixed and makes intervals widen away from zero.
//
// With `paper_literal` set the uniform spacing is 2*alpha / (n + 1) instead of
// 2*alpha / n; y_0 is still -alpha but y_n falls short of +alpha. This mode is
// for comparison only and does not satisfy the endpoint invariant.
//
// Immutable after construction.
class GridSpec {
public:
    GridSpec(double alpha, int n, GridMode mode = GridMode::Uniform, double in_beta = 1.0,
             bool paper_literal = false);

    static GridSpec uniform(double alpha, int n) { return GridSpec(alpha, n); }
    static GridSpec interval_non_uniform(double alpha, int n, double beta) {
        return GridSpec(alpha, n, GridMode::IntervalNonUniform, beta);
    }

    double alpha() const noexcept { return alpha_; }
    int n() const noexcept { return n_; }
    GridMode mode() const noexcept { return mode_; }
    double in_beta() const noexcept { return in_beta_; }
    bool paper_literal() const noexcept { return paper_literal_; }

    // Number of grid points, n + 1.
    std::size_t size() const noexcept { return values_.size(); }

    // Throws RangeError for i outside [0, n].
    double value(int i) const;
    std::span<const double> values() const noexcept { return values_; }

    double lower() const noexcept { return values_.front(); }
    double upper() const noexcept { return values_.back(); }

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.alpha_ == b.alpha_ && a.n_ == b.n_ && a.mode_ == b.mode_ &&
               a.in_beta_ == b.in_beta_ && a.paper_literal_ == b.paper_literal_;
    }

private:
    double alpha_;
    int n_;
    GridMode mode_;
    double in_beta_;
    bool paper_literal_;
    std::vector<double> values_;
};

inline double grid_value(const GridSpec& spec, int i) { return spec.value(i); }

// Sparse two-point target distribution on adjacent grid indices.
struct TwoHotLabel {
    int i_left = 0;
    int i_right = 1;
    double p_left = 1.0;
    double p_right = 0.0;

    // Dense probability vector of length `size`. Throws RangeError if the
    // indices do not fit.
    std::vector<double> dense(std::size_t size) const;
    // Weight at index i (zero off the two support points).
    double weight(int i) const noexcept {
        return i == i_left ? p_left : (i == i_right ? p_right : 0.0);
    }
};

// Softmax distribution over grid points. Keeps logits, probabilities and
// log-probabilities; log-probabilities come from a max-subtracted log-sum-exp
// so they stay finite for any finite logits.
class ConfidenceDistribution {
public:
    // Throws ConfigError on empty input or non-finite logits.
    static ConfidenceDistribution from_logits(std::span<const double> logits);

    // Wraps an explicit probability vector (entries >= 0, sum 1 within 1e-9).
    // Zero entries get log-probability -inf. Used to embed exact targets.
    static ConfidenceDistribution from_probabilities(std::span<const double> probs);

    std::size_t size() const noexcept { return probs_.size(); }
    std::span<const double> logits() const noexcept { return logits_; }
    std::span<const double> probs() const noexcept { return probs_; }
    std::span<const double> log_probs() const noexcept { return log_probs_; }

    // Shannon entropy in nats, 0 * ln 0 taken as 0.
    double entropy() const;

private:
    ConfidenceDistribution() = default;

    std::vector<double> logits_;
    std::vector<double> probs_;
    std::vector<double> log_probs_;
};

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

// Shannon entropy of a probability vector, 0 * ln 0 taken as 0.
double entropy(std::span<const double> probs);

// Two-hot label of a continuous target. The enclosing interval is located
// with y_left <= t < y_right (the top endpoint maps to (n-1, n, 0, 1)) and the
// weights use that interval's own width, so in both modes
//   p_left * y_left + p_right * y_right == t.
// Throws RangeError when t lies outside [lower(), upper()] or is not finite.
TwoHotLabel quantize(const GridSpec& spec, double t_star);

// Explicit clamp into the grid range, for callers that want saturation.
double clamp_to_grid(const GridSpec& spec, double t);

// Expectation of grid values under the distribution.
double restore_full_band(const GridSpec& spec, std::span<const double> probs);
double restore_full_band(const GridSpec& spec, const ConfidenceDistribution& dist);

// Weighted average of the two highest-probability grid points, renormalized.
// Ties are broken toward the lower index.
double restore_top2(const GridSpec& spec, std::span<const double> probs);
double restore_top2(const GridSpec& spec, const ConfidenceDistribution& dist);

} // namespace cbbl

#endif // CBBL_GRID_HPP
