#include "cbbl/verify.hpp"

#include "cbbl/boxes.hpp"
#include "cbbl/distortion.hpp"
#include "cbbl/errors.hpp"
#include "cbbl/grid.hpp"
#include "cbbl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace cbbl {

namespace {

class Check {
public:
    Check(std::string name, double tolerance) {
        result_.name = std::move(name);
        result_.tolerance = tolerance;
    }

    void observe(double error) {
        ++result_.evaluated;
        if (!std::isfinite(error)) error = std::numeric_limits<double>::infinity();
        result_.max_error = std::max(result_.max_error, error);
    }

    CheckResult finish() {
        result_.passed = result_.evaluated > 0 && result_.max_error <= result_.tolerance;
        return result_;
    }

private:
    CheckResult result_;
};

using Scalar = std::function<double(const std::vector<double>&)>;

// Central differences of f at x, step h, one coordinate at a time.
std::vector<double> central_diff(const Scalar& f, std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f(x);
        x[i] = saved - h;
        const double down = f(x);
        x[i] = saved;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

struct Sampler {
    std::mt19937_64 rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(rng); }
    double gauss(double sigma) { return sigma * normal(rng); }

    std::vector<double> logits(std::size_t n, double sigma) {
        std::vector<double> l(n);
        for (double& v : l) v = gauss(sigma);
        return l;
    }

    BoxXYWH box(double lo, double hi) {
        return {uniform(-50, 50), uniform(-50, 50), uniform(lo, hi), uniform(lo, hi)};
    }
};

OffsetVector to_offsets(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

} // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    if (options.samples < 1)
        throw ConfigError("verification samples must be >= 1, got " +
                          std::to_string(options.samples));

    const int samples = options.samples;
    Sampler rnd(options.seed);
    std::vector<CheckResult> results;

    const GridSpec uniform = GridSpec::uniform(2.0, 10);
    const GridSpec warped = GridSpec::interval_non_uniform(2.0, 10, 1.0);

    auto random_label = [&](const GridSpec& g) {
        return quantize(g, rnd.uniform(g.lower(), g.upper()));
    };

    {
        Check exact("ce_gradient_identity", 0.0);
        Check fd("ce_gradient_finite_difference", 1e-6);
        Check bound("ce_gradient_bound", 0.0);
        for (int s = 0; s < samples; ++s) {
            const TwoHotLabel label = random_label(uniform);
            const std::vector<double> logits = rnd.logits(uniform.size(), 2.0);
            const auto dist = ConfidenceDistribution::from_logits(logits);
            LossValueGrad ce = ce_loss(label, dist);
            if (options.inject_fault && s == 0) ce.grad[label.i_left] += 1e-3;

            double identity = 0.0;
            double outside = 0.0;
            for (std::size_t i = 0; i < ce.grad.size(); ++i) {
                const double expected = dist.probs()[i] - label.weight(static_cast<int>(i));
                identity = std::max(identity, std::abs(ce.grad[i] - expected));
                outside = std::max(outside, std::abs(ce.grad[i]) - 1.0);
            }
            exact.observe(identity);
            bound.observe(std::max(0.0, outside));

            const auto g = central_diff(
                [&](const std::vector<double>& l) {
                    return ce_loss(label, ConfidenceDistribution::from_logits(l)).value;
                },
                logits, 1e-5);
            fd.observe(max_abs_diff(g, ce.grad));
        }
        results.push_back(exact.finish());
        results.push_back(fd.finish());
        results.push_back(bound.finish());
    }

    {
        Check fd("um_gradient_finite_difference", 1e-6);
        for (int s = 0; s < samples; ++s) {
            const TwoHotLabel label = random_label(uniform);
            const std::vector<double> logits = rnd.logits(uniform.size(), 2.0);
            const auto dist = ConfidenceDistribution::from_logits(logits);
            const LossValueGrad um = um_loss(label, dist);
            // Stay clear of the |.| kink.
            if (um.value < 1e-3) continue;
            const auto g = central_diff(
                [&](const std::vector<double>& l) {
                    return um_loss(label, ConfidenceDistribution::from_logits(l)).value;
                },
                logits, 1e-5);
            fd.observe(max_abs_diff(g, um.grad));
        }
        results.push_back(fd.finish());
    }

    {
        Check lin("cbbl_loss_linearity", 1e-12);
        for (int s = 0; s < samples; ++s) {
            const TwoHotLabel label = random_label(warped);
            const auto dist = ConfidenceDistribution::from_logits(rnd.logits(warped.size(), 2.0));
            const double w = rnd.uniform(0.0, 2.0);
            const LossValueGrad all = cbbl_loss(label, dist, w);
            const LossValueGrad ce = ce_loss(label, dist);
            const LossValueGrad um = um_loss(label, dist);
            double err = std::abs(all.value - (ce.value + w * um.value));
            for (std::size_t i = 0; i < all.grad.size(); ++i)
                err = std::max(err, std::abs(all.grad[i] - (ce.grad[i] + w * um.grad[i])));
            lin.observe(err);
        }
        results.push_back(lin.finish());
    }

    {
        Check l2("l2_gradient_finite_difference", 1e-6);
        Check sl1("smooth_l1_gradient_finite_difference", 1e-6);
        const SmoothL1Params params{1.0 / 9.0};
        for (int s = 0; s < samples; ++s) {
            std::vector<double> t(4), t_hat(4);
            for (int i = 0; i < 4; ++i) {
                t[i] = rnd.uniform(-1.0, 1.0);
                t_hat[i] = rnd.uniform(-1.0, 1.0);
            }
            const auto hat = to_offsets(t_hat);
            const auto g2 = central_diff(
                [&](const std::vector<double>& v) { return l2_loss(to_offsets(v), hat).value; }, t,
                1e-5);
            l2.observe(max_abs_diff(g2, l2_loss(to_offsets(t), hat).grad));

            bool near_junction = false;
            for (int i = 0; i < 4; ++i)
                near_junction |= std::abs(std::abs(t[i] - t_hat[i]) - params.delta) < 1e-4;
            if (near_junction) continue;
            const auto gs = central_diff(
                [&](const std::vector<double>& v) {
                    return smooth_l1_loss(to_offsets(v), hat, params).value;
                },
                t, 1e-5);
            sl1.observe(max_abs_diff(gs, smooth_l1_loss(to_offsets(t), hat, params).grad));
        }
        results.push_back(l2.finish());
        results.push_back(sl1.finish());
    }

    {
        Check fd("iou_gradient_finite_difference", 1e-6);
        for (int s = 0; s < samples; ++s) {
            const BoxXYWH gt = rnd.box(10.0, 60.0);
            BoxXYWH pred = gt;
            pred.x += rnd.uniform(-0.4, 0.4) * gt.w;
            pred.y += rnd.uniform(-0.4, 0.4) * gt.h;
            pred.w *= std::exp(rnd.uniform(-0.5, 0.5));
            pred.h *= std::exp(rnd.uniform(-0.5, 0.5));
            if (overlap_areas(gt, pred).intersection <= 0.0) continue;
            const double g1 = gt.x - 0.5 * gt.w, g2 = gt.x + 0.5 * gt.w;
            const double p1 = pred.x - 0.5 * pred.w, p2 = pred.x + 0.5 * pred.w;
            const double h = 1e-5;
            const double gap = std::min({std::abs(p1 - g1), std::abs(p2 - g2), std::abs(p1 - g2),
                                         std::abs(p2 - g1)});
            if (gap < 10 * h) continue;
            const auto g = central_diff(
                [&](const std::vector<double>& v) {
                    BoxXYWH p = pred;
                    p.x = v[0];
                    return iou_loss(gt, p).value;
                },
                {pred.x}, h);
            fd.observe(std::abs(g[0] - iou_loss(gt, pred).grad[0]));
        }
        results.push_back(fd.finish());
    }

    {
        Check rt("offset_round_trip", 1e-12);
        for (int s = 0; s < samples; ++s) {
            const BoxXYWH anchor = rnd.box(4.0, 300.0);
            const OffsetVector v{rnd.uniform(-1, 1), rnd.uniform(-1, 1), rnd.uniform(-1, 1),
                                 rnd.uniform(-1, 1)};
            const OffsetVector back = encode_offsets(decode_offsets(v, anchor), anchor);
            double err = 0.0;
            for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(back[i] - v[i]));
            rt.observe(err);

            const BoxXYWH box = rnd.box(4.0, 300.0);
            const BoxXYWH again = decode_offsets(encode_offsets(box, anchor), anchor);
            const double rel = std::max({std::abs(again.x - box.x) / std::max(1.0, std::abs(box.x)),
                                         std::abs(again.y - box.y) / std::max(1.0, std::abs(box.y)),
                                         std::abs(again.w - box.w) / box.w,
                                         std::abs(again.h - box.h) / box.h});
            rt.observe(rel);
        }
        results.push_back(rt.finish());
    }

    for (const GridSpec* g : {&uniform, &warped}) {
        Check rec(std::string("reconstruction_") + std::string(to_string(g->mode())), 1e-10);
        for (int s = 0; s < samples; ++s) {
            const double t = rnd.uniform(g->lower(), g->upper());
            const TwoHotLabel label = quantize(*g, t);
            rec.observe(std::abs(restore_full_band(*g, label.dense(g->size())) - t));
        }
        results.push_back(rec.finish());
    }

    {
        Check grid("in_grid_symmetry_and_endpoints", 0.0);
        for (double beta : {0.5, 1.0, 3.0, 5.0}) {
            for (int n : {2, 5, 10, 11, 20}) {
                const GridSpec g = GridSpec::interval_non_uniform(4.0, n, beta);
                double err = std::abs(g.value(0) + 4.0) + std::abs(g.value(n) - 4.0);
                for (int i = 0; i <= n; ++i) err += std::abs(g.value(n - i) + g.value(i));
                for (int i = 1; i <= n; ++i)
                    if (!(g.value(i) > g.value(i - 1))) err += 1.0;
                grid.observe(err);
            }
        }
        results.push_back(grid.finish());

        Check limit("in_grid_small_beta_limit", 1e-4);
        const GridSpec near = GridSpec::interval_non_uniform(2.0, 10, 1e-6);
        for (int i = 0; i <= 10; ++i) limit.observe(std::abs(near.value(i) - uniform.value(i)));
        results.push_back(limit.finish());
    }

    {
        Check homog("l2_anchor_width_homogeneity", 1e-12);
        std::vector<double> widths, errors;
        for (int s = 0; s < std::min(samples, 64); ++s) {
            widths.push_back(rnd.uniform(2.0, 256.0));
            errors.push_back(rnd.uniform(0.5, 16.0));
        }
        std::vector<double> doubled;
        for (double w : widths) doubled.push_back(2.0 * w);
        const auto narrow = sweep_norm_gradients(widths, errors);
        const auto wide = sweep_norm_gradients(doubled, errors);
        for (std::size_t i = 0; i < narrow.size(); ++i)
            homog.observe(std::abs(narrow[i].grad_mag / wide[i].grad_mag - 2.0));
        results.push_back(homog.finish());
    }

    {
        Check closed("iou_sweep_equal_squares", 1e-9);
        SweepConfig cfg;
        cfg.scale_ratios = {1.0};
        const double s = cfg.gt_side;
        for (const SweepRecord& r : sweep_iou(cfg))
            closed.observe(std::abs(r.loss - std::log((s + r.shift_px) / (s - r.shift_px))));
        results.push_back(closed.finish());
    }

    return results;
}

} // namespace cbbl
