#include "cbbl/losses.hpp"

#include "cbbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cbbl {

namespace {

void check_label(const TwoHotLabel& label, std::size_t size) {
    const auto n = static_cast<int>(size);
    if (label.i_left < 0 || label.i_right != label.i_left + 1 || label.i_right >= n)
        throw RangeError("two-hot label indices (" + std::to_string(label.i_left) + ", " +
                         std::to_string(label.i_right) + ") invalid for " +
                         std::to_string(size) + " grid points");
}

double label_entropy(const TwoHotLabel& label) {
    double h = 0.0;
    if (label.p_left > 0.0) h -= label.p_left * std::log(label.p_left);
    if (label.p_right > 0.0) h -= label.p_right * std::log(label.p_right);
    return h;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

LossValueGrad ce_loss(const TwoHotLabel& label, const ConfidenceDistribution& dist) {
    check_label(label, dist.size());
    const auto probs = dist.probs();
    const auto log_probs = dist.log_probs();

    LossValueGrad out;
    // Zero-weight terms are skipped so an embedded target with p_i = 0 does
    // not produce 0 * -inf.
    if (label.p_left > 0.0) out.value -= label.p_left * log_probs[label.i_left];
    if (label.p_right > 0.0) out.value -= label.p_right * log_probs[label.i_right];

    out.grad.assign(probs.begin(), probs.end());
    out.grad[label.i_left] -= label.p_left;
    out.grad[label.i_right] -= label.p_right;
    return out;
}

LossValueGrad um_loss(const TwoHotLabel& label, const ConfidenceDistribution& dist) {
    check_label(label, dist.size());
    const auto probs = dist.probs();
    const auto log_probs = dist.log_probs();

    const double h_target = label_entropy(label);
    const double h_pred = dist.entropy();
    const double gap = h_target - h_pred;

    LossValueGrad out;
    out.value = std::abs(gap);
    out.grad.assign(probs.size(), 0.0);
    const double s = sign(gap);
    if (s == 0.0) return out;
    // d|H* - H| / dl_i = -s * dH/dl_i = s * p_i (ln p_i + H)
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0) out.grad[i] = s * probs[i] * (log_probs[i] + h_pred);
    return out;
}

LossValueGrad cbbl_loss(const TwoHotLabel& label, const ConfidenceDistribution& dist,
                        double um_weight) {
    if (!std::isfinite(um_weight) || um_weight < 0.0)
        throw ConfigError("um_weight must be non-negative, got " + std::to_string(um_weight));
    LossValueGrad out = ce_loss(label, dist);
    if (um_weight == 0.0) return out;
    const LossValueGrad um = um_loss(label, dist);
    out.value += um_weight * um.value;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += um_weight * um.grad[i];
    return out;
}

LossValueGrad l2_loss(const OffsetVector& t, const OffsetVector& t_hat) {
    LossValueGrad out;
    out.grad.resize(4);
    for (int i = 0; i < 4; ++i) {
        const double d = t[i] - t_hat[i];
        out.value += d * d;
        out.grad[i] = 2.0 * d;
    }
    return out;
}

LossValueGrad smooth_l1_loss(const OffsetVector& t, const OffsetVector& t_hat,
                             const SmoothL1Params& params) {
    const double delta = params.delta;
    if (!std::isfinite(delta) || delta <= 0.0)
        throw ConfigError("smooth-l1 delta must be positive, got " + std::to_string(delta));
    LossValueGrad out;
    out.grad.resize(4);
    for (int i = 0; i < 4; ++i) {
        const double d = t[i] - t_hat[i];
        if (std::abs(d) <= delta) {
            out.value += d * d / (2.0 * delta);
            out.grad[i] = d / delta;
        } else {
            out.value += std::abs(d) - 0.5 * delta;
            out.grad[i] = sign(d);
        }
    }
    return out;
}

namespace {

double neg_log_iou(const BoxXYWH& gt, const BoxXYWH& pred) {
    const OverlapAreas o = overlap_areas(gt, pred);
    if (!(o.intersection > 0.0))
        throw DomainError("IoU loss undefined: boxes do not overlap");
    return std::log(o.union_area) - std::log(o.intersection);
}

} // namespace

LossValueGrad iou_loss(const BoxXYWH& gt, const BoxXYWH& pred) {
    validate_box(gt, "gt");
    validate_box(pred, "pred");

    LossValueGrad out;
    out.value = neg_log_iou(gt, pred);
    out.grad.assign(1, 0.0);

    const double g1 = gt.x - 0.5 * gt.w, g2 = gt.x + 0.5 * gt.w;
    const double p1 = pred.x - 0.5 * pred.w, p2 = pred.x + 0.5 * pred.w;

    if (p1 == g1 || p2 == g2 || p1 == g2 || p2 == g1) {
        constexpr double step = 1e-6;
        BoxXYWH lo = pred, hi = pred;
        lo.x -= step;
        hi.x += step;
        out.grad[0] = (neg_log_iou(gt, hi) - neg_log_iou(gt, lo)) / (2.0 * step);
        return out;
    }

    // I = iw * ih. Moving pred right by dx moves both of its vertical edges;
    // iw changes by +1 if pred's right edge bounds the overlap, -1 if its left
    // edge does.
    const OverlapAreas o = overlap_areas(gt, pred);
    const double iw = std::min(g2, p2) - std::max(g1, p1);
    const double ih = o.intersection / iw;
    const double diw = (p2 < g2 ? 1.0 : 0.0) - (p1 > g1 ? 1.0 : 0.0);
    const double dI = diw * ih;
    const double dU = -dI;
    out.grad[0] = dU / o.union_area - dI / o.intersection;
    return out;
}

} // namespace cbbl
