#include "cbbl/distortion.hpp"

#include "cbbl/boxes.hpp"
#include "cbbl/errors.hpp"
#include "cbbl/losses.hpp"
#include "format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <tuple>

namespace cbbl {

void SweepConfig::validate() const {
    if (!std::isfinite(gt_side) || gt_side <= 0.0)
        throw ConfigError("sweep gt_side must be positive");
    if (scale_ratios.empty()) throw ConfigError("sweep needs at least one scale ratio");
    for (double k : scale_ratios)
        if (!std::isfinite(k) || k <= 0.0 || k > 1.0)
            throw ConfigError("sweep scale ratio " + std::to_string(k) + " outside (0, 1]");
    if (shift_samples < 2) throw ConfigError("sweep shift_samples must be >= 2");
    if (!std::isfinite(shift_max_fraction) || shift_max_fraction < 0.0)
        throw ConfigError("sweep shift_max_fraction must be non-negative");
    if (shift_max_fraction >= 1.0)
        throw ConfigError("sweep shift_max_fraction " + std::to_string(shift_max_fraction) +
                          " >= 1 makes boxes stop overlapping");
}

namespace {

BoxXYWH sweep_gt(double side) { return {0.5 * side, 0.5 * side, side, side}; }

BoxXYWH sweep_pred(double side, double k, double shift) {
    const double a = k * side;
    return {0.5 * a - shift, 0.5 * side, a, a};
}

double sweep_loss(double side, double k, double shift) {
    return iou_loss(sweep_gt(side), sweep_pred(side, k, shift)).value;
}

} // namespace

std::vector<SweepRecord> sweep_iou(const SweepConfig& config) {
    config.validate();
    const double s = config.gt_side;
    const double h = kSweepFdStep;

    std::vector<SweepRecord> records;
    records.reserve(config.scale_ratios.size() * config.shift_samples);
    for (double k : config.scale_ratios) {
        const double max_shift = config.shift_max_fraction * k * s;
        for (int j = 0; j < config.shift_samples; ++j) {
            const double x = max_shift * j / (config.shift_samples - 1);
            const double loss = sweep_loss(s, k, x);

            double grad;
            if (x < h) {
                grad = (sweep_loss(s, k, x + h) - loss) / h;
            } else {
                grad = (sweep_loss(s, k, x + h) - sweep_loss(s, k, x - h)) / (2.0 * h);
                const BoxXYWH pred = sweep_pred(s, k, x);
                const BoxXYWH gt = sweep_gt(s);
                const bool kink = pred.x - 0.5 * pred.w == gt.x - 0.5 * gt.w;
                if (!kink) {
                    // Shifting outward moves pred.x by -x.
                    const double closed = -iou_loss(gt, pred).grad[0];
                    if (std::abs(closed - grad) > 1e-6 * std::max(1.0, std::abs(closed)))
                        throw std::logic_error("sweep_iou: finite difference " +
                                               std::to_string(grad) + " disagrees with " +
                                               std::to_string(closed) + " at k=" +
                                               std::to_string(k) + " x=" + std::to_string(x));
                }
            }
            records.push_back({"iou", k, x, loss, std::abs(grad)});
        }
    }
    sort_records(records);
    return records;
}

std::vector<SweepRecord> sweep_norm_gradients(const std::vector<double>& anchor_widths,
                                              const std::vector<double>& pixel_errors) {
    for (double w : anchor_widths)
        if (!std::isfinite(w) || w <= 0.0)
            throw ConfigError("anchor width must be positive, got " + std::to_string(w));
    for (double e : pixel_errors)
        if (!std::isfinite(e) || e < 0.0)
            throw ConfigError("pixel error must be non-negative, got " + std::to_string(e));

    std::vector<SweepRecord> records;
    records.reserve(anchor_widths.size() * pixel_errors.size());
    for (double w : anchor_widths) {
        for (double e : pixel_errors) {
            // Anchor on the ground truth so the target offset is exactly zero.
            const Anchor anchor{0.0, 0.0, w, w};
            const BoxXYWH gt{0.0, 0.0, w, w};
            const BoxXYWH pred{e, 0.0, w, w};
            const LossValueGrad l2 = l2_loss(encode_offsets(pred, anchor),
                                             encode_offsets(gt, anchor));
            records.push_back({"l2", w, e, l2.value, std::abs(l2.grad[0])});
        }
    }
    sort_records(records);
    return records;
}

void sort_records(std::vector<SweepRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.loss_name, a.scale_ratio, a.shift_px) <
               std::tie(b.loss_name, b.scale_ratio, b.shift_px);
    });
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
    using detail::format_double;
    out << "loss_name,scale_ratio,shift_px,loss,grad_mag\n";
    for (const SweepRecord& r : records) {
        out << r.loss_name << ',' << format_double(r.scale_ratio) << ','
            << format_double(r.shift_px) << ',' << format_double(r.loss) << ','
            << format_double(r.grad_mag) << '\n';
    }
}

} // namespace cbbl
