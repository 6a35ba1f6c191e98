#ifndef CBBL_DISTORTION_HPP
#define CBBL_DISTORTION_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace cbbl {

// Shifted-square IoU sweep.
//
// The ground truth is a square of side gt_side. Each prediction is a square
// of side k * gt_side whose left edge starts on the ground truth's left edge
// and which is shifted outward (to the left) by x pixels. The boxes overlap
// while x < k * gt_side, so shifts are sampled on
//   x_j = j / (shift_samples - 1) * shift_max_fraction * k * gt_side
// and shift_max_fraction must lie in [0, 1). For k = 1 this reduces to two
// equal squares, IoU = (s - x) / (s + x).
struct SweepConfig {
    double gt_side = 64.0;
    std::vector<double> scale_ratios = {1.0, 0.75, 0.5, 0.25};
    int shift_samples = 257;
    double shift_max_fraction = 0.9;

    // Throws ConfigError.
    void validate() const;
};

struct SweepRecord {
    std::string loss_name;
    // Prediction/gt side ratio for "iou" rows; anchor width in pixels for
    // "l2" rows.
    double scale_ratio = 0.0;
    double shift_px = 0.0;
    double loss = 0.0;
    double grad_mag = 0.0;
};

// Central-difference step (pixels) used for |dL/dx| in sweep_iou.
inline constexpr double kSweepFdStep = 1e-4;

// Evaluates the IoU loss and |dL/dx| for every (k, x) pair. Gradients are
// central differences (forward differences for x below the step, since the
// sweep domain starts at x = 0) and are checked against the closed-form
// gradient of iou_loss wherever that is differentiable. Sorted by (k, x).
std::vector<SweepRecord> sweep_iou(const SweepConfig& config);

// Gradient of the squared-L2 loss on T_x when the prediction's center is
// `error` pixels from the ground truth and the anchor has width w_a:
// 2 * error / w_a. One "l2" record per (width, error) pair.
// Throws ConfigError for non-positive widths or negative errors.
std::vector<SweepRecord> sweep_norm_gradients(const std::vector<double>& anchor_widths,
                                              const std::vector<double>& pixel_errors);

// Sorts by (loss_name, scale_ratio, shift_px).
void sort_records(std::vector<SweepRecord>& records);

// Header "loss_name,scale_ratio,shift_px,loss,grad_mag" then one row per
// record, in the order given.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);

} // namespace cbbl

#endif // CBBL_DISTORTION_HPP
