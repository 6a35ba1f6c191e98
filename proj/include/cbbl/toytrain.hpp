#ifndef CBBL_TOYTRAIN_HPP
#define CBBL_TOYTRAIN_HPP

#include "cbbl/boxes.hpp"
#include "cbbl/grid.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace cbbl {

// COCO size classes by gt area: small < 32^2, large > 96^2, medium otherwise.
enum class ScaleBucket { Small = 0, Medium = 1, Large = 2 };
inline constexpr int kNumBuckets = 3;

std::string_view to_string(ScaleBucket bucket);
ScaleBucket bucket_for_area(double area_px2);

// Feature layout: [tx, ty, tw, th, ln(wa / 64), ln(ha / 64), 1]. Every entry
// except the trailing bias receives N(0, sigma^2) noise.
inline constexpr int kFeatureDim = 7;
inline constexpr double kFeatureNoiseSigma = 0.1;
inline constexpr double kLogDimReference = 64.0;

struct Sample {
    Anchor anchor;
    BoxXYWH gt;
    std::array<double, kFeatureDim> feature{};
    ScaleBucket bucket = ScaleBucket::Small;
};

struct SyntheticScene {
    double image_size = 512.0;
    std::vector<Sample> samples;
};

// Noise-free features of (anchor, gt); add noise separately.
std::array<double, kFeatureDim> clean_features(const Anchor& anchor, const BoxXYWH& gt);

// Generation parameters shared by every scene.
inline constexpr double kCenterJitterPx = 4.0;     // anchor center offset, per axis
inline constexpr double kLogSizeJitter = 0.25;     // |ln(w / wa)| bound
inline constexpr double kMinAnchorIou = 0.3;
inline constexpr double kAspectJitter = 1.5;       // gt aspect in [1/1.5, 1.5]
inline constexpr double kMaxGtSide = 200.0;        // large-bucket side bound

// Largest |T_x|, |T_y| any generated sample can carry:
// kCenterJitterPx / (smallest gt side * e^{-kLogSizeJitter}).
double max_center_offset();

// count_per_bucket samples in each bucket, deterministic in (seed, count,
// image_size). Throws ConfigError when count_per_bucket < 1 or the largest
// bucket does not fit in the image.
SyntheticScene generate_scene(std::uint64_t seed, int count_per_bucket,
                              double image_size = 512.0);

enum class HeadKind { RegressionL2, RegressionSmoothL1, Cbbl };

std::string_view to_string(HeadKind head);
// Accepts "regression-l2" / "l2", "regression-smooth-l1" / "smooth-l1", "cbbl".
HeadKind head_kind_from_string(std::string_view name);

// Per-head default step size. Head outputs live in different units (offsets
// vs logits), so each head has its own default, picked by final mean IoU on a
// held-out scene (generate_scene(1, 100), train seed 1, 50 epochs) over
// {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1, 2, 5}.
double default_learning_rate(HeadKind head);

struct TrainConfig {
    HeadKind head = HeadKind::Cbbl;
    GridSpec grid = GridSpec::uniform(2.0, 10);
    double um_weight = 1.0;
    double smooth_l1_delta = 1.0 / 9.0;
    // Unset means default_learning_rate(head).
    std::optional<double> learning_rate;
    int epochs = 50;
    int batch_size = 16;
    std::uint64_t seed = 0;
    // Row-major (outputs x kFeatureDim). Empty means all zeros.
    std::vector<double> initial_weights;

    // Outputs of the linear head: 4 offsets, or 4 * (n + 1) logits.
    int head_outputs() const;

    double effective_learning_rate() const {
        return learning_rate ? *learning_rate : default_learning_rate(head);
    }

    // Throws ConfigError.
    void validate() const;
};

struct EpochReport {
    int epoch = 0;
    // Mean L2 norm of dLoss/d(head output) per sample, by bucket.
    std::array<double, kNumBuckets> mean_grad_mag{};
    // Mean IoU between decoded predictions and ground truth, by bucket.
    std::array<double, kNumBuckets> mean_iou{};
    std::array<int, kNumBuckets> count{};
    // Mean per-sample loss over the epoch.
    double loss = 0.0;
    // Largest |dCE/dl_i| seen at the loss layer (cbbl head only).
    double max_ce_logit_grad = 0.0;
};

// Mini-batch gradient descent on a linear head, no momentum. Statistics are
// accumulated during the pass, before each batch's update. Throws
// DivergenceError when a loss, gradient or prediction becomes non-finite.
std::vector<EpochReport> train(const SyntheticScene& scene, const TrainConfig& config);

struct SalienceReport {
    // Final-epoch / epoch-0 mean gradient magnitude, per bucket. Empty when
    // the bucket has no samples or a zero epoch-0 gradient.
    std::array<std::optional<double>, kNumBuckets> bucket_ratio;
    // bucket_ratio[Small] / bucket_ratio[Large], when both are defined.
    std::optional<double> small_over_large;
    // Final-epoch mean gradient of the small bucket over that of the large
    // bucket, without normalizing by epoch 0.
    std::optional<double> final_small_over_large;
};

// Throws ConfigError with fewer than two reports.
SalienceReport gradient_salience(const std::vector<EpochReport>& reports);

// Header "epoch,bucket,mean_grad_mag,mean_iou,loss", rows sorted by
// (epoch, bucket) with buckets ordered small, medium, large.
void write_epoch_csv(std::ostream& out, const std::vector<EpochReport>& reports);

} // namespace cbbl

#endif // CBBL_TOYTRAIN_HPP
