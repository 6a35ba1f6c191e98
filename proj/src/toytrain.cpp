#include "cbbl/toytrain.hpp"

#include "cbbl/errors.hpp"
#include "cbbl/losses.hpp"
#include "format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace cbbl {

namespace {

// Square-root-area ranges per bucket. Areas stay strictly inside the COCO
// thresholds for any aspect ratio since w * h == side^2.
struct SideRange {
    double lo, hi;
};
constexpr std::array<SideRange, kNumBuckets> kBucketSides = {{
    {8.0, 30.0},
    {34.0, 94.0},
    {100.0, kMaxGtSide},
}};

constexpr int kMaxAnchorAttempts = 10000;

} // namespace

std::string_view to_string(ScaleBucket bucket) {
    switch (bucket) {
    case ScaleBucket::Small: return "small";
    case ScaleBucket::Medium: return "medium";
    case ScaleBucket::Large: return "large";
    }
    return "unknown";
}

ScaleBucket bucket_for_area(double area_px2) {
    if (area_px2 < 32.0 * 32.0) return ScaleBucket::Small;
    if (area_px2 > 96.0 * 96.0) return ScaleBucket::Large;
    return ScaleBucket::Medium;
}

std::array<double, kFeatureDim> clean_features(const Anchor& anchor, const BoxXYWH& gt) {
    const OffsetVector t = encode_offsets(gt, anchor);
    return {t.tx,
            t.ty,
            t.tw,
            t.th,
            std::log(anchor.w / kLogDimReference),
            std::log(anchor.h / kLogDimReference),
            1.0};
}

double max_center_offset() {
    const double min_gt_side = kBucketSides[0].lo / std::sqrt(kAspectJitter);
    return kCenterJitterPx / (min_gt_side * std::exp(-kLogSizeJitter));
}

SyntheticScene generate_scene(std::uint64_t seed, int count_per_bucket, double image_size) {
    if (count_per_bucket < 1)
        throw ConfigError("count_per_bucket must be >= 1, got " + std::to_string(count_per_bucket));
    const double widest = kMaxGtSide * std::sqrt(kAspectJitter);
    if (!std::isfinite(image_size) || image_size < widest)
        throw ConfigError("image_size " + std::to_string(image_size) +
                          " cannot hold the largest bucket (needs >= " + std::to_string(widest) +
                          " px)");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, kFeatureNoiseSigma);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SyntheticScene scene;
    scene.image_size = image_size;
    scene.samples.reserve(static_cast<std::size_t>(count_per_bucket) * kNumBuckets);

    for (int b = 0; b < kNumBuckets; ++b) {
        for (int c = 0; c < count_per_bucket; ++c) {
            Sample s;
            const double side = uniform(kBucketSides[b].lo, kBucketSides[b].hi);
            const double aspect = std::exp(uniform(-std::log(kAspectJitter), std::log(kAspectJitter)));
            s.gt.w = side * std::sqrt(aspect);
            s.gt.h = side / std::sqrt(aspect);
            s.gt.x = uniform(0.5 * s.gt.w, image_size - 0.5 * s.gt.w);
            s.gt.y = uniform(0.5 * s.gt.h, image_size - 0.5 * s.gt.h);
            s.bucket = bucket_for_area(s.gt.w * s.gt.h);

            int attempt = 0;
            do {
                if (++attempt > kMaxAnchorAttempts)
                    throw ConfigError("could not place an anchor with IoU > 0.3");
                s.anchor.x = s.gt.x + uniform(-kCenterJitterPx, kCenterJitterPx);
                s.anchor.y = s.gt.y + uniform(-kCenterJitterPx, kCenterJitterPx);
                s.anchor.w = s.gt.w * std::exp(uniform(-kLogSizeJitter, kLogSizeJitter));
                s.anchor.h = s.gt.h * std::exp(uniform(-kLogSizeJitter, kLogSizeJitter));
            } while (iou(s.anchor, s.gt) <= kMinAnchorIou);

            s.feature = clean_features(s.anchor, s.gt);
            for (int k = 0; k + 1 < kFeatureDim; ++k) s.feature[k] += noise(rng);
            scene.samples.push_back(s);
        }
    }
    return scene;
}

std::string_view to_string(HeadKind head) {
    switch (head) {
    case HeadKind::RegressionL2: return "regression-l2";
    case HeadKind::RegressionSmoothL1: return "regression-smooth-l1";
    case HeadKind::Cbbl: return "cbbl";
    }
    return "unknown";
}

HeadKind head_kind_from_string(std::string_view name) {
    if (name == "regression-l2" || name == "l2") return HeadKind::RegressionL2;
    if (name == "regression-smooth-l1" || name == "smooth-l1") return HeadKind::RegressionSmoothL1;
    if (name == "cbbl") return HeadKind::Cbbl;
    throw ConfigError("unknown head '" + std::string(name) +
                      "' (expected regression-l2, regression-smooth-l1 or cbbl)");
}

double default_learning_rate(HeadKind head) {
    switch (head) {
    case HeadKind::RegressionL2: return 0.05;
    case HeadKind::RegressionSmoothL1: return 0.01;
    case HeadKind::Cbbl: return 1.0;
    }
    return 0.01;
}

int TrainConfig::head_outputs() const {
    return head == HeadKind::Cbbl ? 4 * static_cast<int>(grid.size()) : 4;
}

void TrainConfig::validate() const {
    const double lr = effective_learning_rate();
    if (!std::isfinite(lr) || lr < 0.0)
        throw ConfigError("learning rate must be non-negative and finite");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!std::isfinite(um_weight) || um_weight < 0.0) throw ConfigError("um_weight must be >= 0");
    if (!std::isfinite(smooth_l1_delta) || smooth_l1_delta <= 0.0)
        throw ConfigError("smooth_l1_delta must be positive");
    const auto expected = static_cast<std::size_t>(head_outputs()) * kFeatureDim;
    if (!initial_weights.empty() && initial_weights.size() != expected)
        throw ConfigError("initial_weights has " + std::to_string(initial_weights.size()) +
                          " entries, expected " + std::to_string(expected));
}

namespace {

// Per-sample forward/backward through the loss layer.
struct SampleResult {
    double loss = 0.0;
    std::vector<double> grad; // dLoss / d(head output)
    OffsetVector prediction;
    double max_ce_grad = 0.0;
};

class LinearHead {
public:
    LinearHead(int outputs, std::vector<double> weights)
        : outputs_(outputs), weights_(std::move(weights)) {
        if (weights_.empty()) weights_.assign(static_cast<std::size_t>(outputs) * kFeatureDim, 0.0);
    }

    std::vector<double> forward(const std::array<double, kFeatureDim>& f) const {
        std::vector<double> out(outputs_, 0.0);
        for (int o = 0; o < outputs_; ++o) {
            const double* row = &weights_[static_cast<std::size_t>(o) * kFeatureDim];
            out[o] = std::inner_product(f.begin(), f.end(), row, 0.0);
        }
        return out;
    }

    std::vector<double>& weights() { return weights_; }

private:
    int outputs_;
    std::vector<double> weights_;
};

SampleResult evaluate(const TrainConfig& config, const Sample& sample,
                      const std::vector<double>& outputs) {
    const OffsetVector target = encode_offsets(sample.gt, sample.anchor);
    SampleResult r;

    switch (config.head) {
    case HeadKind::RegressionL2:
    case HeadKind::RegressionSmoothL1: {
        r.prediction = {outputs[0], outputs[1], outputs[2], outputs[3]};
        const LossValueGrad lg = config.head == HeadKind::RegressionL2
                                     ? l2_loss(r.prediction, target)
                                     : smooth_l1_loss(r.prediction, target, {config.smooth_l1_delta});
        r.loss = lg.value;
        r.grad = lg.grad;
        break;
    }
    case HeadKind::Cbbl: {
        const std::size_t bins = config.grid.size();
        r.grad.assign(outputs.size(), 0.0);
        for (int c = 0; c < 4; ++c) {
            const std::span<const double> logits(outputs.data() + c * bins, bins);
            const ConfidenceDistribution dist = ConfidenceDistribution::from_logits(logits);
            const TwoHotLabel label = quantize(config.grid, target[c]);
            const LossValueGrad ce = ce_loss(label, dist);
            r.loss += ce.value;
            for (std::size_t i = 0; i < bins; ++i) {
                r.grad[c * bins + i] = ce.grad[i];
                r.max_ce_grad = std::max(r.max_ce_grad, std::abs(ce.grad[i]));
            }
            if (config.um_weight > 0.0) {
                const LossValueGrad um = um_loss(label, dist);
                r.loss += config.um_weight * um.value;
                for (std::size_t i = 0; i < bins; ++i)
                    r.grad[c * bins + i] += config.um_weight * um.grad[i];
            }
            r.prediction[c] = restore_full_band(config.grid, dist);
        }
        break;
    }
    }
    return r;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double l2_norm(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

} // namespace

std::vector<EpochReport> train(const SyntheticScene& scene, const TrainConfig& config) {
    if (scene.samples.empty()) throw ConfigError("training scene is empty");
    config.validate();

    LinearHead head(config.head_outputs(), config.initial_weights);
    const std::size_t n_samples = scene.samples.size();
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed);

    const int outputs = config.head_outputs();
    std::vector<double> weight_grad(static_cast<std::size_t>(outputs) * kFeatureDim);
    std::vector<EpochReport> reports;
    reports.reserve(config.epochs);

    // Per-sample statistics, reduced in scene order so that the epoch means
    // do not depend on the shuffle.
    std::vector<double> sample_loss(n_samples), sample_grad(n_samples), sample_iou(n_samples);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        EpochReport rep;
        rep.epoch = epoch;

        for (std::size_t start = 0; start < n_samples; start += config.batch_size) {
            const std::size_t stop = std::min(n_samples, start + config.batch_size);
            std::fill(weight_grad.begin(), weight_grad.end(), 0.0);

            for (std::size_t k = start; k < stop; ++k) {
                const Sample& s = scene.samples[order[k]];
                const SampleResult r = evaluate(config, s, head.forward(s.feature));

                const BoxXYWH decoded = decode_offsets(r.prediction, s.anchor);
                const bool decoded_ok = std::isfinite(decoded.x) && std::isfinite(decoded.y) &&
                                        std::isfinite(decoded.w) && std::isfinite(decoded.h) &&
                                        decoded.w > 0.0 && decoded.h > 0.0;
                if (!std::isfinite(r.loss) || !all_finite(r.grad) || !decoded_ok)
                    throw DivergenceError("training diverged in epoch " + std::to_string(epoch) +
                                              " (non-finite loss, gradient or prediction)",
                                          epoch);

                sample_loss[order[k]] = r.loss;
                sample_grad[order[k]] = l2_norm(r.grad);
                sample_iou[order[k]] = iou(decoded, s.gt);
                rep.max_ce_logit_grad = std::max(rep.max_ce_logit_grad, r.max_ce_grad);

                for (int o = 0; o < outputs; ++o) {
                    if (r.grad[o] == 0.0) continue;
                    double* row = &weight_grad[static_cast<std::size_t>(o) * kFeatureDim];
                    for (int d = 0; d < kFeatureDim; ++d) row[d] += r.grad[o] * s.feature[d];
                }
            }

            const double step = config.effective_learning_rate() / static_cast<double>(stop - start);
            auto& w = head.weights();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * weight_grad[i];
            if (!all_finite(w))
                throw DivergenceError("training diverged in epoch " + std::to_string(epoch) +
                                          " (non-finite head weights)",
                                      epoch);
        }

        double loss_sum = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const int b = static_cast<int>(scene.samples[i].bucket);
            rep.mean_grad_mag[b] += sample_grad[i];
            rep.mean_iou[b] += sample_iou[i];
            rep.count[b] += 1;
            loss_sum += sample_loss[i];
        }
        for (int b = 0; b < kNumBuckets; ++b) {
            if (rep.count[b] == 0) continue;
            rep.mean_grad_mag[b] /= rep.count[b];
            rep.mean_iou[b] /= rep.count[b];
        }
        rep.loss = loss_sum / static_cast<double>(n_samples);
        reports.push_back(rep);
    }
    return reports;
}

SalienceReport gradient_salience(const std::vector<EpochReport>& reports) {
    if (reports.size() < 2) throw ConfigError("gradient salience needs at least two epochs");
    const EpochReport& first = reports.front();
    const EpochReport& last = reports.back();

    SalienceReport out;
    for (int b = 0; b < kNumBuckets; ++b) {
        if (first.count[b] == 0 || last.count[b] == 0 || first.mean_grad_mag[b] == 0.0) continue;
        out.bucket_ratio[b] = last.mean_grad_mag[b] / first.mean_grad_mag[b];
    }
    const int small = static_cast<int>(ScaleBucket::Small);
    const int large = static_cast<int>(ScaleBucket::Large);
    if (out.bucket_ratio[small] && out.bucket_ratio[large] && *out.bucket_ratio[large] != 0.0)
        out.small_over_large = *out.bucket_ratio[small] / *out.bucket_ratio[large];
    if (last.count[small] > 0 && last.count[large] > 0 && last.mean_grad_mag[large] != 0.0)
        out.final_small_over_large = last.mean_grad_mag[small] / last.mean_grad_mag[large];
    return out;
}

void write_epoch_csv(std::ostream& out, const std::vector<EpochReport>& reports) {
    using detail::format_double;
    std::vector<const EpochReport*> sorted;
    sorted.reserve(reports.size());
    for (const EpochReport& r : reports) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const EpochReport* a, const EpochReport* b) { return a->epoch < b->epoch; });

    out << "epoch,bucket,mean_grad_mag,mean_iou,loss\n";
    for (const EpochReport* r : sorted) {
        for (int b = 0; b < kNumBuckets; ++b) {
            out << r->epoch << ',' << to_string(static_cast<ScaleBucket>(b)) << ','
                << format_double(r->mean_grad_mag[b]) << ',' << format_double(r->mean_iou[b])
                << ',' << format_double(r->loss) << '\n';
        }
    }
}

} // namespace cbbl
