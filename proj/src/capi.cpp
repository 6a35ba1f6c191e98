#include "cbbl/cbbl.h"

#include "cbbl/boxes.hpp"
#include "cbbl/distortion.hpp"
#include "cbbl/errors.hpp"
#include "cbbl/grid.hpp"
#include "cbbl/grid_json.hpp"
#include "cbbl/losses.hpp"
#include "cbbl/toytrain.hpp"
#include "cbbl/verify.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <new>
#include <string>
#include <vector>

struct cbbl_grid {
    cbbl::GridSpec spec;
};

struct cbbl_records {
    std::vector<cbbl::SweepRecord> records;
};

struct cbbl_scene {
    cbbl::SyntheticScene scene;
};

struct cbbl_train_run {
    std::vector<cbbl::EpochReport> reports;
};

struct cbbl_verify_report {
    std::vector<cbbl::CheckResult> checks;
};

namespace {

thread_local std::string g_last_error;
thread_local int g_failed_epoch = -1;

class NullArgument : public std::invalid_argument {
public:
    explicit NullArgument(const char* name)
        : std::invalid_argument(std::string("argument '") + name + "' is NULL") {}
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BufferTooSmall : public std::length_error {
public:
    using std::length_error::length_error;
};

template <class T>
T& deref(T* p, const char* name) {
    if (p == nullptr) throw NullArgument(name);
    return *p;
}

const char* require(const char* s, const char* name) {
    if (s == nullptr) throw NullArgument(name);
    return s;
}

template <class F>
cbbl_status try_(F&& f) {
    g_last_error.clear();
    try {
        f();
        return CBBL_OK;
    } catch (const NullArgument& e) {
        g_last_error = e.what();
        return CBBL_ERR_NULL_ARGUMENT;
    } catch (const cbbl::ConfigError& e) {
        g_last_error = e.what();
        return CBBL_ERR_CONFIG;
    } catch (const cbbl::DomainError& e) {
        g_last_error = e.what();
        return CBBL_ERR_DOMAIN;
    } catch (const cbbl::DivergenceError& e) {
        g_last_error = e.what();
        g_failed_epoch = e.epoch();
        return CBBL_ERR_DIVERGED;
    } catch (const IoError& e) {
        g_last_error = e.what();
        return CBBL_ERR_IO;
    } catch (const BufferTooSmall& e) {
        g_last_error = e.what();
        return CBBL_ERR_BUFFER_TOO_SMALL;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CBBL_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CBBL_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return CBBL_ERR_INTERNAL;
    }
}

cbbl::BoxXYWH to_cpp(const cbbl_box& b) { return {b.x, b.y, b.w, b.h}; }
cbbl_box to_c(const cbbl::BoxXYWH& b) { return {b.x, b.y, b.w, b.h}; }
cbbl::OffsetVector to_cpp(const cbbl_offsets& o) { return {o.tx, o.ty, o.tw, o.th}; }
cbbl_offsets to_c(const cbbl::OffsetVector& o) { return {o.tx, o.ty, o.tw, o.th}; }
cbbl::TwoHotLabel to_cpp(const cbbl_two_hot& l) { return {l.i_left, l.i_right, l.p_left, l.p_right}; }
cbbl_two_hot to_c(const cbbl::TwoHotLabel& l) { return {l.i_left, l.i_right, l.p_left, l.p_right}; }

std::span<const double> array_arg(const double* values, std::size_t length, const char* name) {
    if (length > 0 && values == nullptr) throw NullArgument(name);
    return {values, length};
}

void copy_grad(const std::vector<double>& grad, double* out) {
    if (out != nullptr) std::memcpy(out, grad.data(), grad.size() * sizeof(double));
}

std::ofstream open_for_write(const char* path) {
    std::ofstream out(require(path, "path"), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(std::string("cannot open '") + path + "' for writing");
    return out;
}

void finish_write(std::ofstream& out, const char* path) {
    out.flush();
    if (!out) throw IoError(std::string("failed writing '") + path + "'");
}

cbbl::HeadKind to_cpp(cbbl_head head) {
    switch (head) {
    case CBBL_HEAD_REGRESSION_L2: return cbbl::HeadKind::RegressionL2;
    case CBBL_HEAD_REGRESSION_SMOOTH_L1: return cbbl::HeadKind::RegressionSmoothL1;
    case CBBL_HEAD_CBBL: return cbbl::HeadKind::Cbbl;
    }
    throw cbbl::ConfigError("unknown head " + std::to_string(static_cast<int>(head)));
}

constexpr double kDefaultRatios[] = {1.0, 0.75, 0.5, 0.25};

} // namespace

extern "C" {

const char* cbbl_version(void) { return "0.1.0"; }

const char* cbbl_status_string(cbbl_status status) {
    switch (status) {
    case CBBL_OK: return "ok";
    case CBBL_ERR_CONFIG: return "configuration error";
    case CBBL_ERR_DOMAIN: return "domain error";
    case CBBL_ERR_DIVERGED: return "training diverged";
    case CBBL_ERR_VERIFY: return "verification failed";
    case CBBL_ERR_IO: return "i/o error";
    case CBBL_ERR_NULL_ARGUMENT: return "null argument";
    case CBBL_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case CBBL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* cbbl_last_error(void) { return g_last_error.c_str(); }

// ---- boxes

cbbl_status cbbl_encode_offsets(const cbbl_box* box, const cbbl_box* anchor, cbbl_offsets* out) {
    return try_([&] {
        deref(out, "out") = to_c(cbbl::encode_offsets(to_cpp(deref(box, "box")),
                                                      to_cpp(deref(anchor, "anchor"))));
    });
}

cbbl_status cbbl_decode_offsets(const cbbl_offsets* offsets, const cbbl_box* anchor,
                                cbbl_box* out) {
    return try_([&] {
        deref(out, "out") = to_c(cbbl::decode_offsets(to_cpp(deref(offsets, "offsets")),
                                                      to_cpp(deref(anchor, "anchor"))));
    });
}

cbbl_status cbbl_iou(const cbbl_box* a, const cbbl_box* b, double* out) {
    return try_([&] { deref(out, "out") = cbbl::iou(to_cpp(deref(a, "a")), to_cpp(deref(b, "b"))); });
}

// ---- grid

cbbl_status cbbl_grid_create(double alpha, int32_t n, cbbl_grid_mode mode, double in_beta,
                             int paper_literal, cbbl_grid** out) {
    return try_([&] {
        cbbl_grid*& slot = deref(out, "out");
        slot = nullptr;
        cbbl::GridMode m;
        switch (mode) {
        case CBBL_GRID_UNIFORM: m = cbbl::GridMode::Uniform; break;
        case CBBL_GRID_INTERVAL_NON_UNIFORM: m = cbbl::GridMode::IntervalNonUniform; break;
        default: throw cbbl::ConfigError("unknown grid mode " + std::to_string(static_cast<int>(mode)));
        }
        slot = new cbbl_grid{cbbl::GridSpec(alpha, n, m, in_beta, paper_literal != 0)};
    });
}

cbbl_status cbbl_grid_create_from_json(const char* json, cbbl_grid** out) {
    return try_([&] {
        cbbl_grid*& slot = deref(out, "out");
        slot = nullptr;
        slot = new cbbl_grid{cbbl::grid_from_json_string(require(json, "json"))};
    });
}

cbbl_status cbbl_grid_to_json(const cbbl_grid* grid, char* buffer, size_t capacity,
                              size_t* required) {
    return try_([&] {
        const std::string text = cbbl::grid_to_json(deref(grid, "grid").spec).dump();
        if (required != nullptr) *required = text.size() + 1;
        if (buffer == nullptr || capacity < text.size() + 1)
            throw BufferTooSmall("grid JSON needs " + std::to_string(text.size() + 1) + " bytes");
        std::memcpy(buffer, text.c_str(), text.size() + 1);
    });
}

void cbbl_grid_destroy(cbbl_grid* grid) { delete grid; }

cbbl_status cbbl_grid_size(const cbbl_grid* grid, size_t* out) {
    return try_([&] { deref(out, "out") = deref(grid, "grid").spec.size(); });
}

cbbl_status cbbl_grid_value(const cbbl_grid* grid, int32_t index, double* out) {
    return try_([&] { deref(out, "out") = deref(grid, "grid").spec.value(index); });
}

cbbl_status cbbl_grid_quantize(const cbbl_grid* grid, double target, cbbl_two_hot* out) {
    return try_([&] { deref(out, "out") = to_c(cbbl::quantize(deref(grid, "grid").spec, target)); });
}

cbbl_status cbbl_grid_clamp(const cbbl_grid* grid, double target, double* out) {
    return try_([&] { deref(out, "out") = cbbl::clamp_to_grid(deref(grid, "grid").spec, target); });
}

cbbl_status cbbl_grid_restore(const cbbl_grid* grid, const double* values, size_t length,
                              cbbl_input_kind kind, cbbl_restore_mode mode, double* out) {
    return try_([&] {
        const cbbl::GridSpec& spec = deref(grid, "grid").spec;
        double& result = deref(out, "out");
        const auto input = array_arg(values, length, "values");
        const auto dist = kind == CBBL_INPUT_PROBABILITIES
                              ? cbbl::ConfidenceDistribution::from_probabilities(input)
                              : cbbl::ConfidenceDistribution::from_logits(input);
        result = mode == CBBL_RESTORE_TOP2 ? cbbl::restore_top2(spec, dist)
                                           : cbbl::restore_full_band(spec, dist);
    });
}

// ---- losses

cbbl_status cbbl_ce_loss(const cbbl_two_hot* label, const double* logits, size_t length,
                         double* value, double* grad) {
    return try_([&] {
        const auto lg = cbbl::ce_loss(to_cpp(deref(label, "label")),
                                      cbbl::ConfidenceDistribution::from_logits(
                                          array_arg(logits, length, "logits")));
        deref(value, "value") = lg.value;
        copy_grad(lg.grad, grad);
    });
}

cbbl_status cbbl_um_loss(const cbbl_two_hot* label, const double* logits, size_t length,
                         double* value, double* grad) {
    return try_([&] {
        const auto lg = cbbl::um_loss(to_cpp(deref(label, "label")),
                                      cbbl::ConfidenceDistribution::from_logits(
                                          array_arg(logits, length, "logits")));
        deref(value, "value") = lg.value;
        copy_grad(lg.grad, grad);
    });
}

cbbl_status cbbl_cbbl_loss(const cbbl_two_hot* label, const double* logits, size_t length,
                           double um_weight, double* value, double* grad) {
    return try_([&] {
        const auto lg = cbbl::cbbl_loss(to_cpp(deref(label, "label")),
                                        cbbl::ConfidenceDistribution::from_logits(
                                            array_arg(logits, length, "logits")),
                                        um_weight);
        deref(value, "value") = lg.value;
        copy_grad(lg.grad, grad);
    });
}

cbbl_status cbbl_l2_loss(const cbbl_offsets* t, const cbbl_offsets* t_hat, double* value,
                         double* grad) {
    return try_([&] {
        const auto lg = cbbl::l2_loss(to_cpp(deref(t, "t")), to_cpp(deref(t_hat, "t_hat")));
        deref(value, "value") = lg.value;
        copy_grad(lg.grad, grad);
    });
}

cbbl_status cbbl_smooth_l1_loss(const cbbl_offsets* t, const cbbl_offsets* t_hat, double delta,
                                double* value, double* grad) {
    return try_([&] {
        const auto lg = cbbl::smooth_l1_loss(to_cpp(deref(t, "t")), to_cpp(deref(t_hat, "t_hat")),
                                             {delta});
        deref(value, "value") = lg.value;
        copy_grad(lg.grad, grad);
    });
}

cbbl_status cbbl_iou_loss(const cbbl_box* gt, const cbbl_box* pred, double* value,
                          double* grad_x) {
    return try_([&] {
        const auto lg = cbbl::iou_loss(to_cpp(deref(gt, "gt")), to_cpp(deref(pred, "pred")));
        deref(value, "value") = lg.value;
        copy_grad(lg.grad, grad_x);
    });
}

// ---- sweeps

void cbbl_sweep_config_default(cbbl_sweep_config* config) {
    if (config == nullptr) return;
    const cbbl::SweepConfig d;
    config->gt_side = d.gt_side;
    config->scale_ratios = kDefaultRatios;
    config->num_ratios = sizeof(kDefaultRatios) / sizeof(kDefaultRatios[0]);
    config->shift_samples = d.shift_samples;
    config->shift_max_fraction = d.shift_max_fraction;
}

cbbl_status cbbl_sweep_iou(const cbbl_sweep_config* config, cbbl_records** out) {
    return try_([&] {
        cbbl_records*& slot = deref(out, "out");
        slot = nullptr;
        const cbbl_sweep_config& c = deref(config, "config");
        cbbl::SweepConfig cfg;
        cfg.gt_side = c.gt_side;
        const auto ratios = array_arg(c.scale_ratios, c.num_ratios, "scale_ratios");
        cfg.scale_ratios.assign(ratios.begin(), ratios.end());
        cfg.shift_samples = c.shift_samples;
        cfg.shift_max_fraction = c.shift_max_fraction;
        slot = new cbbl_records{cbbl::sweep_iou(cfg)};
    });
}

cbbl_status cbbl_sweep_norm(const double* anchor_widths, size_t num_widths,
                            const double* pixel_errors, size_t num_errors, cbbl_records** out) {
    return try_([&] {
        cbbl_records*& slot = deref(out, "out");
        slot = nullptr;
        const auto w = array_arg(anchor_widths, num_widths, "anchor_widths");
        const auto e = array_arg(pixel_errors, num_errors, "pixel_errors");
        slot = new cbbl_records{cbbl::sweep_norm_gradients({w.begin(), w.end()}, {e.begin(), e.end()})};
    });
}

cbbl_status cbbl_records_merge(cbbl_records* dst, cbbl_records* src) {
    return try_([&] {
        auto& d = deref(dst, "dst").records;
        auto& s = deref(src, "src").records;
        if (&d == &s) return;
        d.insert(d.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
        s.clear();
        cbbl::sort_records(d);
    });
}

cbbl_status cbbl_records_size(const cbbl_records* records, size_t* out) {
    return try_([&] { deref(out, "out") = deref(records, "records").records.size(); });
}

cbbl_status cbbl_records_get(const cbbl_records* records, size_t index, cbbl_record* out) {
    return try_([&] {
        const auto& all = deref(records, "records").records;
        if (index >= all.size())
            throw cbbl::RangeError("record index " + std::to_string(index) + " out of range");
        const auto& r = all[index];
        deref(out, "out") = {r.loss_name.c_str(), r.scale_ratio, r.shift_px, r.loss, r.grad_mag};
    });
}

cbbl_status cbbl_records_write_csv(const cbbl_records* records, const char* path) {
    return try_([&] {
        const auto& all = deref(records, "records").records;
        std::ofstream out = open_for_write(path);
        cbbl::write_sweep_csv(out, all);
        finish_write(out, path);
    });
}

void cbbl_records_destroy(cbbl_records* records) { delete records; }

// ---- training

cbbl_status cbbl_scene_generate(uint64_t seed, int32_t count_per_bucket, double image_size,
                                cbbl_scene** out) {
    return try_([&] {
        cbbl_scene*& slot = deref(out, "out");
        slot = nullptr;
        slot = new cbbl_scene{cbbl::generate_scene(seed, count_per_bucket, image_size)};
    });
}

cbbl_status cbbl_scene_size(const cbbl_scene* scene, size_t* out) {
    return try_([&] { deref(out, "out") = deref(scene, "scene").scene.samples.size(); });
}

void cbbl_scene_destroy(cbbl_scene* scene) { delete scene; }

void cbbl_train_config_default(cbbl_train_config* config, cbbl_head head) {
    if (config == nullptr) return;
    const cbbl::TrainConfig d;
    config->head = head;
    config->grid = nullptr;
    config->um_weight = d.um_weight;
    config->smooth_l1_delta = d.smooth_l1_delta;
    config->learning_rate = -1.0;
    config->epochs = d.epochs;
    config->batch_size = d.batch_size;
    config->seed = d.seed;
}

double cbbl_default_learning_rate(cbbl_head head) {
    switch (head) {
    case CBBL_HEAD_REGRESSION_L2: return cbbl::default_learning_rate(cbbl::HeadKind::RegressionL2);
    case CBBL_HEAD_REGRESSION_SMOOTH_L1:
        return cbbl::default_learning_rate(cbbl::HeadKind::RegressionSmoothL1);
    case CBBL_HEAD_CBBL: return cbbl::default_learning_rate(cbbl::HeadKind::Cbbl);
    }
    return std::nan("");
}

cbbl_status cbbl_train(const cbbl_scene* scene, const cbbl_train_config* config,
                       cbbl_train_run** out, int32_t* failed_epoch) {
    g_failed_epoch = -1;
    const cbbl_status status = try_([&] {
        cbbl_train_run*& slot = deref(out, "out");
        slot = nullptr;
        const cbbl_train_config& c = deref(config, "config");
        cbbl::TrainConfig cfg;
        cfg.head = to_cpp(c.head);
        if (c.grid != nullptr) cfg.grid = c.grid->spec;
        cfg.um_weight = c.um_weight;
        cfg.smooth_l1_delta = c.smooth_l1_delta;
        if (!std::isnan(c.learning_rate) && c.learning_rate >= 0.0) cfg.learning_rate = c.learning_rate;
        cfg.epochs = c.epochs;
        cfg.batch_size = c.batch_size;
        cfg.seed = c.seed;
        slot = new cbbl_train_run{cbbl::train(deref(scene, "scene").scene, cfg)};
    });
    if (status == CBBL_ERR_DIVERGED && failed_epoch != nullptr) *failed_epoch = g_failed_epoch;
    return status;
}

cbbl_status cbbl_train_run_epochs(const cbbl_train_run* run, size_t* out) {
    return try_([&] { deref(out, "out") = deref(run, "run").reports.size(); });
}

cbbl_status cbbl_train_run_get(const cbbl_train_run* run, size_t epoch, cbbl_epoch_report* out) {
    return try_([&] {
        const auto& reports = deref(run, "run").reports;
        if (epoch >= reports.size())
            throw cbbl::RangeError("epoch " + std::to_string(epoch) + " out of range");
        const auto& r = reports[epoch];
        cbbl_epoch_report& o = deref(out, "out");
        o.epoch = r.epoch;
        for (int b = 0; b < cbbl::kNumBuckets; ++b) {
            o.mean_grad_mag[b] = r.mean_grad_mag[b];
            o.mean_iou[b] = r.mean_iou[b];
            o.count[b] = r.count[b];
        }
        o.loss = r.loss;
        o.max_ce_logit_grad = r.max_ce_logit_grad;
    });
}

cbbl_status cbbl_train_run_salience(const cbbl_train_run* run, cbbl_salience* out) {
    return try_([&] {
        const cbbl::SalienceReport s = cbbl::gradient_salience(deref(run, "run").reports);
        cbbl_salience& o = deref(out, "out");
        o = {};
        for (int b = 0; b < cbbl::kNumBuckets; ++b) {
            o.has_bucket_ratio[b] = s.bucket_ratio[b].has_value();
            o.bucket_ratio[b] = s.bucket_ratio[b].value_or(std::nan(""));
        }
        o.has_small_over_large = s.small_over_large.has_value();
        o.small_over_large = s.small_over_large.value_or(std::nan(""));
        o.has_final_small_over_large = s.final_small_over_large.has_value();
        o.final_small_over_large = s.final_small_over_large.value_or(std::nan(""));
    });
}

cbbl_status cbbl_train_run_write_csv(const cbbl_train_run* run, const char* path) {
    return try_([&] {
        const auto& reports = deref(run, "run").reports;
        std::ofstream out = open_for_write(path);
        cbbl::write_epoch_csv(out, reports);
        finish_write(out, path);
    });
}

void cbbl_train_run_destroy(cbbl_train_run* run) { delete run; }

// ---- verification

cbbl_status cbbl_verify_run(uint64_t seed, int32_t samples, int inject_fault,
                            cbbl_verify_report** out) {
    bool all_passed = true;
    const cbbl_status status = try_([&] {
        cbbl_verify_report*& slot = deref(out, "out");
        slot = nullptr;
        cbbl::VerifyOptions opts;
        opts.seed = seed;
        opts.samples = samples;
        opts.inject_fault = inject_fault != 0;
        slot = new cbbl_verify_report{cbbl::run_verification(opts)};
        for (const auto& c : slot->checks) all_passed &= c.passed;
    });
    if (status != CBBL_OK) return status;
    if (!all_passed) {
        g_last_error = "one or more verification checks failed";
        return CBBL_ERR_VERIFY;
    }
    return CBBL_OK;
}

cbbl_status cbbl_verify_report_size(const cbbl_verify_report* report, size_t* out) {
    return try_([&] { deref(out, "out") = deref(report, "report").checks.size(); });
}

cbbl_status cbbl_verify_report_get(const cbbl_verify_report* report, size_t index,
                                   cbbl_check* out) {
    return try_([&] {
        const auto& checks = deref(report, "report").checks;
        if (index >= checks.size())
            throw cbbl::RangeError("check index " + std::to_string(index) + " out of range");
        const auto& c = checks[index];
        deref(out, "out") = {c.name.c_str(), c.passed ? 1 : 0, c.max_error, c.tolerance, c.evaluated};
    });
}

void cbbl_verify_report_destroy(cbbl_verify_report* report) { delete report; }

} // extern "C"
