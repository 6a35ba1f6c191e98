// cbbl command-line front end. Links only the C API.
//
// Settings are layered: built-in defaults, then the JSON file given with
// --config, then command-line flags.

#include "cbbl/cbbl.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kDomain = 2, kDiverged = 3, kVerify = 4 };

struct CliError : std::runtime_error {
    CliError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
    int code;
};

int exit_code(cbbl_status s) {
    switch (s) {
    case CBBL_OK: return kOk;
    case CBBL_ERR_DOMAIN: return kDomain;
    case CBBL_ERR_DIVERGED: return kDiverged;
    case CBBL_ERR_VERIFY: return kVerify;
    default: return kConfig;
    }
}

void check(cbbl_status s) {
    if (s != CBBL_OK) throw CliError(exit_code(s), cbbl_last_error());
}

[[noreturn]] void config_error(const std::string& msg) { throw CliError(kConfig, msg); }

template <class T, void (*Destroy)(T*)>
struct Deleter {
    void operator()(T* p) const { Destroy(p); }
};
using GridPtr = std::unique_ptr<cbbl_grid, Deleter<cbbl_grid, cbbl_grid_destroy>>;
using RecordsPtr = std::unique_ptr<cbbl_records, Deleter<cbbl_records, cbbl_records_destroy>>;
using ScenePtr = std::unique_ptr<cbbl_scene, Deleter<cbbl_scene, cbbl_scene_destroy>>;
using RunPtr = std::unique_ptr<cbbl_train_run, Deleter<cbbl_train_run, cbbl_train_run_destroy>>;
using ReportPtr =
    std::unique_ptr<cbbl_verify_report, Deleter<cbbl_verify_report, cbbl_verify_report_destroy>>;

// Printed numbers are rounded to 15 significant digits so that values such as
// 0.25000000000000006 come out as 0.25.
double tidy(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::strtod(buf, nullptr);
}

json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return tidy(v);
}

// ---- config file

const std::set<std::string> kTopKeys = {"seed", "output", "grid", "encode", "decode",
                                        "sweep", "train", "verify"};
const std::set<std::string> kEncodeKeys = {"target", "box", "anchor"};
const std::set<std::string> kDecodeKeys = {"logits", "probabilities", "restore", "offsets", "anchor"};
const std::set<std::string> kSweepKeys = {"kind", "gt_side", "ratios", "shift_samples",
                                          "shift_max_fraction", "widths", "errors"};
const std::set<std::string> kTrainKeys = {"head", "epochs", "lr", "batch_size", "um_weight",
                                          "smooth_l1_delta", "count_per_bucket"};
const std::set<std::string> kVerifyKeys = {"samples", "inject_fault"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) config_error(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) config_error("unknown field '" + key + "' in " + where);
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) config_error("cannot read config file '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        config_error("config file '" + path + "' is not valid JSON: " + e.what());
    }
    reject_unknown(cfg, kTopKeys, "config");
    const std::pair<const char*, const std::set<std::string>*> sections[] = {
        {"encode", &kEncodeKeys}, {"decode", &kDecodeKeys}, {"sweep", &kSweepKeys},
        {"train", &kTrainKeys},   {"verify", &kVerifyKeys}};
    for (const auto& [name, keys] : sections)
        if (cfg.contains(name)) reject_unknown(cfg[name], *keys, std::string("config.") + name);
    return cfg;
}

template <class T>
std::optional<T> field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    try {
        const json& v = obj.at(key);
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw std::invalid_argument("number expected");
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!v.is_number_integer()) throw std::invalid_argument("integer expected");
            if constexpr (std::is_unsigned_v<T>)
                if (v.is_number_integer() && !v.is_number_unsigned())
                    throw std::invalid_argument("non-negative integer expected");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw std::invalid_argument("boolean expected");
        }
        return v.get<T>();
    } catch (const std::exception& e) {
        config_error(where + "." + key + ": " + e.what());
    }
}

json section(const json& cfg, const char* name) {
    return cfg.contains(name) ? cfg[name] : json::object();
}

// ---- flag helpers

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used == 0 || used != item.size()) config_error(std::string("bad number '") + item + "' in " + what);
        out.push_back(v);
    }
    if (out.empty()) config_error(std::string(what) + " must not be empty");
    return out;
}

cbbl_box box_from(const std::vector<double>& v, const char* what) {
    if (v.size() != 4) config_error(std::string(what) + " needs 4 values x,y,w,h");
    return {v[0], v[1], v[2], v[3]};
}

std::vector<double> list_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return {};
    const json& v = obj.at(key);
    if (!v.is_array()) config_error(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) config_error(where + "." + key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// Options shared by every subcommand.
struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
};

struct GridFlags {
    std::optional<double> alpha, beta;
    std::optional<int> n;
    std::optional<std::string> mode;
    bool paper_literal = false;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--alpha", g.alpha, "grid half-range");
    cmd->add_option("--n", g.n, "grid intervals (n+1 points)");
    cmd->add_option("--mode", g.mode, "uniform | interval-non-uniform");
    cmd->add_option("--beta", g.beta, "interval-non-uniform warp strength");
    cmd->add_flag("--paper-literal", g.paper_literal, "use spacing 2*alpha/(n+1)");
}

GridPtr make_grid(const json& cfg, const GridFlags& flags) {
    json g = cfg.contains("grid") ? cfg["grid"] : json::object();
    if (!g.is_object()) config_error("config.grid must be a JSON object");
    if (flags.alpha) g["alpha"] = *flags.alpha;
    if (flags.n) g["n"] = *flags.n;
    if (flags.mode) g["mode"] = *flags.mode;
    if (flags.beta) g["in_beta"] = *flags.beta;
    if (flags.paper_literal) g["paper_literal"] = true;
    cbbl_grid* raw = nullptr;
    check(cbbl_grid_create_from_json(g.dump().c_str(), &raw));
    return GridPtr(raw);
}

std::uint64_t seed_of(const json& cfg, const Common& common) {
    if (common.seed) return *common.seed;
    return field<std::uint64_t>(cfg, "seed", "config").value_or(0);
}

std::string output_of(const json& cfg, const Common& common, const std::string& fallback) {
    if (common.output) return *common.output;
    return field<std::string>(cfg, "output", "config").value_or(fallback);
}

void print_json(const json& j) { std::cout << j.dump() << '\n'; }

// ---- encode

struct EncodeArgs {
    GridFlags grid;
    std::optional<double> target;
    std::optional<std::string> box, anchor;
};

int run_encode(const Common& common, const EncodeArgs& a) {
    const json cfg = load_config(common.config_path);
    const json sec = section(cfg, "encode");

    std::optional<cbbl_box> box, anchor;
    if (a.box) box = box_from(parse_list(*a.box, "--box"), "--box");
    else if (sec.contains("box")) box = box_from(list_field(sec, "box", "config.encode"), "config.encode.box");
    if (a.anchor) anchor = box_from(parse_list(*a.anchor, "--anchor"), "--anchor");
    else if (sec.contains("anchor"))
        anchor = box_from(list_field(sec, "anchor", "config.encode"), "config.encode.anchor");

    if (box || anchor) {
        if (!box || !anchor) config_error("offset encoding needs both --box and --anchor");
        cbbl_offsets t{};
        check(cbbl_encode_offsets(&*box, &*anchor, &t));
        print_json({{"tx", number(t.tx)}, {"ty", number(t.ty)}, {"tw", number(t.tw)}, {"th", number(t.th)}});
        return kOk;
    }

    const std::optional<double> target = a.target ? a.target : field<double>(sec, "target", "config.encode");
    if (!target) config_error("encode needs --target (or --box and --anchor)");
    const GridPtr grid = make_grid(cfg, a.grid);
    cbbl_two_hot label{};
    check(cbbl_grid_quantize(grid.get(), *target, &label));
    print_json({{"i_left", label.i_left},
                {"i_right", label.i_right},
                {"p_left", number(label.p_left)},
                {"p_right", number(label.p_right)}});
    return kOk;
}

// ---- decode

struct DecodeArgs {
    GridFlags grid;
    std::optional<std::string> logits, probabilities, restore, offsets, anchor;
};

int run_decode(const Common& common, const DecodeArgs& a) {
    const json cfg = load_config(common.config_path);
    const json sec = section(cfg, "decode");

    std::optional<std::vector<double>> offsets;
    if (a.offsets) offsets = parse_list(*a.offsets, "--offsets");
    else if (sec.contains("offsets")) offsets = list_field(sec, "offsets", "config.decode");
    if (offsets) {
        if (offsets->size() != 4) config_error("offsets need 4 values tx,ty,tw,th");
        std::optional<cbbl_box> anchor;
        if (a.anchor) anchor = box_from(parse_list(*a.anchor, "--anchor"), "--anchor");
        else if (sec.contains("anchor"))
            anchor = box_from(list_field(sec, "anchor", "config.decode"), "config.decode.anchor");
        if (!anchor) config_error("offset decoding needs --anchor");
        const cbbl_offsets t{(*offsets)[0], (*offsets)[1], (*offsets)[2], (*offsets)[3]};
        cbbl_box out{};
        check(cbbl_decode_offsets(&t, &*anchor, &out));
        print_json({{"x", number(out.x)}, {"y", number(out.y)}, {"w", number(out.w)}, {"h", number(out.h)}});
        return kOk;
    }

    std::vector<double> values;
    cbbl_input_kind kind = CBBL_INPUT_LOGITS;
    if (a.logits && a.probabilities) config_error("give either --logits or --probabilities");
    if (a.logits) values = parse_list(*a.logits, "--logits");
    else if (a.probabilities) {
        values = parse_list(*a.probabilities, "--probabilities");
        kind = CBBL_INPUT_PROBABILITIES;
    } else if (sec.contains("logits") && sec.contains("probabilities")) {
        config_error("config.decode: give either logits or probabilities");
    } else if (sec.contains("logits")) {
        values = list_field(sec, "logits", "config.decode");
    } else if (sec.contains("probabilities")) {
        values = list_field(sec, "probabilities", "config.decode");
        kind = CBBL_INPUT_PROBABILITIES;
    } else {
        config_error("decode needs --logits, --probabilities or --offsets");
    }

    const std::string restore =
        a.restore ? *a.restore : field<std::string>(sec, "restore", "config.decode").value_or("full-band");
    cbbl_restore_mode mode;
    if (restore == "full-band") mode = CBBL_RESTORE_FULL_BAND;
    else if (restore == "top2") mode = CBBL_RESTORE_TOP2;
    else config_error("restore must be 'full-band' or 'top2', got '" + restore + "'");

    const GridPtr grid = make_grid(cfg, a.grid);
    double value = 0.0;
    check(cbbl_grid_restore(grid.get(), values.data(), values.size(), kind, mode, &value));
    print_json({{"value", number(value)}, {"restore", restore}});
    return kOk;
}

// ---- sweep

struct SweepArgs {
    std::optional<std::string> kind, ratios, widths, errors;
    std::optional<double> gt_side, shift_max_fraction;
    std::optional<int> shift_samples;
};

int run_sweep(const Common& common, const SweepArgs& a) {
    const json cfg = load_config(common.config_path);
    const json sec = section(cfg, "sweep");
    const std::string where = "config.sweep";

    cbbl_sweep_config sc{};
    cbbl_sweep_config_default(&sc);
    std::vector<double> ratios(sc.scale_ratios, sc.scale_ratios + sc.num_ratios);
    if (a.ratios) ratios = parse_list(*a.ratios, "--ratios");
    else if (sec.contains("ratios")) ratios = list_field(sec, "ratios", where);
    sc.scale_ratios = ratios.data();
    sc.num_ratios = ratios.size();
    sc.gt_side = a.gt_side ? *a.gt_side : field<double>(sec, "gt_side", where).value_or(sc.gt_side);
    sc.shift_samples =
        a.shift_samples ? *a.shift_samples : field<int>(sec, "shift_samples", where).value_or(sc.shift_samples);
    sc.shift_max_fraction = a.shift_max_fraction
                                ? *a.shift_max_fraction
                                : field<double>(sec, "shift_max_fraction", where).value_or(sc.shift_max_fraction);

    std::vector<double> widths{16, 32, 64, 128, 256};
    std::vector<double> errors{1, 2, 4, 8};
    if (a.widths) widths = parse_list(*a.widths, "--widths");
    else if (sec.contains("widths")) widths = list_field(sec, "widths", where);
    if (a.errors) errors = parse_list(*a.errors, "--errors");
    else if (sec.contains("errors")) errors = list_field(sec, "errors", where);

    const std::string kind = a.kind ? *a.kind : field<std::string>(sec, "kind", where).value_or("iou");
    if (kind != "iou" && kind != "norm" && kind != "all")
        config_error("sweep kind must be iou, norm or all, got '" + kind + "'");

    RecordsPtr records;
    if (kind == "iou" || kind == "all") {
        cbbl_records* raw = nullptr;
        check(cbbl_sweep_iou(&sc, &raw));
        records.reset(raw);
    }
    if (kind == "norm" || kind == "all") {
        cbbl_records* raw = nullptr;
        check(cbbl_sweep_norm(widths.data(), widths.size(), errors.data(), errors.size(), &raw));
        RecordsPtr norm(raw);
        if (records) check(cbbl_records_merge(records.get(), norm.get()));
        else records = std::move(norm);
    }

    const std::string path = output_of(cfg, common, "sweep.csv");
    check(cbbl_records_write_csv(records.get(), path.c_str()));
    std::size_t rows = 0;
    check(cbbl_records_size(records.get(), &rows));
    print_json({{"output", path}, {"rows", rows}, {"kind", kind}});
    return kOk;
}

// ---- train

struct TrainArgs {
    GridFlags grid;
    std::optional<std::string> head;
    std::optional<int> epochs, batch_size, count_per_bucket;
    std::optional<double> lr, um_weight, smooth_l1_delta;
};

cbbl_head head_from(const std::string& s) {
    if (s == "cbbl") return CBBL_HEAD_CBBL;
    if (s == "smooth-l1" || s == "smooth_l1" || s == "regression-smooth-l1") return CBBL_HEAD_REGRESSION_SMOOTH_L1;
    if (s == "l2" || s == "regression-l2") return CBBL_HEAD_REGRESSION_L2;
    config_error("unknown head '" + s + "' (expected cbbl, smooth-l1 or l2)");
}

const char* bucket_names[] = {"small", "medium", "large"};

int run_train(const Common& common, const TrainArgs& a) {
    const json cfg = load_config(common.config_path);
    const json sec = section(cfg, "train");
    const std::string where = "config.train";

    const std::string head_name = a.head ? *a.head : field<std::string>(sec, "head", where).value_or("smooth-l1");
    cbbl_train_config tc{};
    cbbl_train_config_default(&tc, head_from(head_name));
    tc.seed = seed_of(cfg, common);
    tc.epochs = a.epochs ? *a.epochs : field<int>(sec, "epochs", where).value_or(tc.epochs);
    tc.batch_size = a.batch_size ? *a.batch_size : field<int>(sec, "batch_size", where).value_or(tc.batch_size);
    tc.um_weight = a.um_weight ? *a.um_weight : field<double>(sec, "um_weight", where).value_or(tc.um_weight);
    tc.smooth_l1_delta =
        a.smooth_l1_delta ? *a.smooth_l1_delta : field<double>(sec, "smooth_l1_delta", where).value_or(tc.smooth_l1_delta);
    const std::optional<double> lr = a.lr ? a.lr : field<double>(sec, "lr", where);
    if (lr) {
        if (!(*lr >= 0.0)) config_error("learning rate must be >= 0");
        tc.learning_rate = *lr;
    }
    const int count =
        a.count_per_bucket ? *a.count_per_bucket : field<int>(sec, "count_per_bucket", where).value_or(100);

    const GridPtr grid = make_grid(cfg, a.grid);
    tc.grid = grid.get();

    cbbl_scene* scene_raw = nullptr;
    check(cbbl_scene_generate(tc.seed, count, 512.0, &scene_raw));
    const ScenePtr scene(scene_raw);

    cbbl_train_run* run_raw = nullptr;
    int32_t failed_epoch = -1;
    const cbbl_status st = cbbl_train(scene.get(), &tc, &run_raw, &failed_epoch);
    if (st == CBBL_ERR_DIVERGED) {
        std::ostringstream msg;
        msg << cbbl_last_error() << "; last finite epoch: ";
        if (failed_epoch > 0) msg << failed_epoch - 1;
        else msg << "none";
        throw CliError(kDiverged, msg.str());
    }
    check(st);
    const RunPtr run(run_raw);

    const std::string path = output_of(cfg, common, "train.csv");
    check(cbbl_train_run_write_csv(run.get(), path.c_str()));

    std::size_t epochs = 0;
    check(cbbl_train_run_epochs(run.get(), &epochs));
    cbbl_epoch_report last{};
    check(cbbl_train_run_get(run.get(), epochs - 1, &last));

    json iou = json::object();
    for (int b = 0; b < 3; ++b) iou[bucket_names[b]] = last.count[b] > 0 ? number(last.mean_iou[b]) : json(nullptr);
    json summary = {{"head", head_name},
                    {"seed", tc.seed},
                    {"epochs", epochs},
                    {"learning_rate", number(std::isnan(tc.learning_rate) || tc.learning_rate < 0
                                                 ? cbbl_default_learning_rate(tc.head)
                                                 : tc.learning_rate)},
                    {"final_mean_iou", iou},
                    {"final_loss", number(last.loss)},
                    {"output", path}};
    if (epochs >= 2) {
        cbbl_salience s{};
        check(cbbl_train_run_salience(run.get(), &s));
        summary["salience_small_over_large"] = s.has_small_over_large ? number(s.small_over_large) : json(nullptr);
    }
    print_json(summary);
    return kOk;
}

// ---- verify

struct VerifyArgs {
    std::optional<int> samples;
    bool inject_fault = false;
};

int run_verify(const Common& common, const VerifyArgs& a) {
    const json cfg = load_config(common.config_path);
    const json sec = section(cfg, "verify");
    const int samples = a.samples ? *a.samples : field<int>(sec, "samples", "config.verify").value_or(1000);
    const bool fault = a.inject_fault || field<bool>(sec, "inject_fault", "config.verify").value_or(false);

    cbbl_verify_report* raw = nullptr;
    const cbbl_status st = cbbl_verify_run(seed_of(cfg, common), samples, fault ? 1 : 0, &raw);
    if (st != CBBL_OK && st != CBBL_ERR_VERIFY) check(st);
    const ReportPtr report(raw);

    std::size_t n = 0;
    check(cbbl_verify_report_size(report.get(), &n));
    std::vector<std::string> failing;
    std::printf("%-40s %-6s %12s %12s %9s\n", "check", "result", "max_error", "tolerance", "evaluated");
    for (std::size_t i = 0; i < n; ++i) {
        cbbl_check c{};
        check(cbbl_verify_report_get(report.get(), i, &c));
        std::printf("%-40s %-6s %12.3e %12.3e %9d\n", c.name, c.passed ? "PASS" : "FAIL", c.max_error,
                    c.tolerance, c.evaluated);
        if (!c.passed) failing.emplace_back(c.name);
    }
    if (!failing.empty()) {
        std::string msg = "verification failed:";
        for (const auto& f : failing) msg += " " + f;
        throw CliError(kVerify, msg);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cbbl: confidence-based box localization toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cbbl_version());

    Common common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
        cmd->add_option("--seed", common.seed, "random seed");
    };

    EncodeArgs enc;
    auto* c_enc = app.add_subcommand("encode", "quantize a target to a two-hot label, or encode box offsets");
    add_common(c_enc);
    add_grid_flags(c_enc, enc.grid);
    c_enc->add_option("--target", enc.target, "continuous target value");
    c_enc->add_option("--box", enc.box, "box x,y,w,h");
    c_enc->add_option("--anchor", enc.anchor, "anchor x,y,w,h");

    DecodeArgs dec;
    auto* c_dec = app.add_subcommand("decode", "restore a value from grid scores, or decode box offsets");
    add_common(c_dec);
    add_grid_flags(c_dec, dec.grid);
    c_dec->add_option("--logits", dec.logits, "comma-separated logits");
    c_dec->add_option("--probabilities", dec.probabilities, "comma-separated probabilities");
    c_dec->add_option("--restore", dec.restore, "full-band | top2");
    c_dec->add_option("--offsets", dec.offsets, "offsets tx,ty,tw,th");
    c_dec->add_option("--anchor", dec.anchor, "anchor x,y,w,h");

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("sweep", "write loss/gradient distortion sweeps as CSV");
    add_common(c_sw);
    c_sw->add_option("--output,-o", common.output, "CSV output path");
    c_sw->add_option("--kind", sw.kind, "iou | norm | all");
    c_sw->add_option("--gt-side", sw.gt_side, "ground-truth square side (px)");
    c_sw->add_option("--ratios", sw.ratios, "comma-separated scale ratios");
    c_sw->add_option("--shift-samples", sw.shift_samples, "shifts per ratio");
    c_sw->add_option("--shift-max-fraction", sw.shift_max_fraction, "largest shift as a fraction of k*s");
    c_sw->add_option("--widths", sw.widths, "anchor widths for the norm sweep");
    c_sw->add_option("--errors", sw.errors, "pixel errors for the norm sweep");

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "train a linear head on the synthetic scene");
    add_common(c_tr);
    add_grid_flags(c_tr, tr.grid);
    c_tr->add_option("--output,-o", common.output, "epoch CSV output path");
    c_tr->add_option("--head", tr.head, "smooth-l1 (default) | cbbl | l2");
    c_tr->add_option("--epochs", tr.epochs, "training epochs");
    c_tr->add_option("--lr", tr.lr, "learning rate (default depends on head)");
    c_tr->add_option("--batch-size", tr.batch_size, "mini-batch size");
    c_tr->add_option("--um-weight", tr.um_weight, "weight of the uncertainty term");
    c_tr->add_option("--smooth-l1-delta", tr.smooth_l1_delta, "smooth-l1 transition point");
    c_tr->add_option("--count-per-bucket", tr.count_per_bucket, "samples per scale bucket");

    VerifyArgs ver;
    auto* c_ver = app.add_subcommand("verify", "run gradient checks and reconstruction identities");
    add_common(c_ver);
    c_ver->add_option("--samples", ver.samples, "random samples per check");
    c_ver->add_flag("--inject-fault", ver.inject_fault, "perturb one gradient (tests the failure path)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*c_enc) return run_encode(common, enc);
        if (*c_dec) return run_decode(common, dec);
        if (*c_sw) return run_sweep(common, sw);
        if (*c_tr) return run_train(common, tr);
        if (*c_ver) return run_verify(common, ver);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
    return kConfig;
}
