// Acceptance suite: one line per criterion, non-zero exit if any fails.
// Expected values come from oracles written here, independent of the
// library's internals.

#include "cbbl/distortion.hpp"
#include "cbbl/grid.hpp"
#include "cbbl/losses.hpp"
#include "cbbl/toytrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace cbbl;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double time_limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Reference log-softmax.
std::vector<double> ref_log_softmax(const std::vector<double>& l) {
    const double m = *std::max_element(l.begin(), l.end());
    double z = 0;
    for (double v : l) z += std::exp(v - m);
    const double lse = m + std::log(z);
    std::vector<double> out(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) out[i] = l[i] - lse;
    return out;
}

double ref_ce(const TwoHotLabel& t, const std::vector<double>& l) {
    const auto lp = ref_log_softmax(l);
    double v = 0;
    if (t.p_left > 0) v -= t.p_left * lp[t.i_left];
    if (t.p_right > 0) v -= t.p_right * lp[t.i_right];
    return v;
}

double ref_um(const TwoHotLabel& t, const std::vector<double>& l) {
    const auto lp = ref_log_softmax(l);
    double h = 0;
    for (double v : lp) h -= std::exp(v) * v;
    double hs = 0;
    for (double p : {t.p_left, t.p_right})
        if (p > 0) hs -= p * std::log(p);
    return std::abs(hs - h);
}

double central(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
               std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    return (fp - fm) / (2 * h);
}

struct RandomPair {
    std::vector<double> logits;
    TwoHotLabel label;
};

RandomPair random_pair(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(2, 20);
    std::normal_distribution<double> n(0.0, 3.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomPair r;
    r.logits.resize(size(rng));
    for (double& v : r.logits) v = n(rng);
    std::uniform_int_distribution<int> idx(0, static_cast<int>(r.logits.size()) - 2);
    const int i = idx(rng);
    const double p = u(rng);
    r.label = {i, i + 1, p, 1 - p};
    return r;
}

Outcome criterion_ce() {
    std::mt19937_64 rng(1);
    double identity_err = 0, fd_err = 0, bound = 0;
    for (int k = 0; k < 1000; ++k) {
        const RandomPair s = random_pair(rng);
        const auto dist = ConfidenceDistribution::from_logits(s.logits);
        const LossValueGrad r = ce_loss(s.label, dist);
        const auto f = [&](const std::vector<double>& x) { return ref_ce(s.label, x); };
        for (std::size_t i = 0; i < s.logits.size(); ++i) {
            const double expected = dist.probs()[i] - s.label.weight(static_cast<int>(i));
            identity_err = std::max(identity_err, std::abs(r.grad[i] - expected));
            fd_err = std::max(fd_err, std::abs(r.grad[i] - central(f, s.logits, i, 1e-5)));
            bound = std::max(bound, std::abs(r.grad[i]));
        }
    }
    Outcome o;
    o.passed = identity_err == 0.0 && fd_err <= 1e-6 && bound <= 1.0;
    o.detail = "max|g-(p-p*)|=" + fmt("%.3g", identity_err) + " max|g-fd|=" + fmt("%.3g", fd_err) +
               " (tol 1e-6) max|g|=" + fmt("%.6f", bound);
    return o;
}

Outcome criterion_reconstruction() {
    std::mt19937_64 rng(2);
    const double alpha = 2.0;
    const GridSpec grids[] = {GridSpec::uniform(alpha, 10), GridSpec::interval_non_uniform(alpha, 10, 1.0)};
    double worst[2] = {0, 0};
    std::uniform_real_distribution<double> u(-alpha, alpha);
    for (int g = 0; g < 2; ++g) {
        for (int k = 0; k < 10000; ++k) {
            const double t = u(rng);
            const TwoHotLabel l = quantize(grids[g], t);
            const auto dist = ConfidenceDistribution::from_probabilities(l.dense(grids[g].size()));
            worst[g] = std::max(worst[g], std::abs(restore_full_band(grids[g], dist) - t));
        }
    }
    Outcome o;
    o.passed = worst[0] <= 1e-10 && worst[1] <= 1e-10;
    o.detail = "uniform max err=" + fmt("%.3g", worst[0]) + " IN max err=" + fmt("%.3g", worst[1]) + " (tol 1e-10)";
    return o;
}

Outcome criterion_um() {
    std::mt19937_64 rng(3);
    double fd_err = 0;
    int checked = 0, skipped = 0;
    while (checked < 1000) {
        const RandomPair s = random_pair(rng);
        // The kink is where the two entropies coincide.
        if (ref_um(s.label, s.logits) < 1e-3) {
            ++skipped;
            continue;
        }
        const LossValueGrad r = um_loss(s.label, ConfidenceDistribution::from_logits(s.logits));
        const auto f = [&](const std::vector<double>& x) { return ref_um(s.label, x); };
        for (std::size_t i = 0; i < s.logits.size(); ++i)
            fd_err = std::max(fd_err, std::abs(r.grad[i] - central(f, s.logits, i, 1e-5)));
        ++checked;
    }
    Outcome o;
    o.passed = fd_err <= 1e-6;
    o.detail = "max|g-fd|=" + fmt("%.3g", fd_err) + " (tol 1e-6) over 1000 samples, " +
               std::to_string(skipped) + " near-kink skipped";
    return o;
}

Outcome criterion_norm_homogeneity() {
    double worst = 0;
    for (double w : {4.0, 8.0, 16.0, 32.0, 64.0, 100.0, 128.0, 333.0}) {
        for (double e : {0.5, 1.0, 4.0, 7.25}) {
            const auto recs = sweep_norm_gradients({w, 2 * w}, {e});
            const SweepRecord& a = recs[0].scale_ratio == w ? recs[0] : recs[1];
            const SweepRecord& b = recs[0].scale_ratio == w ? recs[1] : recs[0];
            worst = std::max(worst, std::abs(a.grad_mag / b.grad_mag - 2.0));
        }
    }
    Outcome o;
    o.passed = worst <= 1e-12;
    o.detail = "max|ratio-2|=" + fmt("%.3g", worst) + " (tol 1e-12)";
    return o;
}

Outcome criterion_iou_ordering() {
    SweepConfig c;
    c.scale_ratios = {1.0, 0.5};
    const auto recs = sweep_iou(c);
    std::map<double, const SweepRecord*> k1, khalf;
    for (const auto& r : recs) (r.scale_ratio == 1.0 ? k1 : khalf)[r.shift_px] = &r;

    const double s = c.gt_side;
    double formula_err = 0;
    for (const auto& [x, r] : k1) formula_err = std::max(formula_err, std::abs(r->loss - std::log((s + x) / (s - x))));

    int common = 0, violations = 0;
    double min_margin = INFINITY;
    for (const auto& [x, r] : khalf) {
        const auto it = k1.lower_bound(x - 1e-9);
        if (it == k1.end() || std::abs(it->first - x) > 1e-9) continue;
        ++common;
        const double margin = r->grad_mag - it->second->grad_mag;
        min_margin = std::min(min_margin, margin);
        if (!(margin > 0)) ++violations;
    }
    Outcome o;
    o.passed = common > 0 && violations == 0 && formula_err <= 1e-9;
    o.detail = std::to_string(common) + " common shifts, " + std::to_string(violations) +
               " violations, min(g0.5-g1)=" + fmt("%.4g", min_margin) + ", k=1 max|L-ln((s+x)/(s-x))|=" +
               fmt("%.3g", formula_err) + " (tol 1e-9)";
    return o;
}

Outcome criterion_training() {
    const SyntheticScene scene = generate_scene(0, 100);
    TrainConfig cbbl_cfg;
    cbbl_cfg.head = HeadKind::Cbbl;
    TrainConfig sl1_cfg;
    sl1_cfg.head = HeadKind::RegressionSmoothL1;
    const auto cbbl_run = train(scene, cbbl_cfg);
    const auto sl1_run = train(scene, sl1_cfg);
    const int small = static_cast<int>(ScaleBucket::Small);
    const double iou_gain = cbbl_run.back().mean_iou[small] - sl1_run.back().mean_iou[small];
    const SalienceReport sc = gradient_salience(cbbl_run);
    const SalienceReport ss = gradient_salience(sl1_run);
    const bool iou_ok = iou_gain >= 0.01;
    const bool salience_ok = sc.small_over_large && ss.small_over_large && *sc.small_over_large < *ss.small_over_large;
    Outcome o;
    o.passed = iou_ok && salience_ok;
    o.detail = std::string("(a) ") + (iou_ok ? "ok" : "FAIL") + " small IoU cbbl=" +
               fmt("%.4f", cbbl_run.back().mean_iou[small]) + " smooth-l1=" +
               fmt("%.4f", sl1_run.back().mean_iou[small]) + " gain=" + fmt("%+.4f", iou_gain) +
               " (need >= 0.01); (b) " + (salience_ok ? "ok" : "FAIL") + " small/large salience cbbl=" +
               fmt("%.4f", sc.small_over_large.value_or(NAN)) + " smooth-l1=" +
               fmt("%.4f", ss.small_over_large.value_or(NAN)) + " (need cbbl < smooth-l1)";
    return o;
}

Outcome criterion_top2() {
    const GridSpec g = GridSpec::uniform(2.0, 10);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double agree = 0;
    for (int k = 0; k < 1000; ++k) {
        const TwoHotLabel l = quantize(g, u(rng));
        const auto d = ConfidenceDistribution::from_probabilities(l.dense(g.size()));
        agree = std::max(agree, std::abs(restore_top2(g, d) - restore_full_band(g, d)));
    }
    // Flat distribution with a slight excess on the two top bins.
    std::vector<double> logits(g.size(), 0.0);
    logits[9] = logits[10] = 1e-3;
    const auto flat = ConfidenceDistribution::from_logits(logits);
    const double gap = std::abs(restore_top2(g, flat) - restore_full_band(g, flat));
    const double tenth = 0.1 * (g.value(1) - g.value(0));
    Outcome o;
    o.passed = agree <= 1e-12 && gap > tenth;
    o.detail = "two-hot max|top2-full|=" + fmt("%.3g", agree) + " (tol 1e-12); flat+eps |top2-full|=" +
               fmt("%.4f", gap) + " (need > " + fmt("%.3g", tenth) + ")";
    return o;
}

Outcome criterion_in_limit() {
    double limit_err = 0, fixed_err = 0;
    for (int n : {4, 10, 11, 16}) {
        for (double alpha : {1.0, 2.0, 4.0, 5.0}) {
            const GridSpec in = GridSpec::interval_non_uniform(alpha, n, 1e-6);
            const GridSpec un = GridSpec::uniform(alpha, n);
            for (int i = 0; i <= n; ++i) limit_err = std::max(limit_err, std::abs(in.value(i) - un.value(i)));
            const GridSpec one = GridSpec::interval_non_uniform(alpha, n, 1.0);
            fixed_err = std::max({fixed_err, std::abs(one.value(0) + alpha), std::abs(one.value(n) - alpha)});
            if (n % 2 == 0) fixed_err = std::max(fixed_err, std::abs(one.value(n / 2)));
        }
    }
    Outcome o;
    o.passed = limit_err <= 1e-4 && fixed_err == 0.0;
    o.detail = "beta=1e-6 max|IN-uniform|=" + fmt("%.3g", limit_err) + " (tol 1e-4); beta=1 fixed-point err=" +
               fmt("%.3g", fixed_err) + " (need exact)";
    return o;
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "CE gradient identity", 1.0, criterion_ce},
        {2, "Reconstruction identity", 1.0, criterion_reconstruction},
        {3, "UM gradient check", 1.0, criterion_um},
        {4, "Anchor-scale distortion", 1.0, criterion_norm_homogeneity},
        {5, "IoU distortion ordering", 5.0, criterion_iou_ordering},
        {6, "Desk-scale convergence ordering", 60.0, criterion_training},
        {7, "Top-2 vs full-band", 1.0, criterion_top2},
        {8, "IN-grid limit", 1.0, criterion_in_limit},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.time_limit_s;
        const bool ok = o.passed && in_time;
        failed += !ok;
        std::printf("%s criterion %d: %s -- %s; time %.3fs (limit %gs)%s\n", ok ? "PASS" : "FAIL", c.id, c.title,
                    o.detail.c_str(), secs, c.time_limit_s, in_time ? "" : " TOO SLOW");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
