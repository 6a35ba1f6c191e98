// Exercises the shared library through its C interface only.
#include "cbbl/cbbl.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace {

std::string temp_path(const char* name) {
    return testing::TempDir() + name;
}

} // namespace

TEST(CApi, StatusStrings) {
    EXPECT_STREQ(cbbl_status_string(CBBL_OK), "ok");
    EXPECT_STREQ(cbbl_status_string(CBBL_ERR_DIVERGED), "training diverged");
    EXPECT_STREQ(cbbl_version(), "0.1.0");
}

TEST(CApi, NullArguments) {
    cbbl_offsets t;
    EXPECT_EQ(cbbl_encode_offsets(nullptr, nullptr, &t), CBBL_ERR_NULL_ARGUMENT);
    EXPECT_NE(std::string(cbbl_last_error()).find("is NULL"), std::string::npos);
    EXPECT_EQ(cbbl_grid_create(2.0, 10, CBBL_GRID_UNIFORM, 1.0, 0, nullptr), CBBL_ERR_NULL_ARGUMENT);
    EXPECT_EQ(cbbl_records_write_csv(nullptr, "x"), CBBL_ERR_NULL_ARGUMENT);
    cbbl_grid_destroy(nullptr);
    cbbl_records_destroy(nullptr);
    cbbl_scene_destroy(nullptr);
    cbbl_train_run_destroy(nullptr);
    cbbl_verify_report_destroy(nullptr);
}

TEST(CApi, Boxes) {
    const cbbl_box anchor{100, 50, 20, 10}, box{110, 45, 40, 10};
    cbbl_offsets t{};
    ASSERT_EQ(cbbl_encode_offsets(&box, &anchor, &t), CBBL_OK);
    EXPECT_DOUBLE_EQ(t.tx, 0.5);
    EXPECT_DOUBLE_EQ(t.tw, std::log(2.0));
    cbbl_box back{};
    ASSERT_EQ(cbbl_decode_offsets(&t, &anchor, &back), CBBL_OK);
    EXPECT_NEAR(back.w, 40, 1e-12);
    const cbbl_box bad{0, 0, -1, 1};
    EXPECT_EQ(cbbl_encode_offsets(&bad, &anchor, &t), CBBL_ERR_DOMAIN);
    EXPECT_STRNE(cbbl_last_error(), "");
    double v = -1;
    ASSERT_EQ(cbbl_iou(&anchor, &anchor, &v), CBBL_OK);
    EXPECT_EQ(v, 1.0);
    EXPECT_STREQ(cbbl_last_error(), "");
}

TEST(CApi, GridQuantizeRestore) {
    cbbl_grid* g = nullptr;
    ASSERT_EQ(cbbl_grid_create(2.0, 10, CBBL_GRID_UNIFORM, 1.0, 0, &g), CBBL_OK);
    size_t n = 0;
    ASSERT_EQ(cbbl_grid_size(g, &n), CBBL_OK);
    EXPECT_EQ(n, 11u);
    double y = 0;
    ASSERT_EQ(cbbl_grid_value(g, 10, &y), CBBL_OK);
    EXPECT_EQ(y, 2.0);
    EXPECT_EQ(cbbl_grid_value(g, 11, &y), CBBL_ERR_DOMAIN);

    cbbl_two_hot l{};
    ASSERT_EQ(cbbl_grid_quantize(g, 0.3, &l), CBBL_OK);
    EXPECT_EQ(l.i_left, 5);
    EXPECT_EQ(l.i_right, 6);
    EXPECT_NEAR(l.p_left, 0.25, 1e-15);
    EXPECT_EQ(cbbl_grid_quantize(g, 99, &l), CBBL_ERR_DOMAIN);
    ASSERT_EQ(cbbl_grid_clamp(g, 99, &y), CBBL_OK);
    EXPECT_EQ(y, 2.0);

    std::vector<double> p(11, 0.0);
    p[5] = 0.25;
    p[6] = 0.75;
    ASSERT_EQ(cbbl_grid_restore(g, p.data(), p.size(), CBBL_INPUT_PROBABILITIES, CBBL_RESTORE_FULL_BAND, &y), CBBL_OK);
    EXPECT_NEAR(y, 0.3, 1e-15);
    std::vector<double> logits(11, 0.0);
    ASSERT_EQ(cbbl_grid_restore(g, logits.data(), logits.size(), CBBL_INPUT_LOGITS, CBBL_RESTORE_TOP2, &y), CBBL_OK);
    EXPECT_DOUBLE_EQ(y, -1.8);
    EXPECT_EQ(cbbl_grid_restore(g, logits.data(), 5, CBBL_INPUT_LOGITS, CBBL_RESTORE_TOP2, &y), CBBL_ERR_CONFIG);
    cbbl_grid_destroy(g);

    EXPECT_EQ(cbbl_grid_create(-2.0, 10, CBBL_GRID_UNIFORM, 1.0, 0, &g), CBBL_ERR_CONFIG);
    EXPECT_EQ(g, nullptr);
}

TEST(CApi, GridJson) {
    cbbl_grid* g = nullptr;
    ASSERT_EQ(cbbl_grid_create_from_json(R"({"alpha": 4, "n": 11, "mode": "interval-non-uniform", "in_beta": 0.5})", &g),
              CBBL_OK);
    size_t need = 0;
    EXPECT_EQ(cbbl_grid_to_json(g, nullptr, 0, &need), CBBL_ERR_BUFFER_TOO_SMALL);
    ASSERT_GT(need, 1u);
    std::string buf(need, '\0');
    ASSERT_EQ(cbbl_grid_to_json(g, buf.data(), buf.size(), &need), CBBL_OK);
    EXPECT_NE(buf.find("interval-non-uniform"), std::string::npos);
    cbbl_grid* h = nullptr;
    ASSERT_EQ(cbbl_grid_create_from_json(buf.c_str(), &h), CBBL_OK);
    double a = 0, b = 0;
    for (int i = 0; i <= 11; ++i) {
        cbbl_grid_value(g, i, &a);
        cbbl_grid_value(h, i, &b);
        EXPECT_EQ(a, b);
    }
    cbbl_grid_destroy(g);
    cbbl_grid_destroy(h);
    EXPECT_EQ(cbbl_grid_create_from_json(R"({"bins": 3})", &g), CBBL_ERR_CONFIG);
}

TEST(CApi, Losses) {
    const cbbl_two_hot l{3, 4, 1.0, 0.0};
    std::vector<double> logits(11, 0.0), grad(11);
    double v = 0;
    ASSERT_EQ(cbbl_ce_loss(&l, logits.data(), logits.size(), &v, grad.data()), CBBL_OK);
    EXPECT_NEAR(v, std::log(11.0), 1e-14);
    EXPECT_NEAR(grad[3], 1.0 / 11 - 1, 1e-15);
    ASSERT_EQ(cbbl_um_loss(&l, logits.data(), logits.size(), &v, nullptr), CBBL_OK);
    EXPECT_NEAR(v, std::log(11.0), 1e-14);
    ASSERT_EQ(cbbl_cbbl_loss(&l, logits.data(), logits.size(), 0.0, &v, grad.data()), CBBL_OK);
    EXPECT_NEAR(v, std::log(11.0), 1e-14);
    EXPECT_EQ(cbbl_ce_loss(&l, logits.data(), 3, &v, nullptr), CBBL_ERR_DOMAIN);

    const cbbl_offsets t{1, 0, 0, 0}, z{0, 0, 0, 0};
    double g4[4];
    ASSERT_EQ(cbbl_l2_loss(&t, &z, &v, g4), CBBL_OK);
    EXPECT_EQ(v, 1.0);
    EXPECT_EQ(g4[0], 2.0);
    ASSERT_EQ(cbbl_smooth_l1_loss(&t, &z, 0.1, &v, g4), CBBL_OK);
    EXPECT_DOUBLE_EQ(v, 0.95);
    EXPECT_EQ(g4[0], 1.0);

    const cbbl_box gt{0, 0, 64, 64}, pred{10, 0, 64, 64}, far{500, 0, 64, 64};
    double gx = 0;
    ASSERT_EQ(cbbl_iou_loss(&gt, &pred, &v, &gx), CBBL_OK);
    EXPECT_NEAR(v, std::log(74.0 / 54.0), 1e-12);
    EXPECT_NEAR(gx, 128.0 / (64.0 * 64.0 - 100.0), 1e-12);
    EXPECT_EQ(cbbl_iou_loss(&gt, &far, &v, &gx), CBBL_ERR_DOMAIN);
}

TEST(CApi, SweepsAndCsv) {
    cbbl_sweep_config c;
    cbbl_sweep_config_default(&c);
    EXPECT_EQ(c.num_ratios, 4u);
    cbbl_records* iou = nullptr;
    ASSERT_EQ(cbbl_sweep_iou(&c, &iou), CBBL_OK);
    size_t n = 0;
    cbbl_records_size(iou, &n);
    EXPECT_EQ(n, 4u * 257u);

    const double widths[] = {16, 32}, errors[] = {2};
    cbbl_records* norm = nullptr;
    ASSERT_EQ(cbbl_sweep_norm(widths, 2, errors, 1, &norm), CBBL_OK);
    ASSERT_EQ(cbbl_records_merge(iou, norm), CBBL_OK);
    cbbl_records_size(iou, &n);
    EXPECT_EQ(n, 4u * 257u + 2u);
    size_t left = 9;
    cbbl_records_size(norm, &left);
    EXPECT_EQ(left, 0u);
    cbbl_record last{};
    ASSERT_EQ(cbbl_records_get(iou, n - 1, &last), CBBL_OK);
    EXPECT_STREQ(last.loss_name, "l2");
    EXPECT_EQ(last.scale_ratio, 32.0);
    EXPECT_EQ(cbbl_records_get(iou, n, &last), CBBL_ERR_DOMAIN);

    const std::string path = temp_path("capi_sweep.csv");
    ASSERT_EQ(cbbl_records_write_csv(iou, path.c_str()), CBBL_OK);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "loss_name,scale_ratio,shift_px,loss,grad_mag");
    EXPECT_EQ(cbbl_records_write_csv(iou, "/nonexistent-dir/x.csv"), CBBL_ERR_IO);
    std::remove(path.c_str());
    cbbl_records_destroy(iou);
    cbbl_records_destroy(norm);

    c.shift_max_fraction = 1.5;
    cbbl_records* bad = nullptr;
    EXPECT_EQ(cbbl_sweep_iou(&c, &bad), CBBL_ERR_CONFIG);
    EXPECT_EQ(bad, nullptr);
}

TEST(CApi, TrainAndSalience) {
    cbbl_scene* scene = nullptr;
    ASSERT_EQ(cbbl_scene_generate(0, 20, 512, &scene), CBBL_OK);
    size_t n = 0;
    cbbl_scene_size(scene, &n);
    EXPECT_EQ(n, 60u);

    cbbl_train_config cfg;
    cbbl_train_config_default(&cfg, CBBL_HEAD_CBBL);
    EXPECT_EQ(cfg.epochs, 50);
    EXPECT_LT(cfg.learning_rate, 0);
    cfg.epochs = 3;
    cbbl_train_run* run = nullptr;
    ASSERT_EQ(cbbl_train(scene, &cfg, &run, nullptr), CBBL_OK);
    size_t epochs = 0;
    cbbl_train_run_epochs(run, &epochs);
    EXPECT_EQ(epochs, 3u);
    cbbl_epoch_report rep{};
    ASSERT_EQ(cbbl_train_run_get(run, 2, &rep), CBBL_OK);
    EXPECT_EQ(rep.epoch, 2);
    EXPECT_EQ(rep.count[CBBL_BUCKET_SMALL], 20);
    EXPECT_LE(rep.max_ce_logit_grad, 1.0);
    cbbl_salience s{};
    ASSERT_EQ(cbbl_train_run_salience(run, &s), CBBL_OK);
    EXPECT_TRUE(s.has_small_over_large);
    EXPECT_TRUE(std::isfinite(s.small_over_large));

    const std::string path = temp_path("capi_train.csv");
    ASSERT_EQ(cbbl_train_run_write_csv(run, path.c_str()), CBBL_OK);
    std::remove(path.c_str());
    cbbl_train_run_destroy(run);

    cbbl_grid* g = nullptr;
    cbbl_grid_create(5.0, 5, CBBL_GRID_UNIFORM, 1.0, 0, &g);
    cfg.grid = g;
    ASSERT_EQ(cbbl_train(scene, &cfg, &run, nullptr), CBBL_OK);
    cbbl_train_run_destroy(run);
    cbbl_grid_destroy(g);

    cbbl_train_config_default(&cfg, CBBL_HEAD_REGRESSION_L2);
    cfg.learning_rate = 1e6;
    int32_t failed = -7;
    run = reinterpret_cast<cbbl_train_run*>(1);
    EXPECT_EQ(cbbl_train(scene, &cfg, &run, &failed), CBBL_ERR_DIVERGED);
    EXPECT_EQ(run, nullptr);
    EXPECT_GE(failed, 0);

    cfg.epochs = 0;
    EXPECT_EQ(cbbl_train(scene, &cfg, &run, &failed), CBBL_ERR_CONFIG);
    cfg.epochs = 1;
    cfg.head = static_cast<cbbl_head>(17);
    EXPECT_EQ(cbbl_train(scene, &cfg, &run, &failed), CBBL_ERR_CONFIG);
    cbbl_scene_destroy(scene);

    EXPECT_EQ(cbbl_scene_generate(0, 0, 512, &scene), CBBL_ERR_CONFIG);
    EXPECT_DOUBLE_EQ(cbbl_default_learning_rate(CBBL_HEAD_REGRESSION_SMOOTH_L1), 0.01);
}

TEST(CApi, Verify) {
    cbbl_verify_report* r = nullptr;
    ASSERT_EQ(cbbl_verify_run(0, 200, 0, &r), CBBL_OK);
    size_t n = 0;
    cbbl_verify_report_size(r, &n);
    EXPECT_GT(n, 10u);
    for (size_t i = 0; i < n; ++i) {
        cbbl_check c{};
        ASSERT_EQ(cbbl_verify_report_get(r, i, &c), CBBL_OK);
        EXPECT_TRUE(c.passed) << c.name;
    }
    cbbl_verify_report_destroy(r);

    ASSERT_EQ(cbbl_verify_run(0, 50, 1, &r), CBBL_ERR_VERIFY);
    ASSERT_NE(r, nullptr);
    cbbl_check c{};
    cbbl_verify_report_get(r, 0, &c);
    EXPECT_FALSE(c.passed);
    cbbl_verify_report_destroy(r);

    EXPECT_EQ(cbbl_verify_run(0, 0, 0, &r), CBBL_ERR_CONFIG);
}
