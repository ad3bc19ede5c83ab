#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdepth.h"

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "flowdepth_capi_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

const char* kSceneSpec =
    "width: 64\n"
    "height: 32\n"
    "fx: 100\n"
    "fy: 100\n"
    "cx: 31.5\n"
    "cy: 15.5\n"
    "seed: 17\n"
    "texture: noise\n"
    "background_depth: 2.0\n"
    "ego_trans: -0.05 0 0\n";

} // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and null-argument reporting") {
    CHECK(std::strcmp(fd_status_name(FD_OK), "ok") == 0);
    CHECK(std::strcmp(fd_status_name(FD_ERROR_DOMAIN), "domain error") == 0);

    CHECK(fd_image_create(4, 4, 1, nullptr, nullptr, nullptr) == FD_ERROR_NULL_ARGUMENT);
    CHECK(std::string(fd_last_error()).find("null argument") != std::string::npos);
}

TEST_CASE("typed error codes surface through the boundary") {
    double point[3];
    CHECK(fd_backproject(10.0, 10.0, 0.0, fd_intrinsics{100, 100, 50, 50, 101, 101}, point) ==
          FD_ERROR_DOMAIN);
    CHECK(std::string(fd_last_error()).find("depth") != std::string::npos);

    fd_image* bad = nullptr;
    const std::vector<double> out_of_range(16, 2.0);
    CHECK(fd_image_create(4, 4, 1, out_of_range.data(), nullptr, &bad) == FD_ERROR_DOMAIN);

    fd_depth* depth = nullptr;
    CHECK(fd_read_depth_png(temp_path("missing.png").c_str(), &depth) == FD_ERROR_IO);
}

TEST_CASE("raster handles round-trip their contents") {
    const std::vector<double> data{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const std::vector<uint8_t> valid{1, 0, 1, 1, 1, 0};
    fd_image* image = nullptr;
    REQUIRE(fd_image_create(2, 3, 1, data.data(), valid.data(), &image) == FD_OK);

    int32_t h = 0, w = 0, c = 0;
    REQUIRE(fd_image_dims(image, &h, &w, &c) == FD_OK);
    CHECK(h == 2);
    CHECK(w == 3);
    CHECK(c == 1);

    std::vector<double> data_back(6);
    std::vector<uint8_t> valid_back(6);
    REQUIRE(fd_image_read(image, data_back.data(), valid_back.data()) == FD_OK);
    CHECK(data_back == data);
    CHECK(valid_back == valid);
    fd_image_destroy(image);
}

TEST_CASE("pose algebra through the C surface") {
    const fd_pose id = fd_pose_identity();
    fd_pose t = id;
    t.tx = 1.0;
    t.ty = 2.0;
    t.tz = 3.0;

    double point[3] = {0.0, 0.0, 0.0};
    double moved[3];
    REQUIRE(fd_pose_apply(t, point, moved) == FD_OK);
    CHECK(moved[0] == doctest::Approx(1.0));
    CHECK(moved[2] == doctest::Approx(3.0));

    fd_pose inv;
    REQUIRE(fd_pose_invert(t, &inv) == FD_OK);
    fd_pose round;
    REQUIRE(fd_pose_compose(t, inv, &round) == FD_OK);
    CHECK(round.tx == doctest::Approx(0.0));
    CHECK(std::abs(round.qw) == doctest::Approx(1.0));

    fd_pose perturbed;
    REQUIRE(fd_perturb_pose(id, 1.0, 0.02, 7, &perturbed) == FD_OK);
    CHECK(std::hypot(perturbed.tx, std::hypot(perturbed.ty, perturbed.tz)) ==
          doctest::Approx(0.02).epsilon(1e-9));
}

TEST_CASE("scene generation, losses and metrics through the C surface") {
    fd_scene* scene = nullptr;
    REQUIRE(fd_scene_generate(kSceneSpec, &scene) == FD_OK);

    uint64_t digest = 0;
    REQUIRE(fd_scene_digest(kSceneSpec, &digest) == FD_OK);
    CHECK(digest != 0);

    fd_intrinsics K;
    REQUIRE(fd_scene_intrinsics(scene, &K) == FD_OK);
    CHECK(K.width == 64);

    fd_pose ego;
    REQUIRE(fd_scene_ego(scene, &ego) == FD_OK);
    CHECK(ego.tx == doctest::Approx(-0.05));

    fd_image* image_t = nullptr;
    fd_image* image_t1 = nullptr;
    fd_depth* depth_t = nullptr;
    fd_depth* depth_t1 = nullptr;
    fd_flow* flow_gt = nullptr;
    REQUIRE(fd_scene_image(scene, 0, &image_t) == FD_OK);
    REQUIRE(fd_scene_image(scene, 1, &image_t1) == FD_OK);
    REQUIRE(fd_scene_depth(scene, 0, &depth_t) == FD_OK);
    REQUIRE(fd_scene_depth(scene, 1, &depth_t1) == FD_OK);
    REQUIRE(fd_scene_flow(scene, &flow_gt) == FD_OK);
    CHECK(fd_scene_image(scene, 2, &image_t) == FD_ERROR_DOMAIN);

    // Bilateral loss at the true pose is far below a wrong pose.
    fd_pose ego_inv;
    REQUIRE(fd_pose_invert(ego, &ego_inv) == FD_OK);
    const fd_loss_config loss_cfg = fd_loss_config_default();
    double at_truth = 0.0, at_identity = 0.0;
    REQUIRE(fd_bilateral_loss(image_t, image_t1, depth_t, depth_t1, ego, ego_inv, K, loss_cfg,
                              &at_truth) == FD_OK);
    REQUIRE(fd_bilateral_loss(image_t, image_t1, depth_t, depth_t1, fd_pose_identity(),
                              fd_pose_identity(), K, loss_cfg, &at_identity) == FD_OK);
    CHECK(at_truth < at_identity);

    // Synthesized flow against the ground truth is numerically clean.
    fd_flow* synth = nullptr;
    REQUIRE(fd_synthesize_flow(depth_t, ego, K, &synth) == FD_OK);
    double flow_err = 0.0;
    REQUIRE(fd_flow_loss(synth, flow_gt, &flow_err) == FD_OK);
    CHECK(flow_err < 1e-9);

    fd_flow_metrics fm;
    REQUIRE(fd_flow_metrics_compute(synth, flow_gt, &fm) == FD_OK);
    CHECK(fm.epe < 1e-9);
    CHECK(fm.f1_all == 0.0);

    double l_depth = 0.0, l_pose = 0.0, l_optical = 0.0;
    REQUIRE(fd_combined_losses(at_truth, flow_err, loss_cfg, &l_depth, &l_pose, &l_optical) ==
            FD_OK);
    CHECK(l_depth == doctest::Approx(at_truth + 0.1 * flow_err));
    CHECK(l_optical == doctest::Approx(flow_err));

    char buffer[256];
    REQUIRE(fd_flow_metrics_format(fm, 1, buffer, sizeof(buffer)) == FD_OK);
    CHECK(std::string(buffer).find("EPE,F1-all") == 0);
    CHECK(fd_flow_metrics_format(fm, 1, buffer, 4) == FD_ERROR_BUFFER);

    fd_flow_destroy(synth);
    fd_flow_destroy(flow_gt);
    fd_depth_destroy(depth_t1);
    fd_depth_destroy(depth_t);
    fd_image_destroy(image_t1);
    fd_image_destroy(image_t);
    fd_scene_destroy(scene);
}

TEST_CASE("segmentation and composite flow through the C surface") {
    // Uniform flow segments into a single static region.
    const int32_t H = 128, W = 256;
    std::vector<double> du(static_cast<std::size_t>(H) * W, 4.0);
    std::vector<double> dv(du.size(), 0.0);
    fd_flow* flow = nullptr;
    REQUIRE(fd_flow_create(H, W, du.data(), dv.data(), nullptr, &flow) == FD_OK);

    fd_labels* labels = nullptr;
    REQUIRE(fd_segment_motion(flow, fd_seg_config_default(), &labels) == FD_OK);
    int32_t regions = 0;
    REQUIRE(fd_labels_region_count(labels, &regions) == FD_OK);
    CHECK(regions == 1);

    const fd_flow* flows[1] = {flow};
    const fd_labels* parts[1] = {labels};
    const int32_t ids[1] = {0};
    fd_flow* composite = nullptr;
    REQUIRE(fd_composite_flow(flows, parts, ids, 1, &composite) == FD_OK);
    double err = 0.0;
    REQUIRE(fd_flow_loss(composite, flow, &err) == FD_OK);
    CHECK(err == doctest::Approx(0.0));

    fd_flow_destroy(composite);
    fd_labels_destroy(labels);
    fd_flow_destroy(flow);
}

TEST_CASE("codec round trip through the C surface") {
    const int32_t H = 8, W = 8;
    std::vector<double> values(static_cast<std::size_t>(H) * W, 12.5);
    fd_depth* depth = nullptr;
    REQUIRE(fd_depth_create(H, W, values.data(), nullptr, &depth) == FD_OK);

    const std::string path = temp_path("depth_capi.png");
    REQUIRE(fd_write_depth_png(depth, path.c_str()) == FD_OK);
    fd_depth* back = nullptr;
    REQUIRE(fd_read_depth_png(path.c_str(), &back) == FD_OK);

    std::vector<double> restored(values.size());
    REQUIRE(fd_depth_read(back, restored.data(), nullptr) == FD_OK);
    for (double v : restored)
        CHECK(v == doctest::Approx(12.5).epsilon(1e-12));

    fd_depth_destroy(back);
    fd_depth_destroy(depth);
}

TEST_CASE("estimate_pose through the C surface on identical frames") {
    fd_scene* scene = nullptr;
    REQUIRE(fd_scene_generate(kSceneSpec, &scene) == FD_OK);
    fd_image* image_t = nullptr;
    fd_depth* depth_t = nullptr;
    fd_intrinsics K;
    REQUIRE(fd_scene_image(scene, 0, &image_t) == FD_OK);
    REQUIRE(fd_scene_depth(scene, 0, &depth_t) == FD_OK);
    REQUIRE(fd_scene_intrinsics(scene, &K) == FD_OK);

    fd_pose pose;
    fd_trace* trace = nullptr;
    REQUIRE(fd_estimate_pose(image_t, image_t, depth_t, depth_t, K, fd_pose_identity(),
                             fd_optimize_config_default(), fd_loss_config_default(), nullptr,
                             &pose, &trace) == FD_OK);
    CHECK(std::abs(pose.tx) < 1e-9);

    int32_t length = 0;
    REQUIRE(fd_trace_length(trace, &length) == FD_OK);
    REQUIRE(length >= 1);
    double first = 1.0;
    REQUIRE(fd_trace_loss(trace, 0, &first) == FD_OK);
    CHECK(first == doctest::Approx(0.0));
    int32_t converged = 0;
    REQUIRE(fd_trace_converged(trace, &converged) == FD_OK);
    CHECK(converged == 1);
    CHECK(fd_trace_loss(trace, length, &first) == FD_ERROR_DOMAIN);

    fd_trace_destroy(trace);
    fd_depth_destroy(depth_t);
    fd_image_destroy(image_t);
    fd_scene_destroy(scene);
}

} // TEST_SUITE
