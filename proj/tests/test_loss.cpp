#include <doctest.h>

#include "flowdepth/loss.hpp"
#include "flowdepth/segmentation.hpp"
#include "flowdepth/synth.hpp"
#include "test_support.hpp"

using namespace flowdepth;
using testsupport::Rng;

TEST_SUITE("loss") {

TEST_CASE("ssim of an image with itself is one") {
    Rng rng(41);
    const ImageBuffer img = testsupport::random_image(rng, 12, 12, 3);
    const ScalarField map = ssim(img, img, LossConfig{});
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        CHECK(map.valid[i]);
        CHECK(map.values[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("ssim of constant images matches the closed form") {
    // mu1=0.5, mu2=0.7, zero variance: luminance term
    // (2*0.35 + 1e-4) / (0.25 + 0.49 + 1e-4), contrast term exactly 1.
    const ImageBuffer a(8, 8, 1, 0.5, true);
    const ImageBuffer b(8, 8, 1, 0.7, true);
    const ScalarField map = ssim(a, b, LossConfig{});
    const double expected = 0.7001 / 0.7401;
    CHECK(expected == doctest::Approx(0.9460).epsilon(1e-4));
    for (std::size_t i = 0; i < map.values.size(); ++i)
        CHECK(map.values[i] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("per-pixel ssim matches the brute-force window oracle") {
    Rng rng(43);
    for (int window : {3, 5}) {
        for (int channels : {1, 3}) {
            const ImageBuffer a = testsupport::random_image(rng, 16, 16, channels);
            const ImageBuffer b = testsupport::random_image(rng, 16, 16, channels);
            LossConfig cfg;
            cfg.ssim_window = window;
            const ScalarField map = ssim(a, b, cfg);
            for (int y = 0; y < 16; ++y) {
                for (int x = 0; x < 16; ++x) {
                    double expected = 0.0;
                    for (int c = 0; c < channels; ++c)
                        expected += testsupport::ssim_oracle(a, b, y, x, c, window, cfg.ssim_c1,
                                                             cfg.ssim_c2);
                    expected /= channels;
                    CHECK(map.at(y, x) == doctest::Approx(expected).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("ssim of independent noise stays below one") {
    Rng rng(45);
    const ImageBuffer a = testsupport::random_image(rng, 16, 16);
    const ImageBuffer b = testsupport::random_image(rng, 16, 16);
    const ScalarField map = ssim(a, b, LossConfig{});
    double mean = 0.0;
    for (double v : map.values)
        mean += v;
    mean /= map.values.size();
    CHECK(mean < 0.9);
}

TEST_CASE("photometric_error of identical images is zero") {
    Rng rng(47);
    const ImageBuffer img = testsupport::random_image(rng, 10, 10);
    CHECK(photometric_error(img, img, LossConfig{}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("photometric_error of constant images matches the closed form") {
    const ImageBuffer a(8, 8, 1, 0.5, true);
    const ImageBuffer b(8, 8, 1, 0.7, true);
    const double ssim_value = 0.7001 / 0.7401;
    const double expected = 0.45 * (1.0 - ssim_value) + 0.10 * 0.2;
    CHECK(expected == doctest::Approx(0.0443).epsilon(1e-2));
    CHECK(photometric_error(a, b, LossConfig{}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("alpha = 0.5 drops the L1 term entirely") {
    const ImageBuffer a(8, 8, 1, 0.5, true);
    const ImageBuffer b(8, 8, 1, 0.7, true);
    LossConfig cfg;
    cfg.alpha = 0.5;
    const double ssim_value = 0.7001 / 0.7401;
    CHECK(photometric_error(a, b, cfg) ==
          doctest::Approx(0.5 * (1.0 - ssim_value)).epsilon(1e-12));
}

TEST_CASE("smooth-L1 switch changes the difference penalty") {
    const ImageBuffer a(8, 8, 1, 0.5, true);
    const ImageBuffer b(8, 8, 1, 0.7, true);
    LossConfig cfg;
    cfg.smooth_l1 = true; // |d| = 0.2 < delta = 1: quadratic branch 0.5*d^2
    const double ssim_value = 0.7001 / 0.7401;
    const double expected = 0.45 * (1.0 - ssim_value) + 0.10 * (0.5 * 0.04);
    CHECK(photometric_error(a, b, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("photometric_error with no jointly valid pixel is an empty-domain error") {
    ImageBuffer a(4, 4, 1, 0.5, true);
    ImageBuffer b(4, 4, 1, 0.5, true);
    for (int i = 0; i < 16; ++i)
        a.valid[i] = i < 8 ? 0 : 1;
    for (int i = 0; i < 16; ++i)
        b.valid[i] = i < 8 ? 1 : 0;
    CHECK_THROWS_AS(photometric_error(a, b, LossConfig{}), EmptyDomainError);
}

TEST_CASE("photometric_error depends only on the joint valid set") {
    // Clearing the same validity bits on both sides restricts the mean to
    // the remaining per-pixel terms and changes nothing else.
    Rng rng(49);
    ImageBuffer a = testsupport::random_image(rng, 12, 12);
    ImageBuffer b = testsupport::random_image(rng, 12, 12);
    const LossConfig cfg;

    const ScalarField similarity = ssim(a, b, cfg);
    std::vector<std::uint8_t> keep(a.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        keep[i] = rng.uniform() < 0.6 ? 1 : 0;

    double expected = 0.0;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i])
            continue;
        expected += cfg.alpha * (1.0 - similarity.values[i]) +
                    (1.0 - 2.0 * cfg.alpha) * std::abs(a.data[i] - b.data[i]);
        ++count;
    }
    expected /= count;

    for (std::size_t i = 0; i < keep.size(); ++i) {
        a.valid[i] = keep[i];
        b.valid[i] = keep[i];
    }
    CHECK(photometric_error(a, b, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bilateral loss vanishes for identical frames at identity poses") {
    Rng rng(51);
    const Intrinsics K(100.0, 100.0, 31.5, 15.5, 64, 32);
    const ImageBuffer img = testsupport::random_image(rng, 32, 64);
    const DepthMap depth = testsupport::random_depth(rng, 32, 64);
    const double loss = bilateral_reprojection_loss(img, img, depth, depth, PoseSE3::identity(),
                                                    PoseSE3::identity(), K, LossConfig{});
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bilateral loss is symmetric under swapping frames and directions") {
    SceneSpec spec;
    spec.seed = 77;
    spec.ego = PoseSE3(Eigen::Quaterniond(Eigen::AngleAxisd(0.004, Eigen::Vector3d::UnitY())),
                       Eigen::Vector3d(-0.05, 0.01, 0.02));
    const SceneBundle scene = generate(spec);
    const PoseSE3 fwd = scene.ego;
    const PoseSE3 bwd = scene.ego.inverse();
    const LossConfig cfg;

    const double forward = bilateral_reprojection_loss(
        scene.image_t, scene.image_t1, scene.depth_t, scene.depth_t1, fwd, bwd,
        spec.intrinsics, cfg);
    const double swapped = bilateral_reprojection_loss(
        scene.image_t1, scene.image_t, scene.depth_t1, scene.depth_t, bwd, fwd,
        spec.intrinsics, cfg);
    CHECK(forward == doctest::Approx(swapped).epsilon(1e-12));
}

TEST_CASE("bilateral loss is lowest at the true pose") {
    SceneSpec spec;
    spec.seed = 78;
    spec.ego = PoseSE3(Eigen::Quaterniond(Eigen::AngleAxisd(0.003, Eigen::Vector3d::UnitZ())),
                       Eigen::Vector3d(-0.06, 0.0, 0.01));
    const SceneBundle scene = generate(spec);
    const LossConfig cfg;

    const double at_truth = bilateral_reprojection_loss(
        scene.image_t, scene.image_t1, scene.depth_t, scene.depth_t1, scene.ego,
        scene.ego.inverse(), spec.intrinsics, cfg);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const PoseSE3 off = perturb_pose(scene.ego, 1.0, 0.0, seed);
        const double perturbed = bilateral_reprojection_loss(
            scene.image_t, scene.image_t1, scene.depth_t, scene.depth_t1, off, off.inverse(),
            spec.intrinsics, cfg);
        CHECK(at_truth < perturbed);
    }
}

TEST_CASE("multi_region_loss with one region equals the bilateral loss") {
    Rng rng(53);
    SceneSpec spec;
    spec.seed = 79;
    spec.ego.translation = Eigen::Vector3d(-0.04, 0.0, 0.0);
    const SceneBundle scene = generate(spec);
    const RegionLabels all(scene.image_t.height, scene.image_t.width, 0);
    const LossConfig cfg;

    const LossReport report =
        multi_region_loss(scene.image_t, scene.image_t1, scene.depth_t, scene.depth_t1,
                          {{scene.ego, scene.ego.inverse()}}, all, spec.intrinsics, cfg);
    const double direct = bilateral_reprojection_loss(scene.image_t, scene.image_t1,
                                                      scene.depth_t, scene.depth_t1, scene.ego,
                                                      scene.ego.inverse(), spec.intrinsics, cfg);
    CHECK(report.photometric == doctest::Approx(direct).epsilon(1e-12));
    CHECK(report.photometric_static == doctest::Approx(direct).epsilon(1e-12));
    CHECK(report.region_terms.size() == 1);
}

TEST_CASE("multi_region_loss report terms add up") {
    SceneSpec spec;
    spec.seed = 80;
    spec.ego.translation = Eigen::Vector3d(-0.05, 0.0, 0.0);
    ObjectSpec obj;
    obj.p0 = 60;
    obj.p1 = 20;
    obj.p2 = 160;
    obj.p3 = 100;
    obj.depth = 1.2;
    obj.motion.translation = Eigen::Vector3d(0.03, 0.0, 0.0);
    spec.objects.push_back(obj);
    const SceneBundle scene = generate(spec);
    REQUIRE(scene.labels_gt.region_count == 2);

    std::vector<std::pair<PoseSE3, PoseSE3>> poses;
    poses.emplace_back(scene.ego, scene.ego.inverse());
    const PoseSE3 total = scene.ego * scene.object_motions[0];
    poses.emplace_back(total, total.inverse());

    const LossReport report =
        multi_region_loss(scene.image_t, scene.image_t1, scene.depth_t, scene.depth_t1, poses,
                          scene.labels_gt, spec.intrinsics, LossConfig{});
    double sum = 0.0;
    for (const RegionLossTerm& term : report.region_terms)
        if (!term.excluded)
            sum += term.value;
    CHECK(report.photometric == doctest::Approx(sum).epsilon(1e-9));
    CHECK(report.photometric_static == doctest::Approx(report.region_terms[0].value));
}

TEST_CASE("flow_loss basics") {
    Rng rng(55);
    const FlowField a = testsupport::random_flow(rng, 10, 10);
    CHECK(flow_loss(a, a) == doctest::Approx(0.0));

    FlowField b = a;
    for (std::size_t i = 0; i < b.size(); ++i) {
        b.du[i] += 3.0;
        b.dv[i] += 4.0;
    }
    CHECK(flow_loss(a, b) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(flow_loss(a, b) == doctest::Approx(flow_loss(b, a)).epsilon(1e-12));

    FlowField c = a;
    std::fill(c.valid.begin(), c.valid.end(), 0);
    CHECK_THROWS_AS(flow_loss(a, c), EmptyDomainError);
}

TEST_CASE("combined_losses follows the weighting rule") {
    LossConfig cfg;
    const CombinedLosses c = combined_losses(0.5, 1.0, cfg);
    CHECK(c.depth == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(c.pose == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(c.optical == doctest::Approx(1.0).epsilon(1e-12));

    cfg.lambda = 0.0;
    CHECK(combined_losses(0.5, 1.0, cfg).depth == doctest::Approx(0.5));

    cfg.lambda = 0.1;
    const CombinedLosses zero_flow = combined_losses(0.5, 0.0, cfg);
    CHECK(zero_flow.depth == doctest::Approx(0.5));
    CHECK(zero_flow.pose == doctest::Approx(0.5));
    CHECK(zero_flow.optical == doctest::Approx(0.0));
}

TEST_CASE("loss config invariants are enforced") {
    LossConfig cfg;
    cfg.alpha = 0.6;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LossConfig{};
    cfg.ssim_window = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = LossConfig{};
    cfg.lambda = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

} // TEST_SUITE
