#include <doctest.h>

#include "flowdepth/flow.hpp"
#include "test_support.hpp"

using namespace flowdepth;
using testsupport::Rng;

TEST_SUITE("flow") {

TEST_CASE("synthesize_flow is exactly zero for a static camera") {
    Rng rng(2);
    const Intrinsics K(100.0, 100.0, 31.5, 15.5, 64, 32);
    const DepthMap depth = testsupport::random_depth(rng, 32, 64);
    const FlowField flow = synthesize_flow(depth, PoseSE3::identity(), K);
    for (std::size_t i = 0; i < flow.size(); ++i) {
        CHECK(flow.valid[i]);
        CHECK(flow.du[i] == 0.0);
        CHECK(flow.dv[i] == 0.0);
    }
}

TEST_CASE("synthesize_flow under lateral translation") {
    const Intrinsics K(100.0, 100.0, 63.5, 31.5, 128, 64);
    const DepthMap depth(64, 128, 2.0, true);
    PoseSE3 pose;
    pose.translation = Eigen::Vector3d(-0.1, 0.0, 0.0);
    const FlowField flow = synthesize_flow(depth, pose, K);
    for (std::size_t i = 0; i < flow.size(); ++i) {
        if (!flow.valid[i])
            continue;
        CHECK(flow.du[i] == doctest::Approx(-5.0).epsilon(1e-12));
        CHECK(flow.dv[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("flow magnitude is inversely proportional to depth") {
    const Intrinsics K(100.0, 100.0, 31.5, 31.5, 64, 64);
    DepthMap depth(64, 64, 0.0, true);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            depth.at(y, x) = x < 32 ? 2.0 : 4.0;
    PoseSE3 pose;
    pose.translation = Eigen::Vector3d(-0.1, 0.0, 0.0);
    const FlowField flow = synthesize_flow(depth, pose, K);
    CHECK(flow.u(10, 10) == doctest::Approx(-5.0).epsilon(1e-12));
    CHECK(flow.u(10, 50) == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("composite_flow of a one-region partition is the part itself") {
    Rng rng(4);
    const FlowField flow = testsupport::random_flow(rng, 16, 16);
    RegionLabels labels(16, 16, 0);
    const FlowField out = composite_flow({FlowPart{&flow, &labels, 0}});
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out.valid[i]);
        CHECK(out.du[i] == flow.du[i]);
        CHECK(out.dv[i] == flow.dv[i]);
    }
}

TEST_CASE("composite_flow stitches a two-region partition") {
    const int H = 32, W = 32;
    RegionLabels labels(H, W, 0);
    for (int y = 8; y < 16; ++y)
        for (int x = 8; x < 16; ++x)
            labels.at(y, x) = 1;
    labels.recount();

    const FlowField background(H, W, -5.0, 0.0);
    const FlowField object(H, W, 5.0, 0.0);
    const FlowField out = composite_flow(
        {FlowPart{&background, &labels, 0}, FlowPart{&object, &labels, 1}});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            CHECK(out.u(y, x) == (labels.at(y, x) == 1 ? 5.0 : -5.0));

    // A partition of identical flows reassembles that flow.
    Rng rng(14);
    const FlowField same = testsupport::random_flow(rng, H, W);
    const FlowField stitched =
        composite_flow({FlowPart{&same, &labels, 0}, FlowPart{&same, &labels, 1}});
    CHECK(stitched.du == same.du);
    CHECK(stitched.dv == same.dv);
    CHECK(stitched.valid == same.valid);
}

TEST_CASE("composite_flow flags unclaimed and double-claimed pixels") {
    const int H = 8, W = 8;
    RegionLabels labels(H, W, 0);
    for (int x = 0; x < W; ++x)
        labels.at(0, x) = 1;
    labels.recount();
    const FlowField flow(H, W, 1.0, 1.0);

    // Region 1 never claimed: its pixels come out invalid.
    const FlowField partial = composite_flow({FlowPart{&flow, &labels, 0}});
    CHECK_FALSE(partial.is_valid(0, 3));
    CHECK(partial.is_valid(3, 3));

    // The same region claimed twice overlaps.
    CHECK_THROWS_AS(
        composite_flow({FlowPart{&flow, &labels, 0}, FlowPart{&flow, &labels, 0}}),
        ConsistencyError);
}

TEST_CASE("decompose_flow inverts synthesis for constant depth") {
    const Intrinsics K(100.0, 100.0, 63.5, 31.5, 128, 64);
    const DepthMap depth(64, 128, 2.0, true);
    PoseSE3 pose;
    pose.translation = Eigen::Vector3d(-0.1, 0.0, 0.0);
    const DepthMap recovered = decompose_flow(synthesize_flow(depth, pose, K), pose, K);
    int checked = 0;
    for (std::size_t i = 0; i < recovered.size(); ++i) {
        if (!recovered.valid[i])
            continue;
        CHECK(recovered.depth[i] == doctest::Approx(2.0).epsilon(1e-6));
        ++checked;
    }
    CHECK(checked > 1000);
}

TEST_CASE("decompose_flow round trip on random scenes") {
    const Intrinsics K(100.0, 100.0, 63.5, 31.5, 128, 64);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        const DepthMap depth = testsupport::random_depth(rng, 64, 128, 2.0, 8.0);
        PoseSE3 pose = testsupport::random_pose(rng, 0.02, 0.0);
        pose.translation = (0.05 + 0.1 * rng.uniform()) * rng.unit_vector();

        const FlowField flow = synthesize_flow(depth, pose, K);
        const DepthMap recovered = decompose_flow(flow, pose, K);
        double max_rel = 0.0;
        std::int64_t count = 0;
        for (std::size_t i = 0; i < depth.size(); ++i) {
            if (!recovered.valid[i] || !depth.valid[i])
                continue;
            max_rel = std::max(max_rel,
                               std::abs(recovered.depth[i] - depth.depth[i]) / depth.depth[i]);
            ++count;
        }
        CHECK(count > 100);
        CHECK(max_rel < 1e-3);
    }
}

TEST_CASE("decompose_flow rejects poses without parallax") {
    const Intrinsics K(100.0, 100.0, 15.5, 15.5, 32, 32);
    const FlowField flow(32, 32, 0.0, 0.0);
    CHECK_THROWS_AS(decompose_flow(flow, PoseSE3::identity(), K), DegenerateError);

    PoseSE3 rotation_only(Eigen::Quaterniond(Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitY())),
                          Eigen::Vector3d::Zero());
    CHECK_THROWS_AS(decompose_flow(flow, rotation_only, K), DegenerateError);
}

TEST_CASE("decompose_flow marks sub-threshold parallax invalid") {
    const Intrinsics K(100.0, 100.0, 63.5, 31.5, 128, 64);
    // 100 * 0.005 / 2 = 0.25 px of parallax, below the 0.5 px default.
    const DepthMap depth(64, 128, 2.0, true);
    PoseSE3 pose;
    pose.translation = Eigen::Vector3d(-0.005, 0.0, 0.0);
    const DepthMap recovered = decompose_flow(synthesize_flow(depth, pose, K), pose, K);
    for (std::size_t i = 0; i < recovered.size(); ++i)
        CHECK_FALSE(recovered.valid[i]);
}

TEST_CASE("endpoint_error_map basics") {
    Rng rng(6);
    const FlowField a = testsupport::random_flow(rng, 12, 12);

    const ScalarField zero = endpoint_error_map(a, a);
    for (std::size_t i = 0; i < zero.values.size(); ++i)
        CHECK(zero.values[i] == 0.0);

    FlowField b = a;
    for (std::size_t i = 0; i < b.size(); ++i) {
        b.du[i] += 3.0;
        b.dv[i] += 4.0;
    }
    const ScalarField five = endpoint_error_map(a, b);
    for (std::size_t i = 0; i < five.values.size(); ++i)
        CHECK(five.values[i] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("endpoint_error_map with disjoint validity has no valid pixels") {
    FlowField a(8, 8, 0.0, 0.0);
    FlowField b(8, 8, 0.0, 0.0);
    for (int x = 0; x < 8; ++x) {
        a.set_valid(0, x, false);
        b.set_valid(1, x, false);
    }
    for (int y = 2; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            a.set_valid(y, x, false);
            b.set_valid(y, x, false);
        }
    const ScalarField epe = endpoint_error_map(a, b);
    for (int x = 0; x < 8; ++x) {
        CHECK_FALSE(epe.is_valid(0, x));
        CHECK_FALSE(epe.is_valid(1, x));
    }
}

TEST_CASE("endpoint error is symmetric and satisfies the triangle inequality") {
    Rng rng(8);
    const FlowField a = testsupport::random_flow(rng, 10, 10);
    const FlowField b = testsupport::random_flow(rng, 10, 10);
    const FlowField c = testsupport::random_flow(rng, 10, 10);
    const ScalarField ab = endpoint_error_map(a, b);
    const ScalarField ba = endpoint_error_map(b, a);
    const ScalarField ac = endpoint_error_map(a, c);
    const ScalarField cb = endpoint_error_map(c, b);
    for (std::size_t i = 0; i < ab.values.size(); ++i) {
        CHECK(ab.values[i] == ba.values[i]);
        CHECK(ab.values[i] <= ac.values[i] + cb.values[i] + 1e-12);
    }
}

TEST_CASE("shape mismatches raise shape errors") {
    const FlowField a(8, 8, 0.0, 0.0);
    const FlowField b(8, 9, 0.0, 0.0);
    CHECK_THROWS_AS(endpoint_error_map(a, b), ShapeError);
    const Intrinsics K(100.0, 100.0, 15.5, 15.5, 32, 32);
    CHECK_THROWS_AS(synthesize_flow(DepthMap(8, 8, 1.0, true), PoseSE3::identity(), K),
                    ShapeError);
}

} // TEST_SUITE
