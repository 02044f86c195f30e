#include <doctest.h>

#include "cmsc/perception.hpp"
#include "test_util.hpp"

using namespace cmsc;
using test::random_tensor;

TEST_CASE("iou") {
    Box a{2, 2, 2, 2, 0};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    Box far{10, 10, 2, 2, 0};
    CHECK(iou(a, far) == 0.0);
    Box b{2.5, 2, 1, 1, 0};  // unit squares offset by (0.5, 0)
    Box c{3.0, 2, 1, 1, 0};
    CHECK(iou(b, c) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("fuse") {
    Rng rng(15);
    FusionNet fusion("f", 8);
    fusion.init_weights(rng);

    Tensor ego = random_tensor({6, 6, 8}, rng);
    Tensor c1 = random_tensor({6, 6, 8}, rng);
    Tensor c2 = random_tensor({6, 6, 8}, rng);

    SUBCASE("empty collaborator list degenerates to the ego path") {
        FusionNet::Cache cache;
        Tensor fused = fusion.forward(ego, {}, cache, false);
        CHECK(fused.shape == ego.shape);
    }
    SUBCASE("a collaborator identical to the ego changes nothing") {
        FusionNet::Cache a, b;
        Tensor alone = fusion.forward(ego, {}, a, false);
        Tensor dup = fusion.forward(ego, {&ego}, b, false);
        CHECK(alone.data == dup.data);
    }
    SUBCASE("collaborator order does not matter") {
        FusionNet::Cache a, b;
        Tensor ab = fusion.forward(ego, {&c1, &c2}, a, false);
        Tensor ba = fusion.forward(ego, {&c2, &c1}, b, false);
        CHECK(ab.data == ba.data);
    }
    SUBCASE("shape mismatch is an error") {
        Tensor bad = random_tensor({5, 6, 8}, rng);
        FusionNet::Cache cache;
        CHECK_THROWS_AS(fusion.forward(ego, {&bad}, cache, false), ContractError);
    }
    SUBCASE("backward routes gradients to the max contributors") {
        FusionNet::Cache cache;
        Tensor fused = fusion.forward(ego, {&c1}, cache, true);
        Tensor probe = random_tensor(fused.shape, rng);
        GradStore sink;
        auto grads = fusion.backward(cache, probe, &sink);
        REQUIRE(grads.size() == 2);
        auto loss = [&] {
            FusionNet::Cache c;
            return test::weighted_sum(fusion.forward(ego, {&c1}, c, true), probe);
        };
        CHECK(test::max_rel_error(grads[0], test::fd_gradient(ego, loss)) < 1e-4);
        CHECK(test::max_rel_error(grads[1], test::fd_gradient(c1, loss)) < 1e-4);
    }
}

TEST_CASE("detect decoding") {
    SUBCASE("strongly negative logits give an empty set") {
        Tensor grids({4, 4, 5});
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) grids.at(y, x, 0) = -50.0;
        CHECK(decode_detections(grids).dets.empty());
    }
    SUBCASE("a single strong cell decodes to its regressed box") {
        Tensor grids({8, 8, 5});
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) grids.at(y, x, 0) = -50.0;
        grids.at(3, 5, 0) = 4.0;
        grids.at(3, 5, 1) = 0.25;   // dx
        grids.at(3, 5, 2) = -0.5;   // dy
        grids.at(3, 5, 3) = std::log(2.0);
        grids.at(3, 5, 4) = std::log(3.0);
        DetectionSet dets = decode_detections(grids);
        REQUIRE(dets.dets.size() == 1);
        const Detection& d = dets.dets[0];
        CHECK(d.box.cx == doctest::Approx(5.75));
        CHECK(d.box.cy == doctest::Approx(3.0));
        CHECK(d.box.w == doctest::Approx(2.0));
        CHECK(d.box.h == doctest::Approx(3.0));
        CHECK(d.score == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))));
    }
    SUBCASE("a decoded box re-encodes to the same regression targets") {
        Scene s;
        s.bounds_h = s.bounds_w = 8;
        s.objects.push_back({5.75, 3.0, 2.0, 3.0, 0});
        CellTargets t = ground_truth_targets(s, 8, 8);
        REQUIRE(t.objectness.at(3, 5) == 1.0);
        CHECK(t.regression.at(3, 5, 0) == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(t.regression.at(3, 5, 1) == doctest::Approx(-0.5).epsilon(1e-9));
        CHECK(t.regression.at(3, 5, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(t.regression.at(3, 5, 3) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
    }
}

TEST_CASE("nms suppresses the lower-scoring overlap") {
    std::vector<Detection> dets;
    dets.push_back({{4.0, 4.0, 2.0, 2.0, 0}, 0.9});
    dets.push_back({{4.1, 4.0, 2.0, 2.0, 0}, 0.8});  // IoU ~0.9 with the first
    dets.push_back({{10.0, 10.0, 2.0, 2.0, 0}, 0.5});
    auto kept = nms(dets, 0.5);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].score == 0.9);
    CHECK(kept[1].score == 0.5);
}

TEST_CASE("average_precision") {
    SUBCASE("perfect detections give AP 1") {
        std::vector<Box> gt = {{2, 2, 2, 2, 0}, {6, 6, 2, 2, 0}};
        DetectionSet dets;
        for (const Box& b : gt) dets.dets.push_back({b, 0.9});
        CHECK(average_precision(dets, gt, 0.5) == doctest::Approx(1.0));
        CHECK(average_precision(dets, gt, 0.7) == doctest::Approx(1.0));
    }
    SUBCASE("no detections with ground truth present is 0") {
        std::vector<Box> gt = {{2, 2, 2, 2, 0}};
        CHECK(average_precision({}, gt, 0.5) == 0.0);
    }
    SUBCASE("vacuous case: no gt, no detections") {
        CHECK(average_precision({}, {}, 0.5) == 1.0);
    }
    SUBCASE("hand-computed TP/FP/TP curve gives 5/6") {
        std::vector<Box> gt = {{2, 2, 2, 2, 0}, {10, 10, 2, 2, 0}};
        DetectionSet dets;
        dets.dets.push_back({{2, 2, 2, 2, 0}, 0.9});     // TP
        dets.dets.push_back({{20, 20, 2, 2, 0}, 0.8});   // FP
        dets.dets.push_back({{10, 10, 2, 2, 0}, 0.7});   // TP
        CHECK(average_precision(dets, gt, 0.5) == doctest::Approx(5.0 / 6.0));
    }
    SUBCASE("ap at 0.7 never exceeds ap at 0.5") {
        Rng rng(8);
        SceneConfig sc;
        for (uint64_t seed = 0; seed < 50; ++seed) {
            Scene s = sample_scene(seed, sc);
            DetectionSet dets;
            for (const Box& b : s.objects) {
                Box noisy = b;
                noisy.cx += 0.4 * rng.gaussian();
                noisy.cy += 0.4 * rng.gaussian();
                noisy.w *= std::exp(0.1 * rng.gaussian());
                noisy.h *= std::exp(0.1 * rng.gaussian());
                dets.dets.push_back({noisy, rng.uniform()});
            }
            if (rng.uniform() < 0.5) dets.dets.push_back({{1, 1, 2, 2, 0}, rng.uniform()});
            const double a5 = average_precision(dets, s.objects, 0.5);
            const double a7 = average_precision(dets, s.objects, 0.7);
            CHECK(a5 >= 0.0);
            CHECK(a5 <= 1.0);
            CHECK(a7 <= a5 + 1e-12);
        }
    }
    SUBCASE("detection dump format") {
        DetectionSet dets;
        dets.dets.push_back({{1.5, 2.5, 3.0, 4.0, 0}, 0.25});
        CHECK(dets.to_text() == "0.250000 1.500000 2.500000 3.000000 4.000000\n");
    }
}
