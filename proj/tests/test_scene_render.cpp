#include <doctest.h>

#include <algorithm>

#include "cmsc/render.hpp"
#include "cmsc/scene.hpp"
#include "test_util.hpp"

using namespace cmsc;

TEST_CASE("sample_scene basics") {
    SceneConfig cfg;

    SUBCASE("max_objects = 0 gives an empty scene") {
        cfg.min_objects = 0;
        cfg.max_objects = 0;
        CHECK(sample_scene(1, cfg).objects.empty());
    }
    SUBCASE("same seed gives identical scenes") {
        Scene a = sample_scene(77, cfg), b = sample_scene(77, cfg);
        REQUIRE(a.objects.size() == b.objects.size());
        for (size_t i = 0; i < a.objects.size(); ++i) {
            CHECK(a.objects[i].cx == b.objects[i].cx);
            CHECK(a.objects[i].cy == b.objects[i].cy);
            CHECK(a.objects[i].w == b.objects[i].w);
            CHECK(a.objects[i].h == b.objects[i].h);
        }
    }
    SUBCASE("boxes stay inside bounds and meet the overlap bound") {
        for (uint64_t seed = 0; seed < 10000; ++seed) {
            Scene s = sample_scene(seed, cfg);
            for (size_t i = 0; i < s.objects.size(); ++i) {
                const Box& b = s.objects[i];
                CHECK(b.w > 0);
                CHECK(b.h > 0);
                CHECK(b.cx - b.w / 2 >= 0);
                CHECK(b.cx + b.w / 2 <= cfg.grid_w);
                CHECK(b.cy - b.h / 2 >= 0);
                CHECK(b.cy + b.h / 2 <= cfg.grid_h);
                for (size_t j = i + 1; j < s.objects.size(); ++j)
                    CHECK(iou(b, s.objects[j]) < cfg.max_gt_iou);
            }
        }
    }
    SUBCASE("infeasible configs error after bounded retries") {
        cfg.min_objects = cfg.max_objects = 60;
        cfg.min_size = cfg.max_size = 8.0;
        CHECK_THROWS_AS(sample_scene(3, cfg), ContractError);
    }
    SUBCASE("text round trip") {
        Scene s = sample_scene(5, cfg);
        Scene r = Scene::from_text(s.to_text(), cfg.grid_h, cfg.grid_w);
        REQUIRE(r.objects.size() == s.objects.size());
        for (size_t i = 0; i < s.objects.size(); ++i)
            CHECK(r.objects[i].cx == s.objects[i].cx);
    }
}

TEST_CASE("ground_truth_targets") {
    SUBCASE("empty scene is all background") {
        Scene s;
        s.bounds_h = s.bounds_w = 8;
        CellTargets t = ground_truth_targets(s, 8, 8);
        for (double v : t.objectness.data) CHECK(v == 0.0);
    }
    SUBCASE("box covering cells (2..3, 2..3) marks exactly those four cells") {
        Scene s;
        s.bounds_h = s.bounds_w = 8;
        s.objects.push_back({3.0, 3.0, 2.0, 2.0, 0});
        CellTargets t = ground_truth_targets(s, 8, 8);
        int positives = 0;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                const bool on = t.objectness.data[static_cast<size_t>(y) * 8 + x] > 0.5;
                positives += on;
                const bool expect = x >= 2 && x <= 3 && y >= 2 && y <= 3;
                CHECK(on == expect);
            }
        CHECK(positives == 4);
    }
    SUBCASE("cell at the box center regresses to zero offset") {
        Scene s;
        s.bounds_h = s.bounds_w = 8;
        s.objects.push_back({4.5, 2.5, 3.0, 2.0, 0});  // center on the cell (4,2) center
        CellTargets t = ground_truth_targets(s, 8, 8);
        CHECK(t.regression.at(2, 4, 0) == doctest::Approx(0.0));
        CHECK(t.regression.at(2, 4, 1) == doctest::Approx(0.0));
        CHECK(t.regression.at(2, 4, 2) == doctest::Approx(std::log(3.0)));
        CHECK(t.regression.at(2, 4, 3) == doctest::Approx(std::log(2.0)));
    }
}

TEST_CASE("render_features") {
    RenderConfig rc;
    SceneConfig sc;

    SUBCASE("unknown modality is rejected") {
        Scene s = sample_scene(1, sc);
        CHECK_THROWS_AS(render_features(s, Modality::Standard, 0, rc), ContractError);
    }
    SUBCASE("empty scene with zero noise is constant over space") {
        Scene s;
        s.bounds_h = rc.grid_h;
        s.bounds_w = rc.grid_w;
        RenderConfig quiet = rc;
        quiet.lidar_noise_std = 0.0;
        FeatureMap fm = render_features(s, Modality::Lidar, 9, quiet);
        for (int c = 0; c < rc.channels; ++c) {
            const double ref = fm.tensor.at(0, 0, c);
            for (int y = 0; y < rc.grid_h; ++y)
                for (int x = 0; x < rc.grid_w; ++x) CHECK(fm.tensor.at(y, x, c) == ref);
        }
    }
    SUBCASE("deterministic in (scene, modality, noise_seed)") {
        Scene s = sample_scene(21, sc);
        FeatureMap a = render_features(s, Modality::Camera, 5, rc);
        FeatureMap b = render_features(s, Modality::Camera, 5, rc);
        CHECK(a.tensor.data == b.tensor.data);
        FeatureMap c = render_features(s, Modality::Camera, 6, rc);
        CHECK(a.tensor.data != c.tensor.data);
    }
    SUBCASE("output shape and tag") {
        Scene s = sample_scene(2, sc);
        FeatureMap fm = render_features(s, Modality::Lidar, 1, rc);
        CHECK(fm.tensor.shape == std::vector<int>{32, 32, 16});
        CHECK(fm.modality == Modality::Lidar);
        CHECK(fm.tensor.all_finite());
    }
    SUBCASE("single centered object stands out of the background") {
        Scene s;
        s.bounds_h = rc.grid_h;
        s.bounds_w = rc.grid_w;
        s.objects.push_back({16.0, 16.0, 3.0, 3.0, 0});
        RenderConfig quiet = rc;
        quiet.lidar_noise_std = 0.0;
        Tensor det = render_deterministic(s, Modality::Lidar, quiet);
        // L2 energy per cell relative to the empty-scene background.
        Scene empty;
        empty.bounds_h = rc.grid_h;
        empty.bounds_w = rc.grid_w;
        Tensor bg = render_deterministic(empty, Modality::Lidar, quiet);
        std::vector<double> energies;
        double center_energy = 0;
        for (int y = 0; y < rc.grid_h; ++y)
            for (int x = 0; x < rc.grid_w; ++x) {
                double e = 0;
                for (int c = 0; c < rc.channels; ++c) {
                    const double d = det.at(y, x, c) - bg.at(y, x, c);
                    e += d * d;
                }
                e = std::sqrt(e);
                energies.push_back(e);
                if (y == 16 && x == 16) center_energy = e;
            }
        std::nth_element(energies.begin(), energies.begin() + energies.size() / 2,
                         energies.end());
        const double median = std::max(energies[energies.size() / 2], 1e-6);
        CHECK(center_energy / median >= 3.0);
    }
    SUBCASE("modality gap exceeds re-render noise, latents stay correlated") {
        double gap = 0, renoise = 0, corr_acc = 0;
        for (uint64_t seed = 0; seed < 5; ++seed) {
            Scene s = sample_scene(seed, sc);
            FeatureMap li = render_features(s, Modality::Lidar, 1, rc);
            FeatureMap cam = render_features(s, Modality::Camera, 1, rc);
            FeatureMap li2 = render_features(s, Modality::Lidar, 2, rc);
            double d_gap = 0, d_noise = 0;
            for (size_t i = 0; i < li.tensor.data.size(); ++i) {
                const double a = li.tensor.data[i] - cam.tensor.data[i];
                const double b = li.tensor.data[i] - li2.tensor.data[i];
                d_gap += a * a;
                d_noise += b * b;
            }
            gap += d_gap;
            renoise += d_noise;
            // energy-map correlation between modalities
            const int hw = rc.grid_h * rc.grid_w;
            std::vector<double> el(hw), ec(hw);
            for (int i = 0; i < hw; ++i) {
                double a = 0, b = 0;
                for (int c = 0; c < rc.channels; ++c) {
                    a += li.tensor.data[static_cast<size_t>(i) * rc.channels + c] *
                         li.tensor.data[static_cast<size_t>(i) * rc.channels + c];
                    b += cam.tensor.data[static_cast<size_t>(i) * rc.channels + c] *
                         cam.tensor.data[static_cast<size_t>(i) * rc.channels + c];
                }
                el[static_cast<size_t>(i)] = a;
                ec[static_cast<size_t>(i)] = b;
            }
            double ml = 0, mc = 0;
            for (int i = 0; i < hw; ++i) {
                ml += el[static_cast<size_t>(i)];
                mc += ec[static_cast<size_t>(i)];
            }
            ml /= hw;
            mc /= hw;
            double cov = 0, vl = 0, vc = 0;
            for (int i = 0; i < hw; ++i) {
                cov += (el[static_cast<size_t>(i)] - ml) * (ec[static_cast<size_t>(i)] - mc);
                vl += (el[static_cast<size_t>(i)] - ml) * (el[static_cast<size_t>(i)] - ml);
                vc += (ec[static_cast<size_t>(i)] - mc) * (ec[static_cast<size_t>(i)] - mc);
            }
            corr_acc += cov / std::sqrt(vl * vc + 1e-12);
        }
        CHECK(gap > renoise);
        CHECK(corr_acc / 5.0 > 0.0);
    }
}
