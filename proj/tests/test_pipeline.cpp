#include <doctest.h>

#include "cmsc/config.hpp"
#include "cmsc/experiment.hpp"
#include "test_util.hpp"

using namespace cmsc;

namespace {

// Small-but-trained-enough models for pipeline plumbing tests: random
// weights suffice since these tests check structure, not accuracy.
CmscModels& shared_models() {
    static CmscModels models = [] {
        CmscModels m(16);
        m.init_weights(123);
        return m;
    }();
    return models;
}

ExperimentConfig tiny_experiment() {
    ExperimentConfig cfg;
    cfg.scenes = 6;
    cfg.num_cavs = 2;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("converter tag contracts") {
    CmscModels& m = shared_models();
    Rng rng(5);
    FeatureMap fm;
    fm.tensor = test::random_tensor({32, 32, 16}, rng);
    fm.modality = Modality::Lidar;

    FeatureMap s = m.converters.to_standard(fm);
    CHECK(s.modality == Modality::Standard);
    CHECK(s.tensor.shape == fm.tensor.shape);
    CHECK_THROWS_AS(m.converters.to_standard(s), ContractError);  // no self-conversion

    FeatureMap back = m.converters.from_standard(s, Modality::Camera);
    CHECK(back.modality == Modality::Camera);
    CHECK(back.tensor.shape == fm.tensor.shape);
    CHECK_THROWS_AS(m.converters.from_standard(fm, Modality::Camera), ContractError);
    CHECK_THROWS_AS(m.converters.from_standard(s, Modality::Standard), ContractError);

    SUBCASE("cycle restores the tag, is deterministic, equals the composition") {
        FeatureMap cyc1 = m.converters.cycle(fm);
        FeatureMap cyc2 = m.converters.cycle(fm);
        CHECK(cyc1.modality == Modality::Lidar);
        CHECK(cyc1.tensor.data == cyc2.tensor.data);
        FeatureMap composed = m.converters.from_standard(m.converters.to_standard(fm),
                                                         Modality::Lidar);
        CHECK(cyc1.tensor.data == composed.tensor.data);
    }
}

TEST_CASE("identity-weight converters make cmsc and baseline_jscc bit-identical") {
    // The Baseline-JSCC mode is the same pipeline with converters replaced
    // by identity maps; with converter weights configured to the exact
    // identity the two methods must agree everywhere.
    CmscModels models(16);
    models.init_weights(55);
    models.converters.lidar.to_std.set_identity_weights();
    models.converters.lidar.from_std.set_identity_weights();
    models.converters.camera.to_std.set_identity_weights();
    models.converters.camera.from_std.set_identity_weights();

    ExperimentConfig cfg = tiny_experiment();
    const PipelineConfig pc = cfg.pipeline();
    EvalPoint pt = cfg.base_point(Method::Cmsc);
    pt.snr_db = 10.0;
    SceneScore a = evaluate_point(models, pc, pt, cfg.seed, cfg.scenes);
    pt.method = Method::BaselineJscc;
    SceneScore b = evaluate_point(models, pc, pt, cfg.seed, cfg.scenes);
    CHECK(a.ap50 == b.ap50);
    CHECK(a.ap70 == b.ap70);

    // sanity: the identity converter really is the identity
    Rng rng(1);
    FeatureMap fm;
    fm.tensor = test::random_tensor({8, 8, 16}, rng);
    fm.modality = Modality::Camera;
    FeatureMap s = models.converters.to_standard(fm);
    CHECK(s.tensor.data == fm.tensor.data);
}

TEST_CASE("upper bound rows are snr-invariant") {
    CmscModels& m = shared_models();
    ExperimentConfig cfg = tiny_experiment();
    const PipelineConfig pc = cfg.pipeline();
    EvalPoint pt = cfg.base_point(Method::UpperBound);
    pt.snr_db = 0.0;
    SceneScore low = evaluate_point(m, pc, pt, cfg.seed, cfg.scenes);
    pt.snr_db = 20.0;
    SceneScore high = evaluate_point(m, pc, pt, cfg.seed, cfg.scenes);
    CHECK(low.ap50 == high.ap50);
    CHECK(low.ap70 == high.ap70);
}

TEST_CASE("parity lambdas and channel-use bookkeeping") {
    CHECK(parity_lambda(0.06, 0.5, 256) == doctest::Approx(0.03));
    CHECK(parity_lambda(0.06, 0.5, 16) == doctest::Approx(0.015));
    const double cmsc_uses = method_channel_uses(Method::Cmsc, 32, 32, 16, 0.06);
    CHECK(cmsc_uses == doctest::Approx(983.04));
    CHECK(method_channel_uses(Method::Baseline16Qam, 32, 32, 16, 0.015) ==
          doctest::Approx(cmsc_uses));
    CHECK(method_channel_uses(Method::Baseline256Qam, 32, 32, 16, 0.03) ==
          doctest::Approx(cmsc_uses));
    CHECK(method_channel_uses(Method::UpperBound, 32, 32, 16, 0.06) == doctest::Approx(16384.0));
}

TEST_CASE("csv emission") {
    ResultRow row;
    row.method = "cmsc";
    row.channel = "awgn";
    row.snr_db = 20;
    row.lambda = 0.06;
    row.ego_modality = "lidar";
    row.cav_modalities = "random";
    row.ap50 = 0.90351;
    row.ap70 = 0.5;
    row.channel_uses = 983.04;
    row.seed = 7;
    row.scenes = 200;

    SUBCASE("one row emits a two-line file with the exact header") {
        const std::string text = rows_to_csv({row});
        CHECK(text ==
              "method,channel,snr_db,lambda,ego_modality,cav_modalities,ap50,ap70,channel_uses,"
              "seed,scenes\n"
              "cmsc,awgn,20,0.06,lidar,random,0.9035,0.5000,983.04,7,200\n");
    }
    SUBCASE("empty rows are an error") { CHECK_THROWS_AS(rows_to_csv({}), ContractError); }
    SUBCASE("re-running the same sweep gives byte-identical csv") {
        CmscModels& m = shared_models();
        ExperimentConfig cfg = tiny_experiment();
        cfg.methods = {Method::Cmsc, Method::UpperBound};
        cfg.snrs = {0, 20};
        const std::string a = rows_to_csv(run_snr_sweep(m, cfg));
        const std::string b = rows_to_csv(run_snr_sweep(m, cfg));
        CHECK(a == b);
    }
}

TEST_CASE("sweep structure") {
    CmscModels& m = shared_models();
    ExperimentConfig cfg = tiny_experiment();

    SUBCASE("sensor matrix emits the four Table-I rows in order") {
        cfg.snrs = {20};
        auto rows = run_sensor_matrix(m, cfg);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].ego_modality == "lidar");
        CHECK(rows[0].cav_modalities == "lidar+lidar");
        CHECK(rows[1].ego_modality == "lidar");
        CHECK(rows[1].cav_modalities == "camera+camera");
        CHECK(rows[2].ego_modality == "camera");
        CHECK(rows[3].ego_modality == "camera");
        CHECK(rows[3].cav_modalities == "lidar+lidar");
        for (const auto& r : rows) {
            CHECK(r.ap50 >= 0.0);
            CHECK(r.ap50 <= 1.0);
            CHECK(r.ap70 <= r.ap50 + 1e-12);
        }
    }
    SUBCASE("zero scenes is an error") {
        cfg.scenes = 0;
        CHECK_THROWS_AS(run_sensor_matrix(m, cfg), ContractError);
        CHECK_THROWS_AS(run_snr_sweep(m, cfg), ContractError);
    }
    SUBCASE("lambda sweep rejects out-of-range lambda") {
        cfg.lambdas = {0.5, 1.5};
        cfg.lambda_snrs = {10};
        cfg.channel = ChannelModel::Rayleigh;
        CHECK_THROWS_AS(run_lambda_sweep(m, cfg), ContractError);
    }
    SUBCASE("snr sweep emits method x snr rows with parity lambdas") {
        cfg.methods = {Method::Cmsc, Method::Baseline256Qam};
        cfg.snrs = {0, 10};
        auto rows = run_snr_sweep(m, cfg);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].lambda == 0.06);
        CHECK(rows[2].lambda == doctest::Approx(0.03));
        CHECK(rows[2].channel_uses == doctest::Approx(rows[0].channel_uses));
    }
    SUBCASE("unknown method names are rejected") {
        CHECK_THROWS_AS(method_from_name("adaptive"), ContractError);
    }
}

TEST_CASE("config parsing") {
    SUBCASE("defaults, overrides, comments") {
        Config c = Config::from_string("lambda = 0.1 # comment\nscenes= 50\nchannel =rayleigh\n");
        ExperimentConfig e = experiment_config_from(c);
        CHECK(e.lambda == 0.1);
        CHECK(e.scenes == 50);
        CHECK(e.channel == ChannelModel::Rayleigh);
        CHECK(e.num_cavs == 2);
    }
    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_AS(Config::from_string("lamda = 0.1\n"), ContractError);
    }
    SUBCASE("lists parse") {
        Config c = Config::from_string("snrs = 0, 5, 10\nmethods = cmsc, upper_bound\n");
        ExperimentConfig e = experiment_config_from(c);
        CHECK(e.snrs == std::vector<double>{0, 5, 10});
        REQUIRE(e.methods.size() == 2);
        CHECK(e.methods[1] == Method::UpperBound);
    }
    SUBCASE("train config validation runs") {
        Config c = Config::from_string("eta = 2\nbatch_size = 4\n");
        TrainConfig t = train_config_from(c);
        CHECK(t.eta == 2.0);
        CHECK(t.steps_stage1 == 2000);
    }
}

TEST_CASE("evaluate_scene is deterministic and method-sensitive") {
    CmscModels& m = shared_models();
    ExperimentConfig cfg = tiny_experiment();
    const PipelineConfig pc = cfg.pipeline();
    EvalPoint pt = cfg.base_point(Method::Baseline256Qam);
    pt.snr_db = 18.0;
    SceneScore a = evaluate_scene(m, pc, pt, cfg.seed, 0);
    SceneScore b = evaluate_scene(m, pc, pt, cfg.seed, 0);
    CHECK(a.ap50 == b.ap50);
    CHECK(a.ap70 == b.ap70);

    pt.method = Method::Baseline16Qam;
    pt.lambda = parity_lambda(0.06, 0.5, 16);
    SceneScore c = evaluate_scene(m, pc, pt, cfg.seed, 0);
    CHECK(c.ap50 >= 0.0);
}
