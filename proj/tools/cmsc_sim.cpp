// Link-level simulator CLI: training, the sensor-configuration matrix, SNR
// and compression-ratio sweeps, and a PHY self-test.

#include <CLI11.hpp>
#include <cstdio>
#include <cstring>

#include "cmsc/channel.hpp"
#include "cmsc/checkpoint.hpp"
#include "cmsc/config.hpp"
#include "cmsc/experiment.hpp"
#include "cmsc/trainer.hpp"

using namespace cmsc;

namespace {

Config load_config(const std::string& path) {
    return path.empty() ? Config::from_string("") : Config::from_file(path);
}

int run_train(const std::string& config_path, uint64_t seed, bool seed_set,
              const std::string& out, const std::string& checkpoint) {
    Config c = load_config(config_path);
    TrainConfig tc = train_config_from(c);
    if (seed_set) tc.seed = seed;
    CmscModels models(tc.render.channels);
    std::printf("training: bootstrap=%d stage1=%d stage2=%d stage3=%d batch=%d seed=%llu\n",
                tc.steps_bootstrap, tc.steps_stage1, tc.steps_stage2, tc.steps_stage3,
                tc.batch_size, static_cast<unsigned long long>(tc.seed));
    int last_logged = -1;
    TrainResult res = run_training(models, tc, out, checkpoint,
                                   [&](const std::string& stage, int step, const LossReport& r) {
                                       if (step % 200 == 0 && step != last_logged) {
                                           std::printf("  [%s] step %d total %.5f\n",
                                                       stage.c_str(), step, r.total);
                                           std::fflush(stdout);
                                       }
                                   });
    std::printf("training done in %.1f s\n", res.wall_seconds);
    if (!checkpoint.empty()) std::printf("checkpoints written under %s_*.ckpt\n", checkpoint.c_str());
    return 0;
}

int run_experiment(const std::string& kind, const std::string& config_path, uint64_t seed,
                   bool seed_set, const std::string& out, const std::string& checkpoint) {
    Config c = load_config(config_path);
    ExperimentConfig ec = experiment_config_from(c);
    if (seed_set) ec.seed = seed;
    CmscModels models(ec.render.channels);
    check(!checkpoint.empty(), kind + ": --checkpoint with trained weights is required");
    models.load(checkpoint);
    std::vector<ResultRow> rows;
    if (kind == "sensor-matrix")
        rows = run_sensor_matrix(models, ec);
    else if (kind == "snr-sweep")
        rows = run_snr_sweep(models, ec);
    else
        rows = run_lambda_sweep(models, ec);
    if (out.empty()) {
        std::fputs(rows_to_csv(rows).c_str(), stdout);
    } else {
        emit_csv(rows, out);
        std::printf("%zu rows -> %s\n", rows.size(), out.c_str());
    }
    return 0;
}

int run_phy_selftest() {
    int failures = 0;
    auto report = [&](const char* name, bool ok) {
        std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
        if (!ok) ++failures;
    };

    {  // LDPC noiseless round trip
        Rng rng(1);
        bool ok = true;
        for (int t = 0; t < 20 && ok; ++t) {
            std::array<uint8_t, kLdpcK> info;
            for (auto& b : info) b = rng.next_u64() & 1;
            const auto cw = ldpc_encode(info);
            ok = ok && ldpc_syndrome_ok(cw.data());
            double llrs[kLdpcN];
            for (int i = 0; i < kLdpcN; ++i) llrs[i] = cw[i] ? -20.0 : 20.0;
            const auto dec = ldpc_decode(llrs);
            ok = ok && dec.converged && dec.info == info;
        }
        report("ldpc noiseless round trip", ok);
    }
    {  // QAM Gray adjacency + unit energy + hard-demod round trip
        bool ok = true;
        for (int order : {16, 256}) {
            const auto pts = qam_constellation(order);
            double energy = 0;
            for (const auto& p : pts) energy += std::norm(p);
            ok = ok && std::abs(energy / order - 1.0) < 1e-12;
            Rng rng(2);
            int nb = order == 16 ? 4 : 8;
            std::vector<uint8_t> bits(static_cast<size_t>(nb) * 64);
            for (auto& b : bits) b = rng.next_u64() & 1;
            ok = ok && qam_hard_demodulate(qam_modulate(bits, order), order) == bits;
        }
        report("qam constellations", ok);
    }
    {  // channel SNR calibration (quick)
        SymbolBlock block;
        block.iq = Tensor({4096, 16, 2});
        for (size_t i = 0; i < block.iq.data.size(); i += 2) block.iq.data[i] = 1.0;
        block.power = 1.0;
        auto tr = transmit(block, ChannelModel::Awgn, 10.0, 99);
        double err = 0;
        for (size_t i = 0; i < block.iq.data.size(); ++i) {
            const double d = tr.received.iq.data[i] - block.iq.data[i];
            err += d * d;
        }
        const double sigma2 = err / (block.iq.numel() / 2);
        const double db = -10.0 * std::log10(sigma2);
        report("awgn snr calibration", std::abs(db - 10.0) < 0.2);
    }
    std::printf(failures ? "phy-selftest: %d failure(s)\n" : "phy-selftest: all passed\n",
                failures);
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cmsc link-level simulator"};
    app.require_subcommand(1);

    std::string config_path, out, checkpoint;
    uint64_t seed = 0;
    std::vector<CLI::Option*> seed_opts;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "plain-text key=value config file");
        seed_opts.push_back(cmd->add_option("--seed", seed, "seed override"));
        cmd->add_option("--out", out, "output CSV path");
        cmd->add_option("--checkpoint", checkpoint, "checkpoint path (train: output prefix)");
    };

    CLI::App* train = app.add_subcommand("train", "run the three-stage training strategy");
    add_common(train);
    CLI::App* matrix = app.add_subcommand("sensor-matrix", "ego/CAV modality matrix");
    add_common(matrix);
    CLI::App* snr = app.add_subcommand("snr-sweep", "method x SNR sweep");
    add_common(snr);
    CLI::App* lam = app.add_subcommand("lambda-sweep", "compression-ratio sweep");
    add_common(lam);
    app.add_subcommand("phy-selftest", "classic PHY sanity battery");

    CLI11_PARSE(app, argc, argv);

    try {
        bool seed_set = false;
        for (const CLI::Option* o : seed_opts) seed_set = seed_set || o->count() > 0;
        if (train->parsed()) return run_train(config_path, seed, seed_set, out, checkpoint);
        if (matrix->parsed())
            return run_experiment("sensor-matrix", config_path, seed, seed_set, out, checkpoint);
        if (snr->parsed())
            return run_experiment("snr-sweep", config_path, seed, seed_set, out, checkpoint);
        if (lam->parsed())
            return run_experiment("lambda-sweep", config_path, seed, seed_set, out, checkpoint);
        return run_phy_selftest();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
